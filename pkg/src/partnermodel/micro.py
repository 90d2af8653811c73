"""Site-level simulator of the partner model on the complete graph.

Events are realized exactly as in the spacetime construction: independent
Poisson streams of recovery marks on sites (rate 1), and transmission
(rate lam), formation (rate r_plus/N) and breakup (rate r_minus) marks on
edges.  A mark only takes effect when its rule applies — transmission needs
an open, discordant edge; formation needs both endpoints unpartnered;
breakup needs an open edge.  Since all streams are memoryless, the candidate
stream is sampled at the constant total intensity and thinned, which is
equivalent in law.

Quadratic in N, intended for N <= 200; the aggregate chain in :mod:`.macro`
is the scale simulator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .macro import MacroState, rates_array
from .params import DomainError, Params
from .rng import Xoshiro256

MAX_SITES = 200

# Label classes of the candidate streams.
_RECOVERY, _TRANSMISSION, _FORMATION, _BREAKUP = range(4)


@dataclass(frozen=True, eq=False)
class MicroState:
    """Infection indicator per site plus the current (partial) matching."""

    infected: np.ndarray  # bool, length N
    partner: np.ndarray   # int64, length N; -1 for singles

    def __post_init__(self):
        n = len(self.infected)
        if len(self.partner) != n:
            raise DomainError("infected and partner must have equal length")
        for x, q in enumerate(self.partner):
            if q == -1:
                continue
            if not (0 <= q < n) or q == x or self.partner[q] != x:
                raise DomainError("partner map is not a partial matching")

    @property
    def n_sites(self) -> int:
        return len(self.infected)

    @property
    def matching(self) -> set[tuple[int, int]]:
        return {(x, int(q)) for x, q in enumerate(self.partner) if -1 < q and x < q}

    @classmethod
    def build(cls, n: int, infected_sites=(), pairs=()) -> "MicroState":
        if n < 2 or n > MAX_SITES:
            raise DomainError(f"n must be in [2, {MAX_SITES}]")
        infected = np.zeros(n, dtype=bool)
        infected[list(infected_sites)] = True
        partner = np.full(n, -1, dtype=np.int64)
        for x, q in pairs:
            if partner[x] != -1 or partner[q] != -1 or x == q:
                raise DomainError("pairs must form a matching")
            partner[x] = q
            partner[q] = x
        return cls(infected=infected, partner=partner)

    def aggregate(self) -> MacroState:
        n = self.n_sites
        S = I = SS = SI = II = 0
        for x in range(n):
            q = self.partner[x]
            if q == -1:
                if self.infected[x]:
                    I += 1
                else:
                    S += 1
            elif x < q:
                k = int(self.infected[x]) + int(self.infected[q])
                if k == 0:
                    SS += 1
                elif k == 1:
                    SI += 1
                else:
                    II += 1
        return MacroState(N=n, S=S, I=I, SS=SS, SI=SI, II=II)


@dataclass(frozen=True, eq=False)
class MicroResult:
    times: np.ndarray
    states: np.ndarray       # (k, 5) aggregate counts
    n_events: int            # applied events
    n_candidates: int
    final: MicroState
    event_times: np.ndarray | None
    event_channels: np.ndarray | None    # macro channel 0..9 per applied event
    event_pre_states: np.ndarray | None  # aggregate counts before each event


class _Dynamics:
    """Shared candidate-event machinery for single and coupled runs."""

    def __init__(self, n: int, p: Params, seed: int):
        self.n = n
        self.rng = Xoshiro256(seed)
        m_edges = n * (n - 1) // 2
        self.r_rec = float(n)
        self.r_trans = p.lam * m_edges
        self.r_form = (p.r_plus / n) * m_edges
        self.r_break = p.r_minus * m_edges
        self.total = self.r_rec + self.r_trans + self.r_form + self.r_break

    def next_candidate(self):
        """(dt, label, x, y); y is -1 for site events."""
        rng = self.rng
        dt = -math.log(1.0 - rng.random()) / self.total
        u = rng.random() * self.total
        if u < self.r_rec:
            return dt, _RECOVERY, rng.below(self.n), -1
        if u < self.r_rec + self.r_trans:
            label = _TRANSMISSION
        elif u < self.r_rec + self.r_trans + self.r_form:
            label = _FORMATION
        else:
            label = _BREAKUP
        x = rng.below(self.n)
        y = rng.below(self.n - 1)
        if y >= x:
            y += 1
        return dt, label, x, y


def _apply(label, x, y, infected, partner, counts):
    """Apply one candidate to (infected, partner) lists in place.

    Returns the macro channel index (0..9) or -1 when the mark is void.
    ``counts`` is the live [S, I, SS, SI, II] list, updated incrementally.
    """
    if label == _RECOVERY:
        if not infected[x]:
            return -1
        q = partner[x]
        infected[x] = False
        if q == -1:
            counts[1] -= 1
            counts[0] += 1
            return 0
        if infected[q]:
            counts[4] -= 1
            counts[3] += 1
            return 5
        counts[3] -= 1
        counts[2] += 1
        return 4
    if label == _TRANSMISSION:
        if partner[x] != y or infected[x] == infected[y]:
            return -1
        infected[x] = True
        infected[y] = True
        counts[3] -= 1
        counts[4] += 1
        return 6
    if label == _FORMATION:
        if partner[x] != -1 or partner[y] != -1:
            return -1
        partner[x] = y
        partner[y] = x
        k = int(infected[x]) + int(infected[y])
        if k == 0:
            counts[0] -= 2
            counts[2] += 1
            return 1
        if k == 1:
            counts[0] -= 1
            counts[1] -= 1
            counts[3] += 1
            return 2
        counts[1] -= 2
        counts[4] += 1
        return 3
    # breakup
    if partner[x] != y:
        return -1
    partner[x] = -1
    partner[y] = -1
    k = int(infected[x]) + int(infected[y])
    if k == 0:
        counts[2] -= 1
        counts[0] += 2
        return 7
    if k == 1:
        counts[3] -= 1
        counts[0] += 1
        counts[1] += 1
        return 8
    counts[4] -= 1
    counts[1] += 2
    return 9


def simulate_micro(init: MicroState, p: Params, t_end: float, seed: int,
                   sample_dt: float = 0.1, record_events: bool = False) -> MicroResult:
    """Site-level path from ``init``; aggregates are sampled at ``sample_dt``."""
    n = init.n_sites
    if n > MAX_SITES:
        raise DomainError(f"site-level simulation is limited to N <= {MAX_SITES}")
    dyn = _Dynamics(n, p, seed)
    infected = [bool(v) for v in init.infected]
    partner = [int(v) for v in init.partner]
    counts = list(init.aggregate().as_tuple())

    n_samp = int(math.floor(t_end / sample_dt + 1e-9)) + 1
    times = np.array([k * sample_dt for k in range(n_samp)])
    states = np.empty((n_samp, 5), dtype=np.int64)
    states[0] = counts
    k = 1
    ev_t: list[float] = []
    ev_c: list[int] = []
    ev_pre: list[tuple] = []

    t = 0.0
    n_candidates = 0
    n_applied = 0
    while True:
        dt, label, x, y = dyn.next_candidate()
        tn = t + dt
        while k < n_samp and times[k] < tn:
            states[k] = counts
            k += 1
        if tn > t_end:
            break
        t = tn
        n_candidates += 1
        pre = tuple(counts) if record_events else None
        ch = _apply(label, x, y, infected, partner, counts)
        if ch >= 0:
            n_applied += 1
            if record_events:
                ev_t.append(t)
                ev_c.append(ch)
                ev_pre.append(pre)

    final = MicroState(infected=np.array(infected, dtype=bool),
                       partner=np.array(partner, dtype=np.int64))
    return MicroResult(
        times=times[:k].copy(), states=states[:k].copy(), n_events=n_applied,
        n_candidates=n_candidates, final=final,
        event_times=np.array(ev_t) if record_events else None,
        event_channels=np.array(ev_c, dtype=np.int64) if record_events else None,
        event_pre_states=np.array(ev_pre, dtype=np.int64) if record_events else None,
    )


@dataclass(frozen=True, eq=False)
class CoupledResult:
    times: np.ndarray
    states_a: np.ndarray
    states_b: np.ndarray
    containment_violations: int  # V_A not within V_B at a sample time
    edge_mismatches: int         # matchings differ at a sample time
    final_a: MicroState
    final_b: MicroState


def coupled_pair(init_a: MicroState, init_b: MicroState, p: Params,
                 t_end: float, seed: int, sample_dt: float = 0.1) -> CoupledResult:
    """Run two copies off one realized event stream.

    Requires equal matchings and infections of A contained in B's.  Both
    copies see the same candidate marks, so their edge processes coincide and
    infection containment is preserved; the result reports any violation
    found at sample times (expected zero).
    """
    if init_a.n_sites != init_b.n_sites:
        raise DomainError("copies must share the site set")
    if not np.array_equal(init_a.partner, init_b.partner):
        raise DomainError("copies must start from the same matching")
    if (init_a.infected & ~init_b.infected).any():
        raise DomainError("infections of A must be contained in B's")
    n = init_a.n_sites
    dyn = _Dynamics(n, p, seed)
    inf_a = [bool(v) for v in init_a.infected]
    inf_b = [bool(v) for v in init_b.infected]
    par_a = [int(v) for v in init_a.partner]
    par_b = [int(v) for v in init_b.partner]
    counts_a = list(init_a.aggregate().as_tuple())
    counts_b = list(init_b.aggregate().as_tuple())

    n_samp = int(math.floor(t_end / sample_dt + 1e-9)) + 1
    times = np.array([k * sample_dt for k in range(n_samp)])
    states_a = np.empty((n_samp, 5), dtype=np.int64)
    states_b = np.empty((n_samp, 5), dtype=np.int64)
    violations = 0
    mismatches = 0

    def check():
        nonlocal violations, mismatches
        if any(a and not b for a, b in zip(inf_a, inf_b)):
            violations += 1
        if par_a != par_b:
            mismatches += 1

    states_a[0] = counts_a
    states_b[0] = counts_b
    check()
    k = 1
    t = 0.0
    while True:
        dt, label, x, y = dyn.next_candidate()
        tn = t + dt
        while k < n_samp and times[k] < tn:
            states_a[k] = counts_a
            states_b[k] = counts_b
            check()
            k += 1
        if tn > t_end:
            break
        t = tn
        _apply(label, x, y, inf_a, par_a, counts_a)
        _apply(label, x, y, inf_b, par_b, counts_b)

    return CoupledResult(
        times=times[:k].copy(), states_a=states_a[:k].copy(),
        states_b=states_b[:k].copy(), containment_violations=violations,
        edge_mismatches=mismatches,
        final_a=MicroState(np.array(inf_a, dtype=bool), np.array(par_a, dtype=np.int64)),
        final_b=MicroState(np.array(inf_b, dtype=bool), np.array(par_b, dtype=np.int64)),
    )


def frozen_channel_counts(state: MicroState, p: Params, n_events: int,
                          seed: int) -> np.ndarray:
    """Channel counts of ``n_events`` next-transitions drawn from ``state``.

    Repeatedly samples a candidate mark from the frozen configuration and
    classifies the applied ones by macro channel, without evolving the state.
    The counts are multinomial with the aggregate-rate proportions, which is
    what the micro/macro equivalence tests assert.  Vectorized with numpy.
    """
    n = state.n_sites
    m_edges = n * (n - 1) // 2
    r_rec = float(n)
    r_trans = p.lam * m_edges
    r_form = (p.r_plus / n) * m_edges
    r_break = p.r_minus * m_edges
    total = r_rec + r_trans + r_form + r_break
    edges_cum = np.cumsum([r_rec, r_trans, r_form, r_break]) / total

    infected = state.infected
    partner = state.partner
    rng = np.random.default_rng(seed)
    counts = np.zeros(10, dtype=np.int64)
    remaining = n_events
    while remaining > 0:
        batch = max(4 * remaining, 1024)
        u = rng.random(batch)
        label = np.searchsorted(edges_cum, u, side="right")
        x = rng.integers(0, n, size=batch)
        y = rng.integers(0, n - 1, size=batch)
        y = np.where(y >= x, y + 1, y)

        open_edge = partner[x] == y
        inf_x = infected[x]
        inf_y = infected[y]
        single_x = partner[x] == -1
        single_y = partner[y] == -1
        partnered_inf = ~single_x & inf_x
        partner_of_x = partner[x]
        partner_infected = np.zeros(batch, dtype=bool)
        ok = ~single_x
        partner_infected[ok] = infected[partner_of_x[ok]]

        channel = np.full(batch, -1, dtype=np.int64)
        rec = label == _RECOVERY
        channel[rec & inf_x & single_x] = 0
        channel[rec & partnered_inf & partner_infected] = 5
        channel[rec & partnered_inf & ~partner_infected] = 4
        tr = (label == _TRANSMISSION) & open_edge & (inf_x != inf_y)
        channel[tr] = 6
        fo = (label == _FORMATION) & single_x & single_y
        pair_inf = inf_x.astype(np.int64) + inf_y.astype(np.int64)
        channel[fo & (pair_inf == 0)] = 1
        channel[fo & (pair_inf == 1)] = 2
        channel[fo & (pair_inf == 2)] = 3
        br = (label == _BREAKUP) & open_edge
        channel[br & (pair_inf == 0)] = 7
        channel[br & (pair_inf == 1)] = 8
        channel[br & (pair_inf == 2)] = 9

        applied = channel[channel >= 0]
        take = applied[:remaining]
        counts += np.bincount(take, minlength=10)
        remaining -= len(take)
    return counts


def expected_channel_proportions(state: MicroState, p: Params) -> np.ndarray:
    agg = state.aggregate()
    w = rates_array(np.array([agg.as_tuple()], dtype=np.int64), agg.N, p)[0]
    return w / w.sum()
