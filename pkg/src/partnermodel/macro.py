"""Exact simulation of the aggregate-count Markov chain.

The population state is the integer vector (S, I, SS, SI, II): susceptible
and infectious singles plus the three partnership types.  Ten transitions
drive it (rates per unit time):

    0  recovery of an infectious single          I
    1  formation of an SS partnership            (r_plus/N) S(S-1)/2
    2  formation of an SI partnership            (r_plus/N) S I
    3  formation of an II partnership            (r_plus/N) I(I-1)/2
    4  recovery inside an SI partnership         SI
    5  recovery inside an II partnership         2 II
    6  transmission inside an SI partnership     lam SI
    7  breakup of an SS partnership              r_minus SS
    8  breakup of an SI partnership              r_minus SI
    9  breakup of an II partnership              r_minus II

Every transition conserves S + I + 2(SS + SI + II) = N.  Paths are produced
by exact jump-chain sampling (exponential holding time at the total rate,
channel chosen proportionally) in the compiled kernel, with a pure-Python
fallback; identical seeds give identical paths.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._fallback import MACRO_UPDATES
from .params import DomainError, Params
from .rng import replica_seed

N_CHANNELS = 10


@dataclass(frozen=True)
class MacroState:
    """Aggregate counts on N sites; conservation is enforced on creation."""

    N: int
    S: int
    I: int
    SS: int
    SI: int
    II: int

    def __post_init__(self):
        counts = (self.S, self.I, self.SS, self.SI, self.II)
        if self.N < 2 or any(c < 0 for c in counts):
            raise DomainError("counts must be nonnegative and N >= 2")
        if self.S + self.I + 2 * (self.SS + self.SI + self.II) != self.N:
            raise DomainError("S + I + 2(SS + SI + II) must equal N")

    @classmethod
    def default(cls, N: int, i0: int | None = None) -> "MacroState":
        """Default start: ceil(N/10) infectious singles, rest susceptible singles."""
        if i0 is None:
            i0 = math.ceil(0.1 * N)
        return cls(N=N, S=N - i0, I=i0, SS=0, SI=0, II=0)

    @classmethod
    def all_paired_susceptible(cls, N: int) -> "MacroState":
        if N % 2:
            raise DomainError("an all-paired state needs even N")
        return cls(N=N, S=0, I=0, SS=N // 2, SI=0, II=0)

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.S, self.I, self.SS, self.SI, self.II)

    @property
    def y(self) -> float:
        return (self.S + self.I) / self.N

    @property
    def s(self) -> float:
        return self.S / self.N

    @property
    def i(self) -> float:
        return self.I / self.N

    @property
    def ss(self) -> float:
        return self.SS / self.N

    @property
    def si(self) -> float:
        return self.SI / self.N

    @property
    def ii(self) -> float:
        return self.II / self.N

    @property
    def infection_free(self) -> bool:
        return self.I == 0 and self.SI == 0 and self.II == 0


def macro_rates(state: MacroState, p: Params) -> np.ndarray:
    """The ten transition rates at ``state``, in canonical channel order."""
    return rates_array(np.array([state.as_tuple()], dtype=np.int64), state.N, p)[0]


def rates_array(states: np.ndarray, N: int, p: Params) -> np.ndarray:
    """Vectorized :func:`macro_rates`: states is (k, 5) -> rates (k, 10)."""
    S = states[:, 0].astype(float)
    I = states[:, 1].astype(float)
    SS = states[:, 2].astype(float)
    SI = states[:, 3].astype(float)
    II = states[:, 4].astype(float)
    rpN = p.r_plus / N
    out = np.empty((states.shape[0], N_CHANNELS))
    out[:, 0] = I
    out[:, 1] = rpN * S * (S - 1.0) / 2.0
    out[:, 2] = rpN * S * I
    out[:, 3] = rpN * I * (I - 1.0) / 2.0
    out[:, 4] = SI
    out[:, 5] = 2.0 * II
    out[:, 6] = p.lam * SI
    out[:, 7] = p.r_minus * SS
    out[:, 8] = p.r_minus * SI
    out[:, 9] = p.r_minus * II
    return out


@dataclass(frozen=True, eq=False)
class MacroResult:
    """One simulated path: sampled trajectory plus run metadata.

    ``event_times``/``event_channels`` hold the full event log when recording
    was requested, otherwise None.  ``absorption_time`` is the first time the
    infection count hit zero (nan if it never did).
    """

    N: int
    seed: int
    times: np.ndarray
    states: np.ndarray  # (k, 5) int64
    n_events: int
    absorbed: bool
    absorption_time: float
    t_final: float
    final_state: MacroState
    event_times: np.ndarray | None
    event_channels: np.ndarray | None
    truncated: bool

    def fractions(self) -> np.ndarray:
        """Rescaled trajectory columns (s, i, ss, si, ii, y)."""
        f = self.states / self.N
        y = f[:, 0] + f[:, 1]
        return np.column_stack([f, y])

    def time_average(self, column: str, t_from: float = 0.0) -> float:
        """Mean of a rescaled quantity over sample times >= t_from."""
        idx = {"s": 0, "i": 1, "ss": 2, "si": 3, "ii": 4, "y": 5}[column]
        mask = self.times >= t_from
        if not mask.any():
            return float("nan")
        return float(self.fractions()[mask, idx].mean())


def simulate_macro(init: MacroState, p: Params, t_end: float, seed: int,
                   sample_dt: float = 0.1, run_past_extinction: bool = False,
                   max_events: int = 0, record_events: bool = False) -> MacroResult:
    """Exact path of the aggregate chain from ``init`` up to ``t_end``.

    Stops early when the infection is absorbed (I = SI = II = 0) unless
    ``run_past_extinction`` is set; the sampled trajectory is truncated at
    the stopping time.
    """
    if t_end <= 0 or sample_dt <= 0:
        raise DomainError("t_end and sample_dt must be positive")
    if record_events and max_events == 0:
        max_events = 2_000_000
    (times, states, n_events, absorbed, absorption_time, t_final, final_state,
     ev_t, ev_c, hit_max) = kernels.macro_run(
        init.S, init.I, init.SS, init.SI, init.II, init.N,
        p.lam, p.r_plus, p.r_minus, t_end, sample_dt, seed,
        run_past_extinction=run_past_extinction, max_events=max_events,
        record_events=record_events,
    )
    fs = MacroState(init.N, *final_state)
    return MacroResult(N=init.N, seed=seed, times=times, states=states,
                       n_events=n_events, absorbed=absorbed,
                       absorption_time=absorption_time, t_final=t_final,
                       final_state=fs, event_times=ev_t, event_channels=ev_c,
                       truncated=hit_max)


def summarize(result: MacroResult, avg_from: float = 0.0) -> dict:
    """Per-replica JSON summary."""
    return {
        "seed": result.seed,
        "absorbed": result.absorbed,
        "absorption_time": result.absorption_time if result.absorbed else None,
        "time_avg_i": result.time_average("i", avg_from),
        "time_avg_y": result.time_average("y", avg_from),
    }


def _one_replica(args) -> MacroResult:
    init, p, t_end, master_seed, r, kwargs = args
    return simulate_macro(init, p, t_end, replica_seed(master_seed, r), **kwargs)


def run_replicas(init: MacroState, p: Params, t_end: float, master_seed: int,
                 n_replicas: int, jobs: int = 1, **kwargs) -> list[MacroResult]:
    """Independent replicas with per-replica derived seeds, ordered by index."""
    work = [(init, p, t_end, master_seed, r, kwargs) for r in range(n_replicas)]
    if jobs <= 1 or n_replicas <= 1:
        return [_one_replica(wi) for wi in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_one_replica, work))


def replay_events(init: MacroState, channels: np.ndarray) -> np.ndarray:
    """Reconstruct the count path implied by an event-channel log.

    Vectorized cumulative application of the per-channel count updates;
    used to verify conservation and kernel bookkeeping independently.
    Returns an (n_events + 1, 5) array starting at ``init``.
    """
    updates = np.array(MACRO_UPDATES, dtype=np.int64)
    steps = updates[channels]
    path = np.vstack([np.array(init.as_tuple(), dtype=np.int64), steps])
    return np.cumsum(path, axis=0)
