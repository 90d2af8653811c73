"""Bounding multi-type branching processes for the sparse-infection regime.

Particles come in three types: infectious singles (I), one-sided infectious
partnerships (SI) and doubly infectious partnerships (II).  The upper-bound
process (UBP) and lower-bound process (LBP) bracket the partner model's
infection counts while the singles pool stays within ``delta`` of its
equilibrium and the infected fraction stays below ``delta``.

Classification is spectral: with A(delta) the 3x3 matrix whose entry (j, k)
is the rate at which a type-j particle produces type-k particles, the mean
of the process started from B0 is B0 @ exp(A t), and the sign of the
spectral abscissa of A decides extinction versus growth.  At delta = 0 both
processes coincide and A(0) is the transpose of the mean-field linearization
at the disease-free state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import analytic, kernels, mfe
from .params import DomainError, Params

UBP, LBP = "ubp", "lbp"
DEFAULT_CAP = 10_000_000


@dataclass(frozen=True)
class BranchingParams:
    """Base rates plus the coupling slack ``delta`` and the process kind."""

    base: Params
    delta: float
    kind: str

    def __post_init__(self):
        if self.kind not in (UBP, LBP):
            raise DomainError(f"kind must be '{UBP}' or '{LBP}'")
        ys = analytic.y_star(self.base)
        if not (0.0 <= self.delta <= ys):
            raise DomainError(f"delta must lie in [0, y_star={ys:g}]")

    @property
    def y_star(self) -> float:
        return analytic.y_star(self.base)


@dataclass(frozen=True)
class BranchingState:
    """Particle counts per type."""

    nI: int
    nSI: int
    nII: int

    def __post_init__(self):
        if min(self.nI, self.nSI, self.nII) < 0:
            raise DomainError("particle counts must be nonnegative")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.nI, self.nSI, self.nII)

    @property
    def total(self) -> int:
        return self.nI + self.nSI + self.nII


def ubp_rates(state: BranchingState, bp: BranchingParams) -> np.ndarray:
    """The nine upper-bound transition rates: I-death; I->SI conversion;
    spontaneous SI birth; II birth; SI death; SI->I release; SI->II
    transmission; II->SI recovery; II->2I release."""
    if bp.kind != UBP:
        raise DomainError("ubp_rates needs kind='ubp'")
    p, d, ys = bp.base, bp.delta, bp.y_star
    nI, nSI, nII = state.as_tuple()
    return np.array(
        [
            float(nI),
            p.r_plus * (ys - d) * nI,
            2.0 * p.r_plus * d * nI,
            p.r_plus * d * nI,
            float(nSI),
            p.r_minus * nSI,
            p.lam * nSI,
            2.0 * nII,
            p.r_minus * nII,
        ]
    )


def lbp_rates(state: BranchingState, bp: BranchingParams) -> np.ndarray:
    """The eight lower-bound transition rates: boosted I-death; I->SI
    conversion; I pair-removal; SI death; SI->I release; SI->II transmission;
    II->SI recovery; II->2I release."""
    if bp.kind != LBP:
        raise DomainError("lbp_rates needs kind='lbp'")
    p, d, ys = bp.base, bp.delta, bp.y_star
    nI, nSI, nII = state.as_tuple()
    return np.array(
        [
            (1.0 + 2.0 * p.r_plus * d) * nI,
            p.r_plus * (ys - d) * nI,
            p.r_plus * d * nI,
            float(nSI),
            p.r_minus * nSI,
            p.lam * nSI,
            2.0 * nII,
            p.r_minus * nII,
        ]
    )


def rate_matrix(bp: BranchingParams) -> np.ndarray:
    """A(delta): entry (j, k) is the net production rate of type-k particles
    by one type-j particle (diagonal includes the particle's own losses)."""
    p, d, ys = bp.base, bp.delta, bp.y_star
    rows_si_ii = [
        [p.r_minus, -(1.0 + p.lam + p.r_minus), p.lam],
        [2.0 * p.r_minus, 2.0, -(2.0 + p.r_minus)],
    ]
    if bp.kind == UBP:
        top = [-(1.0 + p.r_plus * (ys - d)), p.r_plus * (ys + d), p.r_plus * d]
    else:
        top = [-(1.0 + p.r_plus * ys + 3.0 * p.r_plus * d), p.r_plus * (ys - d), 0.0]
    return np.array([top] + rows_si_ii)


def mean_matrix(A: np.ndarray, t: float) -> np.ndarray:
    """exp(A t); the expected counts after time t are B0 @ mean_matrix(A, t)."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    return expm(A * t)


def spectral_abscissa(A: np.ndarray) -> float:
    """Largest real part over the eigenvalues of A."""
    return float(np.max(np.linalg.eigvals(A).real))


@dataclass(frozen=True, eq=False)
class BranchingResult:
    kind: str
    delta: float
    seed: int
    times: np.ndarray
    states: np.ndarray  # (k, 3) int64
    n_events: int
    extinct: bool
    extinction_time: float
    censored: bool
    t_final: float
    final_state: BranchingState


def simulate_branching(init: BranchingState, bp: BranchingParams, t_end: float,
                       seed: int, sample_dt: float = 0.1,
                       cap: int = DEFAULT_CAP) -> BranchingResult:
    """Exact jump-chain path of the UBP or LBP.

    Stops at extinction or once the population exceeds ``cap`` (reported as
    censored: supercritical growth, not an error).
    """
    if t_end <= 0 or sample_dt <= 0:
        raise DomainError("t_end and sample_dt must be positive")
    kind_code = 0 if bp.kind == UBP else 1
    (times, states, n_events, extinct, extinction_time, censored, t_final,
     final_state) = kernels.branching_run(
        init.nI, init.nSI, init.nII, bp.base.lam, bp.base.r_plus,
        bp.base.r_minus, bp.y_star, bp.delta, kind_code, t_end, sample_dt,
        seed, cap=cap,
    )
    return BranchingResult(kind=bp.kind, delta=bp.delta, seed=seed,
                           times=times, states=states, n_events=n_events,
                           extinct=extinct, extinction_time=extinction_time,
                           censored=censored, t_final=t_final,
                           final_state=BranchingState(*final_state))


def _one_replica(args) -> BranchingResult:
    init, bp, t_end, master_seed, r, kwargs = args
    from .rng import replica_seed

    return simulate_branching(init, bp, t_end, replica_seed(master_seed, r),
                              **kwargs)


def run_replicas(init: BranchingState, bp: BranchingParams, t_end: float,
                 master_seed: int, n_replicas: int, jobs: int = 1,
                 **kwargs) -> list[BranchingResult]:
    """Independent replicas with derived seeds, ordered by replica index."""
    from concurrent.futures import ProcessPoolExecutor

    work = [(init, bp, t_end, master_seed, r, kwargs) for r in range(n_replicas)]
    if jobs <= 1 or n_replicas <= 1:
        return [_one_replica(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_one_replica, work))


def summarize(result: BranchingResult) -> dict:
    """Per-run JSON summary."""
    return {
        "kind": result.kind,
        "delta": result.delta,
        "seed": result.seed,
        "extinct": result.extinct,
        "extinction_time": result.extinction_time if result.extinct else None,
        "censored": result.censored,
        "final_counts": list(result.final_state.as_tuple()),
    }


def subcritical_delta(p: Params, tol: float = 1e-6) -> float:
    """Largest slack keeping the upper-bound process subcritical.

    Requires r0(p) < 1 (so the slack-0 process is subcritical).  The
    abscissa of A_UBP(delta) is nondecreasing in delta, so bisection on its
    sign over [0, y_star] finds the threshold; returns y_star when the whole
    range stays subcritical.
    """
    if analytic.r0(p) >= 1.0:
        raise DomainError("subcritical_delta needs r0 < 1")
    return _delta_threshold(p, UBP, want_negative=True, tol=tol)


def supercritical_delta(p: Params, tol: float = 1e-6) -> float:
    """Largest slack keeping the lower-bound process supercritical (r0 > 1)."""
    if analytic.r0(p) <= 1.0:
        raise DomainError("supercritical_delta needs r0 > 1")
    return _delta_threshold(p, LBP, want_negative=False, tol=tol)


def _delta_threshold(p: Params, kind: str, want_negative: bool, tol: float) -> float:
    ys = analytic.y_star(p)

    def ok(d: float) -> bool:
        mu = spectral_abscissa(rate_matrix(BranchingParams(p, d, kind)))
        return mu < 0.0 if want_negative else mu > 0.0

    if not ok(0.0):
        raise RuntimeError("slack-0 process has the wrong criticality")
    if ok(ys):
        return ys
    lo, hi = 0.0, ys
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def disease_free_transpose_check(p: Params) -> tuple[np.ndarray, np.ndarray]:
    """(A_UBP(0), transpose of the mean-field linearization); equal matrices."""
    A0 = rate_matrix(BranchingParams(p, 0.0, UBP))
    lin = mfe.linearize(p)
    return A0, lin.A3.T
