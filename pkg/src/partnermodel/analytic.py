"""Closed-form threshold and equilibrium analysis of the partner model.

Everything here is derived from two ingredients:

* the equilibrium singles fraction y*, the root of ``alpha*y**2 + y - 1 = 0``
  with ``alpha = r_plus/r_minus``, and

* the seven-state absorbing chain followed by one infectious single until it
  recovers or its partnership dissolves.  Transient states: an infectious
  single (A), a partnership with one infectious member (B), and a partnership
  with both members infectious (C).  Absorbing states: recovery while single
  (D), recovery of the infectious partner (E), breakup releasing one
  infectious single (F), breakup releasing two (G).

The basic reproduction number is the expected number of infectious singles
released on absorption, R0 = P(A->F) + 2 P(A->G), the critical transmission
rate ``lambda_c`` is where R0 crosses 1, and the endemic level ``i_star`` is
the root of the per-event drift ``delta`` of the infectious-singles count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DomainError, Params

# Absolute clamp window above y_star tolerated by delta(); see delta().
CLAMP_EPS = 1e-12


def y_star(p: Params) -> float:
    """Equilibrium fraction of singles, the root of alpha*y^2 + y - 1 in (0,1).

    Evaluated as 2 / (1 + sqrt(1 + 4*alpha)), which is algebraically equal to
    (-1 + sqrt(1 + 4*alpha)) / (2*alpha) but stable for small alpha.
    """
    alpha = p.alpha
    return 2.0 / (1.0 + math.sqrt(1.0 + 4.0 * alpha))


@dataclass(frozen=True)
class DerivedConstants:
    """Constants that the closed-form expressions are phrased in.

    y_star:  equilibrium singles fraction
    p_r:     probability an infectious single finds a partner before recovering
    a:       total exit rate from state B (= 1 + lam + r_minus)
    b:       total exit rate from state C (= 2 + r_minus)
    sigma:   geometric factor summing the B<->C loop (= ab / (ab - 2*lam))
    beta:    2*p_r - 1
    """

    y_star: float
    p_r: float
    a: float
    b: float
    sigma: float
    beta: float


def derived_constants(p: Params) -> DerivedConstants:
    ys = y_star(p)
    p_r = p.r_plus * ys / (1.0 + p.r_plus * ys)
    a = 1.0 + p.lam + p.r_minus
    b = 2.0 + p.r_minus
    sigma = a * b / (a * b - 2.0 * p.lam)
    return DerivedConstants(y_star=ys, p_r=p_r, a=a, b=b, sigma=sigma, beta=2.0 * p_r - 1.0)


@dataclass(frozen=True)
class AbsorptionSummary:
    """Absorption probabilities of the single-infectious-site chain.

    p_af/p_ag: reach F / G from an infectious single (A)
    p_bf/p_bg: reach F / G from a one-sided infectious partnership (B)
    p_cf/p_cg: reach F / G from a doubly infectious partnership (C)
    delta_s:   net change in infectious singles when a single recovers (-1)
    delta_si:  expected net change from forming a one-sided partnership
    delta_ii:  expected net change from forming a doubly infectious one
    """

    p_af: float
    p_ag: float
    p_bf: float
    p_bg: float
    p_cf: float
    p_cg: float
    delta_s: float
    delta_si: float
    delta_ii: float


def _summary_from_pair_probs(p_bf, p_bg, p_cf, p_cg, p_r) -> AbsorptionSummary:
    return AbsorptionSummary(
        p_af=p_r * p_bf,
        p_ag=p_r * p_bg,
        p_bf=p_bf,
        p_bg=p_bg,
        p_cf=p_cf,
        p_cg=p_cg,
        delta_s=-1.0,
        delta_si=-1.0 + p_bf + 2.0 * p_bg,
        delta_ii=-2.0 + p_cf + 2.0 * p_cg,
    )


def absorption_closed_form(p: Params) -> AbsorptionSummary:
    """All six absorption probabilities by explicit path summation.

    From B the chain exits at rate a; paths to F loop through C k times,
    giving P(B->F) = sigma * r_minus / a with sigma summing the loop, and
    P(B->G) = sigma * (lam/a) * (r_minus/b).  One-step decomposition from C
    gives P(C->F) = (2/b) P(B->F) and P(C->G) = r_minus/b + (2/b) P(B->G).
    """
    d = derived_constants(p)
    p_bf = d.sigma * p.r_minus / d.a
    p_bg = d.sigma * (p.lam / d.a) * (p.r_minus / d.b)
    p_cf = (2.0 / d.b) * p_bf
    p_cg = p.r_minus / d.b + (2.0 / d.b) * p_bg
    return _summary_from_pair_probs(p_bf, p_bg, p_cf, p_cg, d.p_r)


def absorption_matrix(p: Params) -> np.ndarray:
    """3x4 matrix of absorption probabilities, rows (A, B, C), columns
    (D, E, F, G), obtained by solving the jump-chain linear system directly.

    This is the structural oracle for :func:`absorption_closed_form`: it only
    uses the chain's transition rates (A->D at 1, A->B at r_plus*y_star,
    B->C at lam, B->E at 1, B->F at r_minus, C->B at 2, C->G at r_minus).
    """
    ys = y_star(p)
    exit_a = 1.0 + p.r_plus * ys
    exit_b = 1.0 + p.lam + p.r_minus
    exit_c = 2.0 + p.r_minus
    # Transient-to-transient jump probabilities, order (A, B, C).
    Q = np.array(
        [
            [0.0, p.r_plus * ys / exit_a, 0.0],
            [0.0, 0.0, p.lam / exit_b],
            [0.0, 2.0 / exit_c, 0.0],
        ]
    )
    # Transient-to-absorbing, order (D, E, F, G).
    R = np.array(
        [
            [1.0 / exit_a, 0.0, 0.0, 0.0],
            [0.0, 1.0 / exit_b, p.r_minus / exit_b, 0.0],
            [0.0, 0.0, 0.0, p.r_minus / exit_c],
        ]
    )
    return np.linalg.solve(np.eye(3) - Q, R)


def absorption_oracle(p: Params) -> AbsorptionSummary:
    """Absorption summary computed from the linear-solve matrix."""
    X = absorption_matrix(p)
    d = derived_constants(p)
    return _summary_from_pair_probs(X[1, 2], X[1, 3], X[2, 2], X[2, 3], d.p_r)


def r0(p: Params) -> float:
    """Basic reproduction number, explicit form
    p_r * r_minus * (2 + r_minus + 2*lam) / (2 + 3*r_minus + lam*r_minus + r_minus^2).
    """
    d = derived_constants(p)
    rm = p.r_minus
    return d.p_r * rm * (2.0 + rm + 2.0 * p.lam) / (2.0 + 3.0 * rm + p.lam * rm + rm * rm)


@dataclass(frozen=True)
class CriticalValue:
    """Critical transmission rate; ``kind`` is "finite" or "infinite"."""

    kind: str
    value: float | None = None

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"


def lambda_c(r_plus: float, r_minus: float) -> CriticalValue:
    """Critical transmission rate for given partnership rates.

    Finite exactly when r_plus * y_star > 1 (equivalently r_plus > 1 + 1/r_minus),
    in which case, writing q = r_plus*y_star - 1,

        lambda_c = (2/r_minus)*(2/q) + 2/r_minus + 4/q + 1 + r_minus/q.
    """
    if not (r_plus > 0 and r_minus > 0):
        raise DomainError("r_plus and r_minus must be positive")
    ys = y_star(Params(lam=1.0, r_plus=r_plus, r_minus=r_minus))
    q = r_plus * ys - 1.0
    if q <= 0.0:
        return CriticalValue(kind="infinite")
    value = (2.0 / r_minus) * (2.0 / q) + 2.0 / r_minus + 4.0 / q + 1.0 + r_minus / q
    return CriticalValue(kind="finite", value=value)


@dataclass(frozen=True)
class DeltaBreakdown:
    """Event-type mix behind the drift of the infectious-singles count.

    At singles-infection level i (with the singles pool at y_star), the next
    event touching infectious singles is a recovery (probability p_s), the
    formation of a doubly infectious partnership (p_ii) or of a one-sided one
    (p_si); z is the normalizing constant 1 + r_plus*(y_star - i/2).  ``value``
    is the expected change in the number of infectious singles per such event.
    """

    z: float
    p_s: float
    p_ii: float
    p_si: float
    value: float


def delta(i: float, p: Params) -> DeltaBreakdown:
    """Expected drift of the infectious-singles count at level ``i``.

    ``i`` must lie in [0, y_star]; values at most CLAMP_EPS above y_star are
    clamped (callers feed in ODE output with float noise), anything else is a
    DomainError.
    """
    ys = y_star(p)
    if not (0.0 <= i <= ys + CLAMP_EPS):
        raise DomainError(f"i={i!r} outside [0, y_star={ys!r}]")
    if i > ys:
        i = ys
    ab = absorption_closed_form(p)
    z = 1.0 + p.r_plus * (ys - i / 2.0)
    p_s = 1.0 / z
    p_ii = p.r_plus * i / (2.0 * z)
    p_si = p.r_plus * (ys - i) / z
    value = p_s * ab.delta_s + p_ii * ab.delta_ii + p_si * ab.delta_si
    return DeltaBreakdown(z=z, p_s=p_s, p_ii=p_ii, p_si=p_si, value=value)


def i_star(p: Params) -> float | None:
    """Endemic level of infectious singles: the root of delta in (0, y_star).

    Returns None when r0(p) <= 1 (no positive root).  When r0 > 1 the drift
    is positive at 0, negative at y_star and strictly decreasing, so bisection
    is guaranteed; iterated to well below 1e-12 absolute width.
    """
    if r0(p) <= 1.0:
        return None
    ys = y_star(p)
    lo, hi = 0.0, ys
    f_lo = delta(lo, p).value
    if not (f_lo > 0.0 and delta(hi, p).value < 0.0):
        raise RuntimeError("drift does not bracket a root although r0 > 1")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if delta(mid, p).value > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)
