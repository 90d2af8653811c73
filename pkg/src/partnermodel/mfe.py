"""Mean-field limit of the partner model.

Four ODE variables: the singles fraction y, the infectious-singles fraction
i, and the pair fractions si and ii.  In these coordinates

    y'  = -r_plus*y^2 + r_minus*(1 - y)
    i'  = -(1 + r_plus*y)*i + r_minus*(si + 2*ii)
    si' = r_plus*(y - i)*i - (1 + lam + r_minus)*si + 2*ii
    ii' = r_plus*i^2/2 + lam*si - (2 + r_minus)*ii

The substitution ip = si + ii ("infected partnership") gives the equivalent
system integrated by :func:`mfe_rhs_ip`; that form is order-preserving, which
is what the monotone-coupling tests rely on.  The flow leaves invariant the
region  LAMBDA = {0 <= i <= y <= 1, 0 <= ii <= ip <= (1-y)/2}.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import analytic, kernels
from .params import DomainError, IntegrationError, Params

MEMBERSHIP_SLACK = 1e-9  # tolerance for "is this state in LAMBDA"
GROSS_SLACK = 1e-6       # beyond this the state is rejected outright


@dataclass(frozen=True)
class MfeState:
    """A point of the mean-field phase space in (y, i, si, ii) coordinates."""

    y: float
    i: float
    si: float
    ii: float

    @property
    def ip(self) -> float:
        return self.si + self.ii

    @property
    def s(self) -> float:
        return self.y - self.i

    @property
    def ss(self) -> float:
        return (1.0 - self.y) / 2.0 - self.si - self.ii

    def as_array(self) -> np.ndarray:
        return np.array([self.y, self.i, self.si, self.ii])

    @classmethod
    def from_array(cls, u) -> "MfeState":
        return cls(float(u[0]), float(u[1]), float(u[2]), float(u[3]))

    def invariant_violation(self) -> float:
        """Largest violated margin of the invariant region (0 if inside)."""
        y, i, si, ii = self.y, self.i, self.si, self.ii
        return max(
            0.0, -y, y - 1.0, -i, i - y, -si, -ii, si + ii - (1.0 - y) / 2.0
        )

    def in_invariant_set(self, slack: float = MEMBERSHIP_SLACK) -> bool:
        return self.invariant_violation() <= slack


def _require_near_invariant(state: MfeState) -> None:
    v = state.invariant_violation()
    if v > GROSS_SLACK:
        raise DomainError(f"state outside the invariant region by {v:g}")


def mfe_rhs(state: MfeState, p: Params) -> np.ndarray:
    """Time derivative (y', i', si', ii') at ``state``."""
    _require_near_invariant(state)
    y, i, si, ii = state.y, state.i, state.si, state.ii
    return np.array(
        [
            -p.r_plus * y * y + p.r_minus * (1.0 - y),
            -(1.0 + p.r_plus * y) * i + p.r_minus * (si + 2.0 * ii),
            p.r_plus * (y - i) * i - (1.0 + p.lam + p.r_minus) * si + 2.0 * ii,
            p.r_plus * i * i / 2.0 + p.lam * si - (2.0 + p.r_minus) * ii,
        ]
    )


def mfe_rhs_ip(u, p: Params) -> np.ndarray:
    """Time derivative in (y, i, ip, ii) coordinates; ``u`` is a 4-vector.

    Agrees with :func:`mfe_rhs` under si = ip - ii.
    """
    y, i, ip, ii = float(u[0]), float(u[1]), float(u[2]), float(u[3])
    _require_near_invariant(MfeState(y, i, ip - ii, ii))
    return np.array(
        [
            -p.r_plus * y * y + p.r_minus * (1.0 - y),
            -(1.0 + p.r_plus * y) * i + p.r_minus * (ip + ii),
            p.r_plus * (y - i / 2.0) * i - (1.0 + p.r_minus) * ip + ii,
            p.r_plus * i * i / 2.0 + p.lam * ip - (2.0 + p.r_minus + p.lam) * ii,
        ]
    )


@dataclass(frozen=True, eq=False)
class OdeTrajectory:
    """Sampled solution of the mean-field system."""

    times: np.ndarray
    states: np.ndarray  # shape (k, 4): columns y, i, si, ii
    converged: bool
    t_final: float
    max_violation: float

    def final_state(self) -> MfeState:
        return MfeState.from_array(self.states[-1])


DEFAULT_DT = 1e-3


def integrate(state0: MfeState, p: Params, t_end: float, dt: float = DEFAULT_DT,
              sample_stride: int = 100, stop_deriv_tol: float = 0.0) -> OdeTrajectory:
    """Fixed-step classical Runge-Kutta integration of the mean-field system.

    States are sampled every ``sample_stride`` steps.  Invariant-region
    violations up to 1e-9 are projected away; if the solution drifts more
    than 1e-6 outside, an IntegrationError carrying the failure time is
    raised.  With ``stop_deriv_tol`` > 0 the run stops early once the
    derivative sup-norm drops below the tolerance (checked at sample times).
    """
    if not state0.in_invariant_set():
        raise DomainError("initial state not in the invariant region")
    if dt <= 0 or t_end <= 0:
        raise DomainError("t_end and dt must be positive")
    times, states, converged, t_final, max_viol, aborted, _ = kernels.rk4_run(
        state0.y, state0.i, state0.si, state0.ii,
        p.lam, p.r_plus, p.r_minus, t_end, dt,
        sample_stride=sample_stride, stop_deriv_tol=stop_deriv_tol,
    )
    if aborted:
        raise IntegrationError(
            f"integration left the invariant region near t={t_final:g} "
            f"(violation {max_viol:g})", t=t_final)
    return OdeTrajectory(times=times, states=states, converged=converged,
                         t_final=t_final, max_violation=max_viol)


EQUILIBRIUM_T_MAX = 1e4
EQUILIBRIUM_DERIV_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-6


def disease_free_state(p: Params) -> MfeState:
    return MfeState(analytic.y_star(p), 0.0, 0.0, 0.0)


def interior_start(p: Params) -> MfeState:
    """Canonical strictly interior starting point used for equilibration."""
    ys = analytic.y_star(p)
    return MfeState(ys, ys / 2.0, (1.0 - ys) / 8.0, (1.0 - ys) / 8.0)


def mfe_equilibrium(p: Params, dt: float = DEFAULT_DT) -> MfeState:
    """Globally attracting equilibrium of the mean-field system.

    For r0 <= 1 this is the disease-free state (y*, 0, 0, 0).  For r0 > 1 the
    endemic state is reached by integrating from an interior start until the
    derivative sup-norm falls below 1e-10; the pair components are then
    cross-checked against the steady-state reconstruction
    (si, ii) = Phi_inf @ L(i*) * i*  from the analytic endemic level i*.
    """
    if analytic.r0(p) <= 1.0:
        return disease_free_state(p)
    traj = integrate(interior_start(p), p, EQUILIBRIUM_T_MAX, dt=dt,
                     stop_deriv_tol=EQUILIBRIUM_DERIV_TOL)
    if not traj.converged:
        raise IntegrationError(
            f"no equilibrium reached by t={EQUILIBRIUM_T_MAX:g}", t=traj.t_final)
    eq = traj.final_state()
    istar = analytic.i_star(p)
    si_rec, ii_rec = equilibrium_pair_reconstruction(p, istar)
    err = max(abs(eq.i - istar), abs(eq.si - si_rec), abs(eq.ii - ii_rec))
    if err > RECONSTRUCTION_TOL:
        raise IntegrationError(
            f"integrated equilibrium and steady-state reconstruction disagree "
            f"by {err:g}")
    return eq


def equilibrium_pair_reconstruction(p: Params, i_value: float) -> tuple[float, float]:
    """(si, ii) implied by holding the infectious-singles level at ``i_value``."""
    lin = linearize(p)
    ys = analytic.y_star(p)
    load = p.r_plus * np.array([ys - i_value, i_value / 2.0])
    si_rec, ii_rec = lin.phi_inf @ load * i_value
    return float(si_rec), float(ii_rec)


@dataclass(frozen=True, eq=False)
class LinearizedSystem:
    """Linear structure of the infection block around the disease-free state.

    K:       2x2 pair-block matrix [[-a, 2], [lam, -b]]
    L0:      injection vector r_plus * (y*, 0)
    phi_inf: integrated pair-block semigroup, equals -K^{-1}
    A3:      full 3x3 linearization in (i, si, ii) at the disease-free state
    mu:      spectral abscissa of A3
    """

    K: np.ndarray
    L0: np.ndarray
    phi_inf: np.ndarray
    A3: np.ndarray
    mu: float


def linearize(p: Params) -> LinearizedSystem:
    d = analytic.derived_constants(p)
    ys = d.y_star
    K = np.array([[-d.a, 2.0], [p.lam, -d.b]])
    L0 = p.r_plus * np.array([ys, 0.0])
    phi_inf = -np.linalg.inv(K)
    A3 = np.array(
        [
            [-(1.0 + p.r_plus * ys), p.r_minus, 2.0 * p.r_minus],
            [p.r_plus * ys, -d.a, 2.0],
            [0.0, p.lam, -d.b],
        ]
    )
    mu = float(np.max(np.linalg.eigvals(A3).real))
    return LinearizedSystem(K=K, L0=L0, phi_inf=phi_inf, A3=A3, mu=mu)


def growth_rate_equation_residual(p: Params, mu: float) -> float:
    """Residual of the scalar growth-rate equation
    mu = -(1 + r_plus*y*) + r_minus*(1,2) @ (mu*I - K)^{-1} @ L0;
    zero at eigenvalues of the linearization, and at mu=0 exactly when r0 = 1.
    """
    lin = linearize(p)
    ys = analytic.y_star(p)
    v = np.linalg.solve(mu * np.eye(2) - lin.K, lin.L0)
    return float(-(1.0 + p.r_plus * ys) + p.r_minus * np.array([1.0, 2.0]) @ v - mu)


@dataclass(frozen=True, eq=False)
class NextGenDecomposition:
    """Splitting A3 = F - V into new-infection and transition parts."""

    F: np.ndarray
    V: np.ndarray
    rho: float


def next_gen_decomposition(p: Params) -> NextGenDecomposition:
    d = analytic.derived_constants(p)
    ys = d.y_star
    F = np.zeros((3, 3))
    F[1, 0] = p.r_plus * ys
    V = np.array(
        [
            [1.0 + p.r_plus * ys, -p.r_minus, -2.0 * p.r_minus],
            [0.0, d.a, -2.0],
            [0.0, -p.lam, d.b],
        ]
    )
    rho = float(np.max(np.abs(np.linalg.eigvals(F @ np.linalg.inv(V)))))
    return NextGenDecomposition(F=F, V=V, rho=rho)


def next_gen_r0(p: Params) -> float:
    """Reproduction number as the spectral radius of F V^{-1}."""
    return next_gen_decomposition(p).rho
