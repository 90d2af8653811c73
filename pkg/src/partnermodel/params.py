"""Model rate parameters shared by every layer of the package."""
from __future__ import annotations

from dataclasses import dataclass


class DomainError(ValueError):
    """An input lies outside the domain an operation is defined on."""


class IntegrationError(RuntimeError):
    """An ODE integration left its invariant region or failed to converge."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class Params:
    """Rates of the partner model.

    lam:     within-partnership transmission rate
    r_plus:  partnership formation rate (per pair, scaled by 1/N in simulation)
    r_minus: partnership breakup rate

    The recovery rate is normalized to 1.  All three rates must be strictly
    positive; the dynamics degenerate if any of them vanishes.
    """

    lam: float
    r_plus: float
    r_minus: float

    def __post_init__(self):
        for name in ("lam", "r_plus", "r_minus"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and v == v and v != float("inf")):
                raise DomainError(f"{name} must be a finite positive number, got {v!r}")

    @property
    def alpha(self) -> float:
        """Formation/breakup ratio r_plus / r_minus."""
        return self.r_plus / self.r_minus
