"""Problem parameters for the sublinear two-power reaction.

The equation under study is

    -Lap(u) = lam * u**beta - u**alpha      in Omega,   u = 0 on the boundary,

with 0 < alpha < beta < 1, so the reaction is non-Lipschitz at u = 0.
Everything downstream (barrier construction, shooting, FEM solves) is
parametrized by the tuple (dim, alpha, beta, lam) collected here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


class InvalidParameterError(ValueError):
    """Raised when exponents or parameters violate the standing assumptions."""


def _check_exponents(alpha: float, beta: float) -> None:
    if not (0.0 < alpha < beta < 1.0):
        raise InvalidParameterError(
            f"exponents must satisfy 0 < alpha < beta < 1, got alpha={alpha}, beta={beta}"
        )


@dataclass(frozen=True)
class ProblemParams:
    """Dimension, exponent pair and bifurcation parameter of one problem instance.

    Parameters
    ----------
    dim : int
        Spatial dimension N of the ambient domain.
    alpha, beta : float
        Reaction exponents, 0 < alpha < beta < 1.
    lam : float
        Coefficient of the focusing term, lam > 0.
    """

    dim: int
    alpha: float
    beta: float
    lam: float

    def __post_init__(self):
        _check_exponents(self.alpha, self.beta)
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise InvalidParameterError(f"lam must be positive and finite, got {self.lam}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidParameterError(f"dim must be a positive integer, got {self.dim}")

    def admissible(self) -> bool:
        """Whether the compactness condition for the construction holds.

        Requires dim >= 3 together with the strict inequality

            2*(1+alpha)*(1+beta) - dim*(1-alpha)*(1-beta) < 0.
        """
        lhs = 2.0 * (1.0 + self.alpha) * (1.0 + self.beta)
        rhs = self.dim * (1.0 - self.alpha) * (1.0 - self.beta)
        return self.dim >= 3 and lhs - rhs < 0.0

    def with_lam(self, lam: float) -> "ProblemParams":
        """Copy of these parameters at a different lam."""
        return replace(self, lam=lam)

    @property
    def scaling_exponent(self) -> float:
        """Exponent of the support-radius law R(lam) = R_ref * (lam/lam_ref)**(-e).

        e = (1-alpha) / (2*(beta-alpha)); see :func:`flathat.shooting.support_radius`.
        """
        return (1.0 - self.alpha) / (2.0 * (self.beta - self.alpha))


def admissibility_check(p: ProblemParams) -> bool:
    """Functional form of :meth:`ProblemParams.admissible`."""
    return p.admissible()


def sphere_area(k: int) -> float:
    """Surface area of the unit k-sphere embedded in R^(k+1)."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)
