"""Barrier potential and the compactly supported comparison profile.

For a fixed comparison parameter lam0 the potential

    F(s) = s**(alpha+1)/(alpha+1) - lam0 * s**(beta+1)/(beta+1)

is positive on (0, s_root) where s_root = ((beta+1)/(lam0*(alpha+1)))**(1/(beta-alpha)).
Picking a height delta in (0, s_root), the profile w on [0, C] is defined
implicitly by

    r = (1/sqrt(2)) * integral_{w(r)}^{delta} F(s)**(-1/2) ds,

so that w(0) = delta, w(C) = 0, w'(C) = 0 with

    C = (1/sqrt(2)) * integral_0^delta F(s)**(-1/2) ds.

The integrand has an s**(-(alpha+1)/2) singularity at s = 0.  Substituting
s = t**p with p = 2/(1-alpha) cancels it exactly: because

    F(s) = s**(alpha+1)/(alpha+1) * (1 - (s/s_root)**(beta-alpha)),

the transformed integrand is the bounded, smooth function

    g(t) = p * sqrt(alpha+1) / sqrt(1 - c_q * t**(p*(beta-alpha))),
    c_q = lam0*(alpha+1)/(beta+1),

which equals p*sqrt(alpha+1) at t = 0.  All quadrature below runs in the
t variable.

Shifting w outward, v(x) = w(|x| - l0) is a radial supersolution of the
reaction-diffusion operator outside the ball of radius l0 for every
lam <= lam0: its pointwise residual is -(N-1)/|x| * w'(|x|-l0) >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .params import InvalidParameterError, _check_exponents
from .profiles import RadialProfile

_SQRT2 = math.sqrt(2.0)


class QuadratureError(RuntimeError):
    """Panel refinement of the edge-constant quadrature failed to converge."""


class InversionError(RuntimeError):
    """Bracketed root-finding for the implicit profile lost its bracket."""


def barrier_potential(s, alpha: float, beta: float, lam0: float):
    """F(s) = s^(a+1)/(a+1) - lam0 s^(b+1)/(b+1), vectorized over s >= 0."""
    s = np.asarray(s, dtype=float)
    out = s ** (alpha + 1.0) / (alpha + 1.0) - lam0 * s ** (beta + 1.0) / (beta + 1.0)
    return out if out.ndim else float(out)


def delta_max(alpha: float, beta: float, lam0: float) -> float:
    """Unique positive root s_root of the barrier potential.

    Any barrier height delta in (0, s_root] keeps F positive on (0, delta).
    """
    _check_exponents(alpha, beta)
    if lam0 <= 0.0:
        raise InvalidParameterError(f"lam0 must be positive, got {lam0}")
    return ((beta + 1.0) / (lam0 * (alpha + 1.0))) ** (1.0 / (beta - alpha))


def _transformed_integrand(alpha: float, beta: float, lam0: float):
    """g(t) with s = t^p substituted, and the exponent p."""
    p = 2.0 / (1.0 - alpha)
    c_q = lam0 * (alpha + 1.0) / (beta + 1.0)
    pref = p * math.sqrt(alpha + 1.0)
    expo = p * (beta - alpha)

    def g(t):
        return pref / np.sqrt(1.0 - c_q * np.asarray(t) ** expo)

    return g, p


def edge_constant(alpha: float, beta: float, lam0: float, delta: float,
                  rel_tol: float = 1e-12, n0: int = 1, max_doublings: int = 10) -> float:
    """Width C of the profile support, by panel-doubling Gauss-Legendre.

    Integrates the desingularized form of (1/sqrt(2)) * int_0^delta F^(-1/2) ds
    with composite 12-point Gauss-Legendre panels on a mesh graded dyadically
    toward t = 0 (the transformed integrand is bounded there but carries a
    fractional-power term whose derivatives are not).  Each refinement splits
    every panel in two; iteration stops when two successive refinements agree
    to ``rel_tol``.

    Raises
    ------
    QuadratureError
        If successive refinements fail to meet ``rel_tol``.
    """
    s_root = delta_max(alpha, beta, lam0)
    if not (0.0 < delta < s_root):
        raise InvalidParameterError(
            f"delta must lie in (0, delta_max={s_root!r}), got {delta!r}")
    g, p = _transformed_integrand(alpha, beta, lam0)
    t_hi = delta ** (1.0 / p)
    nodes, weights = np.polynomial.legendre.leggauss(12)
    base = t_hi * 2.0 ** -np.arange(60, -1, -1.0)
    base = np.concatenate(([0.0], base))

    def composite(n_sub):
        lo = np.repeat(base[:-1], n_sub)
        hi = np.repeat(base[1:], n_sub)
        frac = np.tile(np.arange(n_sub, dtype=float), base.size - 1)
        width = (hi - lo) / n_sub
        lo = lo + frac * width
        mids = lo + 0.5 * width
        half = 0.5 * width
        pts = mids[:, None] + half[:, None] * nodes[None, :]
        return float(np.sum(half[:, None] * weights[None, :] * g(pts))) / _SQRT2

    prev = composite(n0)
    n = n0
    for _ in range(max_doublings):
        n *= 2
        cur = composite(n)
        if abs(cur - prev) <= rel_tol * abs(cur):
            return float(cur)
        prev = cur
    raise QuadratureError(
        f"edge constant did not converge to rel_tol={rel_tol} after {max_doublings} doublings")


@dataclass(frozen=True)
class BarrierParams:
    """Frozen inputs and derived constants of one barrier construction.

    ``l1 = l0 + edge_constant`` is the radius beyond which the shifted
    supersolution vanishes identically.
    """

    dim: int
    alpha: float
    beta: float
    lambda0: float
    delta: float
    l0: float
    edge_constant: float
    l1: float

    def __post_init__(self):
        _check_exponents(self.alpha, self.beta)
        if not 0.0 < self.delta < delta_max(self.alpha, self.beta, self.lambda0):
            raise InvalidParameterError("delta outside (0, delta_max)")
        if self.l0 <= 1.0:
            raise InvalidParameterError("l0 must exceed 1")
        if not (math.isfinite(self.edge_constant) and self.edge_constant > 0.0):
            raise InvalidParameterError("edge constant must be finite and positive")
        if self.l1 != self.l0 + self.edge_constant:
            raise InvalidParameterError("l1 must equal l0 + edge_constant exactly")


def make_barrier_params(dim: int, alpha: float, beta: float, lambda0: float,
                        l0: float = 1.5, delta_factor: float = 0.9) -> BarrierParams:
    """Assemble BarrierParams with delta = delta_factor * delta_max."""
    delta = delta_factor * delta_max(alpha, beta, lambda0)
    c = edge_constant(alpha, beta, lambda0, delta)
    return BarrierParams(dim=dim, alpha=alpha, beta=beta, lambda0=lambda0,
                         delta=delta, l0=l0, edge_constant=c, l1=l0 + c)


class Barrier:
    """Evaluator for the implicit profile w and the shifted supersolution v.

    The monotone map w -> r is inverted per query by bracketed root-finding
    on the arc integral; derivatives come from the closed form
    w'(r) = -sqrt(2 F(w(r))).
    """

    def __init__(self, params: BarrierParams):
        self.params = params
        self._g, self._p = _transformed_integrand(params.alpha, params.beta, params.lambda0)
        self.C = params.edge_constant
        # the adaptive rule used for inversion targets must agree with the
        # panel-refinement value of C; targets are clamped to its range
        self._arc_total = self._arc_from_zero(params.delta)
        if abs(self._arc_total - self.C) > 1e-9 * self.C:
            raise QuadratureError("edge constant inconsistent between quadrature rules")

    # -- low level ---------------------------------------------------------
    def _arc_from_zero(self, w: float) -> float:
        """(1/sqrt2) int_0^w F^(-1/2) ds, i.e. the r-distance from the w=0 edge."""
        if w <= 0.0:
            return 0.0
        t_hi = w ** (1.0 / self._p)
        val, _ = quad(self._g, 0.0, t_hi, epsabs=1e-15, epsrel=1e-13, limit=200)
        return val / _SQRT2

    def potential(self, s):
        return barrier_potential(s, self.params.alpha, self.params.beta, self.params.lambda0)

    # -- profile -----------------------------------------------------------
    def r_of_w(self, w: float) -> float:
        """Radius at which the profile takes the value w in [0, delta]."""
        return self.C - self._arc_from_zero(w)

    def w_of_r(self, r: float) -> float:
        """Invert the implicit formula at a single radius r >= 0."""
        if r <= 0.0:
            return self.params.delta
        if r >= self.C:
            return 0.0
        target = min(self.C - r, self._arc_total)
        try:
            return brentq(lambda w: self._arc_from_zero(w) - target,
                          0.0, self.params.delta, xtol=1e-300, rtol=8.9e-16)
        except ValueError as exc:  # pragma: no cover - signals quadrature bug
            raise InversionError(f"bracket lost inverting profile at r={r}") from exc

    def wprime_of_w(self, w):
        """Closed form w' = -sqrt(2 F(w)) expressed through the value w."""
        return -np.sqrt(2.0 * np.maximum(self.potential(w), 0.0))

    def sample(self, resolution: int = 400, pad: int = 8) -> RadialProfile:
        """Profile sampled on a uniform grid over [0, C] plus a zero tail.

        ``resolution`` is the number of intervals on [0, C]; ``pad`` extra
        points extend the grid past C where the profile vanishes.
        """
        if resolution < 2:
            raise InvalidParameterError("resolution must be at least 2")
        h = self.C / resolution
        grid = np.arange(resolution + 1 + pad) * h
        values = np.empty_like(grid)
        values[0] = self.params.delta
        hi = self.params.delta
        for i in range(1, resolution):
            # w is decreasing: the previous value brackets the next one above
            target = min(self.C - grid[i], self._arc_total)
            f_hi = self._arc_from_zero(hi) - target
            if f_hi < 0.0:  # guard against rounding at the bracket edge
                hi = self.params.delta
            values[i] = brentq(lambda w: self._arc_from_zero(w) - target,
                               0.0, hi, xtol=1e-300, rtol=8.9e-16)
            hi = values[i]
        values[resolution:] = 0.0
        derivs = self.wprime_of_w(values)
        derivs[resolution:] = 0.0
        return RadialProfile(grid=grid, values=values, derivs=derivs,
                             support_radius=self.C)

    # -- shifted supersolution ----------------------------------------------
    def supersolution(self, x_radius: float) -> float:
        """v(x) = w(|x| - l0) for |x| >= l0 (zero from l1 outward)."""
        l0 = self.params.l0
        if x_radius < l0:
            raise ValueError(f"supersolution only defined for |x| >= l0={l0}, got {x_radius}")
        if x_radius >= self.params.l1:  # property (iv), robust to cancellation
            return 0.0
        return self.w_of_r(x_radius - l0)

    def supersolution_residual(self, x_radius: float) -> float:
        """Closed-form residual -(N-1)/|x| * w'(|x|-l0); nonnegative in the tail."""
        w = self.supersolution(x_radius)
        return -(self.params.dim - 1) / x_radius * float(self.wprime_of_w(w))


def profile_w(params: BarrierParams, resolution: int = 400) -> RadialProfile:
    """Sample the implicit barrier profile; see :class:`Barrier`."""
    return Barrier(params).sample(resolution)


def supersolution_v(params: BarrierParams, x_radius: float) -> float:
    """Pointwise value of the shifted supersolution at radius ``x_radius``."""
    return Barrier(params).supersolution(x_radius)
