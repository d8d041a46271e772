"""Flat-hat radial states by overshoot/undershoot bisection.

The radial reduction of the problem is

    U'' + (N-1)/r U' + lam U^beta - U^alpha = 0,   U(0) = a,  U'(0) = 0,

and the compactly supported ("flat-hat") state is the trajectory that lands
at U = U' = 0 at a finite radius R.  In the frictionless case N = 1 the
first integral  U'^2/2 - F(U) = const  pins the critical center value at the
positive root of the barrier potential F; for N >= 2 friction dissipates
energy and the critical center lies above that root.  Starting below it the
trajectory turns around with U > 0 (undershoot); crossing zero with negative
slope is an overshoot.  Bisection on the center value converges to the
landing trajectory.

Support radii obey the exact scaling law

    R(lam) = R(lam_ref) * (lam/lam_ref)**(-(1-alpha)/(2*(beta-alpha))),

which also inverts to the critical parameter lam_star(R) at which the
flat-hat support radius equals a prescribed R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .barrier import delta_max
from .params import ProblemParams
from .profiles import RadialProfile


class IntegrationBlowup(RuntimeError):
    """Trajectory left the admissible region before any event fired."""


class NoBracketError(RuntimeError):
    """No overshooting center value was found; no flat-hat exists here."""


@dataclass(frozen=True)
class ShootingSettings:
    """Numerical knobs of the shooting integrator.

    Tolerances scale with the center value: a trajectory started at ``a``
    is classified with thresholds ``event_tol * a`` on both U and U'.
    """

    rtol: float = 1e-12
    atol_factor: float = 1e-16
    event_tol: float = 1e-9
    bisect_rel: float = 1e-14
    max_radius: float = 1e4
    max_step: float = np.inf


@dataclass
class ShotResult:
    """One integrated trajectory and its classification."""

    outcome: str                 # 'undershoot' | 'overshoot' | 'profile'
    radius: float                # radius of the terminating event
    U: float                     # state at that radius
    V: float
    sol: object = None           # scipy OdeSolution (dense output)


@dataclass
class FlatHat:
    """Converged flat-hat trajectory."""

    params: ProblemParams
    center_value: float
    radius: float
    touchdown_U: float
    touchdown_V: float
    profile: RadialProfile


def _rhs(r, y, lam, alpha, beta, n_minus_1):
    U, V = y
    Up = U if U > 0.0 else 0.0
    g = Up ** alpha - lam * Up ** beta
    return (V, g - n_minus_1 / r * V)


def shoot_flat_hat(p: ProblemParams, center_value: float,
                   settings: ShootingSettings = ShootingSettings()) -> ShotResult:
    """Integrate one trajectory from U(0) = center_value and classify it.

    Returns a :class:`ShotResult` whose outcome is ``'profile'`` when U and
    U' vanish together within the (center-scaled) event tolerance,
    ``'overshoot'`` when U reaches zero with residual inward slope, and
    ``'undershoot'`` when U' vanishes while U is still positive.

    Raises
    ------
    IntegrationBlowup
        If no event fires before ``settings.max_radius`` and the state has
        not decayed; signals a center value outside the usable bracket.
    """
    if center_value <= 0.0:
        raise ValueError("center_value must be positive")
    a = float(center_value)
    lam, alpha, beta = p.lam, p.alpha, p.beta
    # series start: U''(0) = g(a)/N by symmetry
    r0 = 1e-8
    g0 = a ** alpha - lam * a ** beta
    y0 = (a + g0 * r0 * r0 / (2.0 * p.dim), g0 * r0 / p.dim)

    def hit_zero(r, y, *args):
        return y[0]
    hit_zero.terminal = True
    hit_zero.direction = -1

    def turn(r, y, *args):
        return y[1]
    turn.terminal = True
    turn.direction = 0

    sol = solve_ivp(_rhs, (r0, settings.max_radius), y0,
                    args=(lam, alpha, beta, p.dim - 1.0),
                    method="DOP853", rtol=settings.rtol,
                    atol=settings.atol_factor * a,
                    max_step=settings.max_step,
                    events=(hit_zero, turn), dense_output=True)
    tol = settings.event_tol * a
    if sol.t_events[0].size:
        r_ev = float(sol.t_events[0][0])
    elif sol.t_events[1].size:
        r_ev = float(sol.t_events[1][0])
    else:
        U_end, V_end = sol.y[0, -1], sol.y[1, -1]
        if abs(U_end) <= tol and abs(V_end) <= tol:
            return ShotResult("profile", float(sol.t[-1]), float(U_end), float(V_end), sol.sol)
        raise IntegrationBlowup(
            f"no event before r={settings.max_radius} for center {a}")
    U_ev, V_ev = (float(v) for v in sol.sol(r_ev))
    if abs(U_ev) <= tol and abs(V_ev) <= tol:
        return ShotResult("profile", r_ev, U_ev, V_ev, sol.sol)
    if U_ev <= tol:
        return ShotResult("overshoot", r_ev, U_ev, V_ev, sol.sol)
    return ShotResult("undershoot", r_ev, U_ev, V_ev, sol.sol)


def _closest_approach(shot: ShotResult, n_scan: int = 4001):
    """Radius near the end of a trajectory minimizing max(|U|, |U'|)."""
    R = shot.radius
    rr = np.linspace(0.9 * R, R, n_scan)
    UU, VV = shot.sol(rr)
    m = np.maximum(np.abs(UU), np.abs(VV))
    j = int(np.argmin(m))
    return float(rr[j]), float(UU[j]), float(VV[j])


def find_flat_hat(p: ProblemParams,
                  settings: ShootingSettings = ShootingSettings()) -> FlatHat:
    """Locate the flat-hat trajectory by bisection on the center value.

    The lower end of the initial bracket is the barrier-potential root
    (guaranteed undershoot for N >= 2, exact landing value for N = 1); the
    upper end grows geometrically until an overshoot appears.
    """
    s_root = delta_max(p.alpha, p.beta, p.lam)
    lo, hi = s_root, 2.0 * s_root
    for _ in range(60):
        shot = shoot_flat_hat(p, hi, settings)
        if shot.outcome == "overshoot":
            break
        if shot.outcome == "profile":
            lo = hi
            break
        hi *= 2.0
    else:
        raise NoBracketError(f"no overshoot found up to center={hi}")

    best = None
    while hi - lo > settings.bisect_rel * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # bracket exhausted at float resolution
            break
        shot = shoot_flat_hat(p, mid, settings)
        if shot.outcome == "profile":
            best = (mid, shot)
            break
        if shot.outcome == "overshoot":
            hi = mid
        else:
            lo = mid
    if best is None:
        mid = 0.5 * (lo + hi)
        shot = shoot_flat_hat(p, mid, settings)
        best = (mid, shot)
    center, shot = best
    r_land, U_land, V_land = _closest_approach(shot)
    grid = np.linspace(0.0, r_land, 2001)
    UU, VV = shot.sol(grid)
    UU = np.maximum(UU, 0.0)
    UU[-1] = 0.0
    VV[-1] = 0.0
    profile = RadialProfile(grid=grid, values=UU, derivs=VV, support_radius=r_land)
    return FlatHat(params=p, center_value=center, radius=r_land,
                   touchdown_U=U_land, touchdown_V=V_land, profile=profile)


def support_radius(p: ProblemParams,
                   settings: ShootingSettings = ShootingSettings()) -> float:
    """Support radius R of the flat-hat state at parameters ``p``."""
    return find_flat_hat(p, settings).radius


@dataclass
class PressedState:
    """Radial positive state on the ball of radius ``radius``.

    The trajectory starts above the flat-hat center value and crosses zero
    exactly at ``radius`` with residual slope ``edge_slope`` < 0; it is the
    radial profile of the boundary-active (Hopf) state on that ball.
    """

    params: ProblemParams
    center_value: float
    radius: float
    edge_slope: float
    profile: RadialProfile


def find_pressed(p: ProblemParams, radius: float,
                 settings: ShootingSettings = ShootingSettings()) -> PressedState:
    """Radial state with first zero crossing at the prescribed radius.

    Bisection on the center value above the flat-hat landing value: the
    crossing radius grows with the center value, so the bracket closes on
    the trajectory whose zero hits ``radius``.
    """
    hat = find_flat_hat(p, settings)
    if radius <= hat.radius:
        raise NoBracketError(
            f"pressed state needs radius > flat-hat radius {hat.radius}, got {radius}")
    lo = hat.center_value * (1.0 + 1e-9)
    hi = 2.0 * lo
    def crossing(center):
        shot = shoot_flat_hat(p, center, settings)
        if shot.outcome == "undershoot":
            return None, shot
        return shot.radius, shot
    for _ in range(80):
        z, shot = crossing(hi)
        if z is not None and z >= radius:
            break
        hi *= 2.0
    else:
        raise NoBracketError(f"no center value reaches crossing radius {radius}")
    best = None
    while hi - lo > 1e-14 * hi:
        mid = 0.5 * (lo + hi)
        z, shot = crossing(mid)
        if z is None or z < radius:
            lo = mid
        else:
            hi = mid
            best = (mid, z, shot)
    if best is None:
        raise NoBracketError("pressed-state bisection failed to bracket")
    center, z, shot = best
    grid = np.linspace(0.0, z, 2001)
    UU, VV = shot.sol(grid)
    UU = np.maximum(UU, 0.0)
    UU[-1] = 0.0
    profile = RadialProfile(grid=grid, values=UU, derivs=VV, support_radius=z)
    return PressedState(params=p, center_value=center, radius=z,
                        edge_slope=float(VV[-1]), profile=profile)


@dataclass(frozen=True)
class RadiusReference:
    """A reference pair (lam_ref, R_ref) from one converged shooting."""

    lam_ref: float
    radius_ref: float
    alpha: float
    beta: float

    def lambda_star_for_radius(self, R: float) -> float:
        """Parameter at which the flat-hat support radius equals ``R``."""
        if R <= 0.0:
            raise ValueError("radius must be positive")
        expo = 2.0 * (self.beta - self.alpha) / (1.0 - self.alpha)
        return self.lam_ref * (self.radius_ref / R) ** expo

    def radius_for_lambda(self, lam: float) -> float:
        """Scaling-law prediction of the support radius at parameter lam."""
        expo = (1.0 - self.alpha) / (2.0 * (self.beta - self.alpha))
        return self.radius_ref * (lam / self.lam_ref) ** (-expo)


def make_reference(p: ProblemParams, lam_ref: float = 1.0,
                   settings: ShootingSettings = ShootingSettings()) -> RadiusReference:
    """Shoot once at ``lam_ref`` and package the scaling-law reference."""
    R = support_radius(p.with_lam(lam_ref), settings)
    return RadiusReference(lam_ref=lam_ref, radius_ref=R, alpha=p.alpha, beta=p.beta)


def lambda_star_unit_ball(p: ProblemParams, lam_ref: float = 1.0,
                          settings: ShootingSettings = ShootingSettings()) -> float:
    """Critical parameter at which the flat-hat support radius equals 1."""
    return make_reference(p, lam_ref, settings).lambda_star_for_radius(1.0)
