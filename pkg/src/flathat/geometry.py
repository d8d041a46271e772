"""Axisymmetric star-shaped domains as meridian curves.

A domain in R^N that is rotation invariant about its last coordinate axis is
described here by its meridian cross-section in the (rho, z) half-plane,
rho >= 0.  The boundary curve runs from the south axis point to the north
axis point, meeting the axis orthogonally at both ends so the revolved
hypersurface is smooth at the poles; traversal keeps the region on the left,
so the outward normal is (T_z, -T_rho) for unit tangent T.

The dumbbell used throughout joins the unit ball to a coaxial cylinder of
radius r_cyl < 1 and rounds the far end with a spherical cap; the two joins
are quintic Hermite blends matching position, tangent direction and signed
curvature on both sides, which makes the full boundary C^2.  Certification
is numerical: strict star-shapedness and curvature continuity are sampled,
and the inradius is measured with a distance transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.integrate import quad
from scipy.spatial import cKDTree
from shapely.geometry import Polygon

from .barrier import BarrierParams


class CertificationError(RuntimeError):
    """A numerically certified invariant of the domain failed; message names it."""


# ---------------------------------------------------------------------------
# parametric segments
# ---------------------------------------------------------------------------

class CircleArc:
    """Arc of a circle, parametrized linearly in angle over t in [0, 1]."""

    def __init__(self, center, radius, theta0, theta1, tag):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.theta0 = float(theta0)
        self.theta1 = float(theta1)
        self.tag = tag
        self.length = abs(theta1 - theta0) * self.radius

    def _theta(self, t):
        return self.theta0 + (self.theta1 - self.theta0) * np.asarray(t, dtype=float)

    def point(self, t):
        th = self._theta(t)
        return np.stack([self.center[0] + self.radius * np.cos(th),
                         self.center[1] + self.radius * np.sin(th)], axis=-1)

    def velocity(self, t):
        th = self._theta(t)
        dth = self.theta1 - self.theta0
        return np.stack([-self.radius * np.sin(th) * dth,
                         self.radius * np.cos(th) * dth], axis=-1)

    def acceleration(self, t):
        th = self._theta(t)
        dth = self.theta1 - self.theta0
        return np.stack([-self.radius * np.cos(th) * dth ** 2,
                         -self.radius * np.sin(th) * dth ** 2], axis=-1)

    def t_at_arclength(self, s):
        return np.asarray(s, dtype=float) / self.length


class LineSegment:
    def __init__(self, p0, p1, tag):
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.tag = tag
        self.length = float(np.linalg.norm(self.p1 - self.p0))

    def point(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        return self.p0 + t * (self.p1 - self.p0)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self.p1 - self.p0, t.shape + (2,)).copy()

    def acceleration(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape + (2,))

    def t_at_arclength(self, s):
        return np.asarray(s, dtype=float) / self.length


def _rot90(v):
    """Rotate by +90 degrees: (x, y) -> (-y, x)."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


class QuinticBlend:
    """Quintic Hermite curve joining two curvature-annotated endpoints.

    Both endpoint velocities are set to ``speed * T`` and the second
    parameter derivatives to ``speed**2 * kappa * J T``, so the geometric
    tangent and signed curvature match the adjoining segments exactly.
    """

    def __init__(self, p0, t0, k0, p1, t1, k1, tag, speed=None):
        p0, t0, p1, t1 = (np.asarray(v, dtype=float) for v in (p0, t0, p1, t1))
        if speed is None:
            speed = float(np.linalg.norm(p1 - p0))
        rows = []
        rhs = []
        for deriv, tval, val in (
                (0, 0.0, p0), (1, 0.0, speed * t0), (2, 0.0, speed ** 2 * k0 * _rot90(t0)),
                (0, 1.0, p1), (1, 1.0, speed * t1), (2, 1.0, speed ** 2 * k1 * _rot90(t1))):
            row = np.zeros(6)
            for j in range(deriv, 6):
                c = math.perm(j, deriv)
                row[j] = c * tval ** (j - deriv)
            rows.append(row)
            rhs.append(val)
        self.coef = np.linalg.solve(np.array(rows), np.array(rhs))  # (6, 2)
        self.dcoef = self.coef[1:] * np.arange(1, 6)[:, None]
        self.ddcoef = self.dcoef[1:] * np.arange(1, 5)[:, None]
        self.tag = tag
        self.length = quad(lambda t: float(np.linalg.norm(self.velocity(t))),
                           0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=100)[0]
        # cumulative arc-length table for inversion
        knots = np.linspace(0.0, 1.0, 257)
        speeds = np.linalg.norm(self.velocity(knots), axis=-1)
        seg = (speeds[:-1] + speeds[1:]) * 0.5 * np.diff(knots)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        cum *= self.length / cum[-1]
        self._knots, self._cum = knots, cum

    def _poly(self, coef, t):
        t = np.asarray(t, dtype=float)[..., None]
        powers = t ** np.arange(coef.shape[0])
        return powers @ coef

    def point(self, t):
        return self._poly(self.coef, t)

    def velocity(self, t):
        return self._poly(self.dcoef, t)

    def acceleration(self, t):
        return self._poly(self.ddcoef, t)

    def t_at_arclength(self, s):
        return np.interp(np.asarray(s, dtype=float), self._cum, self._knots)


def segment_curvature(seg, t):
    """Signed geometric curvature (positive = turning left)."""
    v = seg.velocity(t)
    a = seg.acceleration(t)
    cross = v[..., 0] * a[..., 1] - v[..., 1] * a[..., 0]
    speed = np.linalg.norm(v, axis=-1)
    return cross / speed ** 3


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass
class BoundarySamples:
    """Uniform-in-arc-length samples of the boundary curve."""

    arc_length: np.ndarray      # (n,)
    position: np.ndarray        # (n, 2)
    normal: np.ndarray          # (n, 2) unit outward
    tangent: np.ndarray         # (n, 2) unit
    curvature: np.ndarray       # (n,)
    tag: np.ndarray             # (n,) str
    x_dot_nu: np.ndarray        # (n,)


@dataclass
class TailRegion:
    """The part of a domain outside the closed ball of radius ``cut_radius``."""

    parent: "MeridianDomain"
    cut_radius: float

    def contains_point(self, rho, z) -> bool:
        return (math.hypot(rho, z) > self.cut_radius
                and self.parent.contains(rho, z))


class MeridianDomain:
    """Closed, simple meridian curve plus query machinery."""

    def __init__(self, segments, r_cyl=None, l_total=None, fillet_length=None):
        self.segments = list(segments)
        self.r_cyl = r_cyl
        self.l_total = l_total
        self.fillet_length = fillet_length
        self.star_center = np.zeros(2)
        self.seg_offsets = np.concatenate(
            ([0.0], np.cumsum([s.length for s in self.segments])))
        self.total_length = float(self.seg_offsets[-1])
        self._polygon = None

    # -- parametrization -----------------------------------------------------
    def locate(self, s):
        """Map global arc length to (segment index, local arc length)."""
        s = float(np.clip(s, 0.0, self.total_length))
        i = int(np.searchsorted(self.seg_offsets, s, side="right") - 1)
        i = min(i, len(self.segments) - 1)
        return i, s - self.seg_offsets[i]

    def at(self, s):
        """(position, tangent, normal, curvature, tag) at arc length s."""
        i, s_loc = self.locate(s)
        seg = self.segments[i]
        t = seg.t_at_arclength(s_loc)
        pos = seg.point(t)
        v = seg.velocity(t)
        tang = v / np.linalg.norm(v)
        nrm = np.array([tang[1], -tang[0]])
        return pos, tang, nrm, float(segment_curvature(seg, t)), seg.tag

    def boundary_samples(self, n: int) -> BoundarySamples:
        """n samples uniformly spaced in arc length (endpoints included)."""
        if n < 16:
            raise ValueError("need at least 16 boundary samples")
        svals = np.linspace(0.0, self.total_length, n)
        pos = np.empty((n, 2))
        tang = np.empty((n, 2))
        curv = np.empty(n)
        tags = np.empty(n, dtype=object)
        for k, s in enumerate(svals):
            p, tg, _, c, tag = self.at(s)
            pos[k], tang[k], curv[k], tags[k] = p, tg, c, tag
        nrm = np.stack([tang[:, 1], -tang[:, 0]], axis=-1)
        xdn = np.einsum("ij,ij->i", pos, nrm)
        return BoundarySamples(arc_length=svals, position=pos, normal=nrm,
                               tangent=tang, curvature=curv,
                               tag=tags.astype(str), x_dot_nu=xdn)

    # -- region queries --------------------------------------------------------
    def polygon(self, spacing: float = 5e-3) -> Polygon:
        """Shapely polygon of the meridian region (curve closed along the axis)."""
        if self._polygon is None or self._poly_spacing > spacing:
            n = max(64, int(np.ceil(self.total_length / spacing)) + 1)
            pts = self.boundary_samples(n).position
            pts[0, 0] = 0.0
            pts[-1, 0] = 0.0
            # close marginally left of the axis so interior axis points
            # (which are not domain boundary) test as inside
            m = 1e-7 * max(1.0, float(np.ptp(pts[:, 1])))
            closure = np.array([[-m, pts[-1, 1]], [-m, pts[0, 1]]])
            self._polygon = Polygon(np.vstack([pts, closure]))
            self._poly_spacing = spacing
        return self._polygon

    def contains(self, rho, z) -> bool:
        """Point-in-domain test; points on the boundary resolve as outside."""
        if rho < 0.0:
            return False
        return bool(self.polygon().contains(shapely.points(rho, z)))

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        mask = shapely.contains(self.polygon(), shapely.points(np.asarray(pts)))
        return np.asarray(mask, dtype=bool) & (np.asarray(pts)[:, 0] >= 0.0)

    def z_range(self):
        segpts = self.boundary_samples(512).position
        return float(segpts[:, 1].min()), float(segpts[:, 1].max())

    def tail(self, cut_radius: float) -> TailRegion:
        return TailRegion(parent=self, cut_radius=cut_radius)

    # -- certification ---------------------------------------------------------
    def certify(self, expected_inradius=1.0, n_star=10_000, joint_tol=1e-8,
                grid_h=0.01) -> dict:
        """Run all numeric invariants; raise CertificationError on the first violation.

        Returns a report dict with the measured quantities.
        """
        report = {}
        # axis endpoints, met orthogonally
        p_start, t_start = self.at(0.0)[0], self.at(0.0)[1]
        p_end, t_end = (self.at(self.total_length)[0],
                        self.at(self.total_length)[1])
        if abs(p_start[0]) > 1e-12 or abs(p_end[0]) > 1e-12:
            raise CertificationError("axis endpoints: curve must start and end at rho = 0")
        if abs(t_start[1]) > 1e-10 or abs(t_end[1]) > 1e-10:
            raise CertificationError("axis orthogonality: tangent not horizontal at a pole")
        # simple closed region
        if not self.polygon().is_valid:
            raise CertificationError("simple curve: meridian polygon is self-intersecting")
        # strict star-shapedness
        samples = self.boundary_samples(n_star)
        min_xdn = float(samples.x_dot_nu.min())
        report["min_x_dot_nu"] = min_xdn
        if min_xdn <= 0.0:
            raise CertificationError(
                f"star-shape sample: min position.normal = {min_xdn} <= 0")
        # C2 joints: one-sided tangent and curvature agreement
        max_tang_jump = 0.0
        max_curv_jump = 0.0
        for a, b in zip(self.segments[:-1], self.segments[1:]):
            va = a.velocity(1.0)
            vb = b.velocity(0.0)
            ta = va / np.linalg.norm(va)
            tb = vb / np.linalg.norm(vb)
            max_tang_jump = max(max_tang_jump, float(np.linalg.norm(ta - tb)))
            ka = float(segment_curvature(a, 1.0))
            kb = float(segment_curvature(b, 0.0))
            max_curv_jump = max(max_curv_jump, abs(ka - kb))
            if np.linalg.norm(a.point(1.0) - b.point(0.0)) > 1e-12:
                raise CertificationError("curvature jump: segment endpoints do not meet")
        report["max_tangent_jump"] = max_tang_jump
        report["max_curvature_jump"] = max_curv_jump
        if max_tang_jump > joint_tol or max_curv_jump > joint_tol:
            raise CertificationError(
                f"curvature jump: joint discontinuity {max_curv_jump} > {joint_tol}")
        # inradius
        if expected_inradius is not None:
            rin = inradius(self, grid_h)
            report["inradius"] = rin
            report["inradius_grid_h"] = grid_h
            if abs(rin - expected_inradius) > 2.0 * grid_h:
                raise CertificationError(
                    f"inradius: measured {rin}, expected {expected_inradius} +- {2*grid_h}")
        return report


def ball_meridian(radius: float = 1.0) -> MeridianDomain:
    """Meridian of the ball of given radius centred at the origin."""
    arc = CircleArc((0.0, 0.0), radius, -0.5 * math.pi, 0.5 * math.pi, "ball")
    return MeridianDomain([arc])


def build_domain(r_cyl: float, l_total: float, fillet_length: float,
                 barrier: BarrierParams | None = None, certify: bool = True,
                 grid_h: float = 0.01) -> MeridianDomain:
    """Dumbbell meridian: unit ball + cylinder of radius r_cyl + rounded cap.

    ``l_total`` is the nominal axial extent of the cylindrical part and must
    exceed the barrier's l1 when ``barrier`` is given.  The two joins are
    curvature-continuous quintic blends of arc-length scale ``fillet_length``.
    """
    if not 0.0 < r_cyl <= 0.9:
        raise ValueError(f"r_cyl must lie in (0, 0.9], got {r_cyl}")
    if barrier is not None and not l_total > barrier.l1:
        raise ValueError(f"l_total={l_total} must exceed l1={barrier.l1}")
    theta_jun = math.acos(r_cyl)          # ball/cylinder junction angle
    z_jun = math.sin(theta_jun)
    f = float(fillet_length)
    if not 0.0 < f < theta_jun - 0.05:
        raise ValueError("fillet_length leaves no room on the ball arc")
    r_cap = r_cyl
    f_cap = min(f, 0.6 * r_cap)   # keep the cap blend well inside the quarter arc
    psi1 = f_cap / r_cap
    z2 = z_jun + f
    z3 = float(l_total)
    if z3 <= z2 + 0.1:
        raise ValueError("cylinder too short for the requested fillets")
    z_cap = z3 + f_cap

    theta1 = theta_jun - f
    ball = CircleArc((0.0, 0.0), 1.0, -0.5 * math.pi, theta1, "ball")
    pA = np.array([math.cos(theta1), math.sin(theta1)])
    tA = np.array([-math.sin(theta1), math.cos(theta1)])
    blend1 = QuinticBlend(pA, tA, 1.0, (r_cyl, z2), (0.0, 1.0), 0.0, "fillet")
    side = LineSegment((r_cyl, z2), (r_cyl, z3), "cylinder")
    pB = np.array([r_cap * math.cos(psi1), z_cap + r_cap * math.sin(psi1)])
    tB = np.array([-math.sin(psi1), math.cos(psi1)])
    blend2 = QuinticBlend((r_cyl, z3), (0.0, 1.0), 0.0, pB, tB, 1.0 / r_cap, "fillet")
    cap = CircleArc((0.0, z_cap), r_cap, psi1, 0.5 * math.pi, "cap")

    dom = MeridianDomain([ball, blend1, side, blend2, cap],
                         r_cyl=r_cyl, l_total=l_total, fillet_length=f)
    if certify:
        dom.certify(expected_inradius=1.0, grid_h=grid_h)
    return dom


def inradius(domain: MeridianDomain, grid_h: float = 0.01) -> float:
    """Radius of the maximal inscribed ball, via a meridian distance transform.

    For an axisymmetric domain the full-dimensional ball of radius ``r``
    centred at meridian point (d, z) maps exactly to the meridian disk
    {(rho-d)^2 + (z-z0)^2 < r^2} clipped to rho >= 0, so the inradius equals
    the largest distance from an interior meridian point to the boundary
    curve.  Error is O(grid_h).
    """
    samples = domain.boundary_samples(
        max(2048, int(8 * domain.total_length / grid_h)))
    tree = cKDTree(samples.position)
    rmax = samples.position[:, 0].max()
    zmin, zmax = samples.position[:, 1].min(), samples.position[:, 1].max()
    xs = np.arange(0.0, rmax + grid_h, grid_h)
    zs = np.arange(zmin, zmax + grid_h, grid_h)
    X, Z = np.meshgrid(xs, zs)
    pts = np.column_stack([X.ravel(), Z.ravel()])
    inside = domain.contains_many(pts)
    if not inside.any():
        return 0.0
    d, _ = tree.query(pts[inside], workers=1)
    return float(d.max())
