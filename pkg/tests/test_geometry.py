import math

import numpy as np
import pytest
from scipy.integrate import quad

from flathat.barrier import make_barrier_params
from flathat.geometry import (CertificationError, MeridianDomain, ball_meridian,
                              build_domain, inradius, segment_curvature)


@pytest.fixture(scope="module")
def bp():
    return make_barrier_params(dim=4, alpha=0.1, beta=0.2, lambda0=2.93, l0=1.5)


@pytest.fixture(scope="module")
def dumbbell(bp):
    return build_domain(r_cyl=0.5, l_total=bp.l1 + 1.0, fillet_length=0.35,
                        barrier=bp, grid_h=0.01)


def test_unit_ball_degenerate_case():
    ball = ball_meridian(1.0)
    s = ball.boundary_samples(2000)
    assert s.x_dot_nu.min() == pytest.approx(1.0, abs=1e-12)
    # normals equal position on the sphere
    assert np.allclose(s.normal, s.position, atol=1e-12)
    ball.certify(expected_inradius=1.0, grid_h=0.01)


def test_cylinder_side_star_product(dumbbell):
    s = dumbbell.boundary_samples(4000)
    cyl = s.tag == "cylinder"
    assert cyl.any()
    assert np.allclose(s.x_dot_nu[cyl], 0.5, atol=1e-12)
    assert np.allclose(s.normal[cyl], [1.0, 0.0], atol=1e-12)


def test_default_build_certifies(dumbbell, bp):
    report = dumbbell.certify(expected_inradius=1.0, grid_h=0.01)
    assert report["min_x_dot_nu"] > 0.0
    assert report["max_curvature_jump"] <= 1e-8
    assert report["max_tangent_jump"] <= 1e-8
    assert abs(report["inradius"] - 1.0) <= 0.02


def test_star_minimum_stable_under_doubling(dumbbell):
    m1 = dumbbell.boundary_samples(10_000).x_dot_nu.min()
    m2 = dumbbell.boundary_samples(20_000).x_dot_nu.min()
    assert m2 > 0.0
    assert abs(m1 - m2) <= 0.1 * abs(m2)


def test_normals_unit_length(dumbbell):
    s = dumbbell.boundary_samples(5000)
    norms = np.linalg.norm(s.normal, axis=1)
    assert np.max(np.abs(norms - 1.0)) <= 1e-12


def test_segment_lengths_match_adaptive_quadrature(dumbbell):
    total = 0.0
    for seg in dumbbell.segments:
        ln = quad(lambda t: float(np.linalg.norm(seg.velocity(t))), 0.0, 1.0,
                  epsabs=1e-12, epsrel=1e-12, limit=200)[0]
        assert ln == pytest.approx(seg.length, abs=1e-10)
        total += ln
    assert total == pytest.approx(dumbbell.total_length, abs=1e-10)


def test_inradius_three_geometries(bp):
    assert inradius(ball_meridian(1.0), 0.01) == pytest.approx(1.0, abs=0.01)
    dom5 = build_domain(0.5, bp.l1 + 1.0, 0.35, bp, certify=False)
    assert inradius(dom5, 0.01) == pytest.approx(1.0, abs=0.01)
    dom2 = build_domain(0.2, bp.l1 + 1.0, 0.25, bp, certify=False)
    assert inradius(dom2, 0.01) == pytest.approx(1.0, abs=0.01)


def test_contains(dumbbell, bp):
    assert dumbbell.contains(0.0, 0.0)
    assert not dumbbell.contains(2.0, 0.0)
    assert dumbbell.contains(0.9 * 0.5, 0.5 * dumbbell.l_total)
    # boundary points resolve as outside
    assert not dumbbell.contains(0.5, 0.5 * dumbbell.l_total)
    assert not dumbbell.contains(0.0, -1.0)


def test_tail_region(dumbbell, bp):
    tail = dumbbell.tail(bp.l0)
    assert tail.contains_point(0.3, 2.0)
    assert not tail.contains_point(0.3, 0.5)      # inside the cut ball
    assert not tail.contains_point(0.3, 50.0)     # outside the domain


def test_tags_cover_expected_families(dumbbell):
    tags = set(s.tag for s in dumbbell.segments)
    assert tags == {"ball", "fillet", "cylinder", "cap"}


def test_joint_curvatures_match_analytic_values(dumbbell):
    ball, blend1, side, blend2, cap = dumbbell.segments
    assert segment_curvature(blend1, 0.0) == pytest.approx(1.0, abs=1e-10)
    assert segment_curvature(blend1, 1.0) == pytest.approx(0.0, abs=1e-10)
    assert segment_curvature(blend2, 0.0) == pytest.approx(0.0, abs=1e-10)
    assert segment_curvature(blend2, 1.0) == pytest.approx(1.0 / 0.5, abs=1e-10)


def test_preconditions_rejected(bp):
    with pytest.raises(ValueError):
        build_domain(0.95, bp.l1 + 1.0, 0.3, bp)      # r_cyl above ceiling
    with pytest.raises(ValueError):
        build_domain(0.5, bp.l1 - 0.1, 0.3, bp)       # tail shorter than l1
    with pytest.raises(ValueError):
        build_domain(0.5, bp.l1 + 1.0, 1.2, bp)       # fillet eats the ball arc


def test_certification_failure_names_invariant():
    # a deliberately non-star-shaped curve: dumbbell pinched through the origin
    from flathat.geometry import CircleArc, LineSegment
    # half-circle centred off-origin so position.normal changes sign
    arc = CircleArc((0.0, 1.2), 1.0, -0.5 * math.pi, 0.5 * math.pi, "ball")
    dom = MeridianDomain([arc])
    with pytest.raises(CertificationError, match="star-shape"):
        dom.certify(expected_inradius=None)
