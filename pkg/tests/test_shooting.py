import numpy as np
import pytest

from flathat.barrier import delta_max
from flathat.params import ProblemParams
from flathat.shooting import (FlatHat, ShootingSettings, find_flat_hat,
                              make_reference, lambda_star_unit_ball,
                              shoot_flat_hat, support_radius)


@pytest.fixture(scope="module")
def ref4(p4):
    return make_reference(p4, lam_ref=1.0)


@pytest.fixture(scope="module")
def hat_star(p4, ref4):
    lam_star = ref4.lambda_star_for_radius(1.0)
    return find_flat_hat(p4.with_lam(lam_star))


def test_one_dimensional_center_equals_potential_root():
    # no friction: energy conservation forces F(U(0)) = 0
    p = ProblemParams(dim=1, alpha=0.1, beta=0.2, lam=1.9560747794)
    hat = find_flat_hat(p)
    assert hat.center_value == pytest.approx(delta_max(p.alpha, p.beta, p.lam), abs=1e-8)


def test_slightly_low_center_undershoots(p4, lam_star4):
    p = p4.with_lam(lam_star4)
    s_root = delta_max(p.alpha, p.beta, p.lam)
    shot = shoot_flat_hat(p, s_root - 1e-3)
    assert shot.outcome == "undershoot"
    assert shot.U > 0.0


def test_high_center_overshoots(p4, lam_star4):
    p = p4.with_lam(lam_star4)
    shot = shoot_flat_hat(p, 10.0 * delta_max(p.alpha, p.beta, p.lam))
    assert shot.outcome == "overshoot"
    assert shot.V < 0.0


def test_touchdown_tolerances(hat_star):
    # near-simultaneous vanishing of U and U' at the landing radius
    assert abs(hat_star.touchdown_U) <= 1e-9
    assert abs(hat_star.touchdown_V) <= 1e-9


def test_landing_radius_is_one_at_lambda_star(hat_star):
    assert hat_star.radius == pytest.approx(1.0, rel=1e-2)  # round trip
    assert hat_star.radius == pytest.approx(1.0, rel=1e-5)  # actual quality


def test_profile_nonincreasing_and_supported(hat_star):
    prof = hat_star.profile
    assert prof.center_value == hat_star.center_value
    assert np.all(np.diff(prof.values) <= 1e-12 * prof.center_value)
    assert prof.values[-1] == 0.0
    assert prof(np.array([0.0]))[0] == pytest.approx(hat_star.center_value, rel=1e-12)
    assert prof(np.array([2.0 * prof.support_radius]))[0] == 0.0


def test_radius_decreasing_and_scaling_slope(p4, lam_star4, ref4):
    lams = lam_star4 * 10.0 ** np.linspace(-0.5, 0.5, 5)
    radii = np.array([support_radius(p4.with_lam(l)) for l in lams])
    assert np.all(np.diff(radii) < 0.0)
    slope = np.polyfit(np.log(lams), np.log(radii), 1)[0]
    expected = -(1.0 - p4.alpha) / (2.0 * (p4.beta - p4.alpha))
    assert slope == pytest.approx(expected, rel=5e-3)
    # doubling law on a single pair
    r1 = support_radius(p4.with_lam(lam_star4))
    r2 = support_radius(p4.with_lam(2.0 * lam_star4))
    assert r2 / r1 == pytest.approx(2.0 ** expected, rel=5e-3)


def test_radius_invariant_under_step_cap_halving(p4, lam_star4):
    p = p4.with_lam(lam_star4)
    r_a = support_radius(p, ShootingSettings(max_step=0.05))
    r_b = support_radius(p, ShootingSettings(max_step=0.025))
    assert abs(r_a - r_b) <= 1e-6


def test_lambda_star_reference_identity(ref4):
    assert ref4.lambda_star_for_radius(ref4.radius_ref) == pytest.approx(ref4.lam_ref, rel=1e-14)


def test_lambda_star_strictly_decreasing_in_radius(ref4):
    radii = [0.5, 1.0, 2.0]
    vals = [ref4.lambda_star_for_radius(R) for R in radii]
    assert vals[0] > vals[1] > vals[2]


def test_lambda_star_round_trip(p4, lam_star4):
    R = support_radius(p4.with_lam(lam_star4))
    assert R == pytest.approx(1.0, rel=1e-2)


def test_second_suite_round_trip():
    # N=3, alpha=0.05, beta=0.1 (thin admissibility region)
    p = ProblemParams(dim=3, alpha=0.05, beta=0.1, lam=1.0)
    assert p.admissible()
    lam_star = lambda_star_unit_ball(p)
    R = support_radius(p.with_lam(lam_star))
    assert R == pytest.approx(1.0, rel=1e-2)
