import pytest

from flathat.params import InvalidParameterError, ProblemParams, admissibility_check, sphere_area


def test_admissible_examples():
    # 2*1.05*1.1 = 2.31 < 3*0.95*0.9 = 2.565
    assert admissibility_check(ProblemParams(3, 0.05, 0.10, 1.0))
    # 2*1.5*1.7 = 5.1 > 3*0.5*0.3 = 0.45
    assert not admissibility_check(ProblemParams(3, 0.5, 0.7, 1.0))
    # 2*1.1*1.2 = 2.64 < 4*0.9*0.8 = 2.88
    assert admissibility_check(ProblemParams(4, 0.1, 0.2, 1.0))


def test_dimension_two_never_admissible():
    assert not ProblemParams(2, 0.1, 0.2, 1.0).admissible()


@pytest.mark.parametrize("alpha,beta", [(0.3, 0.2), (0.2, 0.2), (0.0, 0.5), (0.5, 1.0), (-0.1, 0.5)])
def test_bad_exponents_rejected(alpha, beta):
    with pytest.raises(InvalidParameterError):
        ProblemParams(3, alpha, beta, 1.0)


def test_bad_lambda_rejected():
    with pytest.raises(InvalidParameterError):
        ProblemParams(3, 0.1, 0.2, 0.0)
    with pytest.raises(InvalidParameterError):
        ProblemParams(3, 0.1, 0.2, -2.0)


def test_admissibility_matches_inequality_on_random_params(rng):
    for _ in range(200):
        alpha = rng.uniform(0.01, 0.98)
        beta = rng.uniform(alpha + 1e-3, 0.99)
        dim = int(rng.integers(1, 12))
        p = ProblemParams(dim, alpha, beta, float(rng.uniform(0.1, 10)))
        expect = dim >= 3 and 2 * (1 + alpha) * (1 + beta) < dim * (1 - alpha) * (1 - beta)
        assert p.admissible() == expect


def test_sphere_areas():
    import math
    assert sphere_area(1) == pytest.approx(2 * math.pi)      # circle
    assert sphere_area(2) == pytest.approx(4 * math.pi)      # 2-sphere
    assert sphere_area(3) == pytest.approx(2 * math.pi ** 2)  # 3-sphere
