import numpy as np
import pytest

from flathat.params import ProblemParams
from flathat.shooting import lambda_star_unit_ball


@pytest.fixture(scope="session")
def p4() -> ProblemParams:
    """Default admissible suite: N=4, alpha=0.1, beta=0.2 (lam placeholder 1)."""
    return ProblemParams(dim=4, alpha=0.1, beta=0.2, lam=1.0)


@pytest.fixture(scope="session")
def lam_star4(p4) -> float:
    """Critical parameter for the unit ball in the default suite."""
    return lambda_star_unit_ball(p4)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20250809)
