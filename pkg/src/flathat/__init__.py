"""flathat: axisymmetric laboratory for compact-support elliptic states.

Library layout:

- :mod:`flathat.params`    problem parameters and admissibility
- :mod:`flathat.barrier`   barrier potential, singular quadrature, profile w
- :mod:`flathat.shooting`  flat-hat states by overshoot/undershoot bisection
- :mod:`flathat.geometry`  axisymmetric dumbbell meridian domains
- :mod:`flathat.meshing`   boundary-fitted triangulation of the meridian
- :mod:`flathat.assembly`  weighted P1 forms and consistent flux recovery
- :mod:`flathat.solver`    regularized damped Newton and lam-continuation
- :mod:`flathat.analysis`  energy/flux balance checks and flux classification
- :mod:`flathat.cli`       batch pipeline (radial / domain / solve / analyze / verify)
"""

from .params import ProblemParams, admissibility_check
from .barrier import (BarrierParams, Barrier, barrier_potential, delta_max,
                      edge_constant, make_barrier_params, profile_w, supersolution_v)
from .shooting import (ShootingSettings, FlatHat, shoot_flat_hat, find_flat_hat,
                       support_radius, make_reference, lambda_star_unit_ball)

__all__ = [
    "ProblemParams", "admissibility_check",
    "BarrierParams", "Barrier", "barrier_potential", "delta_max",
    "edge_constant", "make_barrier_params", "profile_w", "supersolution_v",
    "ShootingSettings", "FlatHat", "shoot_flat_hat", "find_flat_hat",
    "support_radius", "make_reference", "lambda_star_unit_ball",
]

__version__ = "0.1.0"
