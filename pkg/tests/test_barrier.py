import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp
from scipy.optimize import bisect

from flathat.barrier import (Barrier, BarrierParams, InvalidParameterError,
                             barrier_potential, delta_max, edge_constant,
                             make_barrier_params)

A, B = 0.1, 0.2

# frozen oracle values (40-digit mpmath evaluation)
F_HALF_LAM1 = 0.061376503870618312927    # F(0.5; 0.1, 0.2, lam0=1)
DELTA_MAX_LAM1 = 2.3871824275727366383   # positive root of F at lam0=1
EDGE_C_LAM1 = 7.2050674079496470519      # C at lam0=1, delta=0.9*delta_max


def test_potential_zero_at_zero():
    assert barrier_potential(0.0, A, B, 1.0) == 0.0


def test_potential_coefficients_cancel_at_one():
    lam0 = 1.2 / 1.1
    assert barrier_potential(1.0, A, B, lam0) == pytest.approx(0.0, abs=1e-16)


def test_potential_matches_high_precision_value():
    assert barrier_potential(0.5, A, B, 1.0) == pytest.approx(F_HALF_LAM1, rel=1e-14)
    assert barrier_potential(0.5, A, B, 1.0) > 0.0


def test_delta_max_ratio_one():
    assert delta_max(A, B, 1.2 / 1.1) == pytest.approx(1.0, rel=1e-14)


def test_delta_max_agrees_with_bisection_oracle():
    root = bisect(lambda s: barrier_potential(s, A, B, 1.0), 1e-6, 10.0, xtol=1e-14)
    assert delta_max(A, B, 1.0) == pytest.approx(root, abs=1e-12)
    assert delta_max(A, B, 1.0) == pytest.approx(DELTA_MAX_LAM1, rel=1e-14)


def test_delta_max_halving_law():
    # doubling lam0 multiplies the root by 2^(-1/(b-a))
    s1 = delta_max(A, B, 0.7)
    s2 = delta_max(A, B, 1.4)
    assert s2 / s1 == pytest.approx(2.0 ** (-1.0 / (B - A)), rel=1e-12)


def test_potential_positive_below_root_random(rng):
    for _ in range(100):
        alpha = rng.uniform(0.02, 0.8)
        beta = rng.uniform(alpha + 0.02, 0.95)
        lam0 = rng.uniform(0.2, 5.0)
        s_root = delta_max(alpha, beta, lam0)
        s = rng.uniform(1e-6, 1.0) * s_root * 0.999999
        assert barrier_potential(s, alpha, beta, lam0) > 0.0


class TestEdgeConstant:
    def test_self_convergence(self):
        delta = 0.9 * delta_max(A, B, 1.0)
        c_loose = edge_constant(A, B, 1.0, delta, rel_tol=1e-8)
        c_tight = edge_constant(A, B, 1.0, delta, rel_tol=1e-13)
        assert c_loose == pytest.approx(c_tight, rel=1e-8)

    def test_golden_value(self):
        delta = 0.9 * delta_max(A, B, 1.0)
        assert edge_constant(A, B, 1.0, delta) == pytest.approx(EDGE_C_LAM1, rel=1e-11)

    def test_monotone_in_delta(self):
        smax = delta_max(A, B, 1.0)
        c_small = edge_constant(A, B, 1.0, 0.5 * smax)
        c_big = edge_constant(A, B, 1.0, 0.9 * smax)
        assert 0.0 < c_small < c_big

    def test_raw_quadrature_crosscheck(self):
        # same truncated interval (delta*1e-8, delta), raw integrand vs
        # desingularized variable: tight agreement
        delta = 0.9 * delta_max(A, B, 1.0)
        lo = delta * 1e-8
        raw = quad(lambda s: barrier_potential(s, A, B, 1.0) ** -0.5,
                   lo, delta, limit=400)[0] / np.sqrt(2.0)
        bar = Barrier(make_barrier_params(4, A, B, 1.0))
        sub = bar._arc_from_zero(delta) - bar._arc_from_zero(lo)
        assert raw == pytest.approx(sub, rel=1e-9)
        # and the full integral differs only by the (tiny) missed head
        assert edge_constant(A, B, 1.0, delta) == pytest.approx(raw, rel=2e-4)

    def test_nonconvergence_reported(self):
        from flathat.barrier import QuadratureError
        delta = 0.9 * delta_max(A, B, 1.0)
        with pytest.raises(QuadratureError):
            edge_constant(A, B, 1.0, delta, rel_tol=1e-13, n0=1, max_doublings=1)

    def test_delta_above_root_rejected(self):
        with pytest.raises(InvalidParameterError):
            edge_constant(A, B, 1.0, 1.1 * delta_max(A, B, 1.0))


@pytest.fixture(scope="module")
def bp() -> BarrierParams:
    # lam0 in the ballpark of 1.5*lam_star for the default suite
    return make_barrier_params(dim=4, alpha=A, beta=B, lambda0=2.93, l0=1.5)


@pytest.fixture(scope="module")
def bar(bp) -> Barrier:
    return Barrier(bp)


@pytest.fixture(scope="module")
def wprof(bar):
    return bar.sample(resolution=400)


class TestProfileW:
    def test_l1_identity(self, bp):
        assert bp.l1 == bp.l0 + bp.edge_constant

    def test_endpoints(self, bar, wprof):
        # w(0) = delta exactly: at r = 0 the integral's limits coincide
        assert wprof.values[0] == bar.params.delta
        # w(C) = 0 and w'(C) = 0 by the full-range integral and F(0) = 0
        i_c = int(np.argmin(np.abs(wprof.grid - bar.C)))
        assert abs(wprof.values[i_c]) <= 1e-12 * bar.params.delta
        assert abs(wprof.derivs[i_c]) <= 1e-12

    def test_monotone_strictly_decreasing_then_zero(self, bar, wprof):
        inside = wprof.grid < bar.C * (1 - 1e-12)
        vals = wprof.values[inside]
        assert np.all(np.diff(vals) < 0.0)
        beyond = wprof.grid >= bar.C
        assert np.all(wprof.values[beyond] == 0.0)
        assert np.all(wprof.derivs[beyond] == 0.0)

    def test_first_integral_identity(self, bar, wprof):
        F = bar.potential(wprof.values)
        gap = np.abs(0.5 * wprof.derivs ** 2 - F)
        bound = 1e-8 * bar.potential(bar.params.delta / 2.0)
        assert gap.max() <= bound

    def test_midpoint_against_ode_oracle(self, bar):
        # independent oracle: integrate w'' = w^a - lam0 w^b forward from r=0
        d, lam0 = bar.params.delta, bar.params.lambda0

        def rhs(r, y):
            w = max(y[0], 0.0)
            return [y[1], w ** A - lam0 * w ** B]

        wp0 = -np.sqrt(2.0 * bar.potential(d))
        sol = solve_ivp(rhs, (0.0, 0.5 * bar.C), [d, wp0], method="DOP853",
                        rtol=1e-12, atol=1e-14 * d, dense_output=True)
        w_ode = sol.sol(0.5 * bar.C)[0]
        w_quad = bar.w_of_r(0.5 * bar.C)
        assert abs(w_quad - w_ode) <= 1e-6 * d

    def test_ode_residual_second_order(self, bar):
        # centred second difference against w'' = w^a - lam0 w^b; the window
        # stops at 0.9*C because w'''' blows up at the contact point
        def max_resid(n):
            prof = bar.sample(resolution=n)
            r, w = prof.grid[:n + 1], prof.values[:n + 1]
            h = r[1] - r[0]
            wpp = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / h ** 2
            rhs = w[1:-1] ** A - bar.params.lambda0 * w[1:-1] ** B
            mask = r[1:-1] <= 0.9 * bar.C
            return np.max(np.abs(wpp - rhs)[mask])

        r1, r2 = max_resid(200), max_resid(400)
        assert 3.5 <= r1 / r2 <= 4.5

    def test_supersolution_properties(self, bar):
        bp = bar.params
        assert bar.supersolution(bp.l0) == pytest.approx(bp.delta, rel=1e-12)
        assert bar.supersolution(bp.l1) == 0.0
        assert bar.supersolution(bp.l1 + 3.7) == 0.0
        with pytest.raises(ValueError):
            bar.supersolution(bp.l0 - 1e-3)
        # nonincreasing in the tail
        rr = np.linspace(bp.l0, bp.l1 + 0.5, 200)
        vv = [bar.supersolution(r) for r in rr]
        assert np.all(np.diff(vv) <= 1e-15)

    def test_supersolution_residual_sign_and_fd_oracle(self, bar):
        bp = bar.params
        rr = np.linspace(bp.l0 + 1e-6, bp.l1 - 1e-6, 1000)
        res = np.array([bar.supersolution_residual(r) for r in rr])
        assert res.min() >= -1e-10
        # finite-difference Laplacian of v(x)=w(|x|-l0) agrees with the
        # closed-form residual at a few interior radii
        lam0, N = bp.lambda0, bp.dim
        for r in np.linspace(bp.l0 + 0.2 * bar.C, bp.l0 + 0.8 * bar.C, 5):
            h = 3e-4 * bar.C  # large enough that quadrature noise / h^2 stays small
            vm, v0, vp = (bar.supersolution(r - h), bar.supersolution(r),
                          bar.supersolution(r + h))
            lap = (vp - 2 * v0 + vm) / h ** 2 + (N - 1) / r * (vp - vm) / (2 * h)
            resid_fd = -lap - (lam0 * v0 ** B - v0 ** A)
            assert resid_fd == pytest.approx(bar.supersolution_residual(r),
                                             rel=1e-3, abs=1e-12)
