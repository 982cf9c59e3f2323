"""Unit and property tests for the tunneling engine."""

import math

import numpy as np
import pytest

from qtunnel import bench
from qtunnel.tunneling import (
    EuclideanDistance,
    HilbertSchmidtDistance,
    StablePoint,
    TunnelConfig,
    dynamic_tunneling,
    estimate_pole_exponent,
    fista_descent,
    gradient_descent,
    penalty_factor,
    pole_factor,
    same_state,
    tunnel_flow,
    DescentTrace,
)


class QuadraticOracle:
    """f(x) = 0.5 |x - c|^2; token is the parameter vector."""

    def __init__(self, center):
        self.center = np.asarray(center, dtype=float)
        self.dimension = len(self.center)

    def evaluate(self, x):
        diff = np.asarray(x, dtype=float) - self.center
        return 0.5 * float(diff @ diff), diff, np.array(x, dtype=float)


class PowerOracle:
    """f(x) = |x|^(2m); gradient vanishes to order 2m-1 at the origin."""

    def __init__(self, m, dim=2):
        self.m = m
        self.dimension = dim

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        return r2**self.m, 2 * self.m * r2 ** (self.m - 1) * x, x.copy()


class RecordingOracle:
    """Wraps an oracle and logs every evaluation point."""

    def __init__(self, inner):
        self.inner = inner
        self.dimension = inner.dimension
        self.xs = []

    def evaluate(self, x):
        self.xs.append(np.array(x, dtype=float))
        return self.inner.evaluate(x)


class TestConfig:
    def test_rejects_bad_clamp(self):
        with pytest.raises(ValueError):
            TunnelConfig(clamp="bogus")

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError):
            TunnelConfig(learning_rate=0.0)

    def test_rejects_negative_penalty(self):
        with pytest.raises(ValueError):
            TunnelConfig(penalty_weight=-1.0)

    def test_grad_tol_scales_with_dimension(self):
        cfg = TunnelConfig(grad_tol=1e-4)
        assert cfg.effective_grad_tol(4) == pytest.approx(2e-4)

    def test_escape_margin_default(self):
        cfg = TunnelConfig()
        assert cfg.effective_escape_margin(-50.0) == pytest.approx(5e-5)
        assert cfg.effective_escape_margin(0.1) == pytest.approx(1e-6)
        assert replace_margin(cfg, 1e-3).effective_escape_margin(-50.0) == 1e-3


def replace_margin(cfg, margin):
    from dataclasses import replace

    return replace(cfg, escape_margin=margin)


class TestPoleFactor:
    def test_cap_property_random_draws(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            d = 10.0 ** rng.uniform(-12, 2)
            lam = rng.uniform(0.1, 10.0)
            assert pole_factor(d, lam, clamp="cap_2_pow_lambda") <= 2.0**lam

    def test_bare_pole_value(self):
        assert pole_factor(0.5, 1.0) == pytest.approx(4.0)
        assert pole_factor(2.0, 1.5) == pytest.approx(2.0**-3)

    def test_distance_floor_clamp(self):
        assert pole_factor(1e-9, 2.0, clamp="distance_floor", eps=0.1) == \
            pole_factor(0.1, 2.0)

    def test_stays_finite_at_zero_distance(self):
        assert math.isfinite(pole_factor(0.0, 10.0))

    def test_penalty_factor_rectifies(self):
        assert penalty_factor(1.0, 2.0, 5.0) == 0.0
        assert penalty_factor(3.0, 2.0, 5.0) == pytest.approx(5.0)


class TestDescent:
    def test_quadratic_monotone_and_converged(self):
        oracle = QuadraticOracle([1.0, -2.0])
        cfg = TunnelConfig(learning_rate=0.5, max_descent_iters=500)
        sp, trace = gradient_descent(oracle, np.array([5.0, 5.0]), cfg)
        assert sp.converged
        assert np.allclose(sp.x, oracle.center, atol=1e-3)
        assert all(b <= a + 1e-15 for a, b in zip(trace.values, trace.values[1:]))

    def test_fista_reaches_optimum(self):
        oracle = QuadraticOracle([1.0, -2.0])
        cfg = TunnelConfig(learning_rate=0.3, max_descent_iters=500)
        sp, _ = fista_descent(oracle, np.array([5.0, 5.0]), cfg)
        assert sp.converged
        assert np.allclose(sp.x, oracle.center, atol=1e-3)

    def test_budget_termination_flagged(self):
        oracle = QuadraticOracle([0.0])
        cfg = TunnelConfig(learning_rate=1e-4, max_descent_iters=5)
        sp, _ = gradient_descent(oracle, np.array([10.0]), cfg)
        assert not sp.converged
        assert sp.descent_iters == 5


class TestPoleExponent:
    @pytest.mark.parametrize("m,eta,iters", [(1, 0.05, 4000), (2, 0.05, 6000),
                                             (3, 0.05, 8000)])
    @pytest.mark.parametrize("descend", [gradient_descent, fista_descent])
    def test_power_law_consistency(self, m, eta, iters, descend):
        # |grad| ~ d^(2m-1) near the minimum of |x|^(2m), so the fitted
        # exponent must be 1.5 * (2m - 1) within 5%.
        oracle = PowerOracle(m)
        cfg = TunnelConfig(learning_rate=eta, max_descent_iters=iters,
                           grad_tol=1e-7)
        sp, _ = descend(oracle, np.array([0.8, -0.6]), cfg)
        want = 1.5 * (2 * m - 1)
        assert abs(sp.pole_exponent - want) / want < 0.05

    def test_short_trace_falls_back(self):
        trace = DescentTrace()
        trace.record(np.array([1.0]), 1.0, 1.0)
        sp = StablePoint(np.array([0.0]), 0.0, np.array([0.0]), 0.0, 1, 0.0, True)
        assert estimate_pole_exponent(trace, sp, EuclideanDistance(), 1.5) == 1.5


class TestTunnelFlow:
    def _stable(self, oracle, x):
        value, grad, token = oracle.evaluate(x)
        return StablePoint(np.asarray(x, dtype=float), value, token,
                           pole_exponent=1.5, descent_iters=0,
                           grad_norm=float(np.linalg.norm(grad)), converged=True)

    def test_reduces_to_gradient_step_when_coefficient_is_one(self):
        # pole exponent 0 makes the pole factor exactly 1.0 and penalty 0
        # removes the rectified term, so one flow step must equal one
        # gradient-descent step bitwise.
        inner = QuadraticOracle([0.0, 0.0])
        oracle = RecordingOracle(inner)
        sp = self._stable(inner, np.array([0.0, 0.0]))
        sp.pole_exponent = 0.0
        cfg = TunnelConfig(penalty_weight=0.0, learning_rate=0.0123,
                           max_tunnel_iters=2, perturb_radius=0.5, seed=9)
        tunnel_flow(oracle, EuclideanDistance(), sp, cfg,
                    np.random.default_rng(9))
        x0, x1 = oracle.xs[0], oracle.xs[1]
        _, grad, _ = inner.evaluate(x0)
        expected = x0 - cfg.learning_rate * 1.0 * grad
        assert np.array_equal(x1, expected)

    def test_escape_satisfies_margin_exactly(self):
        oracle = bench.ToyOracle()
        cfg = TunnelConfig(penalty_weight=50.0, learning_rate=0.005,
                           clamp="distance_floor", clamp_eps=0.15, seed=0)
        sp, _ = gradient_descent(oracle, np.array([2.2]), cfg)
        flow = tunnel_flow(oracle, EuclideanDistance(), sp, cfg,
                           np.random.default_rng(0))
        assert flow.escaped
        value, _, _ = oracle.evaluate(flow.x)
        assert value < sp.value - cfg.effective_escape_margin(sp.value)

    def test_exhausted_flow_returns_no_point(self):
        oracle = QuadraticOracle([0.0, 0.0])
        sp = self._stable(oracle, np.array([0.0, 0.0]))
        cfg = TunnelConfig(max_tunnel_iters=50, clamp="cap_2_pow_lambda", seed=1)
        flow = tunnel_flow(oracle, EuclideanDistance(), sp, cfg,
                           np.random.default_rng(1))
        assert not flow.escaped
        assert flow.x is None


class TestDynamicTunneling:
    def test_convex_problem_single_stable_point(self):
        oracle = QuadraticOracle([1.0, 1.0])
        cfg = TunnelConfig(learning_rate=0.5, max_tunnel_iters=100,
                           clamp="cap_2_pow_lambda", seed=2)
        run = dynamic_tunneling(oracle, EuclideanDistance(),
                                np.array([4.0, -3.0]), cfg)
        assert len(run.stable_points) == 1
        assert run.termination == "tunnel_exhausted"
        assert np.allclose(run.best.x, [1.0, 1.0], atol=1e-3)

    def test_toy_chain_strictly_decreasing(self):
        oracle = bench.ToyOracle()
        cfg = TunnelConfig(penalty_weight=50.0, learning_rate=0.005,
                           clamp="distance_floor", clamp_eps=0.15, seed=0)
        run = dynamic_tunneling(oracle, EuclideanDistance(), np.array([2.2]), cfg)
        values = [sp.value for sp in run.stable_points]
        assert len(values) >= 2
        assert all(b < a for a, b in zip(values, values[1:]))
        assert run.best.value == min(values)

    def test_max_tunnels_zero_is_descent_only(self):
        oracle = bench.ToyOracle()
        cfg = TunnelConfig(learning_rate=0.005, max_tunnels=0)
        run = dynamic_tunneling(oracle, EuclideanDistance(), np.array([2.2]), cfg)
        assert run.n_tunnels == 0
        assert len(run.stable_points) == 1
        assert run.termination == "max_tunnels_reached"

    def test_total_iteration_budget(self):
        oracle = bench.ToyOracle()
        cfg = TunnelConfig(learning_rate=0.005, max_total_iters=10)
        run = dynamic_tunneling(oracle, EuclideanDistance(), np.array([2.2]), cfg)
        assert run.termination == "iteration_budget"

    def test_rejects_unknown_descent(self):
        oracle = bench.ToyOracle()
        with pytest.raises(ValueError):
            dynamic_tunneling(oracle, EuclideanDistance(), np.array([2.2]),
                              TunnelConfig(), descent="newton")

    def test_deterministic_given_seed(self):
        oracle = bench.ToyOracle()
        cfg = TunnelConfig(penalty_weight=50.0, learning_rate=0.005,
                           clamp="distance_floor", clamp_eps=0.15, seed=3)
        runs = [dynamic_tunneling(oracle, EuclideanDistance(),
                                  np.array([2.2]), cfg) for _ in range(2)]
        assert [sp.value for sp in runs[0].stable_points] == \
            [sp.value for sp in runs[1].stable_points]


class TestSameState:
    def test_identical_point_is_same(self):
        oracle = QuadraticOracle([0.0])
        v, g, tok = oracle.evaluate(np.array([1.0]))
        sp = StablePoint(np.array([1.0]), v, tok, 1.5, 0, 0.0, True)
        assert same_state(sp, sp, EuclideanDistance(), 0.1)

    def test_orthogonal_states_differ(self):
        from qtunnel import sim

        a = sim.zero_state(1)
        b = sim.StateVector(1, np.array([0.0, 1.0], dtype=complex))
        spa = StablePoint(np.zeros(1), 0.0, a, 1.5, 0, 0.0, True)
        spb = StablePoint(np.zeros(1), 0.0, b, 1.5, 0, 0.0, True)
        assert not same_state(spa, spb, HilbertSchmidtDistance(), 0.1)

    def test_ry_periodicity_same_state(self):
        # shifting one RY angle by 4*pi leaves the state unchanged, so two
        # distinct parameter vectors are the same state under HS distance
        from qtunnel import models

        circuit = models.ansatz_chain(4, 2)
        ham = models.tfim_chain(models.ChainSpec(4))
        oracle = bench.VQECostOracle(circuit, ham)
        rng = np.random.default_rng(6)
        x = rng.uniform(0, 2 * math.pi, circuit.n_params)
        x_shift = x.copy()
        x_shift[3] += 4.0 * math.pi
        spa = StablePoint(x, 0.0, oracle.evaluate(x)[2], 1.5, 0, 0.0, True)
        spb = StablePoint(x_shift, 0.0, oracle.evaluate(x_shift)[2], 1.5, 0,
                          0.0, True)
        assert same_state(spa, spb, HilbertSchmidtDistance(), 1e-6)
        # the parameter vectors themselves are far apart
        assert EuclideanDistance().distance(x, x_shift) > 1.0
