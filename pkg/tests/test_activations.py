"""Nonlinearities: exact anchor values, limits, analytic derivatives."""

import math

import numpy as np
import pytest

from dehaze import activations as act
from dehaze.metrics import fd_check

GRID = np.linspace(-3.0, 3.0, 601)


class TestSoftRelu:
    def test_zero_at_origin(self):
        assert act.soft_relu(0.1).apply(np.float64(0.0)) == 0.0

    def test_anchor_value(self):
        # (1 + sqrt(1.01) - 0.1) / 2 evaluated independently
        want = (1.0 + math.sqrt(1.01) - 0.1) / 2.0
        assert want == pytest.approx(0.9524937810560445)
        got = float(act.soft_relu(0.1).apply(np.float64(1.0)))
        assert got == pytest.approx(want, abs=1e-12)

    def test_alpha_zero_is_relu_exact(self):
        grid32 = GRID.astype(np.float32)
        a = act.soft_relu(0.0).apply(grid32)
        b = act.relu().apply(grid32)
        assert np.array_equal(a, b)

    def test_monotone_on_grid(self):
        vals = act.soft_relu(0.1).apply(GRID)
        assert np.all(np.diff(vals) >= 0)

    def test_asymptotes(self):
        # the exact formula tends to x - a/2 upward and -a/2 downward,
        # with residue a^2/(4|x|) < a^2/20 at |x| = 10
        a = 0.1
        f = act.soft_relu(a)
        assert abs(float(f.apply(np.float64(10.0))) - (10.0 - a / 2)) < a * a / 20
        assert abs(float(f.apply(np.float64(-10.0))) + a / 2) < a * a / 20

    def test_derivative_anchors(self):
        d = act.soft_relu(0.1).derivative
        assert float(d(np.float64(0.0))) == pytest.approx(0.5)
        want = (1.0 + 1.0 / math.sqrt(1.01)) / 2.0
        assert want == pytest.approx(0.9975185951049945)
        assert float(d(np.float64(1.0))) == pytest.approx(want, abs=1e-12)

    def test_derivative_in_unit_interval(self):
        d = act.soft_relu(0.1).derivative(GRID)
        assert np.all(d >= 0) and np.all(d <= 1)

    def test_negative_alpha_rejected(self):
        with pytest.raises(ValueError):
            act.soft_relu(-0.5)


class TestOtherKinds:
    def test_leaky_relu(self):
        f = act.leaky_relu(0.1)
        assert float(f.apply(np.float64(-2.0))) == pytest.approx(-0.2)
        assert float(f.apply(np.float64(2.0))) == pytest.approx(2.0)

    def test_leaky_slope_validated(self):
        with pytest.raises(ValueError):
            act.leaky_relu(1.5)

    def test_relu_derivative(self):
        d = act.relu().derivative(np.array([-1.0, 0.0, 1.0]))
        assert d.tolist() == [0.0, 1.0, 1.0]

    def test_gelu_half_at_zero_derivative(self):
        assert float(act.gelu().derivative(np.float64(0.0))) == pytest.approx(0.5)

    def test_gelu_non_monotone(self):
        g = act.gelu().apply(GRID)
        neg = GRID < 0
        assert np.any(np.diff(g[neg]) < 0)

    def test_gelu_exact_form(self):
        # GELU(x) = x * Phi(x); spot-check against scipy's normal CDF
        from scipy.stats import norm as normal
        xs = np.array([-2.0, -0.5, 0.3, 1.7])
        want = xs * normal.cdf(xs)
        assert np.allclose(act.gelu().apply(xs), want, atol=1e-12)


class TestDerivativesMatchFiniteDifferences:
    @pytest.mark.parametrize("a", [act.soft_relu(0.1), act.gelu()])
    def test_fd_within_tolerance(self, a):
        err = fd_check(a.apply, a.derivative, GRID, step=1e-3)
        assert err < 1e-5

    def test_leaky_fd_away_from_kink(self):
        grid = GRID[np.abs(GRID) > 0.01]
        f = act.leaky_relu(0.1)
        assert fd_check(f.apply, f.derivative, grid, step=1e-3) < 1e-9

    def test_dtype_preserved(self):
        x32 = np.linspace(-1, 1, 11, dtype=np.float32)
        for f in (act.relu(), act.leaky_relu(0.1), act.gelu(), act.soft_relu(0.1)):
            assert f.apply(x32).dtype == np.float32
            assert f.derivative(x32).dtype == np.float32
