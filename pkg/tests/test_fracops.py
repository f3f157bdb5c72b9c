"""Fractional integral/derivative: oracles, semigroup, round trips."""

import numpy as np
import pytest

from volmem import PathGrid, SamplePath, frac_derivative, frac_integral
from volmem.fracops import frac_derivative_values, frac_integral_values
from volmem.kernels import gamma_fn


def grid_and_sin(n, horizon=1.0):
    grid = PathGrid(n, horizon)
    return grid, SamplePath(grid, np.sin(grid.times))


class TestFracIntegral:
    def test_order_one_is_running_trapezoid(self):
        # with the piecewise-linear interpolant, I^1 is the trapezoid rule
        grid = PathGrid(64, 2.0)
        rng = np.random.default_rng(0)
        f = rng.standard_normal(grid.n + 1)
        out = frac_integral_values(1.0, f, grid, order=1)
        trap = np.concatenate([[0.0], np.cumsum((f[:-1] + f[1:]) / 2 * grid.h)])
        np.testing.assert_allclose(out, trap, rtol=0, atol=1e-14)

    def test_beta_one_default_is_running_left_sum(self):
        grid = PathGrid(64, 2.0)
        rng = np.random.default_rng(1)
        f = rng.standard_normal(grid.n + 1)
        out = frac_integral_values(1.0, f, grid)
        left = np.concatenate([[0.0], np.cumsum(f[:-1] * grid.h)])
        np.testing.assert_allclose(out, left, rtol=0, atol=1e-14)

    @pytest.mark.parametrize("beta", [0.3, 0.5, 0.7, 1.0])
    def test_constant_input_closed_form(self, beta):
        # direct-integration oracle: int_0^t (t-s)^(beta-1) ds = t^beta / beta
        grid = PathGrid(128, 1.5)
        out = frac_integral_values(beta, np.ones(grid.n + 1), grid)
        ref = grid.times**beta / gamma_fn(beta + 1.0)
        np.testing.assert_allclose(out, ref, rtol=0, atol=5e-15)

    def test_semigroup_composition(self):
        grid, f = grid_and_sin(2**12)
        inner = frac_integral(0.4, f)
        comp = frac_integral(0.3, inner)
        direct = frac_integral(0.7, f)
        assert np.max(np.abs(comp.values - direct.values)) <= 1e-3

    def test_semigroup_error_halves_when_n_doubles(self):
        def err(n):
            grid, f = grid_and_sin(n)
            comp = frac_integral(0.3, frac_integral(0.4, f))
            direct = frac_integral(0.7, f)
            return np.max(np.abs(comp.values - direct.values))

        ratios = [err(n) / err(2 * n) for n in (2**10, 2**11)]
        for r in ratios:
            assert 1.4 <= r <= 2.6

    def test_positivity_preserved(self):
        grid = PathGrid(200, 2.0)
        rng = np.random.default_rng(5)
        f = np.abs(rng.standard_normal(grid.n + 1))
        for beta in (0.2, 0.6, 1.0):
            assert np.all(frac_integral_values(beta, f, grid) >= 0.0)

    def test_linearity(self):
        grid = PathGrid(100, 1.0)
        rng = np.random.default_rng(2)
        f, g = rng.standard_normal((2, grid.n + 1))
        lhs = frac_integral_values(0.6, 2.0 * f - g, grid)
        rhs = 2.0 * frac_integral_values(0.6, f, grid) - frac_integral_values(0.6, g, grid)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-13)

    def test_rejects_bad_order(self):
        grid = PathGrid(8, 1.0)
        with pytest.raises(ValueError):
            frac_integral_values(0.0, np.ones(9), grid)
        with pytest.raises(ValueError):
            frac_integral_values(1.2, np.ones(9), grid)


class TestFracDerivative:
    def test_beta_one_is_difference_quotient(self):
        grid = PathGrid(32, 1.0)
        rng = np.random.default_rng(9)
        f = rng.standard_normal(grid.n + 1)
        out = frac_derivative_values(1.0, f, grid)
        quot = np.diff(f) / grid.h
        np.testing.assert_allclose(out[:-1], quot, rtol=0, atol=1e-14)
        assert out[-1] == out[-2]

    def test_power_function_oracle(self):
        # analytic oracle: D^beta [t^beta / Gamma(beta+1)] = 1
        beta = 0.4
        grid = PathGrid(1024, 1.0)
        f = grid.times**beta / gamma_fn(beta + 1.0)
        d = frac_derivative_values(beta, f, grid)
        mask = grid.times >= 0.25  # origin nodes never resolve the singular slope
        assert np.max(np.abs(d[mask] - 1.0)) < 1e-4

    def test_round_trip_recovers_smooth_f(self):
        beta = 0.4
        grid, f = grid_and_sin(2**12)
        back = frac_derivative(beta, frac_integral(beta, f))
        assert np.max(np.abs(back.values[1:] - f.values[1:])) <= 1e-2

    def test_round_trip_error_halves(self):
        def err(n):
            grid, f = grid_and_sin(n)
            back = frac_derivative(0.4, frac_integral(0.4, f))
            return np.max(np.abs(back.values[1:] - f.values[1:]))

        for n in (2**10, 2**11):
            r = err(n) / err(2 * n)
            assert 1.4 <= r <= 2.6

    def test_round_trip_vanishes_with_refinement(self):
        errors = []
        for n in (128, 256, 512, 1024):
            grid, f = grid_and_sin(n)
            back = frac_derivative(0.4, frac_integral(0.4, f))
            errors.append(np.max(np.abs(back.values[1:] - f.values[1:])))
        assert all(a > b for a, b in zip(errors, errors[1:]))

    def test_needs_two_steps(self):
        grid = PathGrid(1, 1.0)
        with pytest.raises(ValueError):
            frac_derivative_values(0.5, np.zeros(2), grid)


def test_sample_path_wrappers_roundtrip_grid():
    grid = PathGrid(16, 1.0)
    f = SamplePath(grid, np.linspace(0.0, 1.0, 17))
    out = frac_integral(0.5, f)
    assert out.grid == grid
    other = PathGrid(32, 1.0)
    with pytest.raises(ValueError):
        frac_integral(0.5, f, other)
