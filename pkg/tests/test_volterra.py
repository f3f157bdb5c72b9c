"""X-scheme variants and the two-way transform between X and its memory."""

import numpy as np
import pytest

from conftest import make_meanrev_coeffs, make_zero_coeffs
from volmem import (
    Kernel,
    KernelKind,
    PathGrid,
    SamplePath,
    co_kernel,
)
from volmem.kernels import gamma_fn
from volmem.sde import (
    Coefficients,
    MemoryProcessSpec,
    euler_xi,
    euler_xi_values,
    memory_burst,
)
from volmem.volterra import (
    SchemeVariant,
    VolterraSpec,
    euler_x,
    euler_x_values,
    kernel_l2_mass,
    memory_of_x,
    reconstruct_x,
    recent_interval_projection_weight,
    recent_interval_residual_std,
)
from conftest import zero_fn


def make_vspec(kernel, coeffs, xi0, horizon, variant):
    mspec = MemoryProcessSpec.from_kernel(kernel, coeffs, xi0, horizon)
    return VolterraSpec(mspec, variant)


class TestSpec:
    def test_rejects_non_square_integrable_kernel(self):
        k = Kernel(KernelKind.FRACTIONAL, 1.0, 0.4)
        mspec = MemoryProcessSpec.from_kernel(k, make_zero_coeffs(), 0.0, 1.0)
        with pytest.raises(ValueError):
            VolterraSpec(mspec)

    def test_accessors(self, meanrev_spec):
        vspec = VolterraSpec(meanrev_spec)
        assert vspec.kernel is meanrev_spec.kernel
        assert vspec.horizon == meanrev_spec.horizon


class TestEulerX:
    def test_degenerate_constant(self, frac_kernel):
        spec = make_vspec(frac_kernel, make_zero_coeffs(), 1.7, 1.0,
                          SchemeVariant.FROZEN_KERNEL)
        grid = PathGrid(64, 1.0)
        rng = np.random.default_rng(0)
        dW = rng.standard_normal(grid.n) * np.sqrt(grid.h)
        xi = euler_xi(spec.memory_spec, grid, dW, 1.7)
        x = euler_x(spec, grid, dW, xi, 1.7)
        assert np.all(x.values == 1.7)

    def test_constant_kernel_riemann_sum(self):
        # sigma = 0, b = 1, K constant: X tracks xi0 + t with one-step lag
        kc = Kernel(KernelKind.CONSTANT, 1.0)
        coeffs = Coefficients(
            b=lambda t, x: np.ones_like(np.asarray(x, dtype=float)), sigma=zero_fn
        )
        grid = PathGrid(64, 1.0)
        dW = np.zeros(grid.n)
        for variant in SchemeVariant:
            spec = make_vspec(kc, coeffs, 2.0, 1.0, variant)
            xi = euler_xi(spec.memory_spec, grid, dW, 2.0)
            x = euler_x(spec, grid, dW, xi, 2.0)
            assert np.max(np.abs(x.values - (2.0 + grid.times))) <= grid.h + 1e-12

    def test_variants_coincide_for_constant_kernel(self):
        kc = Kernel(KernelKind.CONSTANT, 1.0)
        coeffs = make_meanrev_coeffs()
        grid = PathGrid(128, 1.0)
        rng = np.random.default_rng(5)
        dW = rng.standard_normal(grid.n) * np.sqrt(grid.h)
        outs = []
        for variant in SchemeVariant:
            spec = make_vspec(kc, coeffs, 1.0, 1.0, variant)
            xi = euler_xi(spec.memory_spec, grid, dW, 1.0)
            outs.append(euler_x(spec, grid, dW, xi, 1.0).values)
        # identical weights; only the summation bracketing differs
        np.testing.assert_allclose(outs[0], outs[1], rtol=0, atol=1e-13)
        np.testing.assert_allclose(outs[0], outs[2], rtol=0, atol=1e-13)

    def test_eval_idx_matches_full_run(self, meanrev_spec):
        vspec = VolterraSpec(meanrev_spec, SchemeVariant.HYBRID_DIFFUSION)
        grid = PathGrid(64, 1.0)
        rng = np.random.default_rng(11)
        dW = rng.standard_normal((4, grid.n)) * np.sqrt(grid.h)
        xi0 = meanrev_spec.xi0.mean
        xib = euler_xi_values(meanrev_spec, grid, dW, xi0)
        full = euler_x_values(vspec, grid, dW, xib, xi0)
        sub = euler_x_values(vspec, grid, dW, xib, xi0,
                             eval_idx=np.array([0, 17, grid.n]))
        np.testing.assert_allclose(sub, full[:, [0, 17, grid.n]], rtol=0, atol=1e-12)

    def test_streamed_rows_match_table(self, meanrev_spec):
        vspec = VolterraSpec(meanrev_spec, SchemeVariant.SEMI_INTEGRATED_DRIFT)
        grid = PathGrid(64, 1.0)
        rng = np.random.default_rng(13)
        dW = rng.standard_normal((2, grid.n)) * np.sqrt(grid.h)
        xi0 = meanrev_spec.xi0.mean
        xib = euler_xi_values(meanrev_spec, grid, dW, xi0)
        a = euler_x_values(vspec, grid, dW, xib, xi0, stream_rows=False)
        b = euler_x_values(vspec, grid, dW, xib, xi0, stream_rows=True)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)

    def test_cross_scheme_terminal_mean_agreement(self, meanrev_spec):
        # frozen vs hybrid on coupled noise: terminal means within 3
        # pooled standard errors
        grid = PathGrid(256, 1.0)
        rng = np.random.default_rng(17)
        m = 4000
        dW = rng.standard_normal((m, grid.n)) * np.sqrt(grid.h)
        xi0 = meanrev_spec.xi0.mean
        xib = euler_xi_values(meanrev_spec, grid, dW, xi0)
        ends = {}
        for variant in (SchemeVariant.FROZEN_KERNEL, SchemeVariant.HYBRID_DIFFUSION):
            vspec = VolterraSpec(meanrev_spec, variant)
            ends[variant] = euler_x_values(vspec, grid, dW, xib, xi0,
                                           eval_idx=np.array([grid.n]))[:, 0]
        a, b = ends.values()
        se = np.sqrt(a.var(ddof=1) / m + b.var(ddof=1) / m)
        assert abs(a.mean() - b.mean()) <= 3 * se

    def test_mismatched_lengths_rejected(self, meanrev_spec):
        vspec = VolterraSpec(meanrev_spec)
        grid = PathGrid(16, 1.0)
        xib = np.zeros(grid.n + 1)
        with pytest.raises(ValueError):
            euler_x_values(vspec, grid, np.zeros(8), xib, 0.0)


class TestHybridCovariance:
    def test_projection_plus_residual_matches_l2_mass(self, frac_kernel):
        # algebraic identity: w^2 h + s^2 == int_0^h K^2
        h = 1.0 / 64
        w = recent_interval_projection_weight(frac_kernel, h)
        s = recent_interval_residual_std(frac_kernel, h)
        assert w**2 * h + s**2 == pytest.approx(kernel_l2_mass(frac_kernel, h),
                                                rel=1e-12)

    def test_sampled_pair_variance(self, frac_kernel):
        # the exact-pair sampler reproduces Var(int K dW) over the interval
        h = 1.0 / 32
        rng = np.random.default_rng(4)
        m = 200_000
        dw = rng.standard_normal(m) * np.sqrt(h)
        g = rng.standard_normal(m)
        w = recent_interval_projection_weight(frac_kernel, h)
        s = recent_interval_residual_std(frac_kernel, h)
        sample = w * dw + s * g
        var = kernel_l2_mass(frac_kernel, h)
        assert sample.var(ddof=1) == pytest.approx(var, rel=0.02)
        cov = np.mean(sample * dw)
        assert cov == pytest.approx(w * h, rel=0.02)

    def test_residual_normals_change_only_hybrid(self, meanrev_spec):
        grid = PathGrid(32, 1.0)
        rng = np.random.default_rng(23)
        dW = rng.standard_normal((2, grid.n)) * np.sqrt(grid.h)
        g = rng.standard_normal((2, grid.n))
        xi0 = meanrev_spec.xi0.mean
        xib = euler_xi_values(meanrev_spec, grid, dW, xi0)
        hyb = VolterraSpec(meanrev_spec, SchemeVariant.HYBRID_DIFFUSION)
        base = euler_x_values(hyb, grid, dW, xib, xi0)
        with_resid = euler_x_values(hyb, grid, dW, xib, xi0, residual_normals=g)
        assert not np.array_equal(base, with_resid)
        frozen = VolterraSpec(meanrev_spec, SchemeVariant.FROZEN_KERNEL)
        f1 = euler_x_values(frozen, grid, dW, xib, xi0)
        f2 = euler_x_values(frozen, grid, dW, xib, xi0, residual_normals=g)
        assert np.array_equal(f1, f2)


class TestMemoryOfX:
    def test_constant_path_matches_burst_curve(self, frac_kernel):
        ck = co_kernel(frac_kernel)
        grid = PathGrid(512, 2.0)
        x = SamplePath(grid, np.full(grid.n + 1, 1.3))
        out = memory_of_x(x, ck, 0.0)
        ref = memory_burst(ck, 0.0, 1.3, grid.times)
        np.testing.assert_allclose(out.values, ref, rtol=0, atol=1e-12)

    def test_atom_is_pointwise_scaling(self):
        ck = co_kernel(Kernel(KernelKind.CONSTANT, 2.0))
        grid = PathGrid(32, 1.0)
        vals = np.linspace(1.0, 3.0, grid.n + 1)
        out = memory_of_x(SamplePath(grid, vals), ck, 0.0)
        np.testing.assert_allclose(out.values, vals / 2.0, rtol=1e-15)

    def test_exponential_atom_with_tilt(self):
        k = Kernel(KernelKind.EXPONENTIAL, 2.0, 1.0, 0.7)
        ck = co_kernel(k)
        grid = PathGrid(16, 1.0)
        vals = np.ones(grid.n + 1)
        out = memory_of_x(SamplePath(grid, vals), ck, 0.7)
        ref = np.exp(0.7 * grid.times) / 2.0
        np.testing.assert_allclose(out.values, ref, rtol=1e-14)


class TestReconstruct:
    def test_power_memory_gives_unit_x(self, frac_kernel):
        # xi(t) = t^(1-alpha)/Gamma(2-alpha)  =>  X = 1
        grid = PathGrid(2048, 1.0)
        xi = SamplePath(grid, grid.times**0.4 / gamma_fn(1.4))
        x = reconstruct_x(xi, frac_kernel, 0.0)
        mask = grid.times >= 0.25
        assert np.max(np.abs(x.values[mask] - 1.0)) < 1e-4

    def test_requires_zero_start(self, frac_kernel):
        grid = PathGrid(16, 1.0)
        xi = SamplePath(grid, np.ones(grid.n + 1))
        with pytest.raises(ValueError):
            reconstruct_x(xi, frac_kernel, 0.0)

    def test_round_trip_on_smooth_path(self, frac_kernel):
        ck = co_kernel(frac_kernel)
        grid = PathGrid(1024, 1.0)
        x = SamplePath(grid, 1.0 + 0.5 * np.sin(2 * grid.times) + 0.3 * grid.times**2)
        xi = memory_of_x(x, ck, 0.0)
        back = reconstruct_x(xi, frac_kernel, 0.0)
        mask = (grid.times >= 0.2) & (grid.times <= 0.97)
        assert np.max(np.abs(back.values[mask] - x.values[mask])) < 1e-3

    def test_round_trip_error_shrinks(self, frac_kernel):
        ck = co_kernel(frac_kernel)

        def err(n):
            grid = PathGrid(n, 1.0)
            x = SamplePath(grid, 1.0 + 0.5 * np.sin(2 * grid.times))
            back = reconstruct_x(memory_of_x(x, ck, 0.0), frac_kernel, 0.0)
            mask = (grid.times >= 0.2) & (grid.times <= 0.97)
            return np.max(np.abs(back.values[mask] - x.values[mask]))

        errors = [err(n) for n in (256, 512, 1024, 2048)]
        assert all(a > b for a, b in zip(errors, errors[1:]))

    def test_simulated_round_trip_l2_shrinks(self, meanrev_spec):
        # reconstruct X from the simulated memory path and compare with the
        # direct X scheme; the coupled L2 gap shrinks as n doubles
        rng = np.random.default_rng(29)
        m = 200
        n_fine = 512
        fine = rng.standard_normal((m, n_fine)) * np.sqrt(1.0 / n_fine)
        xi0 = meanrev_spec.xi0.mean
        vspec = VolterraSpec(meanrev_spec, SchemeVariant.FROZEN_KERNEL)

        def gap(n):
            grid = PathGrid(n, 1.0)
            inc = fine.reshape(m, n, n_fine // n).sum(axis=2)
            xib = euler_xi_values(meanrev_spec, grid, inc, xi0)
            direct = euler_x_values(vspec, grid, inc, xib, xi0)
            recon = np.empty_like(direct)
            for i in range(m):
                recon[i] = reconstruct_x(SamplePath(grid, xib[i]),
                                         meanrev_spec.kernel, 0.0).values
            # compare away from the endpoints where the quotient is one-sided
            sl = slice(2, n - 1)
            return float(np.sqrt(np.mean((direct[:, sl] - recon[:, sl]) ** 2)))

        g128, g512 = gap(128), gap(512)
        assert g512 < g128

    def test_reconstruct_constant_kernel(self):
        # for constant kernels xi = X/c, and d/dt[c * int xi] recovers X
        kc = Kernel(KernelKind.CONSTANT, 2.0)
        grid = PathGrid(512, 1.0)
        x_true = np.sin(grid.times)
        back = reconstruct_x(SamplePath(grid, x_true / 2.0), kc, 0.0)
        assert np.max(np.abs(back.values[:-1] - x_true[:-1])) < 2e-3
