"""Simulation of the path-dependent process X and the two-way transform
between X and its Markovian memory process.

X is driven pathwise by the increments of the memory-process scheme:

    X_k = xi0 + sum_{l=1}^{k-1} w(t_k - t_l) * (h*b_l + sigma_l*dW_{l+1}),

where the weight w is the kernel frozen at the left-endpoint lag
(FrozenKernel), the exact per-interval kernel integral for the drift part
(SemiIntegratedDrift), or additionally the L2-optimal projection of the
exact most-recent Wiener integral onto its own increment (HybridDiffusion).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grids import PathGrid, SamplePath
from .kernels import (
    CoKernel,
    Kernel,
    KernelKind,
    _interval_integral,
    convolve_values,
    eval_kernel,
    gamma_fn,
)
from .sde import MemoryProcessSpec

# eval-node weight tables above this entry count are streamed row by row
# instead of materialized (keeps whole-path benchmarks at large n in O(n)
# memory while Monte Carlo batches share one cached table)
_MATRIX_ENTRY_LIMIT = 40_000_000
_weight_cache: dict = {}


class SchemeVariant(enum.Enum):
    FROZEN_KERNEL = "frozen"
    SEMI_INTEGRATED_DRIFT = "semi"
    HYBRID_DIFFUSION = "hybrid"


@dataclass(frozen=True)
class VolterraSpec:
    """Memory-process spec plus the X-scheme variant.

    The kernel must be square-integrable on [0, T]; for singular power
    kernels this means alpha > 1/2 (alpha = H + 1/2 with H in (0, 1/2)).
    """

    memory_spec: MemoryProcessSpec
    scheme_variant: SchemeVariant = SchemeVariant.FROZEN_KERNEL

    def __post_init__(self):
        k = self.memory_spec.kernel
        if k.singular and k.alpha <= 0.5:
            raise ValueError(
                f"kernel with alpha = {k.alpha} is not square-integrable on [0, T]"
            )

    @property
    def kernel(self) -> Kernel:
        return self.memory_spec.kernel

    @property
    def horizon(self) -> float:
        return self.memory_spec.horizon

    @property
    def rho(self) -> float:
        return self.memory_spec.rho


def kernel_l2_mass(k: Kernel, h: float) -> float:
    """Exact integral of K(u)^2 over [0, h] (requires alpha > 1/2)."""
    if k.alpha <= 0.5:
        raise ValueError("K^2 is not integrable at 0 for alpha <= 1/2")
    from scipy import special

    if k.alpha == 1.0:
        if k.rho == 0.0:
            return k.c**2 * h
        return k.c**2 * (1.0 - math.exp(-2.0 * k.rho * h)) / (2.0 * k.rho)
    a2 = 2.0 * k.alpha - 1.0
    scale = k.c**2 / gamma_fn(k.alpha) ** 2
    if k.rho == 0.0:
        return scale * h**a2 / a2
    return (
        scale
        * gamma_fn(a2)
        * special.gammainc(a2, 2.0 * k.rho * h)
        / (2.0 * k.rho) ** a2
    )


def recent_interval_projection_weight(k: Kernel, h: float) -> float:
    """Regression coefficient of int_0^h K(h-s) dW_s on the increment W_h.

    Equals (1/h) * int_0^h K(u) du, from the closed-form 2x2 covariance of
    the exact Gaussian pair (the integral and its own Brownian increment).
    """
    return float(_interval_integral(k, 0.0, h)) / h


def recent_interval_residual_std(k: Kernel, h: float) -> float:
    """Std of the exact most-recent Wiener integral around its projection."""
    var = kernel_l2_mass(k, h)
    cov = float(_interval_integral(k, 0.0, h))
    resid = var - cov**2 / h
    return math.sqrt(max(resid, 0.0))


def _weight_table(kernel: Kernel, grid: PathGrid, eval_idx: np.ndarray,
                  kind: str) -> np.ndarray:
    """Weights w[i, l] applied to the interval-l increment at eval node
    eval_idx[i]; `kind` is 'frozen', 'semi' (exact drift integrals) or
    'hybrid' (frozen with the lag-h entry replaced by the projection).
    Entries with l >= eval_idx[i] are zero.  Tables are cached per
    (kernel, grid, nodes, kind) and shared across Monte Carlo paths.
    """
    key = (kernel, grid.n, grid.horizon, tuple(int(i) for i in eval_idx), kind)
    hit = _weight_cache.get(key)
    if hit is not None:
        return hit
    h = grid.h
    ell = np.arange(1, grid.n, dtype=float)
    d = eval_idx[:, None].astype(float) - ell[None, :]
    mask = d >= 1.0
    lag = np.where(mask, d * h, h)
    if kind == "semi":
        w = _interval_integral(kernel, lag - h, lag)
    else:
        w = eval_kernel(kernel, lag)
        if kind == "hybrid":
            w = np.where(d == 1.0, recent_interval_projection_weight(kernel, h), w)
    w = np.where(mask, w, 0.0)
    if len(_weight_cache) >= 16:
        _weight_cache.clear()
    _weight_cache[key] = w
    return w


def _weight_row(kernel: Kernel, grid: PathGrid, k: int, kind: str) -> np.ndarray:
    """Weights for eval node k against intervals l = 1..k-1 (length k-1)."""
    h = grid.h
    lag = h * np.arange(k - 1, 0, -1, dtype=float)
    if kind == "semi":
        return _interval_integral(kernel, lag - h, lag)
    w = eval_kernel(kernel, lag)
    if kind == "hybrid" and k >= 2:
        w[-1] = recent_interval_projection_weight(kernel, h)
    return w


def euler_x_values(spec: VolterraSpec, grid: PathGrid, dW: np.ndarray,
                   xi_bar_values: np.ndarray, xi0_values,
                   eval_idx: np.ndarray | None = None,
                   residual_normals: np.ndarray | None = None,
                   stream_rows: bool | None = None) -> np.ndarray:
    """X-scheme values at the requested grid nodes, vectorized across paths.

    Parameters
    ----------
    dW : ndarray (n,) or (m, n)
        The same Brownian increments that drove the memory-process scheme.
    xi_bar_values : ndarray (n+1,) or (m, n+1)
        Memory-process scheme output on the same grid and noise.
    xi0_values : float or (m,)
        Initial level(s); X starts there and the level enters additively.
    eval_idx : optional int array
        Grid node indices to evaluate (default: all n+1 nodes).  Endpoint-
        only evaluation costs O(n) per path.
    residual_normals : optional ndarray (m, n)
        Standard normals activating the exact-Gaussian-pair residual of the
        most-recent diffusion interval (HybridDiffusion only).  Left out,
        the hybrid scheme uses the pure projection, which is what coupled
        strong-error runs need.
    stream_rows : optional bool
        Force (True) or forbid (False) row-streamed weight evaluation; by
        default the cached weight table is used when it fits in memory.

    Notes
    -----
    The sum over past intervals starts at the second interval, so singular
    kernels are only ever evaluated at lags >= h.
    """
    dW = np.asarray(dW, dtype=float)
    single = dW.ndim == 1
    incs = dW[None, :] if single else dW
    xb = np.asarray(xi_bar_values, dtype=float)
    xb = xb[None, :] if single else xb
    if incs.shape[-1] != grid.n:
        raise ValueError(f"expected {grid.n} increments, got {incs.shape[-1]}")
    if xb.shape != (incs.shape[0], grid.n + 1):
        raise ValueError("xi_bar_values shape does not match grid/noise")
    m, n = incs.shape
    xi0_arr = np.broadcast_to(np.asarray(xi0_values, dtype=float), (m,))
    if eval_idx is None:
        idx = np.arange(n + 1)
    else:
        idx = np.asarray(eval_idx, dtype=int)
        if np.any(idx < 0) or np.any(idx > n):
            raise ValueError("eval_idx out of range")

    mspec = spec.memory_spec
    kernel = spec.kernel
    rho = spec.rho
    t = grid.times
    h = grid.h

    # coefficient levels at the left endpoints l = 1..n-1; for rho > 0 the
    # coefficients read the de-tilted state exp(-rho*t) * xi
    state = xb[:, 1:n]
    if rho > 0.0:
        state = state * np.exp(-rho * t[1:n])[None, :]
    t_left = t[1:n]
    b_vals = np.empty((m, n - 1))
    s_vals = np.empty((m, n - 1))
    for j in range(n - 1):
        b_vals[:, j] = mspec.coeffs.b(t_left[j], state[:, j])
        s_vals[:, j] = mspec.coeffs.sigma(t_left[j], state[:, j])
    drift_incr = h * b_vals
    diff_incr = s_vals * incs[:, 1:n]

    variant = spec.scheme_variant
    # the 'semi' weights are exact kernel integrals over the interval, so
    # they pair with the drift rate b; frozen weights pair with h*b
    if variant is SchemeVariant.FROZEN_KERNEL:
        parts = [("frozen", drift_incr + diff_incr)]
    elif variant is SchemeVariant.SEMI_INTEGRATED_DRIFT:
        parts = [("semi", b_vals), ("frozen", diff_incr)]
    else:
        parts = [("semi", b_vals), ("hybrid", diff_incr)]

    out = np.tile(xi0_arr[:, None].astype(float), (1, idx.shape[0]))
    if stream_rows is None:
        stream_rows = idx.shape[0] * (n - 1) > _MATRIX_ENTRY_LIMIT
    if not stream_rows:
        for kind, incr in parts:
            w = _weight_table(kernel, grid, idx, kind)
            out += incr @ w.T
    else:
        for pos, k in enumerate(idx):
            if k < 2:
                continue
            for kind, incr in parts:
                w = _weight_row(kernel, grid, int(k), kind)
                out[:, pos] += incr[:, : k - 1] @ w

    if residual_normals is not None and variant is SchemeVariant.HYBRID_DIFFUSION:
        g = np.asarray(residual_normals, dtype=float)
        g = g[None, :] if single else g
        s_resid = recent_interval_residual_std(kernel, h)
        for pos, k in enumerate(idx):
            if k >= 2:
                out[:, pos] += s_vals[:, k - 2] * s_resid * g[:, k - 1]

    return out[0] if single else out


def euler_x(spec: VolterraSpec, grid: PathGrid, dW: np.ndarray,
            xi_bar: SamplePath, xi0_value: float | None = None) -> SamplePath:
    """Single-path X scheme on the full grid.

    `xi_bar` must be the memory-process Euler output on the same grid and
    noise.  `xi0_value` defaults to the spec's mean initial level.
    """
    if xi_bar.grid != grid:
        raise ValueError("xi_bar grid does not match the simulation grid")
    if xi0_value is None:
        xi0_value = spec.memory_spec.xi0.mean
    values = euler_x_values(spec, grid, np.asarray(dW, dtype=float),
                            xi_bar.values, xi0_value)
    return SamplePath(grid, values)


def memory_of_x(x: SamplePath, ck: CoKernel, rho: float = 0.0) -> SamplePath:
    """Memory process read off a path of X: exp(rho*t) * (K~ * X)(t).

    Density co-kernels convolve with exact singular weights (the
    fractional case is exp(rho*t) * I^(1-alpha) X); atom co-kernels reduce
    to pointwise scaling.
    """
    grid = x.grid
    if ck.density is None:
        values = ck.atom_weight * np.exp(rho * grid.times) * x.values
        return SamplePath(grid, values)
    conv = convolve_values(ck.density, x.values, grid)
    return SamplePath(grid, np.exp(rho * grid.times) * conv)


def _bare_kernel(k: Kernel) -> Kernel:
    """exp(rho*t) * K(t), which stays in the family with rho = 0."""
    if k.rho == 0.0:
        return k
    if k.alpha == 1.0:
        return Kernel(KernelKind.CONSTANT, k.c)
    return Kernel(KernelKind.FRACTIONAL, k.c, k.alpha)


def reconstruct_x(xi: SamplePath, k: Kernel, rho: float = 0.0) -> SamplePath:
    """Recover X from a memory-process path: exp(-rho*t) d/dt [(exp(rho.)K) * xi].

    Requires xi(0) = 0.  Differentiation is a forward quotient (the last
    node reuses the final one); the first node is the least accurate.
    """
    grid = xi.grid
    if xi.values[0] != 0.0:
        raise ValueError("reconstruction requires xi(0) = 0")
    conv = convolve_values(_bare_kernel(k), xi.values, grid)
    dq = np.empty_like(conv)
    dq[:-1] = np.diff(conv) / grid.h
    dq[-1] = dq[-2]
    return SamplePath(grid, np.exp(-rho * grid.times) * dq)
