"""Rough-volatility application: the memory process Y, the path-dependent
process Z it is read from, the variance V = a(Y-b)^2 + c, and the asset S.

Two discretizations of Z are provided.  Both share the same Y recursion
(an Euler scheme with the power-law burst term); they differ in how the
convolution weights treat each past interval:

* scheme 1 freezes the kernel at the left-endpoint lag for drift and
  diffusion alike;
* scheme 2 integrates the kernel exactly against the drift and freezes it
  for the diffusion.

Z values are the full convolution re-evaluated at each node (endpoint-only
evaluation is O(n), whole paths use FFT convolution).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .grids import PathGrid, SamplePath
from .kernels import Kernel, KernelKind, gamma_fn
from .sde import Coefficients, MemoryProcessSpec, euler_xi_values


@dataclass(frozen=True)
class RoughVolParams:
    """Model parameters; defaults are the reference experiment block."""

    a: float = 0.384
    b: float = 0.095
    c: float = 0.0025
    lam: float = 1.2
    mu: float = 2.0
    H: float = 0.1
    xi0: float | None = None  # defaults to mu/lam
    r: float = 0.0
    s0: float = 1.0
    T: float = 30.0
    n: int = 8192

    def __post_init__(self):
        # a = 0 is admitted so the degenerate flat-variance cases stay
        # expressible (V = c, and V = 0 with c = 0)
        if self.a < 0.0 or self.b < 0.0 or self.c < 0.0:
            raise ValueError("variance shape requires a, b, c >= 0")
        if not 0.0 < self.H < 0.5:
            raise ValueError(f"H must lie in (0, 1/2), got {self.H}")
        if self.s0 <= 0.0:
            raise ValueError("spot s0 must be positive")
        if self.r < 0.0:
            raise ValueError("rate r must be nonnegative")
        if self.T <= 0.0 or self.n < 1:
            raise ValueError("need T > 0 and n >= 1")
        if self.xi0 is None:
            object.__setattr__(self, "xi0", self.mu / self.lam)

    @property
    def alpha(self) -> float:
        return self.H + 0.5

    @property
    def grid(self) -> PathGrid:
        return PathGrid(self.n, self.T)

    def memory_spec(self) -> MemoryProcessSpec:
        """Memory-process spec (kernel K_{1,H+1/2}, mean-reverting drift,
        variance-shaped diffusion) matching these parameters."""
        kernel = Kernel(KernelKind.FRACTIONAL, 1.0, self.alpha)
        coeffs = Coefficients(
            b=lambda t, x: self.mu - self.lam * x,
            sigma=lambda t, x: sigma_v(x, self),
            gamma=1.0,
            lip_b=abs(self.lam),
            lip_sigma=float(np.sqrt(self.a)),
        )
        return MemoryProcessSpec.from_kernel(kernel, coeffs, self.xi0, self.T)


def sigma_v(x, p: RoughVolParams):
    """Volatility map sigma(x) = sqrt(a*(x-b)^2 + c); positive when c > 0."""
    x_arr = np.asarray(x, dtype=float)
    out = np.sqrt(p.a * (x_arr - p.b) ** 2 + p.c)
    return out if isinstance(x, np.ndarray) else float(out)


def _memory_path(p: RoughVolParams, dW: np.ndarray) -> np.ndarray:
    """Shared Y recursion: Y_k = Y_{k-1} + burst increment + drift + noise."""
    return euler_xi_values(p.memory_spec(), p.grid, dW, p.xi0)


def _increments(p: RoughVolParams, y: np.ndarray, dW: np.ndarray):
    """Per-interval drift rates and diffusion increments read at the left
    endpoints (columns i = 0..n-1 cover [t_i, t_{i+1}))."""
    left = y[..., :-1]
    rates = p.mu - p.lam * left
    diff = sigma_v(left, p) * dW
    return rates, diff


def _scheme_weights(p: RoughVolParams, variant: int):
    """Weight sequences w[d] applied at lag index d = k - i >= 1.

    Frozen weights are K(d*h); the integrated drift weights of scheme 2
    are the exact kernel integrals over one step.  Index 0 is zero so the
    arrays align with causal convolution.
    """
    h = p.grid.h
    alpha = p.alpha
    d = np.arange(p.n + 1, dtype=float)
    frozen = np.zeros(p.n + 1)
    frozen[1:] = (d[1:] * h) ** (p.H - 0.5) / gamma_fn(alpha)
    if variant == 1:
        return frozen, frozen
    integ = np.zeros(p.n + 1)
    integ[1:] = (d[1:] ** alpha - d[:-1] ** alpha) * h**alpha / gamma_fn(alpha + 1.0)
    return integ, frozen


def _causal_convolution(incr: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """out[k] = sum_{i<k} incr[i] * weights[k-i] along the last axis."""
    n = incr.shape[-1]
    out = signal.fftconvolve(incr, weights[None, :], axes=-1)
    return out[..., : n + 1]


def _simulate(p: RoughVolParams, dW: np.ndarray, variant: int,
              z_endpoint_only: bool):
    dW = np.asarray(dW, dtype=float)
    single = dW.ndim == 1
    incs = dW[None, :] if single else dW
    if incs.shape[-1] != p.n:
        raise ValueError(f"expected {p.n} increments, got {incs.shape[-1]}")

    y = _memory_path(p, incs)
    rates, diff = _increments(p, y, incs)
    w_drift, w_diff = _scheme_weights(p, variant)
    # scheme 1 freezes the kernel against the whole step increment h*b,
    # scheme 2's integrated weights already carry the step length
    drift_in = rates * p.grid.h if variant == 1 else rates

    if z_endpoint_only:
        z_T = p.xi0 + drift_in @ w_drift[-1:0:-1] + diff @ w_diff[-1:0:-1]
        return (y[0], float(z_T[0])) if single else (y, z_T)

    z = p.xi0 + _causal_convolution(drift_in, w_drift) + _causal_convolution(diff, w_diff)
    z[..., 0] = p.xi0  # no past at node 0; clears FFT round-off dust
    return (y[0], z[0]) if single else (y, z)


def scheme1_values(p: RoughVolParams, dW: np.ndarray,
                   z_endpoint_only: bool = False):
    """Frozen-kernel discretization, vectorized across paths.

    Returns (Y, Z) arrays; with `z_endpoint_only` the Z part is just Z_T
    per path, computed in O(n).
    """
    return _simulate(p, dW, variant=1, z_endpoint_only=z_endpoint_only)


def scheme2_values(p: RoughVolParams, dW: np.ndarray,
                   z_endpoint_only: bool = False):
    """Integrated-drift / frozen-diffusion discretization."""
    return _simulate(p, dW, variant=2, z_endpoint_only=z_endpoint_only)


def scheme1(p: RoughVolParams, dW: np.ndarray) -> tuple[SamplePath, SamplePath]:
    """Single-path frozen-kernel scheme: Y_0 = 0, Z_0 = xi0."""
    y, z = scheme1_values(p, np.asarray(dW, dtype=float))
    grid = p.grid
    return SamplePath(grid, y), SamplePath(grid, z)


def scheme2(p: RoughVolParams, dW: np.ndarray) -> tuple[SamplePath, SamplePath]:
    """Single-path integrated-drift scheme: Y_0 = 0, Z_0 = xi0."""
    y, z = scheme2_values(p, np.asarray(dW, dtype=float))
    grid = p.grid
    return SamplePath(grid, y), SamplePath(grid, z)


def variance_path(p: RoughVolParams, y: np.ndarray) -> np.ndarray:
    """Node-wise variance V = a*(Y-b)^2 + c (floored at c by construction)."""
    return p.a * (np.asarray(y, dtype=float) - p.b) ** 2 + p.c


def simulate_asset_values(p: RoughVolParams, y: np.ndarray,
                          dW_asset: np.ndarray) -> np.ndarray:
    """Log-Euler asset paths: S_{k+1} = S_k * exp((r - V_k/2) h + sqrt(V_k) dW).

    The exponential form keeps S strictly positive on every path.
    """
    y = np.asarray(y, dtype=float)
    dw = np.asarray(dW_asset, dtype=float)
    single = y.ndim == 1
    y2 = y[None, :] if single else y
    dw2 = dw[None, :] if single else dw
    if dw2.shape[-1] != y2.shape[-1] - 1:
        raise ValueError("asset increments do not match the Y grid")
    h = p.T / (y2.shape[-1] - 1)
    v = variance_path(p, y2[..., :-1])
    log_incr = (p.r - 0.5 * v) * h + np.sqrt(v) * dw2
    log_s = np.concatenate(
        [np.zeros((y2.shape[0], 1)), np.cumsum(log_incr, axis=-1)], axis=-1
    )
    s = p.s0 * np.exp(log_s)
    return s[0] if single else s


def simulate_asset(p: RoughVolParams, y: SamplePath,
                   dW_asset: np.ndarray) -> SamplePath:
    """Single-path asset simulation on Y's grid (driver defaults to the
    volatility driver at call sites; pass an independent one to decouple)."""
    values = simulate_asset_values(p, y.values, np.asarray(dW_asset, dtype=float))
    return SamplePath(y.grid, values)
