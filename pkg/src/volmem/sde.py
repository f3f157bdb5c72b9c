"""The Markovian memory process: coefficient transform, Euler scheme with the
deterministic memory-burst term, and the burst curve itself.

The memory process solves

    xi_t = xi0 * exp(rho*t) * phi~(t) + int_0^t b~(s, xi_s) ds
                                      + int_0^t sigma~(s, xi_s) dW_s,

with xi_0 = 0, phi~ the running integral of the co-kernel, and (b~, sigma~)
the exponentially tilted coefficients.  The Euler scheme freezes the
coefficients on each step and adds the burst increments in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .grids import PathGrid, SamplePath
from .kernels import CoKernel, Kernel, co_kernel, phi_tilde, verify_pseudo_inverse

CoefficientFn = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Coefficients:
    """Drift/diffusion pair with Lipschitz and time-Hoelder metadata.

    Parameters
    ----------
    b, sigma : callable (t, x) -> value
        Must broadcast over numpy arrays in x.
    gamma : float
        Time-Hoelder exponent in (0, 1] of the pair.
    lip_b, lip_sigma : float
        Spatial Lipschitz constants (metadata, spot-checked by `validate`).
    """

    b: CoefficientFn
    sigma: CoefficientFn
    gamma: float = 1.0
    lip_b: float = 0.0
    lip_sigma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.lip_b < 0.0 or self.lip_sigma < 0.0:
            raise ValueError("Lipschitz constants must be nonnegative")

    def validate(self, horizon: float, seed: int = 0, samples: int = 64) -> None:
        """Spot-check the Lipschitz bounds and boundedness at x = 0.

        Draws random (t, x, y) triples on [0, horizon] x [-5, 5]^2 and
        verifies |f(t,x)-f(t,y)| <= lip * |x-y| (with a 1e-9 slack), plus
        finiteness of b(t,0) and sigma(t,0) on a time grid.
        """
        rng = np.random.default_rng(seed)
        t = rng.uniform(0.0, horizon, samples)
        x = rng.uniform(-5.0, 5.0, samples)
        y = rng.uniform(-5.0, 5.0, samples)
        for name, fn, lip in (("b", self.b, self.lip_b),
                              ("sigma", self.sigma, self.lip_sigma)):
            for ti, xi, yi in zip(t, x, y):
                gap = abs(float(fn(ti, xi)) - float(fn(ti, yi)))
                if gap > lip * abs(xi - yi) + 1e-9:
                    raise ValueError(
                        f"{name} violates its Lipschitz bound {lip} at t={ti}"
                    )
        at_zero = [abs(float(self.b(ti, 0.0))) + abs(float(self.sigma(ti, 0.0)))
                   for ti in np.linspace(0.0, horizon, 33)]
        if not np.all(np.isfinite(at_zero)):
            raise ValueError("coefficients are unbounded at x = 0")


@dataclass(frozen=True)
class InitialCondition:
    """Point mass (std = 0) or Gaussian initial level for the memory process."""

    mean: float
    std: float = 0.0

    def __post_init__(self):
        if self.std < 0.0:
            raise ValueError("std must be nonnegative")

    def sample(self, rng: np.random.Generator, size: int | None = None):
        if self.std == 0.0:
            return self.mean if size is None else np.full(size, self.mean)
        return self.mean + self.std * rng.standard_normal(size)


@dataclass(frozen=True)
class MemoryProcessSpec:
    """Everything needed to simulate the memory process on [0, horizon]."""

    xi0: InitialCondition
    kernel: Kernel
    co_kernel: CoKernel
    coeffs: Coefficients
    horizon: float

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if isinstance(self.xi0, (int, float)):
            object.__setattr__(self, "xi0", InitialCondition(float(self.xi0)))
        # the kernel/co-kernel pair must actually satisfy the convolution
        # identity, otherwise the xi <-> X transform is meaningless
        t_check = np.geomspace(self.horizon / 128.0, self.horizon, 25)
        err = verify_pseudo_inverse(self.kernel, self.co_kernel, t_check)
        if err > 1e-6:
            raise ValueError(
                f"kernel/co-kernel pair fails the pseudo-inverse identity "
                f"(max error {err:.3e})"
            )

    @classmethod
    def from_kernel(cls, kernel: Kernel, coeffs: Coefficients, xi0, horizon: float):
        """Build a spec deriving the co-kernel from the kernel."""
        if isinstance(xi0, (int, float)):
            xi0 = InitialCondition(float(xi0))
        return cls(xi0=xi0, kernel=kernel, co_kernel=co_kernel(kernel),
                   coeffs=coeffs, horizon=horizon)

    @property
    def rho(self) -> float:
        return self.kernel.rho


def transform_coefficients(coeffs: Coefficients, rho: float,
                           horizon: float = 1.0) -> Coefficients:
    """Exponentially tilted coefficients b~(u,x) = exp(rho*u) b(u, exp(-rho*u) x).

    For rho = 0 this is the identity (the same object is returned).  The
    Lipschitz constants scale by exp(rho * horizon).
    """
    if rho < 0.0:
        raise ValueError("rho must be nonnegative")
    if rho == 0.0:
        return coeffs
    b, sigma = coeffs.b, coeffs.sigma

    def b_tilde(u, x):
        return np.exp(rho * u) * b(u, np.exp(-rho * u) * x)

    def sigma_tilde(u, x):
        return np.exp(rho * u) * sigma(u, np.exp(-rho * u) * x)

    scale = float(np.exp(rho * horizon))
    return replace(coeffs, b=b_tilde, sigma=sigma_tilde,
                   lip_b=coeffs.lip_b * scale, lip_sigma=coeffs.lip_sigma * scale)


def memory_burst(ck: CoKernel, rho: float, xi0: float, t):
    """Deterministic burst term xi0 * exp(rho*t) * (K~ * 1)(t)."""
    t_arr = np.asarray(t, dtype=float)
    out = xi0 * np.exp(rho * t_arr) * phi_tilde(ck, t_arr)
    return out if isinstance(t, np.ndarray) else float(out)


def burst_increments(ck: CoKernel, rho: float, grid: PathGrid) -> np.ndarray:
    """Per-step increments of exp(rho*t) * phi~(t), from closed form per node.

    Atom co-kernels place their weight in the first step (the burst is a
    jump at 0+); density co-kernels have phi~(0) = 0 and the increments
    telescope to the exact node values.
    """
    kappa = np.exp(rho * grid.times) * phi_tilde(ck, grid.times)
    dk = np.diff(kappa)
    dk[0] = kappa[1]
    return dk


def euler_xi_values(spec: MemoryProcessSpec, grid: PathGrid, dW: np.ndarray,
                    xi0_values) -> np.ndarray:
    """Euler scheme for the memory process, vectorized across paths.

    Parameters
    ----------
    dW : ndarray
        Brownian increments, shape (n,) or (m, n).
    xi0_values : float or ndarray of shape (m,)
        Sampled initial levels feeding the burst term.

    Returns
    -------
    ndarray of shape (n+1,) or (m, n+1) with xi_0 = 0.
    """
    dW = np.asarray(dW, dtype=float)
    single = dW.ndim == 1
    incs = dW[None, :] if single else dW
    if incs.shape[-1] != grid.n:
        raise ValueError(f"expected {grid.n} increments, got {incs.shape[-1]}")
    m = incs.shape[0]
    xi0_arr = np.broadcast_to(np.asarray(xi0_values, dtype=float), (m,))

    rho = spec.rho
    coeffs = transform_coefficients(spec.coeffs, rho, spec.horizon)
    dk = burst_increments(spec.co_kernel, rho, grid)
    t = grid.times
    h = grid.h

    xi = np.empty((m, grid.n + 1))
    xi[:, 0] = 0.0
    for k in range(grid.n):
        cur = xi[:, k]
        xi[:, k + 1] = (
            cur
            + xi0_arr * dk[k]
            + h * coeffs.b(t[k], cur)
            + coeffs.sigma(t[k], cur) * incs[:, k]
        )
    return xi[0] if single else xi


def euler_xi(spec: MemoryProcessSpec, grid: PathGrid, dW: np.ndarray,
             xi0_value: float) -> SamplePath:
    """Single-path Euler scheme for the memory process.

    Implements the recursion

        xi_{k+1} = xi_k + xi0 * (kappa~(t_{k+1}) - kappa~(t_k))
                        + h * b~(t_k, xi_k) + sigma~(t_k, xi_k) * dW_{k+1},

    with kappa~(t) = exp(rho*t) * phi~(t), starting from xi_0 = 0.
    """
    values = euler_xi_values(spec, grid, np.asarray(dW, dtype=float), xi0_value)
    return SamplePath(grid, values)
