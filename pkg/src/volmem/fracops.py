"""Riemann-Liouville fractional integral and derivative on uniform grids.

The integral I^beta is the convolution with the power kernel
t**(beta-1)/Gamma(beta); the derivative D^beta is realized as the forward
difference quotient of I^(1-beta), matching its classical definition
d/dt I^(1-beta).
"""

from __future__ import annotations

import numpy as np

from .grids import PathGrid, SamplePath
from .kernels import Kernel, KernelKind, convolve_values


def _check_order(beta: float) -> None:
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"fractional order must lie in (0, 1], got {beta}")


def frac_integral_values(beta: float, values: np.ndarray, grid: PathGrid,
                         order: int = 0) -> np.ndarray:
    """I^beta f on the grid for raw sample arrays, shape (n+1,) or (m, n+1)."""
    _check_order(beta)
    kernel = Kernel(KernelKind.FRACTIONAL, 1.0, beta, 0.0)
    return convolve_values(kernel, values, grid, order=order)


def frac_integral(beta: float, f: SamplePath, grid: PathGrid | None = None,
                  order: int = 0) -> SamplePath:
    """Riemann-Liouville fractional integral I^beta f on f's grid.

    Parameters
    ----------
    beta : float
        Order in (0, 1].  beta = 1 is the running integral of f.
    f : SamplePath
        Samples of the integrand.
    order : int
        Interpolation order for the integrand (0 = piecewise-constant,
        the default, giving clean first-order convergence; 1 =
        piecewise-linear); kernel moments are exact either way.
    """
    if grid is None:
        grid = f.grid
    elif grid != f.grid:
        raise ValueError("grid does not match the sample path's grid")
    return SamplePath(grid, frac_integral_values(beta, f.values, grid, order=order))


def frac_derivative_values(beta: float, values: np.ndarray, grid: PathGrid,
                           order: int = 0) -> np.ndarray:
    """D^beta f for raw sample arrays, shape (n+1,) or (m, n+1)."""
    _check_order(beta)
    if grid.n < 2:
        raise ValueError("fractional derivative needs a grid with at least 2 steps")
    if beta == 1.0:
        g = np.asarray(values, dtype=float)
    else:
        g = frac_integral_values(1.0 - beta, values, grid, order=order)
    out = np.empty_like(g)
    # forward quotient everywhere; the last node falls back to backward.
    out[..., :-1] = np.diff(g, axis=-1) / grid.h
    out[..., -1] = out[..., -2]
    return out


def frac_derivative(beta: float, f: SamplePath, grid: PathGrid | None = None,
                    order: int = 0) -> SamplePath:
    """Riemann-Liouville fractional derivative D^beta f = d/dt I^(1-beta) f.

    Realized as the forward difference quotient of the fractional integral
    of order 1-beta (beta = 1 reduces to the plain difference quotient of
    f).  The value at t = 0 is a one-sided quotient and is the least
    accurate node; the last node reuses the final forward quotient.
    """
    if grid is None:
        grid = f.grid
    elif grid != f.grid:
        raise ValueError("grid does not match the sample path's grid")
    return SamplePath(grid, frac_derivative_values(beta, f.values, grid, order=order))
