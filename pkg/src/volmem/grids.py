"""Uniform time grids and sampled paths shared by all simulation modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PathGrid:
    """Uniform grid t_k = k*T/n on [0, T].

    Parameters
    ----------
    n : int
        Number of steps (the grid has n+1 nodes).
    horizon : float
        Final time T > 0.
    """

    n: int
    horizon: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"grid must have at least one step, got n={self.n}")
        if self.horizon <= 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")

    @property
    def h(self) -> float:
        """Step size T/n."""
        return self.horizon / self.n

    @property
    def times(self) -> np.ndarray:
        """Node times, shape (n+1,)."""
        return np.arange(self.n + 1) * self.h

    def refine(self, factor: int) -> "PathGrid":
        """Grid with the same horizon and `factor` times as many steps."""
        if factor < 1:
            raise ValueError("refinement factor must be >= 1")
        return PathGrid(self.n * factor, self.horizon)


@dataclass(frozen=True)
class SamplePath:
    """Values of a scalar process on a PathGrid."""

    grid: PathGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.shape[0] != self.grid.n + 1:
            raise ValueError(
                f"values must have shape ({self.grid.n + 1},), got {values.shape}"
            )
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]
