"""Monte Carlo engine: dyadically refinable Brownian increments with strong
coupling across step sizes, coupled-noise strong-error estimation, log-log
rate regression, mean estimation, and the endpoint-complexity benchmark.

Reproducibility contract: per-path randomness is keyed by (seed, path
index) through numpy's SeedSequence, so path i is the same array whether
paths are generated one at a time, in batches, serially or across worker
threads; reductions accumulate in fixed path order.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .grids import PathGrid
from .sde import MemoryProcessSpec, euler_xi_values
from .volterra import VolterraSpec, euler_x_values

SchemeFn = Callable[..., np.ndarray]
_BATCH = 512


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class BrownianFabric:
    """Per-path fine-level Brownian increments over [0, horizon].

    Increments are generated lazily and deterministically from
    (seed, path_index); coarsening to a dyadic sublevel is exact pairwise
    summation, so a coarse increment is bit-for-bit the sum of the fine
    increments it contains.
    """

    seed: int
    n_fine: int
    n_paths: int
    horizon: float = 1.0

    def __post_init__(self):
        if not _is_power_of_two(self.n_fine):
            raise ValueError(f"n_fine must be a power of two, got {self.n_fine}")
        if self.n_paths < 1:
            raise ValueError("need at least one path")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")

    @property
    def h_fine(self) -> float:
        return self.horizon / self.n_fine

    def _rng(self, path_index: int, stream: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=(stream, path_index))
        return np.random.default_rng(ss)

    def increments(self, path_index: int) -> np.ndarray:
        """Fine increments of one path, shape (n_fine,)."""
        if not 0 <= path_index < self.n_paths:
            raise IndexError(f"path index {path_index} out of range")
        scale = np.sqrt(self.h_fine)
        return scale * self._rng(path_index).standard_normal(self.n_fine)

    def increments_block(self, start: int, stop: int) -> np.ndarray:
        """Fine increments for paths start..stop-1, shape (stop-start, n_fine).

        Row i equals increments(start + i) exactly.
        """
        out = np.empty((stop - start, self.n_fine))
        for i in range(start, stop):
            out[i - start] = self.increments(i)
        return out

    def auxiliary_normals_block(self, start: int, stop: int, n: int,
                                stream: int = 1) -> np.ndarray:
        """Independent standard normals per path (e.g. hybrid residuals)."""
        out = np.empty((stop - start, n))
        for i in range(start, stop):
            out[i - start] = self._rng(i, stream).standard_normal(n)
        return out

    @staticmethod
    def coarsen(increments: np.ndarray, n: int) -> np.ndarray:
        """Block-sum increments down to an n-step grid along the last axis.

        Dyadic ratios reduce by successive pairwise halving so that
        coarsen(x, n) == coarsen(coarsen(x, 2n), n) bit-for-bit.
        """
        n_cur = increments.shape[-1]
        if n_cur % n != 0:
            raise ValueError(f"{n} does not divide the fine level {n_cur}")
        ratio = n_cur // n
        x = increments
        if _is_power_of_two(ratio):
            while x.shape[-1] > n:
                x = x[..., 0::2] + x[..., 1::2]
            return x
        return x.reshape(*x.shape[:-1], n, ratio).sum(axis=-1)


def make_fabric(seed: int, n_fine: int, n_paths: int,
                horizon: float = 1.0) -> BrownianFabric:
    """Build the coupling fabric (n_fine must be a power of two)."""
    return BrownianFabric(seed=seed, n_fine=n_fine, n_paths=n_paths,
                          horizon=horizon)


@dataclass(frozen=True)
class RatePoint:
    """One (n, h, error) measurement with its bootstrap standard error."""

    n: int
    h: float
    error: float
    se: float

    def __post_init__(self):
        if self.error < 0.0 or self.se < 0.0:
            raise ValueError("error and se must be nonnegative")


@dataclass(frozen=True)
class RateReport:
    """Least-squares fit of log(error) against log(h)."""

    points: tuple
    slope: float
    intercept: float
    r_squared: float


def xi_scheme(spec: MemoryProcessSpec) -> SchemeFn:
    """Scheme handle simulating the memory process on coarsened noise."""

    def run(grid: PathGrid, dW: np.ndarray, eval_idx: np.ndarray) -> np.ndarray:
        values = euler_xi_values(spec, grid, dW, spec.xi0.mean)
        return values[:, eval_idx]

    return run


def x_scheme(spec: VolterraSpec) -> SchemeFn:
    """Scheme handle simulating X (driven by its memory-process scheme)."""

    def run(grid: PathGrid, dW: np.ndarray, eval_idx: np.ndarray) -> np.ndarray:
        mspec = spec.memory_spec
        xi0 = mspec.xi0.mean
        xi_bar = euler_xi_values(mspec, grid, dW, xi0)
        return euler_x_values(spec, grid, dW, xi_bar, xi0, eval_idx=eval_idx)

    return run


def _bootstrap_se(per_path: np.ndarray, p: float, seed: int,
                  n_boot: int = 200) -> float:
    """Bootstrap SE of the L^p error estimate from per-path sup^p values."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(2,)))
    m = per_path.shape[0]
    idx = rng.integers(0, m, size=(n_boot, m))
    resampled = per_path[idx].mean(axis=1) ** (1.0 / p)
    return float(resampled.std(ddof=1))


def _checksum(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


def strong_error(scheme: SchemeFn, spec, n_list: Sequence[int], n_ref: int,
                 n_paths: int, p: float = 2.0, seed: int = 0,
                 threads: int = 1) -> list[RatePoint]:
    """Coupled-noise strong error against a reference run at n_ref.

    For each n, both the coarse run (block-summed increments) and the
    reference run consume the same underlying fine increments, and

        error(n) = ( mean_paths  max_k |coarse(t_k) - ref(t_k)|^p )^(1/p)

    over the coarse nodes t_k.  Requires every n to divide n_ref and
    n_ref >= 8 * max(n_list).
    """
    n_list = sorted(int(n) for n in n_list)
    if not n_list:
        raise ValueError("n_list must not be empty")
    for n in n_list:
        if n_ref % n != 0:
            raise ValueError(f"n = {n} does not divide n_ref = {n_ref}")
    if n_ref < 8 * max(n_list):
        raise ValueError("n_ref must be at least 8 * max(n_list)")

    horizon = spec.horizon
    fabric = make_fabric(seed, n_ref, n_paths, horizon)
    n_max = max(n_list)
    ref_grid = PathGrid(n_ref, horizon)
    # reference values are only needed on the union of the coarse grids,
    # which is the n_max grid since every n divides n_max's refinement
    ref_eval = np.arange(n_max + 1) * (n_ref // n_max)

    def run_block(bounds: tuple[int, int]):
        start, stop = bounds
        fine = fabric.increments_block(start, stop)
        # reference and coarse runs must consume the same underlying noise
        fine_digest = _checksum(fine)
        ref_vals = scheme(ref_grid, fine, ref_eval)
        sums = {}
        consumed = fine
        for n in reversed(n_list):
            consumed = BrownianFabric.coarsen(consumed, n)
            grid = PathGrid(n, horizon)
            vals = scheme(grid, consumed, np.arange(n + 1))
            stride = n_max // n
            gap = np.abs(vals - ref_vals[:, ::stride])
            sums[n] = np.max(gap, axis=1) ** p
        if _checksum(fine) != fine_digest:
            raise RuntimeError("fine increments were mutated during the runs")
        return sums

    bounds = [(s, min(s + _BATCH, n_paths)) for s in range(0, n_paths, _BATCH)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_block, bounds))
    else:
        results = [run_block(b) for b in bounds]

    points = []
    for n in n_list:
        per_path = np.concatenate([r[n] for r in results])
        error = float(per_path.mean() ** (1.0 / p))
        se = _bootstrap_se(per_path, p, seed)
        points.append(RatePoint(n=n, h=horizon / n, error=error, se=se))
    return points


def fit_rate(points: Sequence[RatePoint]) -> RateReport:
    """Least squares of log(error) on log(h); needs >= 3 positive errors."""
    pts = tuple(sorted(points, key=lambda q: q.n))
    if len(pts) < 3:
        raise ValueError("rate regression needs at least 3 points")
    errors = np.array([q.error for q in pts])
    if np.any(errors <= 0.0):
        raise ValueError("all errors must be positive (exact match?)")
    log_h = np.log([q.h for q in pts])
    log_e = np.log(errors)
    slope, intercept = np.polyfit(log_h, log_e, 1)
    fitted = slope * log_h + intercept
    ss_res = float(np.sum((log_e - fitted) ** 2))
    ss_tot = float(np.sum((log_e - log_e.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateReport(points=pts, slope=float(slope), intercept=float(intercept),
                      r_squared=r2)


def estimate_mean(values: np.ndarray, confidence: float = 0.95):
    """Sample mean, standard error, and normal-approximation interval."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("mean estimation needs at least 2 values")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(values.size))
    z = float(stats.norm.ppf(0.5 * (1.0 + confidence)))
    return mean, se, (mean - z * se, mean + z * se)


def _median_time(fn: Callable[[], object], repeats: int = 5) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def bench_endpoint(spec: VolterraSpec, n_list: Sequence[int],
                   repeats: int = 5, seed: int = 0) -> dict:
    """Median wall time of endpoint-only X_T (O(n)) vs the whole path (O(n^2)).

    Both variants are timed given a precomputed memory-process path, so
    the measurement isolates the deterministic kernel-weight work that
    drives the complexity contrast: one streamed weight row for the
    endpoint, one per node for the whole path.  One warm-up run per size
    is discarded; the reported value is the median of `repeats` runs.
    """
    horizon = spec.horizon
    timings = {"endpoint": {}, "whole_path": {}}
    for n in n_list:
        grid = PathGrid(int(n), horizon)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                           spawn_key=(3, int(n))))
        dW = rng.standard_normal(grid.n) * np.sqrt(grid.h)
        mspec = spec.memory_spec
        xi0 = mspec.xi0.mean
        xi_bar = euler_xi_values(mspec, grid, dW, xi0)
        endpoint_idx = np.array([grid.n])

        def run_endpoint():
            return euler_x_values(spec, grid, dW, xi_bar, xi0,
                                  eval_idx=endpoint_idx, stream_rows=True)

        def run_whole():
            return euler_x_values(spec, grid, dW, xi_bar, xi0,
                                  stream_rows=True)

        run_endpoint()
        timings["endpoint"][int(n)] = _median_time(run_endpoint, repeats)
        run_whole()
        timings["whole_path"][int(n)] = _median_time(run_whole, repeats)
    return timings
