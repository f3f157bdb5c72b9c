"""Simulation of path-dependent Volterra processes through Markovian memory
processes: kernel transforms, Euler schemes, and strong-rate benchmarking."""

from .grids import PathGrid, SamplePath
from .kernels import (
    CoKernel,
    Kernel,
    KernelKind,
    KernelRegularity,
    co_kernel,
    convolve,
    eval_kernel,
    laplace,
    laplace_co,
    phi_tilde,
    verify_pseudo_inverse,
)
from .fracops import frac_derivative, frac_integral

__all__ = [
    "PathGrid",
    "SamplePath",
    "Kernel",
    "KernelKind",
    "CoKernel",
    "KernelRegularity",
    "co_kernel",
    "convolve",
    "eval_kernel",
    "laplace",
    "laplace_co",
    "phi_tilde",
    "verify_pseudo_inverse",
    "frac_derivative",
    "frac_integral",
]
