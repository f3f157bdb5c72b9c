import numpy as np
import pytest

from volmem import Kernel, KernelKind
from volmem.roughvol import RoughVolParams, sigma_v
from volmem.sde import Coefficients, MemoryProcessSpec


def zero_fn(t, x):
    return np.zeros_like(np.asarray(x, dtype=float))


def make_zero_coeffs():
    return Coefficients(b=zero_fn, sigma=zero_fn, gamma=1.0)


def make_meanrev_coeffs(params: RoughVolParams | None = None) -> Coefficients:
    """The reference mean-reverting drift with the variance-shaped diffusion."""
    p = params or RoughVolParams()
    return Coefficients(
        b=lambda t, x: p.mu - p.lam * x,
        sigma=lambda t, x: sigma_v(x, p),
        gamma=1.0,
        lip_b=abs(p.lam),
        lip_sigma=float(np.sqrt(p.a)),
    )


@pytest.fixture
def frac_kernel():
    return Kernel(KernelKind.FRACTIONAL, 1.0, 0.6)


@pytest.fixture
def meanrev_spec(frac_kernel):
    p = RoughVolParams()
    return MemoryProcessSpec.from_kernel(
        frac_kernel, make_meanrev_coeffs(p), p.mu / p.lam, 1.0
    )
