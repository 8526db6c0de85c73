"""Smoothing kernels.

A kernel bundles its density, distribution function, a noise sampler and
the two moment constants that enter the optimal-bandwidth formulas:

    kappa1 = int t^2 k(t) dt,    kappa2 = int k(t)^2 dt
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special


@dataclass(frozen=True)
class Kernel:
    """A zero-mean probability density used to smooth a pseudo-population.

    Parameters
    ----------
    name : str
    pdf, cdf : callable
        Vectorized density ``k`` and distribution function ``K``.
    sampler : callable
        ``sampler(rng, size) -> ndarray`` drawing i.i.d. noise from ``K``.
    kappa1 : float
        Second moment of the kernel.
    kappa2 : float
        Integral of the squared density (roughness).
    """

    name: str
    pdf: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    kappa1: float
    kappa2: float

    def __post_init__(self):
        for label, value in (("kappa1", self.kappa1), ("kappa2", self.kappa2)):
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{label} must be positive and finite, got {value!r}")


def _norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _norm_cdf(x):
    return special.ndtr(np.asarray(x, dtype=float))


def _norm_sampler(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.standard_normal(size)


GAUSSIAN = Kernel(
    name="gaussian",
    pdf=_norm_pdf,
    cdf=_norm_cdf,
    sampler=_norm_sampler,
    kappa1=1.0,
    kappa2=1.0 / (2.0 * math.sqrt(math.pi)),
)


def gaussian_kernel() -> Kernel:
    """Standard normal kernel (kappa1 = 1, kappa2 = 1 / (2 sqrt(pi)))."""
    return GAUSSIAN


def sample_noise(kernel: Kernel, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` independent values from the kernel distribution."""
    if count < 0:
        raise ValueError(f"count must be nonnegative, got {count}")
    if count == 0:
        return np.empty(0, dtype=float)
    return np.asarray(kernel.sampler(rng, int(count)), dtype=float)


def kernel_cdf_estimate(values, t, h: float, kernel: Kernel = GAUSSIAN):
    """Kernel (Parzen-Rosenblatt) CDF estimate ``mean_i K((t - y_i) / h)``.

    With ``h == 0`` this is the empirical CDF.
    """
    values = np.asarray(values, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if h == 0:
        return (values[None, :] <= t[:, None]).mean(axis=1)
    return kernel.cdf((t[:, None] - values[None, :]) / h).mean(axis=1)
