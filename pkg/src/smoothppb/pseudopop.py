"""Pseudo-population construction and smoothing.

A pseudo-population is stored by *source index*: entry ``j`` is a copy of
sample unit ``source[j]`` and inherits its inclusion probability. Smoothing
only changes the study values, so one index layout can serve many
bandwidths.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .designs import SRSWOR, DesignSpec, Poisson, RandSysPPS, StratifiedSRSWOR, srswor_indices, systematic_indices
from .kernels import Kernel, sample_noise
from .quantiles import WeightedSample


@dataclass(frozen=True, eq=False)
class PseudoPopulation:
    y: np.ndarray
    pi: np.ndarray
    source: np.ndarray
    stratum: Optional[np.ndarray] = None
    h: float = 0.0
    smoothed: bool = False

    @property
    def size(self) -> int:
        return len(self.y)


def replication_counts(pi) -> tuple[np.ndarray, np.ndarray]:
    """Split ``1/pi`` into its integer part and the fractional residual.

    Values of ``1/pi`` within 1e-9 (relative) of an integer are snapped to it,
    so ``pi = n/N`` style probabilities with integer ``N/n`` have no residual.
    """
    inv = 1.0 / np.asarray(pi, dtype=float)
    near = np.rint(inv)
    snap = np.abs(inv - near) <= 1e-9 * inv
    k = np.where(snap, near, np.floor(inv)).astype(np.int64)
    residual = np.where(snap, 0.0, inv - np.floor(inv))
    return k, residual


def _strata_order(sample: WeightedSample):
    labels = sorted(sample.strata)
    return labels, [np.flatnonzero(sample.stratum == label) for label in labels]


def check_design(sample: WeightedSample, design: DesignSpec) -> None:
    if isinstance(design, SRSWOR):
        if sample.n != design.n:
            raise ValueError(f"sample has {sample.n} units but the SRSWOR design has n={design.n}")
    elif isinstance(design, StratifiedSRSWOR):
        if sample.stratum is None:
            raise ValueError("stratified design requires stratum labels on the sample")
        labels = sorted(sample.strata)
        meta = tuple(sample.strata[label] for label in labels)
        if meta != design.strata:
            raise ValueError(f"sample strata {meta} do not match design strata {design.strata}")
    elif not isinstance(design, (Poisson, RandSysPPS)):
        raise TypeError(f"unsupported design {design!r}")


def fixed_part_indices(sample: WeightedSample) -> np.ndarray:
    k, _ = replication_counts(sample.pi)
    return np.repeat(np.arange(sample.n), k)


def complete_indices(sample: WeightedSample, design: DesignSpec, rng: np.random.Generator) -> np.ndarray:
    """Source indices of a completed pseudo-population.

    Stratified pseudo-populations are laid out stratum by stratum in sorted
    label order.
    """
    if isinstance(design, SRSWOR):
        n = sample.n
        k, rem = divmod(design.N, n)
        fixed = np.repeat(np.arange(n), k)
        if rem == 0:
            return fixed
        return np.concatenate([fixed, np.sort(srswor_indices(n, rem, rng))])
    if isinstance(design, StratifiedSRSWOR):
        parts = []
        for (N_l, n_l), idx in zip(design.strata, _strata_order(sample)[1]):
            k, rem = divmod(N_l, n_l)
            parts.append(np.repeat(idx, k))
            if rem:
                parts.append(idx[np.sort(srswor_indices(n_l, rem, rng))])
        return np.concatenate(parts)
    k, residual = replication_counts(sample.pi)
    fixed = np.repeat(np.arange(sample.n), k)
    if isinstance(design, Poisson):
        extra = np.flatnonzero(rng.random(sample.n) < residual)
    elif isinstance(design, RandSysPPS):
        live = np.flatnonzero(residual > 0)
        extra = live[systematic_indices(residual[live], rng)] if len(live) else live
    else:
        raise TypeError(f"unsupported design {design!r}")
    return np.concatenate([fixed, extra])


def _from_source(sample: WeightedSample, source: np.ndarray) -> PseudoPopulation:
    stratum = None if sample.stratum is None else sample.stratum[source]
    return PseudoPopulation(sample.y[source], sample.pi[source], source, stratum)


def build_fixed_part(sample: WeightedSample) -> PseudoPopulation:
    """Replicate each sample pair ``floor(1/pi)`` times, source-major."""
    return _from_source(sample, fixed_part_indices(sample))


def complete(sample: WeightedSample, design: DesignSpec, rng: np.random.Generator) -> PseudoPopulation:
    """Fixed part plus a design-driven random completion."""
    check_design(sample, design)
    return _from_source(sample, complete_indices(sample, design, rng))


def smooth(
    pp: PseudoPopulation,
    h: float,
    kernel: Kernel,
    rng: Optional[np.random.Generator] = None,
    noise=None,
) -> PseudoPopulation:
    """Add ``h * eps`` kernel noise to every pseudo-population value.

    ``noise`` may supply a precomputed vector of length ``pp.size`` so the same
    draws can be reused across bandwidths.
    """
    if h < 0:
        raise ValueError(f"bandwidth must be nonnegative, got {h}")
    if noise is None:
        if rng is None:
            raise ValueError("either rng or noise is required")
        noise = sample_noise(kernel, pp.size, rng)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (pp.size,):
        raise ValueError(f"noise has length {noise.size}, pseudo-population has {pp.size} entries")
    y = pp.y.copy() if h == 0 else pp.y + h * noise
    return PseudoPopulation(y, pp.pi, pp.source, pp.stratum, h=float(h), smoothed=h > 0)
