"""Smoothed pseudo-population bootstrap.

One replicate of the procedure:

1. build a pseudo-population from the sample (fixed part plus random
   completion drawn with the original design),
2. add kernel noise ``h * eps`` to its study values,
3. compute the parameter ``theta*`` on the smoothed pseudo-population,
4. draw a bootstrap sample with the original design, using inclusion
   probabilities rescaled to the pseudo-population for PPS designs,
5. compute the estimate ``theta_hat*`` on that sample.

Each replicate ``b`` draws noise and design randomness from two separate
substreams keyed by ``b``. Hence runs at different bandwidths with the same
seed share their pseudo-populations and bootstrap index sets, and ``h = 0``
consumes the design stream exactly as the unsmoothed bootstrap does.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import special

from . import rng as rngmod
from .designs import SRSWOR, DesignSpec, Poisson, RandSysPPS, StratifiedSRSWOR, pps_inclusion_probs, srswor_indices, systematic_indices
from .kernels import GAUSSIAN, Kernel, sample_noise
from .pseudopop import PseudoPopulation, _strata_order, check_design, complete_indices
from .quantiles import WeightedSample, quantile_rows

MAX_EMPTY_REDRAWS = 100_000


@dataclass(frozen=True)
class Quantile:
    p: float

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError(f"quantile level must lie in (0, 1), got {self.p}")

    def parameter(self, values: np.ndarray) -> np.ndarray:
        return quantile_rows(values, self.p)

    def estimate(self, values: np.ndarray, pi: np.ndarray) -> np.ndarray:
        return quantile_rows(values, self.p, weights=1.0 / pi)


@dataclass(frozen=True)
class Mean:
    """Population mean and its Hajek estimator. Used as a variance oracle."""

    def parameter(self, values: np.ndarray) -> np.ndarray:
        return np.atleast_2d(values).mean(axis=1)

    def estimate(self, values: np.ndarray, pi: np.ndarray) -> np.ndarray:
        w = 1.0 / pi
        return (np.atleast_2d(values) * w).sum(axis=1) / w.sum()


EstimatorSpec = Union[Quantile, Mean]


@dataclass(frozen=True, eq=False)
class BootstrapRun:
    theta_star: np.ndarray
    theta_hat_star: np.ndarray
    h: Union[float, tuple]
    empty_redraws: int = 0

    @property
    def B(self) -> int:
        return len(self.theta_star)

    @property
    def deltas(self) -> np.ndarray:
        return self.theta_hat_star - self.theta_star


@dataclass(frozen=True)
class Reuse:
    """Share one noise vector and/or one set of index draws across bandwidths."""

    noise: bool = True
    indices: bool = True


def bootstrap_inclusion_probs(pp: PseudoPopulation, design: DesignSpec) -> np.ndarray:
    """Inclusion probabilities for resampling from a pseudo-population."""
    return _boot_probs(pp.pi, design)


def _boot_probs(pi_star: np.ndarray, design: DesignSpec) -> np.ndarray:
    if not isinstance(design, RandSysPPS):
        return pi_star
    n = design.n
    rescaled = n * pi_star / pi_star.sum()
    if np.all(rescaled <= 1):
        return rescaled
    return pps_inclusion_probs(pi_star, n)


def _draw_boot(design, pi_prime, stratum_sizes, rng):
    N_star = len(pi_prime)
    if isinstance(design, SRSWOR):
        return np.sort(srswor_indices(N_star, design.n, rng))
    if isinstance(design, Poisson):
        return np.flatnonzero(rng.random(N_star) < pi_prime)
    if isinstance(design, RandSysPPS):
        return systematic_indices(pi_prime, rng)
    if isinstance(design, StratifiedSRSWOR):
        offset, parts = 0, []
        for size, (_, n_l) in zip(stratum_sizes, design.strata):
            parts.append(offset + np.sort(srswor_indices(size, n_l, rng)))
            offset += size
        return np.concatenate(parts)
    raise TypeError(f"unsupported design {design!r}")


def _unit_bandwidths(sample: WeightedSample, design: DesignSpec, h) -> tuple[float, np.ndarray]:
    """Row bandwidth and per-unit multipliers for a scalar or per-stratum ``h``."""
    if np.ndim(h) == 0:
        if h < 0:
            raise ValueError(f"bandwidth must be nonnegative, got {h}")
        return float(h), np.ones(sample.n)
    if not isinstance(design, StratifiedSRSWOR):
        raise ValueError("per-stratum bandwidths require a stratified design")
    h = np.asarray(h, dtype=float)
    labels, groups = _strata_order(sample)
    if len(h) != len(labels) or np.any(h < 0):
        raise ValueError(f"need {len(labels)} nonnegative per-stratum bandwidths, got {h}")
    bw = np.empty(sample.n)
    for h_l, idx in zip(h, groups):
        bw[idx] = h_l
    return 1.0, bw


@dataclass
class _Replicate:
    theta_star: np.ndarray
    theta_hat: np.ndarray
    values: np.ndarray  # (m, n_s) smoothed values of the bootstrap sample
    pi: np.ndarray  # (n_s,) inclusion probabilities used to draw it
    stratum: Optional[np.ndarray]
    redraws: int


def _replicate(
    sample: WeightedSample,
    design: DesignSpec,
    est: EstimatorSpec,
    hs: np.ndarray,
    bw: np.ndarray,
    kernel: Kernel,
    noise_rng: np.random.Generator,
    design_rng: np.random.Generator,
    values: Optional[np.ndarray] = None,
    shared_noise: bool = True,
    keep_sample: bool = False,
) -> _Replicate:
    """One replicate for ``len(hs)`` bandwidths sharing the same index draws.

    ``values`` optionally gives one row of study values per bandwidth (used
    for the nested level, where each bandwidth has its own sample).
    """
    src = complete_indices(sample, design, design_rng)
    N_star = len(src)
    base = sample.y[src][None, :] if values is None else values[:, src]
    scale = hs[:, None] * bw[src][None, :]
    m = len(hs)
    if np.any(scale != 0):
        if shared_noise:
            eps = sample_noise(kernel, N_star, noise_rng)[None, :]
        else:
            eps = sample_noise(kernel, m * N_star, noise_rng).reshape(m, N_star)
        pop = base + scale * eps
    else:
        pop = np.broadcast_to(base, (m, N_star))
    theta_star = est.parameter(pop)

    pi_prime = _boot_probs(sample.pi[src], design)
    sizes = None
    if isinstance(design, StratifiedSRSWOR):
        sizes = [N_l for N_l, _ in design.strata]
    idx = _draw_boot(design, pi_prime, sizes, design_rng)
    redraws = 0
    while len(idx) == 0:
        redraws += 1
        if redraws > MAX_EMPTY_REDRAWS:
            raise RuntimeError("bootstrap samples keep coming out empty")
        idx = _draw_boot(design, pi_prime, sizes, design_rng)
    chosen = pop[:, idx]
    theta_hat = est.estimate(chosen, pi_prime[idx])
    stratum = None
    if keep_sample and sample.stratum is not None:
        stratum = sample.stratum[src[idx]]
    return _Replicate(theta_star, theta_hat, chosen if keep_sample else None, pi_prime[idx], stratum, redraws)


def run_grid(
    sample: WeightedSample,
    design: DesignSpec,
    est: EstimatorSpec,
    hs: Sequence[float],
    kernel: Kernel = GAUSSIAN,
    B: int = 1000,
    rng: rngmod.RandomLike = None,
    reuse: Reuse = Reuse(),
    bw: Optional[np.ndarray] = None,
) -> list[BootstrapRun]:
    """Run the smoothed bootstrap at several bandwidths.

    With ``reuse.indices`` every bandwidth sees the same pseudo-populations
    and bootstrap index sets; with ``reuse.noise`` they also share the kernel
    noise. ``bw`` holds optional per-unit bandwidth multipliers.
    """
    check_design(sample, design)
    if B < 1:
        raise ValueError(f"B must be at least 1, got {B}")
    hs = np.asarray(hs, dtype=float)
    bw = np.ones(sample.n) if bw is None else np.asarray(bw, dtype=float)
    root = rngmod.root_seed(rng)
    m = len(hs)
    theta = np.empty((m, B))
    theta_hat = np.empty((m, B))
    redraws = np.zeros(m, dtype=int)
    for b in range(B):
        if reuse.indices:
            rep = _replicate(
                sample, design, est, hs, bw, kernel,
                rngmod.stream(root, b, rngmod.NOISE), rngmod.stream(root, b, rngmod.DESIGN),
                shared_noise=reuse.noise,
            )
            theta[:, b], theta_hat[:, b] = rep.theta_star, rep.theta_hat
            redraws += rep.redraws
            continue
        for i in range(m):
            noise_key = (b, rngmod.NOISE) if reuse.noise else (b, rngmod.NOISE, i)
            rep = _replicate(
                sample, design, est, hs[i : i + 1], bw, kernel,
                rngmod.stream(root, *noise_key), rngmod.stream(root, b, rngmod.DESIGN, i),
            )
            theta[i, b], theta_hat[i, b] = rep.theta_star[0], rep.theta_hat[0]
            redraws[i] += rep.redraws
    return [BootstrapRun(theta[i], theta_hat[i], float(hs[i]), int(redraws[i])) for i in range(m)]


def run_algorithm1(
    sample: WeightedSample,
    design: DesignSpec,
    est: EstimatorSpec,
    h=0.0,
    kernel: Kernel = GAUSSIAN,
    B: int = 1000,
    rng: rngmod.RandomLike = None,
) -> BootstrapRun:
    """Smoothed pseudo-population bootstrap at bandwidth ``h``.

    ``h`` is a scalar, or for a stratified design one bandwidth per stratum
    (in sorted label order).
    """
    scale, bw = _unit_bandwidths(sample, design, h)
    run = run_grid(sample, design, est, [scale], kernel, B, rng, bw=bw)[0]
    h_out = float(h) if np.ndim(h) == 0 else tuple(float(v) for v in h)
    return BootstrapRun(run.theta_star, run.theta_hat_star, h_out, run.empty_redraws)


def run_unsmoothed(
    sample: WeightedSample,
    design: DesignSpec,
    est: EstimatorSpec,
    B: int = 1000,
    rng: rngmod.RandomLike = None,
) -> BootstrapRun:
    """Standard (unsmoothed) pseudo-population bootstrap.

    Written without any smoothing step; draws the same design substreams as
    :func:`run_algorithm1`.
    """
    check_design(sample, design)
    root = rngmod.root_seed(rng)
    theta = np.empty(B)
    theta_hat = np.empty(B)
    redraws = 0
    sizes = [N_l for N_l, _ in design.strata] if isinstance(design, StratifiedSRSWOR) else None
    for b in range(B):
        design_rng = rngmod.stream(root, b, rngmod.DESIGN)
        src = complete_indices(sample, design, design_rng)
        y_star = sample.y[src]
        theta[b] = est.parameter(y_star[None, :])[0]
        pi_prime = bootstrap_inclusion_probs(PseudoPopulation(y_star, sample.pi[src], src), design)
        while True:
            idx = _draw_boot(design, pi_prime, sizes, design_rng)
            if len(idx):
                break
            redraws += 1
        theta_hat[b] = est.estimate(y_star[idx][None, :], pi_prime[idx])[0]
    return BootstrapRun(theta, theta_hat, 0.0, redraws)


def mse_estimate(run: BootstrapRun) -> float:
    """Mean squared deviation of the bootstrap estimates from the parameters."""
    return float(np.mean(run.deltas**2))


def z_quantile(beta: float) -> float:
    return float(special.ndtri(beta))


def normal_ci(theta_hat: float, mse: float, alpha: float = 0.05) -> tuple[float, float]:
    if mse < 0:
        raise ValueError(f"mse must be nonnegative, got {mse}")
    half = z_quantile(1 - alpha / 2) * math.sqrt(mse)
    theta_hat = float(theta_hat)
    return theta_hat - half, theta_hat + half


def _order_stat(sorted_d: np.ndarray, beta: float) -> float:
    B = len(sorted_d)
    k = math.ceil(beta * B - 1e-9)
    return float(sorted_d[min(max(k, 1), B) - 1])


def basic_ci(theta_hat: float, run: BootstrapRun, alpha: float = 0.05) -> tuple[float, float]:
    """Basic interval ``[theta_hat - q(1 - a/2), theta_hat - q(a/2)]``.

    ``q(beta)`` is the order statistic ``d_(ceil(beta B))`` of the deltas
    ``theta_hat* - theta*``.
    """
    if run.B < 2:
        raise ValueError("the basic interval needs at least two replicates")
    d = np.sort(run.deltas)
    theta_hat = float(theta_hat)
    return theta_hat - _order_stat(d, 1 - alpha / 2), theta_hat - _order_stat(d, alpha / 2)


def run_algorithmS1(
    sample: WeightedSample,
    design: DesignSpec,
    est: EstimatorSpec,
    h=0.0,
    kernel: Kernel = GAUSSIAN,
    A: int = 50,
    B: int = 200,
    rng: rngmod.RandomLike = None,
) -> float:
    """Variance-targeted bootstrap: the average over ``A`` pseudo-populations
    of the sample variance of ``B`` bootstrap estimates.

    The pseudo-population is completed once per outer replicate and smoothed
    afresh for every inner replicate. No bootstrap parameter is computed.
    """
    check_design(sample, design)
    if A < 1 or B < 2:
        raise ValueError(f"need A >= 1 and B >= 2, got A={A}, B={B}")
    scale, bw = _unit_bandwidths(sample, design, h)
    root = rngmod.root_seed(rng)
    sizes = [N_l for N_l, _ in design.strata] if isinstance(design, StratifiedSRSWOR) else None
    estimates = np.empty((A, B))
    for a in range(A):
        noise_rng = rngmod.stream(root, a, rngmod.NOISE)
        design_rng = rngmod.stream(root, a, rngmod.DESIGN)
        src = complete_indices(sample, design, design_rng)
        N_star = len(src)
        base = sample.y[src]
        spread = scale * bw[src]
        pi_prime = _boot_probs(sample.pi[src], design)
        for b in range(B):
            pop = base + spread * sample_noise(kernel, N_star, noise_rng) if scale > 0 else base
            idx = _draw_boot(design, pi_prime, sizes, design_rng)
            while len(idx) == 0:
                idx = _draw_boot(design, pi_prime, sizes, design_rng)
            estimates[a, b] = est.estimate(pop[idx][None, :], pi_prime[idx])[0]
    return mean_within_variance(estimates)


def mean_within_variance(estimates) -> float:
    """Average over rows of the unbiased sample variance within each row."""
    return float(np.mean(np.var(np.atleast_2d(estimates), axis=1, ddof=1)))
