"""Bandwidth selection for the smoothed bootstrap of a quantile.

Bandwidths take the form ``h = C * n**(-1/5)``. Three ways to pick ``C``:

* the asymptotically optimal constant for a known density,
  ``C = kappa1^(-2/5) kappa2^(1/5) f^(1/5) |f'' - f'^2/f|^(-2/5)``
  evaluated at the quantile (:func:`optimal_constant`),
* the same constant under a normal working model with plug-in estimates of
  location and scale (:func:`normal_constant`, :func:`plugin_bandwidth`),
* a double bootstrap grid search minimizing the estimated mean squared
  error of the bootstrap MSE estimator (:func:`double_bootstrap_select`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import rng as rngmod
from .bootstrap import BootstrapRun, EstimatorSpec, Reuse, _replicate
from .designs import DesignSpec, StratifiedSRSWOR
from .kernels import GAUSSIAN, Kernel
from .pseudopop import _strata_order, check_design
from .quantiles import WeightedSample, design_quantile


def _phi(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


def optimal_constant(f: float, d: float, kernel: Kernel = GAUSSIAN) -> float:
    """Optimal bandwidth constant given the density ``f`` at the quantile and
    the curvature term ``d = f'' - f'^2 / f`` there.

    Raises ``ValueError`` when ``d == 0``: the leading-order risk then has no
    finite minimizer.
    """
    if not f > 0:
        raise ValueError(f"density at the quantile must be positive, got {f}")
    if d == 0:
        raise ValueError("curvature term is zero; no finite optimal constant exists")
    return kernel.kappa1 ** (-0.4) * kernel.kappa2 ** 0.2 * f ** 0.2 * abs(d) ** (-0.4)


def normal_constant(z: float, sigma: float, kernel: Kernel = GAUSSIAN) -> float:
    """Optimal constant when the population is normal with scale ``sigma`` and
    the quantile sits at standardized position ``z``.

    Closed form ``sigma * kappa1^(-2/5) kappa2^(1/5) phi(z)^(-1/5)``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return sigma * kernel.kappa1 ** (-0.4) * kernel.kappa2 ** 0.2 * _phi(z) ** (-0.2)


def normal_terms(z: float, sigma: float) -> tuple[float, float]:
    """``(f, f'' - f'^2/f)`` for a normal density at standardized point ``z``."""
    f = _phi(z) / sigma
    return f, -_phi(z) / sigma**3


def lognormal_terms(p: float, meanlog: float = 0.0, sdlog: float = 1.0) -> tuple[float, float]:
    """``(f, f'' - f'^2/f)`` for a lognormal density at its ``p``-quantile."""
    u = float(special.ndtri(p))
    y = math.exp(meanlog + sdlog * u)
    f = _phi(u) / (sdlog * y)
    d = f / y**2 * (u / sdlog + 1 - 1 / sdlog**2)
    return f, d


def lognormal_normal_constant(p: float, meanlog: float = 0.0, sdlog: float = 1.0, kernel: Kernel = GAUSSIAN) -> float:
    """Normal-model constant for a lognormal population (moment-matched)."""
    mean = math.exp(meanlog + sdlog**2 / 2)
    sd = math.sqrt((math.exp(sdlog**2) - 1) * math.exp(2 * meanlog + sdlog**2))
    xi = math.exp(meanlog + sdlog * float(special.ndtri(p)))
    return normal_constant((xi - mean) / sd, sd, kernel)


def plugin_bandwidth(sample: WeightedSample, p: float, kernel: Kernel = GAUSSIAN) -> float:
    """Normal-reference plug-in bandwidth for an SRSWOR sample.

    Uses the unweighted sample mean and standard deviation, and the estimated
    quantile, to place the quantile under a normal working model.
    """
    n = sample.n
    if n < 2:
        raise ValueError("plug-in bandwidth needs at least two sample values")
    s = float(np.std(sample.y, ddof=1))
    if not s > 0:
        raise ValueError("plug-in bandwidth is undefined for a constant sample")
    z = (design_quantile(sample, p) - float(np.mean(sample.y))) / s
    return normal_constant(z, s, kernel) * n ** (-0.2)


@dataclass(frozen=True, eq=False)
class BandwidthGrid:
    constants: np.ndarray
    n: float

    def __post_init__(self):
        c = np.asarray(self.constants, dtype=float)
        if c.ndim != 1 or len(c) == 0:
            raise ValueError("a grid needs at least one constant")
        if np.any(c <= 0) or np.any(np.diff(c) <= 0):
            raise ValueError("grid constants must be positive and strictly increasing")
        object.__setattr__(self, "constants", c)

    @property
    def m(self) -> int:
        return len(self.constants)

    @property
    def bandwidths(self) -> np.ndarray:
        return self.constants * self.n ** (-0.2)


def make_grid(c_lo: float, c_hi: float, m: int, n: float) -> BandwidthGrid:
    """``m`` equally spaced constants from ``c_lo`` to ``c_hi`` inclusive."""
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    if not 0 < c_lo:
        raise ValueError("c_lo must be positive")
    if m > 1 and not c_hi > c_lo:
        raise ValueError("c_hi must exceed c_lo")
    return BandwidthGrid(np.linspace(c_lo, c_hi, m), n)


@dataclass(frozen=True, eq=False)
class SelectionResult:
    h_hat: float
    constant: float
    index: int
    risk_curve: np.ndarray
    mse_curve: np.ndarray
    mse_at_h_hat: float
    run: BootstrapRun
    empty_redraws: int = 0


def risk_curve(first_level_mse: np.ndarray, second_level_mse: np.ndarray) -> np.ndarray:
    """``mean_b (V**_{b,h} - V*_h)^2`` for every grid point.

    ``first_level_mse`` has shape ``(m,)``, ``second_level_mse`` ``(B, m)``.
    """
    return np.mean((np.asarray(second_level_mse) - np.asarray(first_level_mse)[None, :]) ** 2, axis=0)


def argmin_smallest(curve: np.ndarray) -> int:
    """Index of the minimum; ties go to the first (smallest bandwidth)."""
    return int(np.argmin(curve))


def _grid_scales(sample, design, grid):
    """Row scales and per-unit multipliers; strata get ``C_i * n_l^(-1/5)``."""
    if isinstance(design, StratifiedSRSWOR):
        return grid.constants, _stratum_multipliers(sample)
    return grid.bandwidths, np.ones(sample.n)


def _stratum_multipliers(sample: WeightedSample) -> np.ndarray:
    bw = np.empty(sample.n)
    for label, idx in zip(*_strata_order(sample)):
        bw[idx] = sample.strata[label][1] ** (-0.2)
    return bw


def double_bootstrap_select(
    sample: WeightedSample,
    design: DesignSpec,
    est: EstimatorSpec,
    grid: BandwidthGrid,
    kernel: Kernel = GAUSSIAN,
    B: int = 1000,
    D: int = 50,
    rng: rngmod.RandomLike = None,
    reuse: Reuse = Reuse(),
) -> SelectionResult:
    """Select a bandwidth by double bootstrap grid search.

    For each first-level replicate ``b`` and grid bandwidth ``h``, the
    bootstrap sample drawn from the smoothed pseudo-population is itself
    resampled ``D`` times with the same bandwidth, giving ``V**_{b,h}``. The
    selected bandwidth minimizes ``mean_b (V**_{b,h} - V*_h)^2``.
    """
    check_design(sample, design)
    if B < 1 or D < 2:
        raise ValueError(f"need B >= 1 and D >= 2, got B={B}, D={D}")
    hs, bw = _grid_scales(sample, design, grid)
    stratified = isinstance(design, StratifiedSRSWOR)
    root = rngmod.root_seed(rng)
    m = grid.m
    theta = np.empty((m, B))
    theta_hat = np.empty((m, B))
    second = np.empty((B, m))
    redraws = 0

    def nested(rep, rows, noise_rng, design_rng):
        inner = WeightedSample(rep.values[0], rep.pi, rep.stratum, sample.strata if stratified else None)
        inner_bw = _stratum_multipliers(inner) if stratified else np.ones(inner.n)
        acc = np.zeros(len(rows))
        extra = 0
        for _ in range(D):
            r2 = _replicate(
                inner, design, est, rows, inner_bw, kernel, noise_rng, design_rng,
                values=rep.values, shared_noise=reuse.noise,
            )
            acc += (r2.theta_hat - r2.theta_star) ** 2
            extra += r2.redraws
        return acc / D, extra

    for b in range(B):
        if reuse.indices:
            rep = _replicate(
                sample, design, est, hs, bw, kernel,
                rngmod.stream(root, b, rngmod.NOISE), rngmod.stream(root, b, rngmod.DESIGN),
                shared_noise=reuse.noise, keep_sample=True,
            )
            theta[:, b], theta_hat[:, b] = rep.theta_star, rep.theta_hat
            second[b], extra = nested(
                rep, hs,
                rngmod.stream(root, b, rngmod.NESTED, rngmod.NOISE),
                rngmod.stream(root, b, rngmod.NESTED, rngmod.DESIGN),
            )
            redraws += rep.redraws + extra
            continue
        for i in range(m):
            noise_key = (b, rngmod.NOISE) if reuse.noise else (b, rngmod.NOISE, i)
            rep = _replicate(
                sample, design, est, hs[i : i + 1], bw, kernel,
                rngmod.stream(root, *noise_key), rngmod.stream(root, b, rngmod.DESIGN, i),
                keep_sample=True,
            )
            theta[i, b], theta_hat[i, b] = rep.theta_star[0], rep.theta_hat[0]
            nested_noise = (b, rngmod.NESTED, rngmod.NOISE) if reuse.noise else (b, rngmod.NESTED, rngmod.NOISE, i)
            vals, extra = nested(
                rep, hs[i : i + 1],
                rngmod.stream(root, *nested_noise),
                rngmod.stream(root, b, rngmod.NESTED, rngmod.DESIGN, i),
            )
            second[b, i] = vals[0]
            redraws += rep.redraws + extra

    mse_curve = np.mean((theta_hat - theta) ** 2, axis=1)
    risk = risk_curve(mse_curve, second)
    k = argmin_smallest(risk)
    h_hat = float(grid.bandwidths[k])
    h_run = tuple(float(v) for v in grid.constants[k] * _unit_h(sample, design)) if stratified else h_hat
    return SelectionResult(
        h_hat=h_hat,
        constant=float(grid.constants[k]),
        index=k,
        risk_curve=risk,
        mse_curve=mse_curve,
        mse_at_h_hat=float(mse_curve[k]),
        run=BootstrapRun(theta[k].copy(), theta_hat[k].copy(), h_run),
        empty_redraws=redraws,
    )


def _unit_h(sample, design) -> np.ndarray:
    """Per-stratum ``n_l^(-1/5)`` in sorted label order."""
    return np.array([sample.strata[label][1] ** (-0.2) for label in sorted(sample.strata)])
