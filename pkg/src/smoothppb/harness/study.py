"""Simulation studies: repeated sampling from one fixed finite population.

Random streams are keyed by ``(seed, phase, replicate)``. Every method in a
replicate sees the same drawn sample and the same bootstrap root, so methods
are compared on identical material and ``FIXED(h=0)`` reproduces
``UNSMTHD`` exactly. Replicates are independent and may run in worker
processes; results are merged in replicate order.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Optional

import numpy as np

from .. import rng as rngmod
from ..bandwidth import double_bootstrap_select, make_grid, plugin_bandwidth
from ..bootstrap import Quantile, Reuse, basic_ci, mse_estimate, normal_ci, run_algorithm1, run_unsmoothed
from ..designs import SRSWOR, DesignSpec, Poisson, RandSysPPS, draw, pps_inclusion_probs
from ..kernels import GAUSSIAN
from ..popgen import GENERATORS, FinitePopulation, read_csv, take_prefix
from ..quantiles import WeightedSample, design_quantile, finite_population_quantile
from .config import MethodSpec, StudyConfig

PHASE_POP, PHASE_MSE, PHASE_SAMPLE, PHASE_BOOT = 0, 1, 2, 3
CI_TYPES = ("normal", "basic")
WORKERS_ENV = "SMOOTHPPB_WORKERS"
MAX_EMPTY_SAMPLES = 10_000


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value is None:
        return 1
    try:
        workers = int(value)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {value!r}") from None
    return max(workers, 1)


def build_population(cfg: StudyConfig) -> FinitePopulation:
    """Master population from the config, cut to the scenario size."""
    spec = cfg.population
    if spec.csv is not None:
        master = read_csv(spec.csv)
    else:
        seed = spec.seed if spec.seed is not None else rngmod.stream(cfg.seed, PHASE_POP)
        master = GENERATORS[spec.generator](spec.size, **spec.params, rng=seed)
    if cfg.N > master.N:
        raise ValueError(f"scenario size N={cfg.N} exceeds the population size {master.N}")
    return take_prefix(master, cfg.N)


def build_design(name: str, pop: FinitePopulation, n: int) -> DesignSpec:
    """Design over the population; PPS-type designs use ``pi`` proportional to ``x``."""
    if name == "srswor":
        return SRSWOR(n, pop.N)
    if pop.x is None:
        raise ValueError(f"design {name!r} needs a population with a size variable")
    pi = pps_inclusion_probs(pop.x, n)
    if name == "poisson":
        return Poisson(pi)
    if name == "pps":
        return RandSysPPS(pi, n)
    raise ValueError(f"unknown design {name!r}")


def draw_sample(pop: FinitePopulation, design: DesignSpec, rng: np.random.Generator) -> tuple[WeightedSample, int]:
    """One nonempty sample and the number of empty draws discarded before it."""
    pi = design.inclusion_probs()
    for empty in range(MAX_EMPTY_SAMPLES):
        idx = draw(design, pop.N, rng)
        if len(idx):
            return WeightedSample(pop.y[idx], pi[idx]), empty
    raise RuntimeError("samples keep coming out empty")


def approximate_true_mse(pop: FinitePopulation, design: DesignSpec, p: float, S: int, rng) -> float:
    """Monte Carlo design MSE of the quantile estimator around the population quantile."""
    if S < 1:
        raise ValueError(f"S must be at least 1, got {S}")
    rng = rngmod.as_generator(rng)
    xi = finite_population_quantile(pop.y, p)
    total = 0.0
    for _ in range(S):
        sample, _ = draw_sample(pop, design, rng)
        total += (design_quantile(sample, p) - xi) ** 2
    return total / S


def _mse_key(pop: FinitePopulation, cfg: StudyConfig, design: DesignSpec) -> str:
    h = hashlib.sha256()
    h.update(pop.y.tobytes())
    h.update(np.asarray(design.inclusion_probs(), dtype=float).tobytes())
    h.update(json.dumps([cfg.design, cfg.p, cfg.S_mse, cfg.seed]).encode())
    return h.hexdigest()


def cached_true_mse(pop, design, cfg: StudyConfig, cache_dir: Optional[Path]) -> float:
    """True MSE, read from or stored in ``true_mse_cache.json`` under ``cache_dir``."""
    key = _mse_key(pop, cfg, design)
    path = None if cache_dir is None else Path(cache_dir) / "true_mse_cache.json"
    cache = {}
    if path is not None and path.exists():
        cache = json.loads(path.read_text())
        if key in cache:
            return float(cache[key])
    value = approximate_true_mse(pop, design, cfg.p, cfg.S_mse, rngmod.stream(cfg.seed, PHASE_MSE))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        cache[key] = value
        path.write_text(json.dumps(cache, indent=1, sort_keys=True) + "\n")
    return value


@dataclass
class MethodOutcome:
    label: str
    v_hat: float
    h: float
    constant: float
    intervals: dict
    empty_redraws: int
    risk_curve: Optional[np.ndarray] = None
    mse_curve: Optional[np.ndarray] = None


@dataclass
class ReplicateResult:
    index: int
    n_sample: int
    theta_hat: float
    empty_samples: int
    outcomes: list


@dataclass(frozen=True)
class _Context:
    cfg: StudyConfig
    pop: FinitePopulation
    design: DesignSpec


def evaluate_method(
    method: MethodSpec,
    sample: WeightedSample,
    design: DesignSpec,
    p: float,
    n: float,
    B: int,
    alpha: float,
    boot_root: int,
) -> MethodOutcome:
    """Run one method on one sample: MSE estimate, bandwidth and both intervals.

    ``n`` is the (expected) sample size used to turn constants into
    bandwidths, ``h = C n^(-1/5)``.
    """
    est = Quantile(p)
    theta_hat = design_quantile(sample, p)
    risk = mse_curve = None
    if method.type == "UNSMTHD":
        run, h, constant = run_unsmoothed(sample, design, est, B, boot_root), 0.0, 0.0
    elif method.type == "FIXED":
        h = method.h if method.h is not None else method.C * n ** (-0.2)
        constant = h * n**0.2 if method.C is None else method.C
        run = run_algorithm1(sample, design, est, h, GAUSSIAN, B, boot_root)
    elif method.type == "PLUG-IN":
        h = plugin_bandwidth(sample, p)
        constant = h * sample.n**0.2
        run = run_algorithm1(sample, design, est, h, GAUSSIAN, B, boot_root)
    elif method.type == "BOOT":
        grid = make_grid(method.grid["c_lo"], method.grid["c_hi"], int(method.grid["m"]), n)
        reuse = Reuse(method.reuse, method.reuse)
        res = double_bootstrap_select(sample, design, est, grid, GAUSSIAN, B, method.D, boot_root, reuse)
        run, h, constant = res.run, res.h_hat, res.constant
        risk, mse_curve = res.risk_curve, res.mse_curve
    else:
        raise ValueError(f"unknown method type {method.type!r}")
    v = mse_estimate(run)
    intervals = {
        "normal": normal_ci(theta_hat, v, alpha),
        "basic": basic_ci(theta_hat, run, alpha),
    }
    return MethodOutcome(method.label, v, float(h), float(constant), intervals, run.empty_redraws, risk, mse_curve)


def run_replicate(ctx: _Context, r: int) -> ReplicateResult:
    cfg = ctx.cfg
    sample, empty = draw_sample(ctx.pop, ctx.design, rngmod.stream(cfg.seed, PHASE_SAMPLE, r))
    boot_root = rngmod.root_seed(rngmod.stream(cfg.seed, PHASE_BOOT, r))
    outcomes = []
    for method in cfg.methods:
        try:
            outcomes.append(evaluate_method(method, sample, ctx.design, cfg.p, cfg.n, cfg.B, cfg.alpha, boot_root))
        except Exception as exc:
            raise RuntimeError(f"replicate {r}, method {method.label}: {exc}") from exc
    return ReplicateResult(r, sample.n, design_quantile(sample, cfg.p), empty, outcomes)


def relative_bias_pct(v_hats, mse: float) -> float:
    return 100.0 * (float(np.mean(v_hats)) - mse) / mse


def rrmse_pct(v_hats, mse: float) -> float:
    v = np.asarray(v_hats, dtype=float)
    return 100.0 * math.sqrt(float(np.mean((v - mse) ** 2))) / mse


def coverage_errors(xi: float, lower, upper) -> tuple[float, float, float]:
    """Lower, upper and two-tail error rates in percent."""
    lower, upper = np.asarray(lower), np.asarray(upper)
    L = 100.0 * float(np.mean(xi < lower))
    U = 100.0 * float(np.mean(xi > upper))
    return L, U, L + U


def acceptance_band(rate: float, R: int) -> tuple[float, float]:
    """Binomial 95% band for an error rate ``rate`` over ``R`` replicates, in
    percent, rounded to one decimal and clipped at zero."""
    half = 1.96 * math.sqrt(rate * (1 - rate) / R)
    return max(round(100 * (rate - half), 1), 0.0), round(100 * (rate + half), 1)


@dataclass
class MethodMetrics:
    label: str
    type: str
    mse_true: float
    mean_v: float
    bias_pct: float
    rrmse_pct: float
    coverage: dict  # ci type -> (L_pct, U_pct, two_tail_pct)
    mean_ci_length: dict
    selected_constants: Optional[dict]
    empty_redraws: int


@dataclass
class StudyReport:
    config: StudyConfig
    N: int
    xi: float
    mse_true: float
    methods: list
    replicates: list
    bands: dict
    risk_curves: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)


def _summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    q25, med, q75 = np.quantile(v, [0.25, 0.5, 0.75])
    return {"mean": float(v.mean()), "q25": float(q25), "median": float(med), "q75": float(q75),
            "min": float(v.min()), "max": float(v.max())}


def aggregate(cfg: StudyConfig, xi: float, mse: float, results: list) -> tuple[list, dict]:
    metrics, curves = [], {}
    for j, method in enumerate(cfg.methods):
        outs = [res.outcomes[j] for res in results]
        v = np.array([o.v_hat for o in outs])
        coverage, lengths = {}, {}
        for ci in CI_TYPES:
            lo = np.array([o.intervals[ci][0] for o in outs])
            hi = np.array([o.intervals[ci][1] for o in outs])
            coverage[ci] = coverage_errors(xi, lo, hi)
            lengths[ci] = float(np.mean(hi - lo))
        selected = _summary([o.constant for o in outs]) if method.type in ("BOOT", "PLUG-IN") else None
        metrics.append(MethodMetrics(
            label=method.label,
            type=method.type,
            mse_true=mse,
            mean_v=float(v.mean()),
            bias_pct=relative_bias_pct(v, mse),
            rrmse_pct=rrmse_pct(v, mse),
            coverage=coverage,
            mean_ci_length=lengths,
            selected_constants=selected,
            empty_redraws=int(sum(o.empty_redraws for o in outs)),
        ))
        if method.type == "BOOT":
            grid = make_grid(method.grid["c_lo"], method.grid["c_hi"], int(method.grid["m"]), cfg.n)
            curves[method.label] = {
                "constants": grid.constants,
                "mean_risk": np.mean([o.risk_curve for o in outs], axis=0),
                "mean_v_star": np.mean([o.mse_curve for o in outs], axis=0),
            }
    return metrics, curves


def run_study(cfg: StudyConfig, workers: Optional[int] = None, cache_dir: Optional[Path] = None) -> StudyReport:
    """Run every configured method on ``R`` samples and aggregate the metrics."""
    workers = default_workers() if workers is None else max(int(workers), 1)
    timing = {}
    t0 = time.perf_counter()
    pop = build_population(cfg)
    design = build_design(cfg.design, pop, cfg.n)
    timing["population"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    xi = finite_population_quantile(pop.y, cfg.p)
    mse = cached_true_mse(pop, design, cfg, cache_dir)
    timing["true_mse"] = time.perf_counter() - t0
    if not mse > 0:
        raise ValueError("true MSE is zero; relative metrics are undefined")

    t0 = time.perf_counter()
    ctx = _Context(cfg, pop, design)
    job = partial(run_replicate, ctx)
    if workers == 1:
        results = [job(r) for r in range(cfg.R)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(cfg.R), chunksize=max(1, cfg.R // (4 * workers))))
    timing["replicates"] = time.perf_counter() - t0

    metrics, curves = aggregate(cfg, xi, mse, results)
    bands = {"one_tail": acceptance_band(0.025, cfg.R), "two_tail": acceptance_band(0.05, cfg.R)}
    return StudyReport(cfg, pop.N, xi, mse, metrics, results, bands, curves, timing)
