"""Superpopulation generators for simulation studies.

Each generator draws a master population of ``N_total`` units; study
populations are nested prefixes of it (:func:`take_prefix`).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

MASTER_SIZE = 7142


@dataclass(frozen=True, eq=False)
class FinitePopulation:
    y: np.ndarray
    x: Optional[np.ndarray] = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        if len(y) == 0:
            raise ValueError("a population must contain at least one unit")
        object.__setattr__(self, "y", y)
        if self.x is not None:
            x = np.asarray(self.x, dtype=float).ravel()
            if x.shape != y.shape:
                raise ValueError("size variable must align with study values")
            if np.any(x <= 0):
                raise ValueError("size values must be strictly positive")
            object.__setattr__(self, "x", x)

    @property
    def N(self) -> int:
        return len(self.y)


def gen_sym(N_total: int, gamma: float = 0.6, nu: float = 100, sigma: float = 12, rng=None) -> FinitePopulation:
    """``Y = gamma X + sigma eps`` with ``X ~ chi2(nu)``, ``eps ~ N(0, 1)``."""
    rng = np.random.default_rng(rng)
    x = rng.chisquare(nu, N_total)
    eps = rng.standard_normal(N_total)
    return FinitePopulation(gamma * x + sigma * eps, x)


def gen_asym(
    N_total: int,
    beta: float = 0.5,
    mu_x: float = 3.0,
    sigma2_x: float = 1.0,
    sigma2_eps: float = 1.139,
    rng=None,
) -> FinitePopulation:
    """``Y = X^beta eps`` with lognormal ``X`` and ``eps``.

    ``log Y ~ N(beta mu_x, beta^2 sigma2_x + sigma2_eps)``.
    """
    rng = np.random.default_rng(rng)
    log_x = mu_x + math.sqrt(sigma2_x) * rng.standard_normal(N_total)
    log_eps = math.sqrt(sigma2_eps) * rng.standard_normal(N_total)
    return FinitePopulation(np.exp(beta * log_x + log_eps), np.exp(log_x))


def gen_normal(N_total: int, rng=None) -> FinitePopulation:
    rng = np.random.default_rng(rng)
    return FinitePopulation(rng.standard_normal(N_total))


def gen_lognormal(N_total: int, rng=None) -> FinitePopulation:
    rng = np.random.default_rng(rng)
    return FinitePopulation(np.exp(rng.standard_normal(N_total)))


GENERATORS = {
    "sym": gen_sym,
    "asym": gen_asym,
    "normal": gen_normal,
    "lognormal": gen_lognormal,
}


def take_prefix(pop: FinitePopulation, N: int) -> FinitePopulation:
    """The first ``N`` units in generation order."""
    if not 1 <= N <= pop.N:
        raise ValueError(f"prefix size must lie in [1, {pop.N}], got {N}")
    return FinitePopulation(pop.y[:N], None if pop.x is None else pop.x[:N])


def scenario_size(n: int, f: float) -> int:
    """Population size ``floor(n / f)`` for sample size ``n`` and fraction ``f``."""
    # guard against n / f landing just below an integer
    return int(math.floor(n / f + 1e-9))


def write_csv(pop: FinitePopulation, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "y"] if pop.x is None else ["index", "y", "x"])
        for i in range(pop.N):
            row = [i, repr(float(pop.y[i]))]
            if pop.x is not None:
                row.append(repr(float(pop.x[i])))
            writer.writerow(row)


def read_csv(path) -> FinitePopulation:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "y" not in reader.fieldnames:
            raise ValueError(f"{path}: expected a header with columns index,y[,x]")
        rows = list(reader)
    y = [float(r["y"]) for r in rows]
    x = [float(r["x"]) for r in rows] if "x" in reader.fieldnames else None
    return FinitePopulation(y, x)
