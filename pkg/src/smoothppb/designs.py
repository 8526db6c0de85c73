"""Single-stage sampling designs and their first-order inclusion probabilities.

Four designs are supported:

* :class:`SRSWOR` -- simple random sampling without replacement,
* :class:`Poisson` -- independent Bernoulli inclusion with unit-specific
  probabilities,
* :class:`RandSysPPS` -- randomized systematic sampling with probabilities
  proportional to size,
* :class:`StratifiedSRSWOR` -- independent SRSWOR within strata.

Units of a universe are labelled ``0 .. N-1``. For the stratified design the
universe is laid out stratum by stratum, in the order of ``strata``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class SRSWOR:
    n: int
    N: int

    def __post_init__(self):
        if not 0 < self.n <= self.N:
            raise ValueError(f"SRSWOR requires 0 < n <= N, got n={self.n}, N={self.N}")

    @property
    def universe_size(self) -> int:
        return self.N

    def inclusion_probs(self) -> np.ndarray:
        return np.full(self.N, self.n / self.N)


@dataclass(frozen=True, eq=False)
class Poisson:
    pi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        _check_probs(pi)
        pi.flags.writeable = False
        object.__setattr__(self, "pi", pi)

    @property
    def universe_size(self) -> int:
        return len(self.pi)

    @property
    def n(self) -> float:
        """Expected sample size."""
        return float(self.pi.sum())

    def inclusion_probs(self) -> np.ndarray:
        return self.pi


@dataclass(frozen=True, eq=False)
class RandSysPPS:
    pi: np.ndarray
    n: int

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        _check_probs(pi)
        if abs(pi.sum() - self.n) > 1e-9 * max(1, self.n):
            raise ValueError(f"inclusion probabilities sum to {pi.sum()!r}, expected n={self.n}")
        pi.flags.writeable = False
        object.__setattr__(self, "pi", pi)

    @property
    def universe_size(self) -> int:
        return len(self.pi)

    def inclusion_probs(self) -> np.ndarray:
        return self.pi


@dataclass(frozen=True)
class StratifiedSRSWOR:
    """``strata`` is a sequence of ``(N_l, n_l)`` pairs."""

    strata: tuple

    def __post_init__(self):
        strata = tuple((int(N_l), int(n_l)) for N_l, n_l in self.strata)
        if not strata:
            raise ValueError("at least one stratum is required")
        for N_l, n_l in strata:
            if not 0 < n_l <= N_l:
                raise ValueError(f"stratum requires 0 < n_l <= N_l, got ({N_l}, {n_l})")
        object.__setattr__(self, "strata", strata)

    @property
    def universe_size(self) -> int:
        return sum(N_l for N_l, _ in self.strata)

    @property
    def n(self) -> int:
        return sum(n_l for _, n_l in self.strata)

    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([N_l for N_l, _ in self.strata])])

    def inclusion_probs(self) -> np.ndarray:
        return np.concatenate([np.full(N_l, n_l / N_l) for N_l, n_l in self.strata])


DesignSpec = Union[SRSWOR, Poisson, RandSysPPS, StratifiedSRSWOR]


def _check_probs(pi: np.ndarray) -> None:
    if pi.ndim != 1 or len(pi) == 0:
        raise ValueError("inclusion probabilities must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(pi)) or np.any(pi <= 0) or np.any(pi > 1):
        raise ValueError("inclusion probabilities must lie in (0, 1]")


def pps_inclusion_probs(x, n: float) -> np.ndarray:
    """Inclusion probabilities proportional to size, capped at one.

    Returns ``pi_i = min(1, z * p_i)`` with ``p_i = x_i / sum(x)`` where the
    scale ``z`` solves ``sum_i min(z p_i, 1) = n``. When no unit would exceed
    one this is simply ``n * p_i``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("size values must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("size values must be positive and finite")
    N = len(x)
    if not 0 < n <= N:
        raise ValueError(f"target size must satisfy 0 < n <= {N}, got {n}")
    p = x / x.sum()
    pi = n * p
    if np.all(pi <= 1):
        return pi
    if n == N:
        return np.ones(N)

    def total(z):
        return np.minimum(z * p, 1.0).sum()

    # total() is piecewise linear and nondecreasing; total(1/min p) == N >= n
    lo, hi = float(n), 1.0 / p.min()
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if total(mid) < n:
            lo = mid
        else:
            hi = mid
    # Solve exactly on the identified capped set.
    capped = hi * p >= 1.0
    for _ in range(N):
        z = (n - capped.sum()) / p[~capped].sum()
        grown = capped | (z * p >= 1.0)
        if np.array_equal(grown, capped):
            break
        capped = grown
    out = np.where(capped, 1.0, z * p)
    return np.minimum(out, 1.0)


def srswor_indices(N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` distinct indices from ``range(N)``, uniformly over subsets."""
    return rng.choice(N, size=n, replace=False, shuffle=False)


def systematic_indices(pi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Randomized systematic selection with probabilities ``pi``.

    Units are put in uniformly random order, the running totals ``T_i`` are
    formed and unit ``i`` is selected when some integer ``k`` satisfies
    ``T_{i-1} <= u + k < T_i`` with ``u ~ U(0, 1)``. Returned indices are
    sorted.
    """
    N = len(pi)
    order = rng.permutation(N)
    totals = np.cumsum(pi[order])
    grand = totals[-1]
    target = round(grand)
    if abs(grand - target) <= 1e-9 * max(1.0, grand):
        totals *= target / grand
        totals[-1] = target
    u = rng.random()
    upper = np.ceil(totals - u)
    lower = np.concatenate([[0.0], upper[:-1]])
    # ceil(0 - u) == 0 for u in [0, 1)
    hits = upper > lower
    return np.sort(order[hits])


def draw(design: DesignSpec, universe_size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one sample, returned as a sorted array of unit indices."""
    if universe_size != design.universe_size:
        raise ValueError(
            f"universe size {universe_size} inconsistent with design of size {design.universe_size}"
        )
    if isinstance(design, SRSWOR):
        return np.sort(srswor_indices(design.N, design.n, rng))
    if isinstance(design, Poisson):
        return np.flatnonzero(rng.random(universe_size) < design.pi)
    if isinstance(design, RandSysPPS):
        return systematic_indices(design.pi, rng)
    if isinstance(design, StratifiedSRSWOR):
        offsets = design.offsets()
        parts = [
            offsets[l] + np.sort(srswor_indices(N_l, n_l, rng))
            for l, (N_l, n_l) in enumerate(design.strata)
        ]
        return np.concatenate(parts)
    raise TypeError(f"unsupported design {design!r}")
