"""Finite population quantiles and their design-based estimators.

The population quantile uses the order-statistic rule

    xi_p = y_(k)                    if F(y_(k-1)) < p < F(y_(k))
    xi_p = (y_(k) + y_(k+1)) / 2    if F(y_(k)) = p

with ``F(y_(0)) = 0``. Repeated values are merged into a single mass point
before the rule is applied, and ``F(y_(k)) = p`` is tested with a relative
tolerance of ``TIE_RTOL``. The design-based estimator applies the same rule
to the Hajek estimate of the distribution function.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightedSample:
    """Sampled study values with their inclusion probabilities.

    ``stratum`` holds an optional integer stratum label per unit and
    ``strata`` maps each label to ``(N_l, n_l)``.
    """

    y: np.ndarray
    pi: np.ndarray
    stratum: Optional[np.ndarray] = None
    strata: Optional[Mapping[int, tuple]] = field(default=None)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        pi = np.broadcast_to(np.asarray(self.pi, dtype=float), y.shape).copy()
        if len(y) == 0:
            raise ValueError("a sample must contain at least one unit")
        if not np.all(np.isfinite(y)):
            raise ValueError("study values must be finite")
        if not np.all(np.isfinite(pi)) or np.any(pi <= 0) or np.any(pi > 1):
            raise ValueError("inclusion probabilities must lie in (0, 1]")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "pi", pi)
        if self.stratum is not None:
            stratum = np.asarray(self.stratum).astype(int).ravel()
            if stratum.shape != y.shape:
                raise ValueError("one stratum label per unit is required")
            if self.strata is None:
                raise ValueError("stratum labels given without stratum sizes")
            strata = {int(k): (int(v[0]), int(v[1])) for k, v in self.strata.items()}
            labels, counts = np.unique(stratum, return_counts=True)
            for label, count in zip(labels, counts):
                if int(label) not in strata:
                    raise ValueError(f"no (N_l, n_l) given for stratum {label}")
                if strata[int(label)][1] != count:
                    raise ValueError(
                        f"stratum {label} has {count} units but n_l={strata[int(label)][1]}"
                    )
            object.__setattr__(self, "stratum", stratum)
            object.__setattr__(self, "strata", strata)

    @property
    def n(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "WeightedSample":
        stratum = None if self.stratum is None else self.stratum[idx]
        return WeightedSample(self.y[idx], self.pi[idx], stratum, self.strata)


def _check_level(p: float) -> None:
    if not 0 < p < 1:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")


def _invert(support: np.ndarray, cdf: np.ndarray, p: float) -> float:
    """Apply the order-statistic rule to a merged, sorted support."""
    k = int(np.searchsorted(cdf, p - TIE_RTOL * p, side="left"))
    k = min(k, len(support) - 1)
    if abs(cdf[k] - p) <= TIE_RTOL * p and k + 1 < len(support):
        return 0.5 * (support[k] + support[k + 1])
    return float(support[k])


def _weighted_quantile(y: np.ndarray, w: np.ndarray, p: float) -> float:
    order = np.argsort(y, kind="stable")
    ys, ws = y[order], w[order]
    support, start = np.unique(ys, return_index=True)
    mass = np.add.reduceat(ws, start)
    cdf = np.cumsum(mass) / ws.sum()
    return _invert(support, cdf, p)


def finite_population_quantile(values, p: float) -> float:
    """Population quantile of level ``p`` by the order-statistic rule."""
    _check_level(p)
    y = np.asarray(values, dtype=float).ravel()
    if len(y) == 0:
        raise ValueError("cannot take the quantile of an empty population")
    return _weighted_quantile(y, np.ones_like(y), p)


def hajek_cdf(sample: WeightedSample, t) -> float:
    """Hajek estimate ``sum(1/pi * 1(y <= t)) / sum(1/pi)``."""
    w = 1.0 / sample.pi
    t_arr = np.asarray(t, dtype=float)
    if t_arr.ndim == 0:
        return float(w[sample.y <= t_arr].sum() / w.sum())
    return (w[None, :] * (sample.y[None, :] <= t_arr[:, None])).sum(axis=1) / w.sum()


def design_quantile(sample: WeightedSample, p: float) -> float:
    """Quantile estimator obtained by inverting :func:`hajek_cdf`."""
    _check_level(p)
    return _weighted_quantile(sample.y, 1.0 / sample.pi, p)


def stratified_smoothed_cdf(values_by_stratum, strata, t) -> float:
    """Stratum-expanded CDF ``N^-1 sum_l sum_i (N_l / n_l) 1(y_il <= t)``.

    ``values_by_stratum`` maps stratum label to the values observed in that
    stratum; ``strata`` maps the same labels to ``(N_l, n_l)``.
    """
    total = 0.0
    N = 0
    for label, (N_l, n_l) in strata.items():
        N += N_l
        if label not in values_by_stratum:
            continue
        y = np.asarray(values_by_stratum[label], dtype=float)
        total += (N_l / n_l) * np.count_nonzero(y <= t)
    missing = set(values_by_stratum) - set(strata)
    if missing:
        raise ValueError(f"missing (N_l, n_l) for strata {sorted(missing)}")
    return total / N


# Row-batched versions used by the bootstrap engine. Each row of ``values``
# is an independent population (or sample) sharing the same weights.


def _single_row(y: np.ndarray, weights, p: float) -> float:
    # same rule as the batched path, without building merged arrays
    K = len(y)
    if weights is None:
        ys = np.sort(y)
        cdf = np.arange(1, K + 1) / K
    else:
        order = np.argsort(y, kind="stable")
        ys = y[order]
        ws = np.asarray(weights, dtype=float)[order]
        cdf = np.cumsum(ws) / ws.sum()
    tol = TIE_RTOL * p
    k = min(int(np.searchsorted(cdf, p - tol, side="left")), K - 1)
    end = int(np.searchsorted(ys, ys[k], side="right")) - 1
    if abs(cdf[end] - p) <= tol and end + 1 < K:
        return 0.5 * (ys[k] + ys[end + 1])
    return float(ys[k])


def quantile_rows(values: np.ndarray, p: float, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Order-statistic quantile of every row of ``values``.

    Without weights each row is treated as a finite population; with shared
    ``weights`` (inverse inclusion probabilities) the Hajek CDF of each row is
    inverted.
    """
    _check_level(p)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    m, K = values.shape
    if m == 1:
        return np.array([_single_row(values[0], weights, p)])
    r = np.arange(m)
    tol = TIE_RTOL * p
    if weights is None:
        ys = np.sort(values, axis=1)
        cdf = np.broadcast_to(np.arange(1, K + 1) / K, (m, K))
    else:
        order = np.argsort(values, axis=1, kind="stable")
        ys = values[r[:, None], order]
        ws = np.asarray(weights, dtype=float)[order]
        cdf = np.cumsum(ws, axis=1) / ws.sum(axis=1, keepdims=True)
    # first position reaching p; its run of equal values ends at ``end``
    reached = cdf >= p - tol
    k = np.where(reached.any(axis=1), np.argmax(reached, axis=1), K - 1)
    val = ys[r, k]
    end = np.count_nonzero(ys <= val[:, None], axis=1) - 1
    nxt = ys[r, np.minimum(end + 1, K - 1)]
    tie = (np.abs(cdf[r, end] - p) <= tol) & (end + 1 < K)
    return np.where(tie, 0.5 * (val + nxt), val)
