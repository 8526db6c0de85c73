"""Independent brute-force references used by several test modules."""
from fractions import Fraction
from itertools import combinations

import numpy as np


def rule_quantile(values, weights, p):
    """Order-statistic quantile in exact rational arithmetic.

    ``weights`` are inverse inclusion probabilities given as Fractions (or
    ints); ``p`` is read as the decimal it was written as.
    """
    p = Fraction(str(p)) if isinstance(p, float) else Fraction(p)
    pairs = sorted(zip(values, weights))
    support = sorted(set(v for v, _ in pairs))
    total = sum(Fraction(w) for _, w in pairs)
    cum = Fraction(0)
    cdf = []
    for s in support:
        cum += sum(Fraction(w) for v, w in pairs if v == s)
        cdf.append(cum / total)
    prev = Fraction(0)
    for k, s in enumerate(support):
        if cdf[k] == p:
            return (s + support[k + 1]) / 2
        if prev < p < cdf[k]:
            return s
        prev = cdf[k]
    raise AssertionError("unreachable for p in (0, 1)")


def srswor_bootstrap_mse_exact(y, N, p):
    """Exact expectation of (theta_hat* - theta*)^2 for the unsmoothed SRSWOR
    pseudo-population bootstrap, by enumerating every completion and every
    bootstrap sample."""
    n = len(y)
    k, rem = divmod(N, n)
    total = Fraction(0)
    completions = list(combinations(range(n), rem))
    for extra in completions:
        pop = [v for v in y for _ in range(k)] + [y[i] for i in extra]
        theta = Fraction(rule_quantile(pop, [1] * N, p))
        samples = list(combinations(range(N), n))
        acc = Fraction(0)
        for s in samples:
            est = Fraction(rule_quantile([pop[i] for i in s], [1] * n, p))
            acc += (est - theta) ** 2
        total += acc / len(samples)
    return total / len(completions)


def srswor_design_mse_exact(y, n, p):
    """Exact design MSE of the sample quantile under SRSWOR."""
    N = len(y)
    xi = Fraction(rule_quantile(list(y), [1] * N, p))
    samples = list(combinations(range(N), n))
    acc = Fraction(0)
    for s in samples:
        acc += (Fraction(rule_quantile([y[i] for i in s], [1] * n, p)) - xi) ** 2
    return acc / len(samples)


def as_fractions(arr):
    return [Fraction(float(v)) for v in np.asarray(arr, dtype=float)]
