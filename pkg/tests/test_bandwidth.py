import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from smoothppb.bandwidth import (
    BandwidthGrid,
    argmin_smallest,
    double_bootstrap_select,
    lognormal_normal_constant,
    lognormal_terms,
    make_grid,
    normal_constant,
    normal_terms,
    optimal_constant,
    plugin_bandwidth,
    risk_curve,
)
from smoothppb.bootstrap import Quantile, Reuse, mse_estimate, run_grid
from smoothppb.designs import SRSWOR, Poisson, StratifiedSRSWOR
from smoothppb.kernels import gaussian_kernel
from smoothppb.quantiles import WeightedSample

K = gaussian_kernel()
Z75 = 0.6744897501960817


def test_normal_constants_standard():
    assert normal_constant(0.0, 1.0) == pytest.approx(0.9330, abs=5e-4)
    assert round(normal_constant(Z75, 1.0), 2) == 0.98
    for z in (0.0, Z75):
        assert round(optimal_constant(*normal_terms(z, 1.0)), 2) == round(normal_constant(z, 1.0), 2)


def test_normal_constant_sym_population():
    s = math.sqrt(216)
    assert normal_constant(0.0, s) == pytest.approx(13.71, abs=0.02)
    assert normal_constant(Z75, s) == pytest.approx(14.35, abs=0.02)


def test_normal_constant_closed_form():
    for z in (0.0, 0.5, 1.3):
        phi = math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
        assert normal_constant(z, 3.0) == pytest.approx(3.0 * (2 * math.sqrt(math.pi) * phi) ** -0.2, rel=1e-14)


def test_lognormal_constants():
    assert round(lognormal_normal_constant(0.5), 2) == 2.03
    assert round(lognormal_normal_constant(0.75), 2) == 2.02
    assert optimal_constant(*lognormal_terms(0.75)) == pytest.approx(2.24, abs=0.01)
    with pytest.raises(ValueError):
        optimal_constant(*lognormal_terms(0.5))


@pytest.mark.parametrize("p,meanlog,sdlog", [(0.75, 0.0, 1.0), (0.5, 1.5, math.sqrt(1.389)), (0.3, -0.2, 0.6)])
def test_lognormal_curvature_finite_difference(p, meanlog, sdlog):
    dist = stats.lognorm(s=sdlog, scale=math.exp(meanlog))
    y = dist.ppf(p)
    e = 1e-3 * y
    f0, fp, fm = dist.pdf(y), dist.pdf(y + e), dist.pdf(y - e)
    d1 = (fp - fm) / (2 * e)
    d2 = (fp - 2 * f0 + fm) / e**2
    f, d = lognormal_terms(p, meanlog, sdlog)
    assert f == pytest.approx(f0, rel=1e-12)
    assert d == pytest.approx(d2 - d1**2 / f0, rel=1e-4, abs=1e-9)


@pytest.mark.parametrize("z", [0.0, Z75, 1.5])
@pytest.mark.parametrize("sigma", [1.0, 14.7])
def test_gaussian_consistency_identity(z, sigma):
    assert optimal_constant(*normal_terms(z, sigma)) == pytest.approx(normal_constant(z, sigma), rel=1e-12)


def test_optimal_constant_errors():
    with pytest.raises(ValueError):
        optimal_constant(0.3, 0.0)
    with pytest.raises(ValueError):
        optimal_constant(0.0, -1.0)
    with pytest.raises(ValueError):
        normal_constant(0.0, 0.0)


def _standardized(n, rng):
    v = rng.standard_normal(n // 2)
    y = np.concatenate([v, -v])  # symmetric so mean and median are both 0
    return y / y.std(ddof=1)


def test_plugin_examples():
    rng = np.random.default_rng(0)
    s = WeightedSample(_standardized(32, rng), 32 / 320)
    assert plugin_bandwidth(s, 0.5) == pytest.approx(0.4665, abs=1e-4)
    s100 = WeightedSample(_standardized(100, rng), 0.1)
    assert plugin_bandwidth(s100, 0.5) == pytest.approx(0.9330 * 100**-0.2, abs=1e-4)


def test_plugin_affine():
    rng = np.random.default_rng(1)
    y = rng.gamma(2.0, size=40)
    a = plugin_bandwidth(WeightedSample(y, 0.2), 0.75)
    b = plugin_bandwidth(WeightedSample(2 * y + 5, 0.2), 0.75)
    assert b == pytest.approx(2 * a, rel=1e-12)


def test_plugin_degenerate():
    with pytest.raises(ValueError):
        plugin_bandwidth(WeightedSample([3.0, 3.0, 3.0], 0.5), 0.5)
    with pytest.raises(ValueError):
        plugin_bandwidth(WeightedSample([3.0], 0.5), 0.5)


def test_make_grid_examples():
    g = make_grid(1, 3, 3, 32)
    assert g.constants.tolist() == [1, 2, 3]
    np.testing.assert_allclose(g.bandwidths, [0.5, 1.0, 1.5], rtol=1e-15)
    one = make_grid(4.0, 4.0, 1, 50)
    assert one.m == 1 and one.constants[0] == 4.0
    big = make_grid(10, 20, 50, 100)
    assert big.m == 50
    np.testing.assert_allclose(np.diff(big.constants), 10 / 49, rtol=1e-12)
    assert big.constants[0] == 10 and big.constants[-1] == 20


def test_grid_validation():
    with pytest.raises(ValueError):
        make_grid(1, 3, 0, 10)
    with pytest.raises(ValueError):
        BandwidthGrid(np.array([2.0, 1.0]), 10)
    with pytest.raises(ValueError):
        BandwidthGrid(np.array([0.0, 1.0]), 10)


def test_injected_risk_selects_exact_match():
    rng = np.random.default_rng(2)
    first = np.array([1.0, 2.0, 3.0, 4.0])
    second = first + rng.normal(size=(30, 4))
    second[:, 2] = first[2]
    curve = risk_curve(first, second)
    assert curve[2] == 0.0
    assert argmin_smallest(curve) == 2


def test_flat_risk_picks_smallest():
    assert argmin_smallest(np.full(7, 0.25)) == 0
    assert argmin_smallest(np.array([3.0, 1.0, 1.0, 2.0])) == 1


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 8), st.integers(0, 2**31))
def test_risk_curve_nonnegative(m, B, seed):
    rng = np.random.default_rng(seed)
    curve = risk_curve(rng.exponential(size=m), rng.exponential(size=(B, m)))
    assert curve.shape == (m,) and np.all(curve >= 0)


def _sample(n=20, N=60, seed=3):
    y = np.random.default_rng(seed).normal(50, 10, size=n)
    return WeightedSample(y, n / N), SRSWOR(n, N)


def test_select_single_point_grid():
    s, design = _sample()
    grid = make_grid(8.0, 8.0, 1, s.n)
    res = double_bootstrap_select(s, design, Quantile(0.5), grid, K, B=10, D=4, rng=4)
    assert res.h_hat == grid.bandwidths[0] and res.index == 0
    assert res.risk_curve.shape == (1,)
    assert res.mse_at_h_hat == mse_estimate(res.run)


def test_select_result_consistency():
    s, design = _sample()
    grid = make_grid(2.0, 20.0, 4, s.n)
    res = double_bootstrap_select(s, design, Quantile(0.5), grid, K, B=15, D=5, rng=5)
    assert res.h_hat in grid.bandwidths
    assert res.risk_curve[res.index] == res.risk_curve.min()
    assert np.all(res.risk_curve >= 0)
    assert res.mse_at_h_hat == res.mse_curve[res.index]


def test_select_first_level_matches_grid_run():
    s, design = _sample()
    grid = make_grid(2.0, 20.0, 4, s.n)
    res = double_bootstrap_select(s, design, Quantile(0.5), grid, K, B=12, D=3, rng=6)
    runs = run_grid(s, design, Quantile(0.5), grid.bandwidths, K, B=12, rng=6)
    np.testing.assert_array_equal(res.mse_curve, [mse_estimate(r) for r in runs])


def test_select_determinism():
    s, design = _sample()
    grid = make_grid(2.0, 20.0, 3, s.n)
    a = double_bootstrap_select(s, design, Quantile(0.5), grid, K, B=8, D=3, rng=7)
    b = double_bootstrap_select(s, design, Quantile(0.5), grid, K, B=8, D=3, rng=7)
    assert np.array_equal(a.risk_curve, b.risk_curve) and a.h_hat == b.h_hat


@pytest.mark.parametrize("reuse", [Reuse(False, False), Reuse(True, False), Reuse(False, True)])
def test_select_runs_without_reuse(reuse):
    s, design = _sample(n=12, N=30)
    grid = make_grid(2.0, 20.0, 3, s.n)
    res = double_bootstrap_select(s, design, Quantile(0.5), grid, K, B=6, D=3, rng=8, reuse=reuse)
    assert res.risk_curve.shape == (3,) and np.all(np.isfinite(res.risk_curve))


def test_reuse_equivalence_in_expectation():
    s, design = _sample(n=15, N=45, seed=9)
    h = 4.0
    shared, indep = [], []
    for r in range(200):
        shared.append(mse_estimate(run_grid(s, design, Quantile(0.5), [h, 2 * h], K, B=30, rng=r)[0]))
        indep.append(mse_estimate(run_grid(
            s, design, Quantile(0.5), [h, 2 * h], K, B=30, rng=10_000 + r, reuse=Reuse(False, False)
        )[0]))
    shared, indep = np.array(shared), np.array(indep)
    se = math.sqrt(shared.var(ddof=1) / 200 + indep.var(ddof=1) / 200)
    assert abs(shared.mean() - indep.mean()) < 3 * se


def test_select_stratified():
    rng = np.random.default_rng(11)
    y = np.concatenate([rng.normal(0, 1, 6), rng.normal(5, 2, 8)])
    s = WeightedSample(y, [6 / 18] * 6 + [8 / 24] * 8, [0] * 6 + [1] * 8, {0: (18, 6), 1: (24, 8)})
    grid = make_grid(0.5, 3.0, 3, 14)
    res = double_bootstrap_select(s, StratifiedSRSWOR([(18, 6), (24, 8)]), Quantile(0.5), grid, K, B=6, D=3, rng=12)
    assert len(res.run.h) == 2
    assert res.run.h[0] == pytest.approx(res.constant * 6**-0.2)
    assert res.run.h[1] == pytest.approx(res.constant * 8**-0.2)


def test_select_poisson_runs():
    rng = np.random.default_rng(13)
    pi = rng.uniform(0.2, 0.5, size=12)
    s = WeightedSample(rng.normal(size=12), pi)
    res = double_bootstrap_select(s, Poisson(np.concatenate([pi, [0.3] * 20])), Quantile(0.5),
                                  make_grid(0.5, 2.0, 3, 12), K, B=6, D=3, rng=14)
    assert np.all(np.isfinite(res.risk_curve))


def test_select_argument_checks():
    s, design = _sample()
    grid = make_grid(1.0, 2.0, 2, s.n)
    with pytest.raises(ValueError):
        double_bootstrap_select(s, design, Quantile(0.5), grid, K, B=5, D=1, rng=0)
