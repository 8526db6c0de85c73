from collections import Counter

import numpy as np
import pytest

from smoothppb.designs import SRSWOR, Poisson, RandSysPPS, StratifiedSRSWOR
from smoothppb.kernels import gaussian_kernel
from smoothppb.pseudopop import build_fixed_part, complete, replication_counts, smooth
from smoothppb.quantiles import WeightedSample

K = gaussian_kernel()


@pytest.mark.parametrize("pi,copies", [(1 / 3, 3), (0.4, 2), (1.0, 1)])
def test_fixed_part_copies(pi, copies):
    pp = build_fixed_part(WeightedSample([7.0], [pi]))
    assert pp.size == copies
    assert np.all(pp.y == 7.0)


def test_fixed_part_source_major():
    pp = build_fixed_part(WeightedSample([1.0, 2.0], [0.5, 1 / 3]))
    assert pp.source.tolist() == [0, 0, 1, 1, 1]


def test_replication_counts_snap():
    k, r = replication_counts([3 / 9, 0.4, 100 / 333])
    assert k.tolist() == [3, 2, 3]
    assert r[0] == 0.0
    assert r[1] == pytest.approx(0.5)
    assert r[2] == pytest.approx(0.33)


def test_srswor_integer_ratio():
    s = WeightedSample([1.0, 2.0, 3.0], 3 / 9)
    pp = complete(s, SRSWOR(3, 9), np.random.default_rng(0))
    assert pp.size == 9
    assert Counter(pp.y.tolist()) == {1.0: 3, 2.0: 3, 3.0: 3}


def test_srswor_completion_uniform():
    s = WeightedSample([1.0, 2.0, 3.0], 3 / 10)
    rng = np.random.default_rng(1)
    extra = Counter()
    for _ in range(6000):
        pp = complete(s, SRSWOR(3, 10), rng)
        assert pp.size == 10
        c = Counter(pp.y.tolist())
        assert sorted(c.values()) == [3, 3, 4]
        extra[max(c, key=c.get)] += 1
    for v in (1.0, 2.0, 3.0):
        assert abs(extra[v] / 6000 - 1 / 3) < 3 * np.sqrt(2 / 9 / 6000)


def test_srswor_multiplicities():
    rng = np.random.default_rng(2)
    for n, N in [(7, 50), (10, 33), (4, 4)]:
        s = WeightedSample(rng.normal(size=n), n / N)
        pp = complete(s, SRSWOR(n, N), rng)
        counts = np.bincount(pp.source, minlength=n)
        assert counts.sum() == N
        assert set(counts.tolist()) <= {N // n, N // n + 1}


def test_poisson_integer_inverse():
    s = WeightedSample([1.0, 2.0, 3.0], 0.5)
    pp = complete(s, Poisson([0.5] * 10), np.random.default_rng(3))
    assert pp.size == 6
    assert np.bincount(pp.source).tolist() == [2, 2, 2]


def test_poisson_completion_frequencies():
    s = WeightedSample([1.0, 2.0], [0.4, 0.3])  # residuals 0.5 and 1/3
    rng = np.random.default_rng(4)
    counts = np.array([np.bincount(complete(s, Poisson([0.4, 0.3]), rng).source, minlength=2) for _ in range(20000)])
    np.testing.assert_allclose(counts.mean(axis=0), [2.5, 10 / 3], atol=0.02)


def test_randsys_completion():
    pi = np.array([0.4, 0.3, 0.25, 1.0])
    s = WeightedSample([1.0, 2.0, 3.0, 4.0], pi)
    rng = np.random.default_rng(5)
    design = RandSysPPS(np.array([0.4, 0.3, 0.25, 1.0, 0.05]), 2)
    sizes = []
    for _ in range(5000):
        pp = complete(s, design, rng)
        counts = np.bincount(pp.source, minlength=4)
        assert counts[3] == 1
        sizes.append(pp.size)
    # residual total 0.5 + 1/3 = 5/6: the systematic pass adds 0 or 1 unit
    assert set(sizes) <= {2 + 3 + 4 + 1, 2 + 3 + 4 + 1 + 1}
    assert np.mean(sizes) == pytest.approx(10 + 5 / 6, abs=0.03)


def test_stratified_completion():
    s = WeightedSample([1.0, 2.0, 10.0, 11.0, 12.0], [0.4, 0.4, 0.5, 0.5, 0.5], [0, 0, 1, 1, 1], {0: (5, 2), 1: (6, 3)})
    pp = complete(s, StratifiedSRSWOR([(5, 2), (6, 3)]), np.random.default_rng(6))
    assert pp.size == 11
    assert pp.stratum.tolist() == [0] * 5 + [1] * 6


def test_design_mismatch():
    with pytest.raises(ValueError):
        complete(WeightedSample([1.0, 2.0], 0.2), SRSWOR(3, 10), np.random.default_rng(0))


def test_smooth_h0_identity():
    pp = build_fixed_part(WeightedSample([1.0, 5.0], 0.5))
    out = smooth(pp, 0.0, K, noise=np.array([1.0, -2.0, 3.0, 0.5]))
    assert np.array_equal(out.y, pp.y)
    assert not out.smoothed


def test_smooth_direct_formula():
    pp = build_fixed_part(WeightedSample([10.0], 0.5))
    out = smooth(pp, 2.0, K, noise=[1.0, -1.0])
    assert out.y.tolist() == [12.0, 8.0]
    assert np.array_equal(out.pi, pp.pi)


def test_smooth_noise_length_mismatch():
    pp = build_fixed_part(WeightedSample([10.0], 0.5))
    with pytest.raises(ValueError):
        smooth(pp, 1.0, K, noise=[1.0])


def test_smooth_shared_noise_proportional():
    pp = complete(WeightedSample(np.arange(8.0), 0.25), SRSWOR(8, 32), np.random.default_rng(7))
    noise = np.random.default_rng(8).standard_normal(pp.size)
    a = smooth(pp, 0.3, K, noise=noise)
    b = smooth(pp, 1.1, K, noise=noise)
    np.testing.assert_allclose(b.y - a.y, (1.1 - 0.3) * noise, rtol=1e-12, atol=1e-12)


def test_smooth_zero_mean_shift():
    pp = complete(WeightedSample(np.arange(10.0), 0.5), Poisson(np.full(20, 0.5)), np.random.default_rng(9))
    rng = np.random.default_rng(10)
    h = 1.5
    shifts = [smooth(pp, h, K, rng).y.mean() - pp.y.mean() for _ in range(10**4)]
    assert abs(np.mean(shifts)) < 3 * h / np.sqrt(10**4 * pp.size)


def test_smooth_leaves_pi():
    pp = complete(WeightedSample([1.0, 2.0], [0.4, 0.3]), Poisson([0.4, 0.3]), np.random.default_rng(11))
    out = smooth(pp, 3.0, K, np.random.default_rng(12))
    assert np.array_equal(out.pi, pp.pi)
    assert np.array_equal(out.source, pp.source)
