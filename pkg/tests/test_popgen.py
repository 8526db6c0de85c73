import numpy as np
import pytest

from smoothppb.popgen import (
    MASTER_SIZE,
    FinitePopulation,
    gen_asym,
    gen_lognormal,
    gen_normal,
    gen_sym,
    read_csv,
    scenario_size,
    take_prefix,
    write_csv,
)

BIG = 10**6


def test_sym_degenerate_noise():
    pop = gen_sym(1000, gamma=1.0, sigma=0.0, rng=0)
    assert np.array_equal(pop.y, pop.x)


def test_sym_moments():
    pop = gen_sym(BIG, rng=1)
    assert abs(pop.y.mean() - 60) < 0.05
    assert abs(pop.y.var() - 216) < 2


def test_sym_correlation():
    corrs = [np.corrcoef(gen_sym(MASTER_SIZE, rng=s).y, gen_sym(MASTER_SIZE, rng=s).x)[0, 1] for s in range(5)]
    assert all(abs(c - 0.58) < 0.03 for c in corrs)


def test_asym_degenerate_noise():
    pop = gen_asym(1000, beta=1.0, sigma2_eps=0.0, rng=2)
    np.testing.assert_allclose(pop.y, pop.x, rtol=1e-15)


def test_asym_moments():
    pop = gen_asym(BIG, rng=3)
    ly = np.log(pop.y)
    assert abs(ly.mean() - 1.5) < 0.01
    assert abs(ly.var() - 1.389) < 0.01
    assert abs(np.median(pop.y) - np.exp(1.5)) < 0.05
    assert np.all(pop.x > 0)


def test_reference_populations():
    assert abs(gen_normal(BIG, rng=4).y.mean()) < 0.003
    assert abs(np.median(gen_lognormal(BIG, rng=5).y) - 1) < 0.01
    single = gen_normal(1, rng=6)
    assert single.N == 1 and single.x is None


def test_determinism():
    assert np.array_equal(gen_sym(50, rng=7).y, gen_sym(50, rng=7).y)
    assert not np.array_equal(gen_sym(50, rng=7).y, gen_sym(50, rng=8).y)


def test_prefix():
    pop = gen_sym(100, rng=9)
    assert np.array_equal(take_prefix(pop, 100).y, pop.y)
    a = take_prefix(take_prefix(pop, 60), 25)
    b = take_prefix(pop, 25)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.x, b.x)
    for bad in (0, 101):
        with pytest.raises(ValueError):
            take_prefix(pop, bad)


def test_scenario_sizes():
    sizes = [scenario_size(n, f) for n, f in [(100, 0.07), (100, 0.3), (500, 0.07), (500, 0.3)]]
    assert sizes == [1428, 333, 7142, 1666]
    assert max(sizes) == MASTER_SIZE


def test_population_validation():
    with pytest.raises(ValueError):
        FinitePopulation([])
    with pytest.raises(ValueError):
        FinitePopulation([1.0, 2.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        FinitePopulation([1.0, 2.0], [1.0])


def test_csv_round_trip(tmp_path):
    pop = gen_asym(200, rng=10)
    write_csv(pop, tmp_path / "pop.csv")
    back = read_csv(tmp_path / "pop.csv")
    assert np.array_equal(back.y, pop.y) and np.array_equal(back.x, pop.x)
    plain = gen_normal(10, rng=11)
    write_csv(plain, tmp_path / "plain.csv")
    assert (tmp_path / "plain.csv").read_text().splitlines()[0] == "index,y"
    assert read_csv(tmp_path / "plain.csv").x is None


def test_csv_bad_header(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(tmp_path / "bad.csv")
