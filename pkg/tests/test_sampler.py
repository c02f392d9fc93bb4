import os
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from hexatile import sampler as S
from hexatile.exact import lozenge_probabilities
from hexatile.lattice import LozengeType, PathSystem, energy, tiling_from_paths
from hexatile.oracle import enumerate_tilings

from test_lattice import path_systems


def cfg(n, a, **kw):
    return S.SamplerConfig(n, a, **kw)


def test_config_validation(monkeypatch):
    with pytest.raises(ValueError):
        cfg(0, Fraction(1, 2))
    with pytest.raises(ValueError):
        cfg(2, Fraction(3, 2))
    with pytest.raises(ValueError):
        cfg(13, Fraction(1, 2))
    with pytest.raises(ValueError):
        cfg(2, Fraction(1, 2), arithmetic_mode="double")
    with pytest.raises(ValueError):
        cfg(2, Fraction(1, 2), seed=-1)
    cfg(13, Fraction(1, 2), arithmetic_mode="log_float")
    monkeypatch.setenv("HEXATILE_EXACT_N", "14")
    cfg(13, Fraction(1, 2))


def test_column_state_validation():
    S.ColumnState(2, 1, (0, 2))
    for m, pos in [(1, (1, 0)), (1, (0, 3)), (3, (0, 1)), (0, (0,))]:
        with pytest.raises(ValueError):
            S.ColumnState(2, m, pos)


def test_unit_hexagon_law():
    a = Fraction(1, 3)
    flat_up = PathSystem.from_steps([[0, 1]])
    up_flat = PathSystem.from_steps([[1, 0]])
    assert S.sequential_probability(flat_up, a) == a / (1 + a)
    assert S.sequential_probability(up_flat, a) == 1 / (1 + a)


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("a", [Fraction(1, 16), Fraction(1, 4), Fraction(1)])
def test_sampler_law_is_gibbs(N, a):
    r = enumerate_tilings(N, a)
    probs = r.probabilities()
    for p, _ in r.tilings:
        assert S.sequential_probability(p, a) == probs[p.key()]


def test_sampler_law_four_hexagon_subset():
    a = Fraction(2, 7)
    r = enumerate_tilings(4, a)
    probs = r.probabilities()
    idx = np.random.default_rng(0).choice(r.count, 2000, replace=False)
    for i in idx:
        p = PathSystem(4, r.heights[i])
        assert S.sequential_probability(p, a) == probs[p.key()]


def test_uniform_two_hexagon_frequencies():
    draws = S.sample_batch(cfg(2, 1, seed=11, samples=20000))
    c = Counter(p.key() for p in draws)
    assert len(c) == 20
    sigma = np.sqrt(20000 * (1 / 20) * (19 / 20))
    assert all(abs(v - 1000) < 4 * sigma for v in c.values())


def test_chi_square_three_hexagon():
    a = Fraction(1, 4)
    n = 20000
    draws = S.sample_batch(cfg(3, a, seed=3, samples=n))
    probs = enumerate_tilings(3, a).probabilities()
    c = Counter(p.key() for p in draws)
    obs = np.array([c[k] for k in probs])
    exp = np.array([float(v) * n for v in probs.values()])
    assert obs.sum() == n
    assert sps.chisquare(obs, exp).pvalue > 0.001


def test_reproducible_and_thread_independent():
    c = cfg(4, Fraction(1, 5), seed=99, samples=6)
    a = S.sample_batch(c)
    assert a == S.sample_batch(c)
    assert a == S.sample_batch(c, threads=3)
    assert a[1] == S.sample_exact(c, 1)
    assert S.sample_batch(cfg(4, Fraction(1, 5), seed=100, samples=6)) != a


@pytest.mark.parametrize("n", [5, 9])
def test_log_float_matches_exact_draws(n):
    a = Fraction(1, 20)
    e = S.sample_batch(cfg(n, a, seed=5, samples=5))
    f = S.sample_batch(cfg(n, a, seed=5, samples=5, arithmetic_mode="log_float"))
    assert e == f


def test_log_float_large_emits_valid_tiling():
    p = S.sample_exact(cfg(24, Fraction(1, 2), seed=1, arithmetic_mode="log_float"))
    assert p.n == 24
    assert np.array_equal(p.heights[:, 0], np.arange(24))
    assert np.array_equal(p.heights[:, -1], 24 + np.arange(24))


def test_low_alpha_samples_near_staircase():
    p = S.sample_exact(cfg(10, Fraction(1, 1000), seed=0))
    assert energy(p) <= 3


def test_marginals_match_kernel():
    a = Fraction(1, 3)
    n, N = 6000, 4
    grid = S.empirical_densities(S.sample_batch(cfg(N, a, seed=21, samples=n)))
    for x, y in [(1, 0), (3, 2), (4, 4), (5, 6), (7, 6)]:
        ex = lozenge_probabilities(N, a, x, y)
        for t in LozengeType:
            p = float(ex[t])
            assert abs(grid.frequencies[t, x, y] - p) < 4 * np.sqrt(p * (1 - p) / n) + 1e-12


# flip chain


def test_lowest_tiling():
    p = S.lowest_tiling(3)
    # every path is flat on columns 0..n-1, two of which are even
    assert energy(p) == 3 * 2
    assert p.heights[0, 3] == 0


@given(path_systems(max_n=5), st.integers(0, 10**6))
def test_flip_energy_change(p, seed):
    rng = np.random.default_rng(seed)
    n = p.n
    H = np.array(p.heights)
    for _ in range(20):
        j, x, d = rng.integers(n), rng.integers(1, 2 * n), rng.choice([-1, 1])
        G = H.copy()
        G[j, x] += d
        try:
            q = PathSystem(n, G)
        except ValueError:
            continue
        de = energy(q) - energy(PathSystem(n, H))
        assert de == S.flip_delta_energy(x, d)
        assert de != 0
        H = G


def test_delta_energy_at_even_column():
    assert S.flip_delta_energy(2, 1) == 1 and S.flip_delta_energy(2, -1) == -1
    assert S.flip_delta_energy(3, 1) == -1


def test_uniform_chain_accepts_every_valid_flip():
    n = 3
    H = np.array(S.lowest_tiling(n).heights, dtype=np.int64)
    L = H.shape[1]
    D = np.zeros((1, 4, n, L))  # always propose raising
    U = np.full((1, 4, n, L), 0.999999)
    G = H.copy()
    S._sweeps_numpy(G, D, U, 1.0)
    assert not np.array_equal(G, H)
    G2 = H.copy()
    S._sweeps_numpy(G2, D, U, 0.5)
    # raising at odd columns lowers energy and is always accepted; at even columns it is rejected here
    moved = np.argwhere(G2 != H)
    assert all(x % 2 == 1 for _, x in moved)


@pytest.mark.parametrize("seed", [0, 1])
def test_backends_agree(seed, monkeypatch):
    c = cfg(7, Fraction(1, 3), seed=seed)
    monkeypatch.setenv("HEXATILE_BACKEND", "numba")
    a = S.sample_mcmc(c, 300)
    monkeypatch.setenv("HEXATILE_BACKEND", "numpy")
    b = S.sample_mcmc(c, 300)
    assert a == b


def test_backend_flag_validation(monkeypatch):
    monkeypatch.setenv("HEXATILE_BACKEND", "cuda")
    with pytest.raises(ValueError):
        S.backend()


def test_mcmc_stationary_law():
    a = Fraction(1, 4)
    c = cfg(2, a, seed=8, samples=4000)
    chain = S.mcmc_chain(c, burn_in=50, thin=3)
    probs = enumerate_tilings(2, a).probabilities()
    cnt = Counter(p.key() for p in chain)
    obs = np.array([cnt[k] for k in probs])
    exp = np.array([float(v) * len(chain) for v in probs.values()])
    assert sps.chisquare(obs, exp).pvalue > 0.001


def test_mcmc_validation():
    with pytest.raises(ValueError):
        S.sample_mcmc(cfg(2, 1), 0)


# density grids


def test_single_sample_grid():
    g = S.empirical_densities([PathSystem.staircase(3)], Fraction(1, 2))
    f = g.frequencies[:, g.mask]
    assert set(np.unique(f)) <= {0.0, 1.0}
    assert np.all(g.counts.sum(axis=0)[g.mask] == 1)


def test_grid_merge_and_errors():
    a = Fraction(1, 2)
    b1 = S.sample_batch(cfg(3, a, seed=1, samples=5))
    b2 = S.sample_batch(cfg(3, a, seed=2, samples=7))
    g = S.empirical_densities(b1, a).merge(S.empirical_densities(b2, a))
    h = S.empirical_densities(b2, a).merge(S.empirical_densities(b1, a))
    assert g.total == 12 and np.array_equal(g.counts, h.counts)
    assert np.allclose(g.frequencies.sum(axis=0)[g.mask], 1)
    with pytest.raises(ValueError):
        S.empirical_densities([PathSystem.staircase(2), PathSystem.staircase(3)])
    with pytest.raises(ValueError):
        S.empirical_densities([(b1[0], a), (b1[1], Fraction(1, 3))])
    with pytest.raises(ValueError):
        g.merge(S.empirical_densities([PathSystem.staircase(2)], a))
    with pytest.raises(ValueError):
        S.empirical_densities([])


def test_unit_hexagon_face_frequency():
    a = Fraction(1, 2)
    n = 20000
    g = S.empirical_densities(S.sample_batch(cfg(1, a, seed=4, samples=n)), a)
    p = 1 / (1 + a)
    assert abs(g.frequencies[LozengeType.TypeIII, 1, 0] - float(p)) < 3.5 * np.sqrt(float(p * (1 - p)) / n)
