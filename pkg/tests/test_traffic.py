import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from conftest import euclid_bfs
from meshscale.hexlattice import build_lattice
from meshscale.traffic import (TrafficError, chernoff_delta, chernoff_tail, draw_sd_pairs, hop_distribution,
                               xi)


def test_two_nodes_forced():
    p = draw_sd_pairs(2, seed=5)
    assert p.pairs == [(0, 1), (1, 0)]


@given(st.integers(0, 2**63 - 1))
def test_seven_nodes_no_self_pairs(seed):
    p = draw_sd_pairs(build_lattice(1), seed)
    assert len(p) == 7
    assert np.array_equal(p.src, np.arange(7))
    assert np.all(p.src != p.dst)
    assert np.all((p.dst >= 0) & (p.dst < 7))


def test_reproducible_and_seed_sensitive():
    a, b, c = draw_sd_pairs(100, 3), draw_sd_pairs(100, 3), draw_sd_pairs(100, 4)
    assert np.array_equal(a.dst, b.dst)
    assert not np.array_equal(a.dst, c.dst)


def test_too_few_nodes():
    with pytest.raises(TrafficError):
        draw_sd_pairs(1, 0)


def test_destination_marginal_chi_square():
    n = 19
    trials = -(-100_000 // n)
    dst = np.stack([draw_sd_pairs(n, s).dst for s in range(trials)])
    # pooled destinations are uniform over all n nodes
    pooled = np.bincount(dst.ravel(), minlength=n)
    assert stats.chisquare(pooled).pvalue > 0.01
    # given the source, uniform over the other n - 1
    for src in (0, 7, 18):
        col = dst[:, src]
        counts = np.delete(np.bincount(col, minlength=n), src)
        assert stats.chisquare(counts).pvalue > 0.01


def _oracle_distribution(rings):
    lat = build_lattice(rings)
    rows = [euclid_bfs(lat.centers, math.sqrt(3), i) for i in range(lat.n)]
    width = 2 * rings + 1
    counts = np.array([np.bincount(r, minlength=width) for r in rows])
    counts[:, 0] = 0
    return counts, counts.sum(axis=0) / (lat.n * (lat.n - 1))


def test_seven_node_distribution():
    d = hop_distribution(build_lattice(1))
    assert d.pmf[1] == pytest.approx(4 / 7, abs=1e-15)
    assert d.pmf[2] == pytest.approx(3 / 7, abs=1e-15)
    assert d.b(0, 1) == 6
    assert all(d.b(i, 1) == 3 for i in range(1, 7))
    assert d.mass == pytest.approx({1: 4 / 7, 2: 3 / 7})
    # exact rational check: 24 of 42 ordered pairs are neighbours
    assert Fraction(int(d.counts[:, 1].sum()), 42) == Fraction(4, 7)


@pytest.mark.parametrize("rings", [1, 2, 3, 5, 8])
def test_distribution_matches_bfs_oracle(rings):
    d = hop_distribution(build_lattice(rings))
    counts, pmf = _oracle_distribution(rings)
    assert np.array_equal(d.counts, counts)
    assert np.allclose(d.pmf, pmf, atol=1e-15)
    assert d.pmf.sum() == pytest.approx(1.0, abs=1e-12)


@given(st.integers(1, 14))
def test_distribution_normalized(rings):
    d = hop_distribution(build_lattice(rings))
    assert abs(d.pmf.sum() - 1.0) <= 1e-12
    assert d.diameter == 2 * rings
    n = d.n
    assert np.allclose(d.pmf, d.counts.sum(axis=0) / n / (n - 1))


def test_xi_examples():
    d = hop_distribution(build_lattice(1))
    assert xi(d, 1) == pytest.approx(4 / 7)
    assert xi(d, 0) == 0.0
    assert xi(d, 2) == 1.0
    assert xi(d, 50) == 1.0
    with pytest.raises(TrafficError):
        xi(d, -1)


@given(st.integers(1, 10))
def test_xi_monotone_and_saturating(rings):
    d = hop_distribution(build_lattice(rings))
    vals = [xi(d, D) for D in range(0, 2 * rings + 3)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 1.0


def test_chernoff_examples():
    assert chernoff_tail(1.0, 1.0) == pytest.approx(math.exp(-1 / 3))
    assert chernoff_tail(1.0, 1.0) == pytest.approx(0.7165, abs=1e-4)
    with pytest.raises(TrafficError):
        chernoff_tail(1.0, 0.0)
    with pytest.raises(TrafficError):
        chernoff_tail(0.0, 1.0)


def test_chernoff_confidence_construction():
    n = 100
    E = 6 * math.log(n)
    delta = chernoff_delta(n, E)
    assert delta == pytest.approx(1.0)
    assert chernoff_tail(E, delta) == pytest.approx(1 / n ** 2, rel=1e-12)
    # larger expectations shrink delta and keep the tail below 1/n^2
    for E in (10 * math.log(n), 100.0, 1e4):
        assert chernoff_tail(E, chernoff_delta(n, E)) <= 1 / n ** 2


@given(st.floats(0.01, 10.0), st.floats(0.01, 100.0), st.floats(1.01, 10.0))
def test_chernoff_decreasing_in_expectation(delta, E, factor):
    assert chernoff_tail(E * factor, delta) < chernoff_tail(E, delta)


def test_chernoff_delta_vectorized():
    E = np.array([1.0, 4.0])
    assert np.allclose(chernoff_delta(10, E), np.sqrt(6 * math.log(10) / E))
