import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from meshscale.hexlattice import build_lattice
from meshscale.radio import (PathLossModel, PowerBudget, RadioError, db_to_linear, dbm_to_mw,
                             interference_bound_perturbed, interference_bound_regular, interference_sum,
                             linear_to_db, max_range, mw_to_dbm, received_power, required_power,
                             reuse_members, shannon_rate, tdma_sinr)

M3 = PathLossModel(3.0)


def _direct_sum(points, rx, alpha, C=1.0, P=1.0):
    total = 0.0
    for p in points:
        total += C * P * math.dist(p, rx) ** (-alpha)
    return total


def test_received_power_examples():
    assert received_power(M3, 1.0, 1.0) == 1.0
    assert received_power(PathLossModel(3.0, 2.0), 10.0, 50.0) == pytest.approx(1.6e-4, rel=1e-12)
    m2 = PathLossModel(2.0)
    assert received_power(m2, 1.0, 6.0) == pytest.approx(received_power(m2, 1.0, 3.0) / 4)


def test_received_power_rejects_nonpositive_distance():
    with pytest.raises(RadioError):
        received_power(M3, 1.0, 0.0)


def test_model_validation():
    with pytest.raises(RadioError):
        PathLossModel(3.0, 0.0)
    with pytest.raises(RadioError):
        PathLossModel(0.0)
    with pytest.raises(RadioError):
        PowerBudget(0.0, 1.0)


def test_max_range_examples():
    assert max_range(M3, PowerBudget(1.0, 1.0)) == pytest.approx(1.0)
    assert max_range(M3, PowerBudget(8.0, 1.0)) == pytest.approx(2.0)


@given(st.floats(2.0, 4.0), st.floats(0.1, 10), st.floats(1e-3, 1e3), st.floats(1e-9, 1.0))
def test_max_range_round_trip(alpha, C, P, P0):
    m = PathLossModel(alpha, C)
    d = max_range(m, PowerBudget(P, P0))
    assert received_power(m, P, d) == pytest.approx(P0, rel=1e-12)


def test_required_power_examples():
    assert required_power(M3, 1.0, 1) == pytest.approx(3 * math.sqrt(3), rel=1e-12)
    assert required_power(M3, 1.0, 2) / required_power(M3, 1.0, 1) == pytest.approx(8.0, rel=1e-12)


def test_required_power_grows_as_ring_cubed():
    ratios = [required_power(M3, 1.0, r) / r ** 3 for r in range(1, 51)]
    assert 1.0 < min(ratios) and max(ratios) < 6.0


def test_shannon_rate_examples():
    assert shannon_rate(1.0, 1.0) == 1.0
    assert shannon_rate(1e7, 3.0) == pytest.approx(2e7)
    assert shannon_rate(123.0, 0.0) == 0.0
    with pytest.raises(RadioError):
        shannon_rate(-1.0, 1.0)


def test_db_conversions():
    assert float(db_to_linear(3.0)) == pytest.approx(1.9953, rel=1e-4)
    assert float(linear_to_db(100.0)) == pytest.approx(20.0)
    assert float(dbm_to_mw(-78.0)) == pytest.approx(1.5849e-8, rel=1e-4)
    assert float(mw_to_dbm(1.0)) == 0.0


def test_interference_sum_basics():
    lat = build_lattice(2)
    assert interference_sum(lat, M3, 1.0, 0, []) == 0.0
    one = interference_sum(lat, M3, 1.0, 0, [1])
    assert one == pytest.approx(3 ** -1.5, rel=1e-12)
    assert one == pytest.approx(0.19245, rel=1e-4)
    with pytest.raises(RadioError):
        interference_sum(lat, M3, 1.0, 0, [0, 1])


def test_interference_sum_additive_and_matches_direct_sum():
    lat = build_lattice(4, placement="perturbed", seed=3, eps=0.4)
    rx = 5
    a = [i for i in range(lat.n) if i % 2 and i != rx]
    b = [i for i in range(lat.n) if not i % 2 and i != rx]
    total = interference_sum(lat, M3, 2.0, rx, a + b)
    parts = interference_sum(lat, M3, 2.0, rx, a) + interference_sum(lat, M3, 2.0, rx, b)
    assert total == pytest.approx(parts, rel=1e-12)
    assert total == pytest.approx(_direct_sum(lat.positions[a + b], lat.positions[rx], 3.0, P=2.0), rel=1e-12)


def test_regular_bound_examples():
    assert interference_bound_regular(M3, 1.0, 1.0) == pytest.approx(96 / 27, rel=1e-12)
    assert interference_bound_regular(PathLossModel(4.0), 1.0, 1.0) == pytest.approx(16 / 9, rel=1e-12)
    with pytest.raises(RadioError):
        interference_bound_regular(PathLossModel(2.0), 1.0)


def test_regular_bound_dominates_large_lattice():
    lat = build_lattice(32)
    I = interference_sum(lat, M3, 1.0, 0, np.arange(1, lat.n))
    assert lat.n == 3169
    assert I <= 96 / 27


@pytest.mark.parametrize("alpha", [2.5, 3.0, 3.5, 4.0])
def test_regular_bound_dominates_every_size(alpha):
    m = PathLossModel(alpha)
    B = interference_bound_regular(m, 1.0)
    for rings in range(1, 33):
        lat = build_lattice(rings)
        assert interference_sum(lat, m, 1.0, 0, np.arange(1, lat.n)) <= B


def test_perturbed_bound_examples():
    assert interference_bound_perturbed(M3, 1.0, 1.0, 0.0) == pytest.approx(32.0, rel=1e-12)
    vals = [interference_bound_perturbed(M3, 1.0, 1.0, e) for e in np.linspace(0, 0.7499, 50)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 1e3
    with pytest.raises(RadioError):
        interference_bound_perturbed(M3, 1.0, 1.0, 0.75)
    with pytest.raises(RadioError):
        interference_bound_perturbed(PathLossModel(1.5), 1.0, 1.0, 0.1)


def test_finite_network_perturbed_bound_below_limit():
    full = interference_bound_perturbed(M3, 1.0, 1.0, 0.25)
    for rings in (1, 4, 16, 64):
        assert interference_bound_perturbed(M3, 1.0, 1.0, 0.25, rings) <= full


def test_perturbed_bound_dominates_seeded_lattices():
    B = interference_bound_perturbed(M3, 1.0, 1.0, 0.25)
    for seed in range(200):
        lat = build_lattice(16, placement="perturbed", seed=seed, eps=0.25)
        assert interference_sum(lat, M3, 1.0, 0, np.arange(1, lat.n)) <= B


@given(st.floats(2.1, 4.0), st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.2, 5.0), st.floats(0.0, 0.7))
def test_bounds_monotone(alpha, C, P, a, eps):
    m, mC = PathLossModel(alpha, C), PathLossModel(alpha, C * 1.5)
    for bound in (lambda mm, p, aa: interference_bound_regular(mm, p, aa),
                  lambda mm, p, aa: interference_bound_perturbed(mm, p, aa, eps)):
        base = bound(m, P, a)
        assert bound(m, P * 1.5, a) > base
        assert bound(mC, P, a) > base
        assert bound(m, P, a * 1.5) < base


@pytest.mark.parametrize("reach", [1, 2, 3])
def test_reuse_pattern_spacing(reach):
    lat = build_lattice(30)
    members = reuse_members(lat, 0, reach)
    cluster = 3 * reach * reach + 3 * reach + 1
    # one active cell per hexagonal cluster: density 1 / cluster over a large interior
    inner = lat.ring_index[members] <= 25
    assert inner.sum() / np.sum(lat.ring_index <= 25) == pytest.approx(1 / cluster, rel=0.1)
    d = lat.hop_distance(members[:, None], members[None, :])
    off = d[~np.eye(len(members), dtype=bool)]
    assert off.min() == 2 * reach + 1


def test_tdma_sinr_is_order_one():
    budget = PowerBudget(1.0, 1.0)
    vals = [tdma_sinr(1, M3, budget, R) for R in (4, 8, 16)]
    assert all(1.0 < v < 10.0 for v in vals)
    assert vals[0] >= vals[1] >= vals[2]
    # a single-ring network has no co-scheduled cells: only the noise floor remains
    assert tdma_sinr(1, M3, budget, 1) == pytest.approx(10.0)
