from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import wasserstein_quadrature

from capimbalance.errors import ContractError, UndefinedDistributionError, ValidationError
from capimbalance.ingest import CapPanel
from capimbalance.distmetrics import (
    DiscreteDistribution,
    distance_matrix,
    normalized_cap_distribution,
    wasserstein,
    wasserstein_equal_n,
)


def point(v: float) -> DiscreteDistribution:
    return DiscreteDistribution([v], [1.0])


def random_dist(rng, n=None, sparse=False) -> DiscreteDistribution:
    n = n or int(rng.integers(1, 30))
    w = rng.dirichlet(np.ones(n))
    if sparse:
        w[rng.random(n) < 0.4] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
        w /= w.sum()
    return DiscreteDistribution(rng.normal(size=n), w)


@st.composite
def dists(draw, n=None):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_dist(np.random.default_rng(seed), n, sparse=draw(st.booleans()))


def caps_row(values):
    return CapPanel(np.array(["2004-01-30"], dtype="datetime64[D]"), tuple("ABC")[: len(values)], [values])


def test_normalized_examples():
    d = normalized_cap_distribution(caps_row([2.0, 2.0]), 0)
    np.testing.assert_allclose(d.values, [0.5, 0.5])
    np.testing.assert_allclose(d.weights, [0.5, 0.5])
    d = normalized_cap_distribution(caps_row([6.0, 3.0, 1.0]), 0)
    np.testing.assert_allclose(d.values, [0.6, 0.3, 0.1], atol=1e-15)
    np.testing.assert_allclose(d.weights, [1 / 3] * 3)
    d = normalized_cap_distribution(caps_row([4.0, np.nan]), 0)
    assert d.values.tolist() == [1.0] and d.weights.tolist() == [1.0]


def test_normalized_empty_month():
    caps = CapPanel(np.array(["2004-01-30"], dtype="datetime64[D]"), ("A",), [[np.nan]])
    with pytest.raises(UndefinedDistributionError):
        normalized_cap_distribution(caps, 0)


def test_distribution_validation():
    with pytest.raises(ValidationError):
        DiscreteDistribution([1, 2], [0.5, 0.6])
    with pytest.raises(ValidationError):
        DiscreteDistribution([1, 2], [1.5, -0.5])
    with pytest.raises(ValidationError):
        DiscreteDistribution([1, 2], [1.0])


def test_wasserstein_examples(rng):
    f = random_dist(rng)
    assert wasserstein(f, f) == 0.0
    assert wasserstein(point(1.0), point(0.0)) == 1.0
    a = DiscreteDistribution.uniform([0.7, 0.3])
    b = DiscreteDistribution.uniform([0.5, 0.5])
    assert wasserstein(a, b) == pytest.approx(0.2, abs=1e-15)


def test_equal_n_examples():
    assert wasserstein_equal_n([1, 2, 3], [1, 2, 3]) == 0.0
    assert wasserstein_equal_n([0, 1], [1, 0]) == 0.0
    assert wasserstein_equal_n([0.6, 0.3, 0.1], [0.4, 0.4, 0.2]) == pytest.approx(0.4 / 3, abs=1e-15)
    with pytest.raises(ContractError):
        wasserstein_equal_n([1, 2], [1])


def test_unequal_sizes_against_quadrature(rng):
    for _ in range(20):
        a, b = random_dist(rng, sparse=True), random_dist(rng)
        ref = wasserstein_quadrature(a.values, a.weights, b.values, b.weights)
        assert wasserstein(a, b) == pytest.approx(ref, abs=1e-4)


def test_weighted_hand_case():
    # quantiles: a = 0 on (0, .25], 1 on (.25, 1]; b = 0 on (0, .75], 1 on (.75, 1]
    a = DiscreteDistribution([0.0, 1.0], [0.25, 0.75])
    b = DiscreteDistribution([1.0, 0.0], [0.25, 0.75])
    assert wasserstein(a, b) == pytest.approx(0.5, abs=1e-15)


def test_distance_matrix_examples(rng):
    f = random_dist(rng)
    d = distance_matrix([f, f], ["t1", "t2"])
    assert np.array_equal(d.entries, np.zeros((2, 2)))
    g = random_dist(rng)
    d = distance_matrix([f, g, f], ["t1", "t2", "t3"])
    assert d.entries[0, 2] == 0.0
    assert np.array_equal(d.entries, d.entries.T)
    with pytest.raises(ContractError):
        distance_matrix([f], ["t1"])


def test_distance_matrix_triangle_all_triples(rng):
    ds = [random_dist(rng) for _ in range(4)]
    d = distance_matrix(ds, list(range(4))).entries
    for i, j, k in itertools.permutations(range(4), 3):
        assert d[i, k] <= d[i, j] + d[j, k] + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 50), st.integers(0, 2**32 - 1))
def test_oracle_equivalence_equal_n(n, seed):
    r = np.random.default_rng(seed)
    x, y = r.random(n), r.random(n)
    got = wasserstein(DiscreteDistribution.uniform(x), DiscreteDistribution.uniform(y))
    assert abs(got - wasserstein_equal_n(x, y)) <= 1e-12


@settings(max_examples=150, deadline=None)
@given(dists(), dists(), dists())
def test_metric_axioms(a, b, c):
    ab, ba = wasserstein(a, b), wasserstein(b, a)
    assert ab >= 0
    assert abs(ab - ba) <= 1e-12
    assert wasserstein(a, c) <= ab + wasserstein(b, c) + 1e-9


@settings(max_examples=100, deadline=None)
@given(dists(), dists(), st.floats(-5, 5))
def test_translation(a, b, c):
    sa = DiscreteDistribution(a.values + c, a.weights)
    sb = DiscreteDistribution(b.values + c, b.weights)
    assert wasserstein(sa, sb) == pytest.approx(wasserstein(a, b), abs=1e-12)
    # shifting one side of a point mass pair moves W by exactly |c|
    assert wasserstein(DiscreteDistribution(a.values + c, a.weights), a) == pytest.approx(abs(c), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(dists(), dists(), st.data())
def test_splitting_invariance(a, b, data):
    i = data.draw(st.integers(0, a.values.size - 1))
    v = np.concatenate([a.values, [a.values[i]]])
    w = np.concatenate([a.weights, [a.weights[i] / 2]])
    w[i] /= 2
    split = DiscreteDistribution(v, w)
    assert wasserstein(split, b) == pytest.approx(wasserstein(a, b), abs=1e-12)


def test_zero_weight_points_are_ignored():
    a = DiscreteDistribution([0.0, 100.0], [1.0, 0.0])
    assert wasserstein(a, point(0.0)) == 0.0


def test_cross_check_scipy(rng):
    scipy_stats = pytest.importorskip("scipy.stats")
    for _ in range(50):
        a, b = random_dist(rng, sparse=True), random_dist(rng, sparse=True)
        ref = scipy_stats.wasserstein_distance(a.values, b.values, a.weights, b.weights)
        assert wasserstein(a, b) == pytest.approx(ref, abs=1e-12)
