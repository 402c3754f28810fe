import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from haarpool.basis import build_haar_bases, compressive_basis
from haarpool.fast import (
    MultiplyCounter,
    compute_weights,
    fast_haar_pool,
    plan_fast_pool,
    source_layer,
    weighted_sums,
)
from haarpool.graph import GraphError, normalize_graph

from conftest import chain_from_parents, random_chain


@pytest.fixture
def chain_21():
    return chain_from_parents(normalize_graph([(0, 1, 1.0)], 2), [[0, 0]])


def test_weights_eight_node(eight_node_chain):
    wt = compute_weights(eight_node_chain)
    assert wt.weights[0].tolist() == [1.0] * 8
    np.testing.assert_allclose(wt.weights[1], [1 / np.sqrt(3), 1 / np.sqrt(3), 1 / np.sqrt(2)], rtol=1e-15)
    assert wt.weights[2][0] == pytest.approx(0.57735, abs=1e-5)


def test_weighted_sums_two_nodes(chain_21):
    wt = compute_weights(chain_21)
    s = weighted_sums(chain_21, wt, [[1.0], [3.0]], 0)
    assert s.at(0).tolist() == [[1.0], [3.0]]
    assert s.at(1).tolist() == [[4.0]]
    zero = weighted_sums(chain_21, wt, np.zeros((2, 3)), 0)
    assert all(np.all(a == 0) for a in zero.sums)


def test_weighted_sums_singleton_layer():
    g = normalize_graph([(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], 4)
    chain = chain_from_parents(g, [[0, 0, 1, 1], [0, 1], [0, 0]])
    wt = compute_weights(chain)
    x = np.arange(4.0)[:, None]
    s = weighted_sums(chain, wt, x, 0)
    # layer 1 -> 2 is one child per parent: plain elementwise weighting
    np.testing.assert_allclose(s.at(2), wt.weights[1][:, None] * s.at(1))


def test_fast_two_nodes(chain_21):
    bases = build_haar_bases(chain_21)
    y = fast_haar_pool(chain_21, compute_weights(chain_21), bases, [[1.0], [3.0]], 0)
    assert y[0, 0] == pytest.approx(2 * np.sqrt(2), abs=1e-15)
    assert source_layer(chain_21, 0, 0) == 1


def test_fast_eight_node(eight_node_chain):
    bases = build_haar_bases(eight_node_chain)
    x = np.random.default_rng(0).standard_normal((8, 4))
    dense = compressive_basis(eight_node_chain, bases, 0).to_dense().T @ x
    fast = fast_haar_pool(eight_node_chain, compute_weights(eight_node_chain), bases, x, 0)
    assert np.abs(dense - fast).max() <= 1e-10


def test_first_coefficient_is_global_aggregate(eight_node_chain):
    bases = build_haar_bases(eight_node_chain)
    wt = compute_weights(eight_node_chain)
    x = np.random.default_rng(1).standard_normal((8, 2))
    s = weighted_sums(eight_node_chain, wt, x, 0)
    top = s.at(2) * wt.weights[2][:, None]
    y = fast_haar_pool(eight_node_chain, wt, bases, x, 0)
    np.testing.assert_allclose(y[0], top[0], atol=1e-14)
    assert source_layer(eight_node_chain, 0, 0) == 2


def test_source_layer_partition(eight_node_chain):
    assert [source_layer(eight_node_chain, 0, l) for l in range(3)] == [2, 1, 1]
    with pytest.raises(GraphError):
        source_layer(eight_node_chain, 0, 3)


def test_fast_rejects_bad_inputs(eight_node_chain):
    bases = build_haar_bases(eight_node_chain)
    wt = compute_weights(eight_node_chain)
    with pytest.raises(GraphError, match="rows"):
        fast_haar_pool(eight_node_chain, wt, bases, np.ones((5, 1)), 0)
    with pytest.raises(GraphError, match="outside"):
        fast_haar_pool(eight_node_chain, wt, bases, np.ones((1, 1)), 2)


def brute_sums(chain, x, j):
    """S^[i] from scratch: descendants' features times the product of path weights."""
    wt = compute_weights(chain)
    out = [x]
    for i in range(j + 1, chain.depth + 1):
        n_i = chain.sizes[i]
        acc = np.zeros((n_i, x.shape[1]))
        for v in range(chain.sizes[j]):
            node, factor = v, 1.0
            for lev in range(j, i):
                if lev > j:
                    factor *= wt.weights[lev][node]
                node = chain.assignments[lev].parent[node]
            acc[node] += factor * x[v]
        out.append(acc)
    return out


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_weighted_sums_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    chain = random_chain(rng)
    j = int(rng.integers(0, chain.depth))
    x = rng.standard_normal((chain.sizes[j], 3))
    s = weighted_sums(chain, compute_weights(chain), x, j)
    for a, b in zip(s.sums, brute_sums(chain, x, j)):
        np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fast_matches_dense_every_layer(seed):
    rng = np.random.default_rng(seed)
    chain = random_chain(rng)
    bases = build_haar_bases(chain)
    wt = compute_weights(chain)
    for j in range(chain.depth):
        x = rng.standard_normal((chain.sizes[j], int(rng.integers(1, 17))))
        dense = compressive_basis(chain, bases, j).to_dense().T @ x
        assert np.abs(fast_haar_pool(chain, wt, bases, x, j) - dense).max() <= 1e-10
        owners = [source_layer(chain, j, l) for l in range(chain.sizes[j + 1])]
        assert all(j + 1 <= i <= chain.depth for i in owners)
        assert owners == sorted(owners, reverse=True)


def test_multiply_count_formula(eight_node_chain):
    bases = build_haar_bases(eight_node_chain)
    counter = MultiplyCounter()
    plan_fast_pool(eight_node_chain, bases, 0).apply(np.ones((8, 2)), counter)
    # step 1: 8 + 3 rows weighted; step 2: layer 2 (1 row, 1 column without head),
    # layer 1 (3 rows, 2 columns with head)
    d = 2
    assert counter.count == d * (8 + 3) + d * (1 + 1) + d * (3 + 2 * 2)


def test_multiply_count_linear_in_nodes():
    counts = []
    for n in (64, 128, 256, 512):
        g = normalize_graph([], n)
        parents = []
        m = n
        while m > 1:
            parents.append(np.arange(m) // 2)
            m //= 2
        chain = chain_from_parents(g, parents)
        counter = MultiplyCounter()
        plan_fast_pool(chain, build_haar_bases(chain, from_layer=1), 0).apply(np.ones((n, 4)), counter)
        counts.append(counter.count)
    ratios = np.diff(np.log(counts)) / np.log(2)
    assert np.all(np.abs(ratios - 1.0) < 0.05)
