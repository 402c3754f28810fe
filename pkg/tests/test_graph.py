import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from haarpool.graph import (
    ClusterAssignment,
    CoarseChain,
    GraphError,
    check_features,
    induce_coarse_graph,
    normalize_graph,
    validate_chain,
)

from conftest import chain_from_parents


def test_merge_symmetric_duplicates():
    g = normalize_graph([(1, 0, 1.0), (0, 1, 2.0)], 2)
    assert g.edges() == [(0, 1, 3.0)]


def test_empty_edges_is_isolated_nodes():
    g = normalize_graph([], 5)
    assert g.num_nodes == 5 and g.num_edges == 0
    assert np.all(g.degrees() == 0)


def test_self_loop_dropped():
    assert normalize_graph([(2, 2, 1.0)], 3).num_edges == 0


def test_edges_sorted():
    g = normalize_graph([(3, 2, 1.0), (0, 3, 1.0), (1, 0, 1.0)], 4)
    assert [(u, v) for u, v, _ in g.edges()] == [(0, 1), (0, 3), (2, 3)]


@pytest.mark.parametrize(
    "edges, msg",
    [
        ([(0, 5, 1.0)], "out of range"),
        ([(-1, 0, 1.0)], "out of range"),
        ([(0, 1, 0.0)], "not positive"),
        ([(0, 1, -2.0)], "not positive"),
        ([(0, 1, float("nan"))], "not finite"),
        ([(0, 1, float("inf"))], "not finite"),
        ([(0.5, 1, 1.0)], "non-integer"),
    ],
)
def test_normalize_rejects(edges, msg):
    with pytest.raises(GraphError, match=msg):
        normalize_graph(edges, 3)


edge_lists = st.integers(1, 12).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.floats(0.1, 10.0)),
            max_size=40,
        ),
    )
)


@given(edge_lists)
def test_normalize_idempotent(case):
    n, edges = case
    g = normalize_graph(edges, n)
    assert normalize_graph(g.edges(), n) == g
    assert all(u < v for u, v, _ in g.edges())


def test_induce_path_graph():
    g = normalize_graph([(0, 1, 1.0), (1, 2, 1.0)], 3)
    c = induce_coarse_graph(g, ClusterAssignment.from_parent([0, 0, 1]))
    assert c.num_nodes == 2 and c.edges() == [(0, 1, 1.0)]


def test_induce_single_cluster():
    g = normalize_graph([(0, 1, 1.0), (1, 2, 1.0)], 3)
    c = induce_coarse_graph(g, ClusterAssignment.from_parent([0, 0, 0]))
    assert c.num_nodes == 1 and c.num_edges == 0


def test_induce_sums_crossing_weights():
    # clusters {0,1} and {2,3} joined by 0-2 and 1-3
    g = normalize_graph([(0, 1, 1.0), (2, 3, 1.0), (0, 2, 1.0), (1, 3, 1.0)], 4)
    c = induce_coarse_graph(g, ClusterAssignment.from_parent([0, 0, 1, 1]))
    assert c.edges() == [(0, 1, 2.0)]


def test_induce_length_mismatch():
    g = normalize_graph([(0, 1, 1.0)], 2)
    with pytest.raises(GraphError, match="assignment covers"):
        induce_coarse_graph(g, ClusterAssignment.from_parent([0, 0, 0]))


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_induce_preserves_cross_weight(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 20))
    k = int(rng.integers(1, n + 1))
    parent = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    rng.shuffle(parent)
    edges = [(int(u), int(v), float(w)) for u, v, w in
             zip(rng.integers(0, n, 30), rng.integers(0, n, 30), rng.uniform(0.1, 3, 30))]
    g = normalize_graph(edges, n)
    c = induce_coarse_graph(g, ClusterAssignment.from_parent(parent, k))
    intra = sum(w for u, v, w in g.edges() if parent[u] == parent[v])
    assert c.weight.sum() == pytest.approx(g.weight.sum() - intra, abs=1e-12)


def test_eight_node_chain_valid(eight_node_chain):
    assert eight_node_chain.sizes == [8, 3, 1]
    assert validate_chain(eight_node_chain) == []


def test_validate_non_decreasing(eight_node_graph):
    chain = chain_from_parents(eight_node_graph, [list(range(8))])
    assert any("sizes not strictly decreasing" in p for p in validate_chain(chain))


def test_validate_parent_out_of_range(eight_node_chain):
    bad = ClusterAssignment(np.array([0, 0, 0, 1, 1, 1, 2, 3]), 3)
    chain = CoarseChain(eight_node_chain.layers, (bad,) + eight_node_chain.assignments[1:],
                        eight_node_chain.orderings)
    assert any("parent out of range" in p for p in validate_chain(chain))


def test_validate_empty_cluster_and_orphans(eight_node_chain):
    empty = ClusterAssignment(np.array([0, 0, 0, 0, 0, 0, 2, 2]), 3)
    short = ClusterAssignment(np.array([0, 0, 0, 1, 1, 1, 2]), 3)
    for a, needle in ((empty, "empty cluster"), (short, "orphan")):
        chain = CoarseChain(eight_node_chain.layers, (a,) + eight_node_chain.assignments[1:],
                            eight_node_chain.orderings)
        assert any(needle in p for p in validate_chain(chain))


def test_validate_bad_ordering(eight_node_chain):
    scrambled = np.array([0, 3, 1, 2, 4, 5, 6, 7])
    chain = CoarseChain(eight_node_chain.layers, eight_node_chain.assignments,
                        (scrambled,) + eight_node_chain.orderings[1:])
    assert any("contiguously" in p for p in validate_chain(chain))


def test_ancestors_compose(eight_node_chain):
    assert eight_node_chain.ancestors().tolist() == [0] * 8
    assert eight_node_chain.ancestors(0, 1).tolist() == [0, 0, 0, 1, 1, 1, 2, 2]


def test_check_features_rejects_nan():
    with pytest.raises(GraphError, match=r"\(1, 0\)"):
        check_features([[1.0], [np.nan]])
    with pytest.raises(GraphError, match="rows"):
        check_features(np.zeros((3, 2)), 4)
