import numpy as np
import pytest

from haarpool.chain import ChainSpec, build_chain
from haarpool.graph import ClusterAssignment, CoarseChain, normalize_graph, induce_coarse_graph
from haarpool.chain import canonical_order

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# Two triangles and an edge, bridged 2-3 and 5-6: clusters of sizes 3, 3, 2.
EIGHT_NODE_EDGES = [
    (0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0),
    (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0),
    (6, 7, 1.0), (2, 3, 1.0), (5, 6, 1.0),
]
EIGHT_NODE_PARENT = [0, 0, 0, 1, 1, 1, 2, 2]


@pytest.fixture
def eight_node_graph():
    return normalize_graph(EIGHT_NODE_EDGES, 8)


def chain_from_parents(g, parents):
    """Chain over ``g`` with explicit parent maps and canonical orderings."""
    layers, assignments, orderings = [g], [], []
    for p in parents:
        a = ClusterAssignment.from_parent(p)
        coarse = induce_coarse_graph(layers[-1], a)
        orderings.append(canonical_order(layers[-1], a, coarse))
        assignments.append(a)
        layers.append(coarse)
    return CoarseChain(tuple(layers), tuple(assignments), tuple(orderings))


@pytest.fixture
def eight_node_chain(eight_node_graph):
    return chain_from_parents(eight_node_graph, [EIGHT_NODE_PARENT, [0, 0, 0]])


def random_graph_edges(rng, n, p):
    iu, iv = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    w = rng.uniform(0.5, 2.0, keep.sum())
    return list(zip(iu[keep].tolist(), iv[keep].tolist(), w.tolist()))


def random_chain(rng, n_min=4, n_max=64, layers=(2, 4), method=None, top_one=None):
    """Random graph clustered into a chain of 2..4 graphs."""
    n = int(rng.integers(n_min, n_max + 1))
    g = normalize_graph(random_graph_edges(rng, n, float(rng.uniform(0.05, 0.5))), n)
    depth = int(rng.integers(layers[0] - 1, layers[1]))
    depth = min(depth, n - 1)
    sizes = sorted(rng.choice(np.arange(1, n), size=depth, replace=False).tolist(), reverse=True)
    if top_one if top_one is not None else rng.random() < 0.5:
        sizes[-1] = 1
        sizes = sorted(set(sizes), reverse=True)
    method = method or ("spectral" if rng.random() < 0.5 else "degree-greedy")
    return build_chain(g, ChainSpec(level_sizes=sizes, method=method, seed=int(rng.integers(2**31))))
