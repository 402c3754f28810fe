"""Graph, cluster assignment and coarse-grained chain data model."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graphs, assignments or chains."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Weighted undirected graph with canonical edge storage.

    Edges are held as three parallel arrays with ``src <= dst``, sorted by
    ``(src, dst)``, without self-loops or duplicates. Build instances through
    :func:`normalize_graph` so the invariants hold.
    """

    num_nodes: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(u), int(v), float(w)) for u, v, w in zip(self.src, self.dst, self.weight)]

    def degrees(self) -> np.ndarray:
        """Weighted degree of every node."""
        deg = np.zeros(self.num_nodes)
        np.add.at(deg, self.src, self.weight)
        np.add.at(deg, self.dst, self.weight)
        return deg

    def adjacency(self):
        """Symmetric adjacency as a ``scipy.sparse`` CSR matrix."""
        from scipy import sparse

        n = self.num_nodes
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        vals = np.concatenate([self.weight, self.weight])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.weight, other.weight)
        )

    __hash__ = None  # type: ignore[assignment]


def graph_from_arrays(num_nodes: int, u, v, w=None) -> Graph:
    """Vectorised :func:`normalize_graph` for parallel index/weight arrays."""
    num_nodes = int(num_nodes)
    if num_nodes < 1:
        raise GraphError(f"num_nodes must be positive, got {num_nodes}")
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.ndim != 1:
        raise GraphError("edge endpoint arrays must be 1-d and of equal length")
    w = np.ones(u.shape[0]) if w is None else np.asarray(w, dtype=float)
    if w.shape != u.shape:
        raise GraphError("weight array length does not match edge count")
    if u.size:
        for name, ids in (("u", u), ("v", v)):
            if not np.issubdtype(ids.dtype, np.integer):
                if not np.all(np.isfinite(ids)) or np.any(ids != np.round(ids)):
                    raise GraphError(f"non-integer node id in column {name}")
            bad = np.flatnonzero((ids < 0) | (ids >= num_nodes))
            if bad.size:
                i = int(bad[0])
                raise GraphError(
                    f"edge {i}: node id {ids[i]} out of range for {num_nodes} nodes"
                )
        bad = np.flatnonzero(~np.isfinite(w))
        if bad.size:
            raise GraphError(f"edge {int(bad[0])}: weight {w[bad[0]]} is not finite")
        bad = np.flatnonzero(w <= 0)
        if bad.size:
            raise GraphError(f"edge {int(bad[0])}: weight {w[bad[0]]} is not positive")
    u = u.astype(np.int64)
    v = v.astype(np.int64)
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    keep = lo != hi
    lo, hi, w = lo[keep], hi[keep], w[keep]
    if lo.size:
        key = lo * num_nodes + hi
        uniq, inv = np.unique(key, return_inverse=True)
        merged = np.bincount(inv, weights=w, minlength=uniq.size)
        lo, hi, w = uniq // num_nodes, uniq % num_nodes, merged
    return Graph(
        num_nodes,
        _frozen(lo.astype(np.int64)),
        _frozen(hi.astype(np.int64)),
        _frozen(np.asarray(w, dtype=float)),
    )


def normalize_graph(raw_edges: Iterable[Sequence[float]], num_nodes: int) -> Graph:
    """Canonicalise an edge list: drop self-loops, merge duplicates, sort.

    ``raw_edges`` holds ``(u, v, w)`` triples; ``(u, v)`` and ``(v, u)`` are the
    same edge and their weights are summed.
    """
    if isinstance(raw_edges, Graph):
        raw_edges = raw_edges.edges()
    triples = list(raw_edges)
    if not triples:
        return graph_from_arrays(num_nodes, np.empty(0, np.int64), np.empty(0, np.int64))
    for i, t in enumerate(triples):
        if len(t) != 3:
            raise GraphError(f"edge {i}: expected (u, v, w), got {t!r}")
        for x in t[:2]:
            if isinstance(x, float) and not float(x).is_integer():
                raise GraphError(f"edge {i}: non-integer node id {x!r}")
    u = np.array([t[0] for t in triples])
    v = np.array([t[1] for t in triples])
    w = np.array([t[2] for t in triples], dtype=float)
    return graph_from_arrays(num_nodes, u, v, w)


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """Map from nodes of one layer to their parent cluster in the next.

    No validation happens here; :func:`validate_chain` reports problems and
    the consumers that need a valid assignment call :meth:`check`.
    """

    parent: np.ndarray
    num_clusters: int

    def __post_init__(self):
        p = np.asarray(self.parent, dtype=np.int64)
        object.__setattr__(self, "parent", _frozen(p.copy()))
        object.__setattr__(self, "num_clusters", int(self.num_clusters))

    @classmethod
    def from_parent(cls, parent, num_clusters: int | None = None) -> ClusterAssignment:
        parent = np.asarray(parent, dtype=np.int64)
        if num_clusters is None:
            num_clusters = int(parent.max()) + 1 if parent.size else 0
        return cls(parent, num_clusters)

    @property
    def num_nodes(self) -> int:
        return int(self.parent.shape[0])

    @property
    def child_counts(self) -> np.ndarray:
        ok = (self.parent >= 0) & (self.parent < self.num_clusters)
        return np.bincount(self.parent[ok], minlength=self.num_clusters)

    def members(self) -> list[np.ndarray]:
        """Children of every cluster, ascending node id."""
        order = np.argsort(self.parent, kind="stable")
        bounds = np.cumsum(self.child_counts)[:-1]
        return np.split(order, bounds)

    def problems(self, num_nodes: int | None = None) -> list[str]:
        out = []
        if num_nodes is not None and self.num_nodes != num_nodes:
            msg = f"assignment covers {self.num_nodes} nodes, layer has {num_nodes}"
            if self.num_nodes < num_nodes:
                msg += " (orphan nodes)"
            out.append(msg)
        neg = np.flatnonzero(self.parent < 0)
        if neg.size:
            out.append(f"orphan node {int(neg[0])} has no parent")
        high = np.flatnonzero(self.parent >= self.num_clusters)
        if high.size:
            i = int(high[0])
            out.append(
                f"parent out of range: node {i} -> {int(self.parent[i])}"
                f" (>= {self.num_clusters})"
            )
        empty = np.flatnonzero(self.child_counts == 0)
        if empty.size:
            out.append(f"empty cluster {int(empty[0])}")
        return out

    def check(self, num_nodes: int | None = None) -> None:
        probs = self.problems(num_nodes)
        if probs:
            raise GraphError("; ".join(probs))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClusterAssignment):
            return NotImplemented
        return self.num_clusters == other.num_clusters and np.array_equal(
            self.parent, other.parent
        )

    __hash__ = None  # type: ignore[assignment]


def cluster_order(ordering: np.ndarray, parent: np.ndarray) -> np.ndarray:
    """Cluster ids in the order their children first appear in ``ordering``."""
    seq = np.asarray(parent)[np.asarray(ordering)]
    _, first = np.unique(seq, return_index=True)
    return seq[np.sort(first)]


@dataclass(frozen=True, eq=False)
class CoarseChain:
    """Sequence of graphs G_0 -> G_K with parent maps and vertex orderings.

    ``orderings[j]`` is a permutation of the nodes of layer ``j`` listing the
    children of every cluster of layer ``j + 1`` contiguously, clusters in
    canonical order and children in canonical order inside each cluster. The
    vertex order of the top layer is the cluster order of ``orderings[-1]``.
    """

    layers: tuple[Graph, ...]
    assignments: tuple[ClusterAssignment, ...]
    orderings: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "assignments", tuple(self.assignments))
        object.__setattr__(
            self,
            "orderings",
            tuple(_frozen(np.asarray(o, dtype=np.int64).copy()) for o in self.orderings),
        )

    @property
    def depth(self) -> int:
        """Number of pooling layers K."""
        return len(self.layers) - 1

    @property
    def sizes(self) -> list[int]:
        return [g.num_nodes for g in self.layers]

    def top_order(self) -> np.ndarray:
        if self.depth == 0:
            return np.arange(self.layers[0].num_nodes)
        return cluster_order(self.orderings[-1], self.assignments[-1].parent)

    def ancestors(self, layer: int = 0, top: int | None = None) -> np.ndarray:
        """Compose parent maps from ``layer`` up to ``top`` (default K)."""
        top = self.depth if top is None else top
        idx = np.arange(self.layers[layer].num_nodes)
        for j in range(layer, top):
            idx = self.assignments[j].parent[idx]
        return idx

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoarseChain):
            return NotImplemented
        return (
            self.layers == other.layers
            and self.assignments == other.assignments
            and len(self.orderings) == len(other.orderings)
            and all(np.array_equal(a, b) for a, b in zip(self.orderings, other.orderings))
        )

    __hash__ = None  # type: ignore[assignment]


def validate_chain(chain: CoarseChain) -> list[str]:
    """Return every violation of the chain definition; empty means valid."""
    out: list[str] = []
    sizes = chain.sizes
    if not sizes:
        return ["chain has no layers"]
    if len(chain.assignments) != len(sizes) - 1:
        out.append(
            f"expected {len(sizes) - 1} assignments for {len(sizes)} layers,"
            f" got {len(chain.assignments)}"
        )
    if len(chain.orderings) != len(chain.assignments):
        out.append(
            f"expected {len(chain.assignments)} orderings, got {len(chain.orderings)}"
        )
    for j in range(len(sizes) - 1):
        if sizes[j + 1] >= sizes[j]:
            out.append(
                f"layer {j}: sizes not strictly decreasing ({sizes[j]} -> {sizes[j + 1]})"
            )
    for j, a in enumerate(chain.assignments[: len(sizes) - 1]):
        if a.num_clusters != sizes[j + 1]:
            out.append(
                f"layer {j}: assignment targets {a.num_clusters} clusters,"
                f" layer {j + 1} has {sizes[j + 1]} nodes"
            )
        out.extend(f"layer {j}: {p}" for p in a.problems(sizes[j]))
    for j, (o, a) in enumerate(zip(chain.orderings, chain.assignments)):
        if o.shape != (sizes[j],) or not np.array_equal(np.sort(o), np.arange(sizes[j])):
            out.append(f"layer {j}: ordering is not a permutation of {sizes[j]} nodes")
            continue
        if a.problems(sizes[j]):
            continue
        seq = a.parent[o]
        breaks = np.count_nonzero(seq[1:] != seq[:-1]) + 1
        if breaks != a.num_clusters:
            out.append(f"layer {j}: ordering does not list clusters contiguously")
    return out


def check_chain(chain: CoarseChain) -> None:
    probs = validate_chain(chain)
    if probs:
        raise GraphError("invalid chain: " + "; ".join(probs))


def induce_coarse_graph(g: Graph, a: ClusterAssignment) -> Graph:
    """Graph on the clusters: crossing weights summed, intra-cluster edges dropped."""
    if a.num_nodes != g.num_nodes:
        raise GraphError(
            f"assignment covers {a.num_nodes} nodes but graph has {g.num_nodes}"
        )
    a.check(g.num_nodes)
    pu = a.parent[g.src]
    pv = a.parent[g.dst]
    return graph_from_arrays(a.num_clusters, pu, pv, g.weight)


def check_features(x, num_rows: int | None = None, name: str = "features") -> np.ndarray:
    """Coerce to a finite 2-d float array, optionally of a given row count."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise GraphError(f"{name} must be a 2-d matrix, got {x.ndim} dimensions")
    if num_rows is not None and x.shape[0] != num_rows:
        raise GraphError(f"{name} has {x.shape[0]} rows, expected {num_rows}")
    bad = np.argwhere(~np.isfinite(x))
    if bad.size:
        r, c = bad[0]
        raise GraphError(f"{name} entry ({r}, {c}) is not finite")
    return x
