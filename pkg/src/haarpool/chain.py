"""Build coarse-grained chains by repeated clustering."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import ClusterAssignment, CoarseChain, Graph, GraphError, check_chain, induce_coarse_graph

log = logging.getLogger(__name__)

METHODS = ("spectral", "degree-greedy")
DENSE_EIG_LIMIT = 512
EIG_TOL = 1e-9
KMEANS_MAX_ITER = 300


class ClusteringError(RuntimeError):
    """Clustering could not produce the requested assignment."""


@dataclass(frozen=True)
class ChainSpec:
    """How many clusters per level, and how to find them.

    Give either ``level_sizes`` (``[N_1, ..., N_K]``) or ``reduction_ratio``
    together with ``num_levels``.
    """

    level_sizes: Sequence[int] | None = None
    reduction_ratio: float | None = None
    num_levels: int | None = None
    method: str = "spectral"
    seed: int = 0

    def sizes_for(self, n0: int) -> list[int]:
        if self.method not in METHODS:
            raise ValueError(f"unknown clustering method {self.method!r}; choose from {METHODS}")
        if (self.level_sizes is None) == (self.reduction_ratio is None):
            raise ValueError("give exactly one of level_sizes or reduction_ratio")
        if self.level_sizes is not None:
            sizes = [int(s) for s in self.level_sizes]
        else:
            r = float(self.reduction_ratio)
            if not 0.0 < r < 1.0:
                raise ValueError(f"reduction_ratio must lie in (0, 1), got {r}")
            if not self.num_levels or self.num_levels < 1:
                raise ValueError("reduction_ratio needs num_levels >= 1")
            sizes, n = [], n0
            for _ in range(self.num_levels):
                n = max(1, math.ceil(n * r))
                sizes.append(n)
        if not sizes:
            raise ValueError("at least one coarse level is required")
        prev = n0
        for s in sizes:
            if s < 1 or s >= prev:
                raise ValueError(
                    f"level sizes must be strictly decreasing from {n0} and positive, got {sizes}"
                )
            prev = s
        return sizes


def _check_k(g: Graph, k: int) -> int:
    k = int(k)
    if not 1 <= k <= g.num_nodes:
        raise ValueError(f"k={k} out of range for a graph with {g.num_nodes} nodes")
    return k


def _relabel(labels: np.ndarray) -> np.ndarray:
    """Renumber cluster labels by first appearance in node-id order."""
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inv.ravel()]


def _fill_smallest(labels: np.ndarray, nodes: np.ndarray, k: int) -> None:
    """Put each node (in the given order) into the currently smallest cluster."""
    counts = np.bincount(labels[labels >= 0], minlength=k)
    for v in nodes:
        c = int(np.argmin(counts))
        labels[v] = c
        counts[c] += 1


def degree_greedy_cluster(g: Graph, k: int, seed: int = 0) -> ClusterAssignment:
    """Grow k clusters from the k highest-degree nodes.

    Unassigned nodes adjacent to a cluster join through their heaviest edge
    into an assigned node (ties: lowest seed id), in synchronous rounds.
    Nodes that no cluster reaches go to the smallest cluster. ``seed`` is
    accepted for interface symmetry; the rule is deterministic.
    """
    k = _check_k(g, k)
    n = g.num_nodes
    deg = g.degrees()
    seeds = np.lexsort((np.arange(n), -deg))[:k]
    labels = np.full(n, -1, dtype=np.int64)
    # cluster c is keyed by its seed's node id so ties go to the lowest seed id
    seed_order = np.sort(seeds)
    labels[seed_order] = np.arange(k)

    a = np.concatenate([g.src, g.dst])
    b = np.concatenate([g.dst, g.src])
    w = np.concatenate([g.weight, g.weight])
    while True:
        cand = (labels[a] < 0) & (labels[b] >= 0)
        if not cand.any():
            break
        ca, cb, cw = a[cand], labels[b[cand]], w[cand]
        pick = np.lexsort((cb, -cw, ca))
        ca, cb = ca[pick], cb[pick]
        head = np.ones(ca.size, dtype=bool)
        head[1:] = ca[1:] != ca[:-1]
        labels[ca[head]] = cb[head]
    rest = np.flatnonzero(labels < 0)
    if rest.size:
        _fill_smallest(labels, rest, k)
    return ClusterAssignment(_relabel(labels), k)


def _kmeans(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    m = points.shape[0]
    rng = np.random.default_rng(seed)
    centers_idx = [int(rng.integers(m))]
    dmin = np.sum((points - points[centers_idx[0]]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(dmin))
        centers_idx.append(nxt)
        dmin = np.minimum(dmin, np.sum((points - points[nxt]) ** 2, axis=1))
    centers = points[centers_idx].copy()
    sq = (points**2).sum(axis=1)
    labels = np.full(m, -1, dtype=np.int64)
    for _ in range(KMEANS_MAX_ITER):
        d = sq[:, None] - 2.0 * points @ centers.T + (centers**2).sum(axis=1)[None, :]
        new = np.argmin(d, axis=1)
        new = _repair_empty(points, new, k)
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
    else:
        log.debug("k-means stopped at the iteration cap (%d)", KMEANS_MAX_ITER)
    return labels


def _repair_empty(points: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Give every empty cluster the point farthest from its own cluster mean."""
    labels = labels.copy()
    counts = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(counts == 0):
        big = int(np.argmax(counts))
        members = np.flatnonzero(labels == big)
        centre = points[members].mean(axis=0)
        far = members[int(np.argmax(((points[members] - centre) ** 2).sum(axis=1)))]
        labels[far] = c
        counts[big] -= 1
        counts[c] += 1
    return labels


def _spectral_embedding(g: Graph, nodes: np.ndarray, k: int) -> np.ndarray:
    from scipy import sparse

    adj = g.adjacency()[nodes][:, nodes]
    deg = np.asarray(adj.sum(axis=1)).ravel()
    dinv = 1.0 / np.sqrt(deg)
    m = nodes.size
    norm_adj = sparse.diags(dinv) @ adj @ sparse.diags(dinv)
    if m < DENSE_EIG_LIMIT or k >= m - 1:
        lap = np.eye(m) - norm_adj.toarray()
        _, vecs = np.linalg.eigh(lap)
        emb = vecs[:, :k]
    else:
        from scipy.sparse.linalg import ArpackNoConvergence, eigsh

        maxiter = 20 * m
        try:
            # largest eigenvalues of D^-1/2 A D^-1/2 are the smallest of the Laplacian
            vals, vecs = eigsh(norm_adj, k=k, which="LA", tol=EIG_TOL, maxiter=maxiter)
        except ArpackNoConvergence as exc:
            raise ClusteringError(
                f"eigensolver did not converge within {maxiter} iterations"
                f" ({len(exc.eigenvalues)} of {k} eigenpairs found)"
            ) from exc
        emb = vecs[:, np.argsort(-vals, kind="stable")]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    return emb / np.where(norms > 0, norms, 1.0)


def spectral_cluster(g: Graph, k: int, seed: int = 0) -> ClusterAssignment:
    """Normalized-Laplacian spectral clustering into exactly ``k`` clusters.

    Isolated nodes carry no spectral information; they are clustered after
    the rest, each joining the smallest cluster.
    """
    k = _check_k(g, k)
    n = g.num_nodes
    labels = np.full(n, -1, dtype=np.int64)
    if k == 1:
        return ClusterAssignment(np.zeros(n, dtype=np.int64), 1)
    if k == n:
        return ClusterAssignment(np.arange(n), n)
    deg = g.degrees()
    linked = np.flatnonzero(deg > 0)
    isolated = np.flatnonzero(deg <= 0)
    m = linked.size
    if m <= k:
        labels[linked] = np.arange(m)
        labels[isolated[: k - m]] = np.arange(m, k)
        _fill_smallest(labels, isolated[k - m :], k)
    else:
        emb = _spectral_embedding(g, linked, k)
        labels[linked] = _kmeans(emb, k, seed)
        _fill_smallest(labels, isolated, k)
    return ClusterAssignment(_relabel(labels), k)


CLUSTERERS = {"spectral": spectral_cluster, "degree-greedy": degree_greedy_cluster}


def canonical_order(g: Graph, a: ClusterAssignment, coarse: Graph | None = None) -> np.ndarray:
    """Vertex order of ``g`` grouped by cluster.

    Clusters sort by descending weighted degree in the coarse graph, children
    by descending weighted degree in ``g``; ties by ascending id.
    """
    if a.num_nodes != g.num_nodes:
        raise GraphError(f"assignment covers {a.num_nodes} nodes but graph has {g.num_nodes}")
    if coarse is None:
        coarse = induce_coarse_graph(g, a)
    cdeg = coarse.degrees()
    corder = np.lexsort((np.arange(a.num_clusters), -cdeg))
    rank = np.empty(a.num_clusters, dtype=np.int64)
    rank[corder] = np.arange(a.num_clusters)
    return np.lexsort((np.arange(g.num_nodes), -g.degrees(), rank[a.parent]))


def build_chain(g: Graph, spec: ChainSpec) -> CoarseChain:
    """Cluster ``g`` level by level according to ``spec``."""
    sizes = spec.sizes_for(g.num_nodes)
    cluster = CLUSTERERS[spec.method]
    layers, assignments, orderings = [g], [], []
    for j, k in enumerate(sizes):
        cur = layers[-1]
        a = cluster(cur, k, spec.seed + j)
        coarse = induce_coarse_graph(cur, a)
        orderings.append(canonical_order(cur, a, coarse))
        assignments.append(a)
        layers.append(coarse)
        log.debug("level %d: %d -> %d nodes (%s)", j, cur.num_nodes, k, spec.method)
    chain = CoarseChain(tuple(layers), tuple(assignments), tuple(orderings))
    check_chain(chain)
    return chain
