"""Fast HaarPooling through per-layer weights and weighted sums.

The compressive transform of layer ``j`` is never formed. Coefficient ``l``
is read off at the coarsest layer ``i`` whose basis still holds ``l`` as one
of its own columns, using the bottom-up weighted sums of the input.

Every basis column that is born at layer ``i`` is a two-valued step: one
value on a head vertex and a second value on the run of vertices that
follows it inside one cluster (or inside the top layer). The per-column sum
over the vertices of layer ``i`` therefore reduces to one head term plus
one range sum, which keeps the whole pooling linear in the chain size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import HaarBasis, _cluster_slices
from .graph import CoarseChain, GraphError, check_chain, check_features


class MultiplyCounter:
    """Tally of floating-point multiplications."""

    def __init__(self):
        self.count = 0

    def add(self, n: int) -> None:
        self.count += int(n)


@dataclass(frozen=True)
class WeightTree:
    """``weights[j][k] = 1 / sqrt(children of node k of layer j)``; layer 0 is all ones."""

    weights: tuple[np.ndarray, ...]

    def for_filtration(self, j: int) -> list[np.ndarray]:
        """Weights of the sub-chain starting at layer ``j``, whose base has unit weight."""
        return [np.ones_like(self.weights[j])] + list(self.weights[j + 1 :])


@dataclass(frozen=True)
class WeightedSums:
    base: int
    sums: tuple[np.ndarray, ...]

    def at(self, i: int) -> np.ndarray:
        return self.sums[i - self.base]


def compute_weights(chain: CoarseChain) -> WeightTree:
    weights = [np.ones(chain.layers[0].num_nodes)]
    for j, a in enumerate(chain.assignments):
        counts = a.child_counts
        if np.any(counts == 0):
            raise GraphError(f"layer {j + 1}: empty cluster {int(np.flatnonzero(counts == 0)[0])}")
        weights.append(1.0 / np.sqrt(counts))
    return WeightTree(tuple(weights))


def weighted_sums(chain: CoarseChain, wt: WeightTree, x, j: int,
                  counter: MultiplyCounter | None = None) -> WeightedSums:
    """Bottom-up sums S^[i] for i = j..K, starting from ``S^[j] = x``."""
    x = check_features(x, chain.layers[j].num_nodes)
    w = wt.for_filtration(j)
    sums = [x]
    for i in range(j + 1, chain.depth + 1):
        a = chain.assignments[i - 1]
        prev = sums[-1]
        nxt = np.zeros((a.num_clusters, x.shape[1]))
        np.add.at(nxt, a.parent, w[i - 1 - j][:, None] * prev)
        if counter is not None:
            counter.add(prev.size)
        sums.append(nxt)
    return WeightedSums(j, tuple(sums))


def source_layer(chain: CoarseChain, j: int, ell: int) -> int:
    """Coarsest layer i in j+1..K whose basis owns column ``ell`` (0-based).

    Equivalent to N_{i+1} <= ell < N_i with the sentinel N_{K+1} = 0.
    """
    sizes = chain.sizes
    if not 0 <= ell < sizes[j + 1]:
        raise GraphError(f"coefficient {ell} outside the compressive range 0..{sizes[j + 1] - 1}")
    for i in range(chain.depth, j, -1):
        lower = sizes[i + 1] if i < chain.depth else 0
        if lower <= ell < sizes[i]:
            return i
    raise GraphError(f"no layer owns coefficient {ell}; chain sizes {sizes} are not decreasing")


@dataclass
class _LayerPlan:
    layer: int
    columns: np.ndarray  # output rows served by this layer
    order: np.ndarray  # vertex order of the layer
    head: np.ndarray  # position of the head vertex, -1 for the constant column
    run_lo: np.ndarray
    run_hi: np.ndarray
    head_value: np.ndarray
    run_value: np.ndarray


def _lookup(b: HaarBasis, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    m = b.matrix
    keys = m.col_idx * m.rows + m.row_idx
    want = cols * m.rows + rows
    pos = np.searchsorted(keys, want)
    pos = np.minimum(pos, max(keys.size - 1, 0))
    hit = keys[pos] == want if keys.size else np.zeros(want.shape, bool)
    return np.where(hit, m.values[pos] if keys.size else 0.0, 0.0)


@dataclass
class FastPoolPlan:
    """Everything fast pooling at one layer needs, precomputed from the bases."""

    chain: CoarseChain
    layer: int
    weights: WeightTree
    plans: list[_LayerPlan] = field(default_factory=list)

    def apply(self, x, counter: MultiplyCounter | None = None) -> np.ndarray:
        j = self.layer
        s = weighted_sums(self.chain, self.weights, x, j, counter)
        d = s.sums[0].shape[1]
        out = np.zeros((self.chain.layers[j + 1].num_nodes, d))
        w = self.weights.for_filtration(j)
        for p in self.plans:
            y = s.at(p.layer) * w[p.layer - j][:, None]
            ordered = y[p.order]
            csum = np.vstack([np.zeros((1, d)), np.cumsum(ordered, axis=0)])
            run = csum[p.run_hi] - csum[p.run_lo]
            has_head = p.head >= 0
            head_term = np.where(has_head[:, None], ordered[np.maximum(p.head, 0)], 0.0)
            out[p.columns] = p.head_value[:, None] * head_term + p.run_value[:, None] * run
            if counter is not None:
                counter.add(y.size + d * (p.columns.size + int(has_head.sum())))
        return out


def plan_fast_pool(chain: CoarseChain, bases, j: int, wt: WeightTree | None = None) -> FastPoolPlan:
    """Precompute column layouts and basis values for pooling layer ``j``."""
    check_chain(chain)
    k = chain.depth
    if not 0 <= j < k:
        raise GraphError(f"pooling layer {j} outside 0..{k - 1}")
    sizes = chain.sizes
    wt = compute_weights(chain) if wt is None else wt
    plan = FastPoolPlan(chain, j, wt)
    owner_prov = bases[j + 1].provenance
    for i in range(k, j, -1):
        lo = sizes[i + 1] if i < k else 0
        cols = np.arange(lo, sizes[i])
        if cols.size == 0:
            continue
        b = bases[i]
        prov = b.provenance[cols]
        if np.any(prov[:, 0] != i) or np.any(owner_prov[cols, 0] != i):
            raise GraphError(f"columns {lo}..{sizes[i] - 1} are not owned by layer {i}")
        kk = prov[:, 2]
        if i == k:
            order = chain.top_order()
            start = np.zeros(cols.size, dtype=np.int64)
            end = np.full(cols.size, sizes[k], dtype=np.int64)
        else:
            order = chain.orderings[i]
            _, cstart, csize = _cluster_slices(order, chain.assignments[i])
            start = cstart[prov[:, 1]]
            end = start + csize[prov[:, 1]]
        head = np.where(kk >= 2, start + kk - 2, -1)
        run_lo = np.where(kk >= 2, start + kk - 1, start)
        head_value = np.where(head >= 0, _lookup(b, order[np.maximum(head, 0)], cols), 0.0)
        run_value = _lookup(b, order[run_lo], cols)
        plan.plans.append(_LayerPlan(i, cols, order, head, run_lo, end, head_value, run_value))
    return plan


def fast_haar_pool(chain: CoarseChain, wt: WeightTree, bases, x, j: int,
                   counter: MultiplyCounter | None = None) -> np.ndarray:
    """Compressive Haar transform of layer ``j`` without forming Phi_j."""
    return plan_fast_pool(chain, bases, j, wt).apply(x, counter)
