"""Layered Haar orthonormal bases on a coarse-grained chain.

Every layer's basis starts with the extensions of the coarser layer's
columns (the compressive prefix), followed by the within-cluster difference
columns grouped by cluster in canonical order. All entries come from the
closed-form construction, so each column is explicitly sparse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ClusterAssignment, CoarseChain, GraphError, check_chain, cluster_order

PRUNE = 1e-14
ORTHO_CHECK_TOL = 1e-8


class BasisError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Triplet matrix, column-major sorted, exact zeros pruned."""

    rows: int
    cols: int
    row_idx: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    @classmethod
    def from_triplets(cls, rows, cols, r, c, v, prune: float = PRUNE) -> SparseMatrix:
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        v = np.asarray(v, dtype=float)
        if not (r.shape == c.shape == v.shape):
            raise BasisError("triplet arrays differ in length")
        if r.size and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
            raise BasisError(f"triplet index outside a {rows}x{cols} matrix")
        keep = np.abs(v) > prune
        r, c, v = r[keep], c[keep], v[keep]
        order = np.lexsort((r, c))
        r, c, v = r[order], c[order], v[order]
        if r.size > 1:
            dup = (r[1:] == r[:-1]) & (c[1:] == c[:-1])
            if dup.any():
                i = int(np.flatnonzero(dup)[0])
                raise BasisError(f"duplicate entry at ({r[i]}, {c[i]})")
        for a in (r, c, v):
            a.setflags(write=False)
        return cls(int(rows), int(cols), r, c, v)

    @classmethod
    def from_dense(cls, m, prune: float = PRUNE) -> SparseMatrix:
        m = np.asarray(m, dtype=float)
        r, c = np.nonzero(np.abs(m) > prune)
        return cls.from_triplets(m.shape[0], m.shape[1], r, c, m[r, c], prune)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.row_idx, self.col_idx] = self.values
        return out

    def to_scipy(self):
        from scipy import sparse

        return sparse.csc_matrix((self.values, (self.row_idx, self.col_idx)), shape=self.shape)

    def take_columns(self, n: int) -> SparseMatrix:
        stop = int(np.searchsorted(self.col_idx, n, side="left"))
        return SparseMatrix(
            self.rows, n, self.row_idx[:stop], self.col_idx[:stop], self.values[:stop]
        )

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = np.searchsorted(self.col_idx, [j, j + 1])
        return self.row_idx[lo:hi], self.values[lo:hi]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_idx, other.row_idx)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class HaarBasis:
    """Full N_j x N_j Haar transform matrix of one layer.

    ``provenance[l] = (i, cluster, k)``: column ``l`` extends a column first
    generated at layer ``i``, as the ``k``-th (1-based) vector of the block
    for ``cluster`` of layer ``i + 1``. Top-layer columns use cluster -1.
    """

    layer: int
    matrix: SparseMatrix
    provenance: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.rows

    def to_dense(self) -> np.ndarray:
        return self.matrix.to_dense()


@dataclass(frozen=True, eq=False)
class CompressiveBasis:
    """First N_{j+1} columns of a layer's Haar matrix."""

    layer: int
    matrix: SparseMatrix

    def to_dense(self) -> np.ndarray:
        return self.matrix.to_dense()


def _difference_block(s: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Columns 2..s of the closed-form Haar system on ``s`` ordered points.

    Returns ``(position, column, value)`` triplets with columns numbered from
    0. Column t puts sqrt(m/(m+1)) on position t and -sqrt(m/(m+1))/m on the
    m = s - 1 - t positions after it.
    """
    if s < 2:
        e = np.empty(0, dtype=np.int64)
        return e, e, np.empty(0)
    col, pos = np.triu_indices(s, 0, s)
    keep = col <= s - 2
    col, pos = col[keep], pos[keep]
    m = (s - 1 - col).astype(float)
    scale = np.sqrt(m / (m + 1.0))
    val = np.where(pos == col, scale, -scale / m)
    return pos.astype(np.int64), col.astype(np.int64), val


def top_level_basis(n: int) -> np.ndarray:
    """Dense orthonormal Haar system on ``n`` ordered vertices."""
    n = int(n)
    if n < 1:
        raise BasisError(f"basis size must be positive, got {n}")
    out = np.zeros((n, n))
    out[:, 0] = 1.0 / np.sqrt(n)
    pos, col, val = _difference_block(n)
    out[pos, col + 1] = val
    return out


def _orthonormality_residual(m: SparseMatrix) -> float:
    s = m.to_scipy()
    gram = (s.T @ s).toarray()
    gram[np.diag_indices_from(gram)] -= 1.0
    return float(np.abs(gram).max()) if gram.size else 0.0


def orthonormality_residual(m) -> float:
    """max |M^T M - I| for a dense or sparse matrix."""
    if isinstance(m, (HaarBasis, CompressiveBasis)):
        m = m.matrix
    if isinstance(m, SparseMatrix):
        return _orthonormality_residual(m)
    m = np.asarray(m, dtype=float)
    return float(np.abs(m.T @ m - np.eye(m.shape[1])).max())


def _cluster_slices(ordering: np.ndarray, a: ClusterAssignment) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(cluster order, start of each cluster in ``ordering``, cluster sizes)."""
    corder = cluster_order(ordering, a.parent)
    sizes = a.child_counts
    start = np.empty(a.num_clusters, dtype=np.int64)
    start[corder] = np.concatenate([[0], np.cumsum(sizes[corder])[:-1]])
    return corder, start, sizes


def _check_ordering(ordering: np.ndarray, a: ClusterAssignment) -> None:
    n = a.num_nodes
    if ordering.shape != (n,) or not np.array_equal(np.sort(ordering), np.arange(n)):
        raise BasisError(f"ordering is not a permutation of {n} nodes")
    seq = a.parent[ordering]
    if np.count_nonzero(seq[1:] != seq[:-1]) + 1 != a.num_clusters:
        raise BasisError("ordering does not list clusters contiguously")


def extend_basis(parent, a: ClusterAssignment, ordering, *, parent_provenance=None,
                 layer: int = 0, check: bool = True) -> HaarBasis:
    """Haar basis for a layer from the basis of its coarse-grained graph.

    ``parent`` is the N_{j+1} x N_{j+1} basis (dense array, ``SparseMatrix`` or
    ``HaarBasis``); ``a`` maps the N_j nodes onto its vertices.
    """
    if isinstance(parent, HaarBasis):
        if parent_provenance is None:
            parent_provenance = parent.provenance
        parent = parent.matrix
    if not isinstance(parent, SparseMatrix):
        parent = SparseMatrix.from_dense(parent)
    ordering = np.asarray(ordering, dtype=np.int64)
    try:
        a.check()
    except GraphError as exc:
        raise BasisError(str(exc)) from exc
    nc = a.num_clusters
    if parent.shape != (nc, nc):
        raise BasisError(f"parent basis is {parent.shape}, assignment has {nc} clusters")
    _check_ordering(ordering, a)
    if check:
        res = _orthonormality_residual(parent)
        if res > ORTHO_CHECK_TOL:
            raise BasisError(f"parent basis is not orthonormal (residual {res:.3e})")
    n = a.num_nodes
    corder, start, sizes = _cluster_slices(ordering, a)

    # prefix: column l of the parent spread evenly over each cluster
    pr, pc, pv = parent.row_idx, parent.col_idx, parent.values
    reps = sizes[pr]
    offs = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
    rows = [ordering[np.repeat(start[pr], reps) + offs]]
    cols = [np.repeat(pc, reps)]
    vals = [np.repeat(pv / np.sqrt(sizes[pr]), reps)]

    prov = np.empty((n, 3), dtype=np.int64)
    if parent_provenance is None:
        prov[:nc] = np.column_stack([np.full(nc, layer + 1), np.full(nc, -1), np.arange(1, nc + 1)])
    else:
        prov[:nc] = parent_provenance

    # tail: within-cluster difference columns
    next_col = nc
    for p in corder:
        s = int(sizes[p])
        if s < 2:
            continue
        pos, col, val = _difference_block(s)
        rows.append(ordering[start[p] + pos])
        cols.append(next_col + col)
        vals.append(val)
        prov[next_col : next_col + s - 1] = np.column_stack(
            [np.full(s - 1, layer), np.full(s - 1, p), np.arange(2, s + 1)]
        )
        next_col += s - 1
    m = SparseMatrix.from_triplets(n, n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
    return HaarBasis(layer, m, prov)


def top_basis(chain: CoarseChain) -> HaarBasis:
    """Sparse version of :func:`top_level_basis` in the chain's top vertex order."""
    k = chain.depth
    n = chain.layers[k].num_nodes
    order = chain.top_order()
    dense = top_level_basis(n)
    r, c = np.nonzero(dense)
    m = SparseMatrix.from_triplets(n, n, order[r], c, dense[r, c])
    prov = np.column_stack([np.full(n, k), np.full(n, -1), np.arange(1, n + 1)])
    return HaarBasis(k, m, prov)


def build_haar_bases(chain: CoarseChain, from_layer: int = 0, check: bool = False) -> list[HaarBasis | None]:
    """Bases for layers ``from_layer..K``; entries below ``from_layer`` are None.

    ``check`` re-verifies orthonormality of every parent before extending it;
    the closed form makes this redundant for chains built here.
    """
    check_chain(chain)
    k = chain.depth
    if not 0 <= from_layer <= k:
        raise BasisError(f"from_layer {from_layer} outside 0..{k}")
    bases: list[HaarBasis | None] = [None] * (k + 1)
    bases[k] = top_basis(chain)
    for j in range(k - 1, from_layer - 1, -1):
        bases[j] = extend_basis(
            bases[j + 1], chain.assignments[j], chain.orderings[j], layer=j, check=check
        )
    return bases


def column_provenance(chain: CoarseChain, layer: int) -> np.ndarray:
    """Provenance table of a layer's basis, derived from the chain alone."""
    k = chain.depth
    n = chain.layers[k].num_nodes
    prov = np.column_stack([np.full(n, k), np.full(n, -1), np.arange(1, n + 1)])
    for j in range(k - 1, layer - 1, -1):
        a = chain.assignments[j]
        corder, _, sizes = _cluster_slices(chain.orderings[j], a)
        tail = [
            np.column_stack([np.full(s - 1, j), np.full(s - 1, p), np.arange(2, s + 1)])
            for p, s in ((int(p), int(sizes[p])) for p in corder)
            if s > 1
        ]
        prov = np.concatenate([prov] + tail) if tail else prov
    return prov


def basis_from_matrix(chain: CoarseChain, layer: int, matrix: SparseMatrix) -> HaarBasis:
    """Wrap a stored matrix (e.g. read from disk) as the basis of ``layer``."""
    n = chain.layers[layer].num_nodes
    if matrix.shape != (n, n):
        raise BasisError(f"layer {layer} basis must be {n}x{n}, got {matrix.shape}")
    return HaarBasis(layer, matrix, column_provenance(chain, layer))


def compressive_prefix(b: HaarBasis, n_next: int) -> CompressiveBasis:
    n_next = int(n_next)
    if not 1 <= n_next <= b.matrix.cols:
        raise BasisError(f"n_next={n_next} outside 1..{b.matrix.cols}")
    return CompressiveBasis(b.layer, b.matrix.take_columns(n_next))


def compressive_basis(chain: CoarseChain, bases, j: int) -> CompressiveBasis:
    """Phi_j for pooling layer ``j`` of ``chain``."""
    if not 0 <= j < chain.depth:
        raise BasisError(f"pooling layer {j} outside 0..{chain.depth - 1}")
    return compressive_prefix(bases[j], chain.layers[j + 1].num_nodes)


def sparsity(m) -> float:
    """Fraction of stored nonzeros."""
    if isinstance(m, (HaarBasis, CompressiveBasis)):
        m = m.matrix
    return m.nnz / float(m.rows * m.cols)


def compressive_nnz(chain: CoarseChain, bases, j: int) -> int:
    """Nonzeros of Phi_j, counted from the basis of layer j + 1 alone."""
    counts = chain.assignments[j].child_counts
    return int(counts[bases[j + 1].matrix.row_idx].sum())
