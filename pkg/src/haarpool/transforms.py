"""Adjoint, forward and compressive Haar transforms."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .basis import CompressiveBasis, HaarBasis, compressive_basis
from .graph import CoarseChain, check_features


def adjoint_transform(b: HaarBasis, x) -> np.ndarray:
    """Haar coefficients ``Phi~^T x`` of a signal matrix."""
    x = check_features(x, b.matrix.rows)
    return np.asarray(b.matrix.to_scipy().T @ x)


def forward_transform(b: HaarBasis, c) -> np.ndarray:
    """Signal ``Phi~ c`` synthesised from Haar coefficients."""
    c = check_features(c, b.matrix.cols, name="coefficients")
    return np.asarray(b.matrix.to_scipy() @ c)


def haar_pool(phi: CompressiveBasis, x) -> np.ndarray:
    """HaarPooling ``Phi^T x``: keep only the low-frequency coefficients."""
    x = check_features(x, phi.matrix.rows)
    return np.asarray(phi.matrix.to_scipy().T @ x)


def pool_stack(chain: CoarseChain, bases, x) -> list[np.ndarray]:
    """Apply every pooling layer in turn; returns the output of each layer."""
    outs = []
    for j in range(chain.depth):
        x = haar_pool(compressive_basis(chain, bases, j), x)
        outs.append(x)
    return outs


class NormCheck(NamedTuple):
    lhs_compressive: float
    rhs_cluster_sum: float
    lhs_full: float
    rhs_total: float


def pool_norm_check(chain: CoarseChain, bases, j: int, x) -> NormCheck:
    """Both sides of the compressive and full energy identities at layer ``j``.

    The compressive side compares ``||Phi_j^T x||^2`` against the sum over
    clusters p of ``|sum_{v in p} x(v)|^2 / |p|``.
    """
    a = chain.assignments[j]
    x = check_features(x, a.num_nodes)
    pooled = haar_pool(compressive_basis(chain, bases, j), x)
    sums = np.zeros((a.num_clusters, x.shape[1]))
    np.add.at(sums, a.parent, x)
    cluster_sum = float(((sums**2).sum(axis=1) / a.child_counts).sum())
    full = adjoint_transform(bases[j], x)
    return NormCheck(
        float((pooled**2).sum()),
        cluster_sum,
        float((full**2).sum()),
        float((x**2).sum()),
    )
