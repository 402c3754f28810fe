"""Haar graph pooling: coarse-grained chains, Haar bases and compressive transforms."""

from .basis import (
    CompressiveBasis,
    HaarBasis,
    SparseMatrix,
    build_haar_bases,
    compressive_basis,
    compressive_prefix,
    extend_basis,
    sparsity,
    top_level_basis,
)
from .chain import ChainSpec, build_chain, canonical_order, degree_greedy_cluster, spectral_cluster
from .fast import WeightTree, compute_weights, fast_haar_pool, weighted_sums
from .graph import (
    ClusterAssignment,
    CoarseChain,
    Graph,
    GraphError,
    induce_coarse_graph,
    normalize_graph,
    validate_chain,
)
from .transforms import adjoint_transform, forward_transform, haar_pool, pool_norm_check

__version__ = "0.1.0"
