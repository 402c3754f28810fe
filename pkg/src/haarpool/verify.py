"""Run every numerical invariant of a chain and its bases; collect a report."""

from __future__ import annotations

import datetime as _dt
from dataclasses import asdict, dataclass, field

import numpy as np

from .basis import build_haar_bases, compressive_basis, orthonormality_residual
from .fast import compute_weights, fast_haar_pool
from .graph import CoarseChain, validate_chain
from .transforms import adjoint_transform, forward_transform, haar_pool, pool_norm_check

DEFAULT_TOLERANCES = {
    "orthonormality": 1e-10,
    "reconstruction": 1e-10,
    "parseval": 1e-10,
    "compressive_norm": 1e-10,
    "cluster_constant": 1e-12,
    "fast_vs_dense": 1e-10,
    "basis_matches_chain": 1e-10,
}


@dataclass
class Check:
    name: str
    passed: bool
    residual: float
    tolerance: float
    layer: int | None = None
    detail: str = ""

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass
class VerifyReport:
    chain_id: str
    basis_id: str
    seed: int
    checks: list[Check] = field(default_factory=list)
    generated_at: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, residual, tol, layer=None, detail="") -> Check:
        c = Check(name, bool(residual <= tol), float(residual), float(tol), layer, detail)
        self.checks.append(c)
        return c

    def to_dict(self) -> dict:
        checks = []
        for c in self.checks:
            d = asdict(c)
            d["status"] = c.status
            del d["passed"]
            checks.append(d)
        return {
            "chain": self.chain_id,
            "bases": self.basis_id,
            "seed": self.seed,
            "generated_at": self.generated_at,
            "status": "pass" if self.passed else "fail",
            "checks": checks,
        }


def _features_for(n: int, rng, d: int = 8) -> np.ndarray:
    return rng.standard_normal((n, d))


def run_verify(chain: CoarseChain, bases=None, features=None, *, seed: int = 7,
               tolerances: dict | None = None, full_stack: bool = False,
               chain_id: str = "in-memory", basis_id: str = "built") -> VerifyReport:
    """Check chain validity, orthonormality, reconstruction, energy identities,
    cluster-constant compressive columns and fast/dense agreement per layer.

    ``features`` (N_0 x d) drives the layer-0 checks; every other layer uses
    seeded Gaussian features.
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    rep = VerifyReport(chain_id, basis_id, seed,
                       generated_at=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    problems = validate_chain(chain)
    rep.add("chain_valid", float(len(problems)), 0.0, detail="; ".join(problems))
    if full_stack:
        top = chain.sizes[-1]
        rep.add("full_stack_top_is_single_node", float(top != 1), 0.0,
                detail="" if top == 1 else
                f"a full HaarPooling stack must end in one node (N_K = 1); top layer has {top}")
    if problems:
        return rep

    reference = build_haar_bases(chain)
    if bases is None:
        bases = reference
    else:
        for j, (b, ref) in enumerate(zip(bases, reference)):
            if b.matrix.shape != ref.matrix.shape:
                rep.add("basis_matches_chain", np.inf, tol["basis_matches_chain"], j,
                        f"shape {b.matrix.shape}, expected {ref.matrix.shape}")
                continue
            diff = np.abs(b.to_dense() - ref.to_dense()).max()
            rep.add("basis_matches_chain", diff, tol["basis_matches_chain"], j)

    rng = np.random.default_rng(seed)
    xs = []
    for j, g in enumerate(chain.layers):
        if j == 0 and features is not None:
            xs.append(np.asarray(features, dtype=float))
        else:
            xs.append(_features_for(g.num_nodes, rng))

    wt = compute_weights(chain)
    for j, b in enumerate(bases):
        x = xs[j]
        if b.matrix.shape != (x.shape[0], x.shape[0]):
            rep.add("orthonormality", np.inf, tol["orthonormality"], j, "basis has the wrong shape")
            continue
        rep.add("orthonormality", orthonormality_residual(b), tol["orthonormality"], j)
        coeffs = adjoint_transform(b, x)
        rep.add("reconstruction", np.abs(forward_transform(b, coeffs) - x).max(),
                tol["reconstruction"], j)
        rep.add("parseval", abs(float((coeffs**2).sum()) - float((x**2).sum())), tol["parseval"], j)
        if j == chain.depth:
            continue
        nc = pool_norm_check(chain, bases, j, x)
        rep.add("compressive_norm", abs(nc.lhs_compressive - nc.rhs_cluster_sum),
                tol["compressive_norm"], j)
        phi = compressive_basis(chain, bases, j).to_dense()
        parent = chain.assignments[j].parent
        spread = 0.0
        for p in range(chain.assignments[j].num_clusters):
            block = phi[parent == p]
            spread = max(spread, float(np.abs(block - block[0]).max()))
        rep.add("cluster_constant", spread, tol["cluster_constant"], j)
        dense = haar_pool(compressive_basis(chain, bases, j), x)
        fast = fast_haar_pool(chain, wt, bases, x, j)
        rep.add("fast_vs_dense", np.abs(dense - fast).max(), tol["fast_vs_dense"], j)
    return rep
