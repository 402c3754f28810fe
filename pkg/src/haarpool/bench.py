"""Timing harness for HaarPooling on random graphs.

Chains, bases and fast-pooling plans are built before the clock starts;
only the pooling of each batch is timed.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .basis import build_haar_bases, compressive_basis, compressive_nnz
from .chain import ChainSpec, build_chain
from .fast import MultiplyCounter, plan_fast_pool
from .graph import Graph, graph_from_arrays

log = logging.getLogger(__name__)

CSV_HEADER = ["edges", "nodes", "method", "mean_s", "std_s", "epsilon", "mults"]


@dataclass(frozen=True)
class BenchConfig:
    edge_counts: Sequence[int]
    density: float = 0.1
    batch: int = 50
    repeats: int = 5
    seed: int = 7
    method: str = "fast"
    channels: int = 16

    def validate(self) -> None:
        if not 0.0 < self.density <= 1.0:
            raise ValueError(f"density must lie in (0, 1], got {self.density}")
        if self.batch < 1:
            raise ValueError("empty batch")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.method not in ("fast", "dense"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.edge_counts:
            raise ValueError("no edge counts given")

    def nodes_for(self, edges: int) -> int:
        return max(2, round(math.sqrt(2.0 * edges / self.density)))


@dataclass(frozen=True)
class BenchRecord:
    edge_count: int
    node_count: int
    method: str
    mean_time_seconds: float
    std_time_seconds: float
    basis_sparsity: float
    multiply_count: int
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def random_graph(n: int, density: float, seed: int) -> Graph:
    """G(n, p) with unit weights; pair (u, v) kept with probability ``density``."""
    if n < 2:
        raise ValueError(f"random graphs need at least 2 nodes, got {n}")
    rng = np.random.default_rng(seed)
    us, vs = [], []
    if density > 0:
        for u in range(n - 1):
            hits = np.flatnonzero(rng.random(n - u - 1) < density)
            if hits.size:
                us.append(np.full(hits.size, u, dtype=np.int64))
                vs.append(hits + u + 1)
    if not us:
        e = np.empty(0, dtype=np.int64)
        return graph_from_arrays(n, e, e)
    return graph_from_arrays(n, np.concatenate(us), np.concatenate(vs))


def bench_chain(g: Graph):
    """Single pooling layer onto a quarter of the nodes, degree-greedy clusters."""
    return build_chain(g, ChainSpec(level_sizes=[max(1, g.num_nodes // 4)], method="degree-greedy"))


def _instance_seeds(cfg: BenchConfig, edges: int) -> list[int]:
    ss = np.random.SeedSequence([cfg.seed, edges])
    return [int(s.generate_state(1, np.uint64)[0]) for s in ss.spawn(cfg.batch)]


def prepare_instance(cfg: BenchConfig, n: int, seed: int, method: str | None = None):
    """Build graph, chain and pooling operator; returns (pool_fn, nnz, rows, cols, mults)."""
    method = method or cfg.method
    g = random_graph(n, cfg.density, seed)
    chain = bench_chain(g)
    n1 = chain.layers[1].num_nodes
    x = np.random.default_rng(seed ^ 0x5EED).standard_normal((n, cfg.channels))
    if method == "fast":
        bases = build_haar_bases(chain, from_layer=1)
        plan = plan_fast_pool(chain, bases, 0)
        counter = MultiplyCounter()
        plan.apply(x, counter)
        mults = counter.count

        def pool():
            return plan.apply(x)
    else:
        bases = build_haar_bases(chain)
        phi_t = compressive_basis(chain, bases, 0).matrix.to_scipy().T.tocsr()
        mults = phi_t.nnz * cfg.channels

        def pool():
            return np.asarray(phi_t @ x)
    nnz = compressive_nnz(chain, bases, 0)
    return pool, nnz, n, n1, mults


def run_bench(cfg: BenchConfig) -> list[BenchRecord]:
    cfg.validate()
    records = []
    for edges in cfg.edge_counts:
        n = cfg.nodes_for(edges)
        try:
            times = np.zeros((cfg.batch, cfg.repeats))
            nnz = mults = 0
            cells = 0
            for b, seed in enumerate(_instance_seeds(cfg, edges)):
                pool, k, rows, cols, m = prepare_instance(cfg, n, seed)
                nnz += k
                cells += rows * cols
                mults += m
                for r in range(cfg.repeats):
                    t0 = time.perf_counter()
                    pool()
                    times[b, r] = time.perf_counter() - t0
            per_batch = np.maximum(times.sum(axis=0), 1e-12)
            std = float(per_batch.std(ddof=1)) if cfg.repeats > 1 else 0.0
            rec = BenchRecord(edges, n, cfg.method, float(per_batch.mean()), std, nnz / cells, mults)
        except MemoryError:
            rec = BenchRecord(edges, n, cfg.method, math.nan, math.nan, math.nan, 0, "insufficient memory")
        except Exception as exc:  # noqa: BLE001 - failures become rows
            log.exception("benchmark at %d edges failed", edges)
            rec = BenchRecord(edges, n, cfg.method, math.nan, math.nan, math.nan, 0, str(exc))
        log.info("edges=%d nodes=%d mean=%.3es mults=%d", edges, n, rec.mean_time_seconds, rec.multiply_count)
        records.append(rec)
    return records


def write_bench_csv(records: Sequence[BenchRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([
                r.edge_count, r.node_count, r.method,
                format(r.mean_time_seconds, ".6g"), format(r.std_time_seconds, ".6g"),
                format(r.basis_sparsity, ".6g"), r.multiply_count,
            ])


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float


def fit_scaling(records, quantity: str = "time") -> ScalingFit:
    """Least-squares slope of log(quantity) against log(node count).

    ``records`` is a sequence of :class:`BenchRecord` or of ``(nodes, value)``
    pairs; ``quantity`` picks ``"time"`` or ``"mults"`` from records.
    """
    pts = []
    for r in records:
        if isinstance(r, BenchRecord):
            if not r.ok:
                continue
            val = r.mean_time_seconds if quantity == "time" else r.multiply_count
            pts.append((r.node_count, val))
        else:
            pts.append((r[0], r[1]))
    if len(pts) < 3:
        raise ValueError(f"need at least 3 records to fit a slope, got {len(pts)}")
    n, v = np.array(pts, dtype=float).T
    if np.unique(n).size < 2:
        raise ValueError("all records share one node count; slope is undefined")
    if np.any(n <= 0) or np.any(v <= 0):
        raise ValueError("log-log fit needs positive node counts and values")
    res = stats.linregress(np.log(n), np.log(v))
    return ScalingFit(float(res.slope), float(res.intercept), float(res.rvalue**2))
