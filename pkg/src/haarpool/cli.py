"""Command-line entry point: ``haarpool <subcommand> ...``.

Exit status is 0 on success, 1 on runtime failure (including failed
verification) and 2 on usage errors. The log level comes from the
``HAARPOOL_LOG_LEVEL`` environment variable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import io
from .basis import basis_from_matrix, build_haar_bases, compressive_basis
from .bench import BenchConfig, fit_scaling, run_bench, write_bench_csv
from .chain import METHODS, ChainSpec, build_chain
from .fast import compute_weights, fast_haar_pool
from .graph import check_chain
from .transforms import haar_pool
from .verify import DEFAULT_TOLERANCES, run_verify

log = logging.getLogger("haarpool")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {v}")
    return v


def _tolerance(text: str) -> tuple[str, float]:
    name, sep, val = text.partition("=")
    if not sep or name not in DEFAULT_TOLERANCES:
        raise argparse.ArgumentTypeError(
            f"expected NAME=VALUE with NAME in {sorted(DEFAULT_TOLERANCES)}"
        )
    try:
        return name, float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance value {val!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="haarpool", description="Haar graph pooling toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("build-chain", help="cluster a graph into a coarse-grained chain")
    c.add_argument("--graph", required=True, type=Path)
    sizes = c.add_mutually_exclusive_group(required=True)
    sizes.add_argument("--levels", type=_int_list, help="cluster counts per level, e.g. 3,1")
    sizes.add_argument("--ratio", type=float, help="reduction ratio per level (needs --num-levels)")
    c.add_argument("--num-levels", type=int)
    c.add_argument("--method", choices=METHODS, default="spectral")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True, type=Path)

    b = sub.add_parser("build-basis", help="write the Haar basis of every layer")
    b.add_argument("--chain", required=True, type=Path)
    b.add_argument("--out-dir", required=True, type=Path)

    q = sub.add_parser("pool", help="apply one HaarPooling layer to a feature matrix")
    q.add_argument("--chain", required=True, type=Path)
    q.add_argument("--bases", type=Path, help="directory of basis files (built from the chain if omitted)")
    q.add_argument("--features", required=True, type=Path)
    q.add_argument("--layer", required=True, type=_nonneg_int)
    q.add_argument("--out", required=True, type=Path)
    q.add_argument("--fast", action="store_true", help="use the weighted-sum algorithm")

    v = sub.add_parser("verify", help="check all basis and transform invariants")
    v.add_argument("--chain", required=True, type=Path)
    v.add_argument("--bases", type=Path)
    v.add_argument("--features", type=Path)
    v.add_argument("--report", required=True, type=Path)
    v.add_argument("--seed", type=int, default=7)
    v.add_argument("--full-stack", action="store_true", help="require a single top-level node")
    v.add_argument("--tol", type=_tolerance, action="append", default=[], metavar="NAME=VALUE")

    k = sub.add_parser("bench", help="time pooling on random graphs")
    k.add_argument("--edges", required=True, type=_int_list)
    k.add_argument("--density", type=float, default=0.1)
    k.add_argument("--batch", type=int, default=50)
    k.add_argument("--repeats", type=int, default=5)
    k.add_argument("--method", choices=("fast", "dense"), default="fast")
    k.add_argument("--seed", type=int, default=7)
    k.add_argument("--channels", type=int, default=16)
    k.add_argument("--out", required=True, type=Path)
    k.add_argument("--plot", type=Path, help="write a log-log chart (e.g. out.svg)")
    return p


def parse_cli(argv=None) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    if args.command == "build-chain" and args.ratio is not None and not args.num_levels:
        build_parser().error("--ratio requires --num-levels")
    return args


def _read_bases(chain, directory: Path, layers):
    """Bases for the requested layers; others are left as None."""
    out = [None] * (chain.depth + 1)
    for j in layers:
        path = io.basis_path(directory, j)
        if not path.exists():
            raise FileNotFoundError(f"missing basis file {path}")
        out[j] = basis_from_matrix(chain, j, io.read_sparse(path))
    return out


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_build_chain(args) -> int:
    g = io.read_graph(args.graph)
    spec = ChainSpec(
        level_sizes=args.levels, reduction_ratio=args.ratio, num_levels=args.num_levels,
        method=args.method, seed=args.seed,
    )
    chain = build_chain(g, spec)
    io.write_chain(chain, args.out)
    log.info("chain sizes %s written to %s", chain.sizes, args.out)
    return 0


def cmd_build_basis(args) -> int:
    chain = io.read_chain(args.chain)
    paths = io.write_bases(build_haar_bases(chain), args.out_dir)
    log.info("wrote %d basis files to %s", len(paths), args.out_dir)
    return 0


def cmd_pool(args) -> int:
    chain = io.read_chain(args.chain)
    check_chain(chain)
    j = args.layer
    if j >= chain.depth:
        raise ValueError(f"--layer {j} out of range; chain has {chain.depth} pooling layers")
    x = io.read_features(args.features)
    needed = range(j + 1, chain.depth + 1) if args.fast else [j]
    if args.bases is not None:
        bases = _read_bases(chain, args.bases, needed)
    else:
        bases = build_haar_bases(chain, from_layer=min(needed))
    if args.fast:
        y = fast_haar_pool(chain, compute_weights(chain), bases, x, j)
    else:
        y = haar_pool(compressive_basis(chain, bases, j), x)
    io.write_features(y, args.out)
    return 0


def cmd_verify(args) -> int:
    chain = io.read_chain(args.chain)
    bases = None
    basis_id = "built"
    if args.bases is not None:
        bases = _read_bases(chain, args.bases, range(chain.depth + 1))
        basis_id = str(args.bases)
    features = io.read_features(args.features) if args.features else None
    rep = run_verify(
        chain, bases, features, seed=args.seed, tolerances=dict(args.tol),
        full_stack=args.full_stack, chain_id=_sha256(args.chain), basis_id=basis_id,
    )
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(rep.to_dict(), fh, indent=2)
        fh.write("\n")
    for c in rep.checks:
        where = "" if c.layer is None else f"[layer {c.layer}]"
        print(f"{c.status.upper():4} {c.name}{where} residual={c.residual:.3e} tol={c.tolerance:.1e}"
              + (f"  {c.detail}" if c.detail else ""))
    return 0 if rep.passed else 1


def cmd_bench(args) -> int:
    cfg = BenchConfig(
        edge_counts=args.edges, density=args.density, batch=args.batch, repeats=args.repeats,
        seed=args.seed, method=args.method, channels=args.channels,
    )
    records = run_bench(cfg)
    write_bench_csv(records, args.out)
    fit = None
    good = [r for r in records if r.ok]
    if len(good) >= 3 and len({r.node_count for r in good}) > 1:
        fit = fit_scaling(good, "mults")
        tfit = fit_scaling(good, "time")
        print(f"multiply-count slope {fit.slope:.3f} (R^2 {fit.r_squared:.4f});"
              f" wall-clock slope {tfit.slope:.3f} (R^2 {tfit.r_squared:.4f})")
    if args.plot is not None:
        from .plotting import plot_bench

        plot_bench(records, args.plot, fit)
    return 0 if len(good) == len(records) else 1


COMMANDS = {
    "build-chain": cmd_build_chain,
    "build-basis": cmd_build_basis,
    "pool": cmd_pool,
    "verify": cmd_verify,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("HAARPOOL_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = parse_cli(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"haarpool: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
