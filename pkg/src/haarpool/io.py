"""Readers and writers for graphs, chains, sparse bases and feature matrices.

Text formats write floats with 17 significant digits, which round-trips
every double exactly.
"""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .basis import SparseMatrix
from .graph import ClusterAssignment, CoarseChain, Graph, GraphError, graph_from_arrays


class FormatError(ValueError):
    """Malformed input file; the message carries the location."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _where(path, lineno=None) -> str:
    return f"{path}:{lineno}" if lineno is not None else str(path)


def _parse_float(tok: str, where: str) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise FormatError(f"{where}: cannot parse {tok!r} as a number") from None
    if not math.isfinite(val):
        raise FormatError(f"{where}: non-finite value {tok!r}")
    return val


def _parse_int(tok: str, where: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"{where}: cannot parse {tok!r} as an integer") from None


# graphs: "N <num_nodes>" then "u<TAB>v<TAB>w" per edge

def write_graph(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"N {g.num_nodes}\n")
        for u, v, w in zip(g.src, g.dst, g.weight):
            fh.write(f"{u}\t{v}\t{fmt(w)}\n")


def read_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty graph file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "N":
        raise FormatError(f"{_where(path, 1)}: expected header 'N <num_nodes>'")
    n = _parse_int(head[1], _where(path, 1))
    us, vs, ws = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"{_where(path, lineno)}: expected 'u<TAB>v<TAB>w'")
        us.append(_parse_int(parts[0], _where(path, lineno)))
        vs.append(_parse_int(parts[1], _where(path, lineno)))
        ws.append(_parse_float(parts[2], _where(path, lineno)))
    try:
        return graph_from_arrays(n, np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64), np.array(ws))
    except GraphError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# chains: JSON

def chain_to_dict(chain: CoarseChain) -> dict:
    return {
        "layers": [
            {"num_nodes": g.num_nodes, "edges": [[u, v, w] for u, v, w in g.edges()]}
            for g in chain.layers
        ],
        "assignments": [a.parent.tolist() for a in chain.assignments],
        "orderings": [o.tolist() for o in chain.orderings],
    }


def chain_from_dict(doc: dict, source="chain") -> CoarseChain:
    if not isinstance(doc, dict):
        raise FormatError(f"{source}: top level must be a JSON object")
    for key in ("layers", "assignments"):
        if not isinstance(doc.get(key), list):
            raise FormatError(f"{source}: missing list {key!r}")
    layers = []
    for j, lay in enumerate(doc["layers"]):
        if not isinstance(lay, dict) or not isinstance(lay.get("num_nodes"), int):
            raise FormatError(f"{source}: layer {j} needs an integer 'num_nodes'")
        edges = np.asarray(lay.get("edges", []), dtype=float).reshape(-1, 3)
        try:
            layers.append(graph_from_arrays(lay["num_nodes"], edges[:, 0], edges[:, 1], edges[:, 2]))
        except GraphError as exc:
            raise FormatError(f"{source}: layer {j}: {exc}") from exc
    sizes = [g.num_nodes for g in layers]
    if len(doc["assignments"]) != len(layers) - 1:
        raise FormatError(
            f"{source}: {len(layers)} layers need {len(layers) - 1} assignments,"
            f" got {len(doc['assignments'])}"
        )
    assignments = []
    for j, parent in enumerate(doc["assignments"]):
        if len(parent) != sizes[j]:
            raise FormatError(
                f"{source}: layer {j}: assignment has {len(parent)} entries, layer has {sizes[j]} nodes"
            )
        assignments.append(ClusterAssignment(np.asarray(parent, dtype=np.int64), sizes[j + 1]))
    orderings = doc.get("orderings", [])
    if len(orderings) != len(assignments):
        raise FormatError(
            f"{source}: expected {len(assignments)} orderings, got {len(orderings)}"
        )
    for j, o in enumerate(orderings):
        if len(o) != sizes[j]:
            raise FormatError(
                f"{source}: layer {j}: ordering has {len(o)} entries, layer has {sizes[j]} nodes"
            )
    return CoarseChain(tuple(layers), tuple(assignments), tuple(np.asarray(o, dtype=np.int64) for o in orderings))


def write_chain(chain: CoarseChain, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(chain_to_dict(chain), fh, separators=(",", ":"))
        fh.write("\n")


def read_chain(path) -> CoarseChain:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{_where(path, exc.lineno)}: invalid JSON ({exc.msg})") from exc
    return chain_from_dict(doc, source=str(path))


# sparse matrices: "SPARSE rows cols nnz" then "row<TAB>col<TAB>value"

def write_sparse(m: SparseMatrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"SPARSE {m.rows} {m.cols} {m.nnz}\n")
        fh.writelines(
            f"{r}\t{c}\t{fmt(v)}\n" for r, c, v in zip(m.row_idx, m.col_idx, m.values)
        )


def read_sparse(path) -> SparseMatrix:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 4 or head[0] != "SPARSE":
        raise FormatError(f"{_where(path, 1)}: expected header 'SPARSE <rows> <cols> <nnz>'")
    rows, cols, nnz = (_parse_int(t, _where(path, 1)) for t in head[1:])
    body = [(i, ln) for i, ln in enumerate(lines[1:], start=2) if ln.strip()]
    if len(body) != nnz:
        raise FormatError(f"{path}: header announces {nnz} entries, found {len(body)}")
    r = np.empty(nnz, dtype=np.int64)
    c = np.empty(nnz, dtype=np.int64)
    v = np.empty(nnz)
    for t, (lineno, line) in enumerate(body):
        parts = line.split("\t")
        where = _where(path, lineno)
        if len(parts) != 3:
            raise FormatError(f"{where}: expected 'row<TAB>col<TAB>value'")
        r[t] = _parse_int(parts[0], where)
        c[t] = _parse_int(parts[1], where)
        v[t] = _parse_float(parts[2], where)
        if not (0 <= r[t] < rows and 0 <= c[t] < cols):
            raise FormatError(f"{where}: index ({r[t]}, {c[t]}) outside {rows}x{cols}")
    try:
        return SparseMatrix.from_triplets(rows, cols, r, c, v)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def basis_path(directory, layer: int) -> Path:
    return Path(directory) / f"basis_layer_{layer}.txt"


def write_bases(bases, directory) -> list[Path]:
    os.makedirs(directory, exist_ok=True)
    out = []
    for b in bases:
        if b is None:
            continue
        p = basis_path(directory, b.layer)
        write_sparse(b.matrix, p)
        out.append(p)
    return out


# features: CSV, one row per node

def write_features(x, path) -> None:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in x:
            w.writerow([fmt(v) for v in row])


def read_features(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not t.strip() for t in rec):
                continue
            vals = []
            for col, tok in enumerate(rec, start=1):
                vals.append(_parse_float(tok.strip(), f"{path}: row {lineno}, column {col}"))
            if rows and len(vals) != len(rows[0]):
                raise FormatError(
                    f"{path}: row {lineno} has {len(vals)} columns, expected {len(rows[0])}"
                )
            rows.append(vals)
    if not rows:
        raise FormatError(f"{path}: no feature rows")
    return np.array(rows, dtype=float)
