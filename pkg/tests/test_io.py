import json

import numpy as np
import pytest

from haarpool import io
from haarpool.basis import build_haar_bases
from haarpool.io import FormatError

from conftest import random_chain


def test_graph_round_trip(tmp_path, eight_node_graph):
    p = tmp_path / "g.tsv"
    io.write_graph(eight_node_graph, p)
    assert p.read_text().splitlines()[0] == "N 8"
    assert io.read_graph(p) == eight_node_graph


def test_graph_errors(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("N 3\n0\t1\t1.0\n1\t2\n")
    with pytest.raises(FormatError, match=":3:"):
        io.read_graph(p)
    p.write_text("N 3\n0\t5\t1.0\n")
    with pytest.raises(FormatError, match="out of range"):
        io.read_graph(p)
    p.write_text("nodes 3\n")
    with pytest.raises(FormatError, match="header"):
        io.read_graph(p)


def test_chain_round_trip(tmp_path):
    chain = random_chain(np.random.default_rng(4))
    p = tmp_path / "c.json"
    io.write_chain(chain, p)
    assert io.read_chain(p) == chain
    io.write_chain(io.read_chain(p), tmp_path / "c2.json")
    assert p.read_bytes() == (tmp_path / "c2.json").read_bytes()


def test_chain_length_mismatch_names_layer(tmp_path, eight_node_chain):
    doc = io.chain_to_dict(eight_node_chain)
    doc["assignments"][1] = [0, 0]
    with pytest.raises(FormatError, match="layer 1: assignment has 2 entries, layer has 3 nodes"):
        io.chain_from_dict(doc)
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(FormatError, match="invalid JSON"):
        io.read_chain(p)


def test_sparse_round_trip(tmp_path, eight_node_chain):
    bases = build_haar_bases(eight_node_chain)
    paths = io.write_bases(bases, tmp_path / "b")
    assert [p.name for p in paths] == ["basis_layer_0.txt", "basis_layer_1.txt", "basis_layer_2.txt"]
    for b, p in zip(bases, paths):
        assert io.read_sparse(p) == b.matrix


def test_sparse_errors(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("SPARSE 2 2 2\n0\t0\t1.0\n")
    with pytest.raises(FormatError, match="announces 2"):
        io.read_sparse(p)
    p.write_text("SPARSE 2 2 1\n3\t0\t1.0\n")
    with pytest.raises(FormatError, match="outside"):
        io.read_sparse(p)


def test_features_round_trip(tmp_path):
    x = np.random.default_rng(0).standard_normal((5, 3)) * 1e-7
    p = tmp_path / "x.csv"
    io.write_features(x, p)
    assert np.array_equal(io.read_features(p), x)


def test_features_nan_location(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("1.0,2.0\n3.0,nan\n")
    with pytest.raises(FormatError, match="row 2, column 2"):
        io.read_features(p)
    p.write_text("1.0,2.0\n3.0\n")
    with pytest.raises(FormatError, match="columns"):
        io.read_features(p)
