"""JSON codecs for matrices, ensembles, POVMs, instruments and trees.

Matrices travel as {"rows", "cols", "data": [[re, im], ...]} row-major;
trees use the "locc-tree/1" schema of nested {"party", "edges": [{"kraus",
"child"}]} objects with {"label"} leaves. ``canonical_dumps`` fixes key
order and separators so equal payloads serialize to identical bytes.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .quantum import CpMap, Ensemble, Instrument, MultipartiteSpace, Povm
from .tree import Edge, Leaf, Node, ProtocolTree

TREE_SCHEMA = "locc-tree/1"


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def digest(obj) -> str:
    return hashlib.sha256(canonical_dumps(obj).encode()).hexdigest()


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    data = np.asarray(obj["data"], dtype=np.float64)
    if data.shape != (rows * cols, 2):
        raise ValueError(f"matrix payload has {data.shape[0]} entries, expected {rows * cols}")
    return (data[:, 0] + 1j * data[:, 1]).reshape(rows, cols)


def ensemble_to_json(e: Ensemble) -> dict:
    return {
        "party_dims": list(e.space.party_dims),
        "members": [
            {"weight": float(p), "state": matrix_to_json(rho)} for p, rho in e.members
        ],
    }


def ensemble_from_json(obj: dict) -> Ensemble:
    space = MultipartiteSpace(tuple(obj["party_dims"]))
    members = tuple(
        (float(m["weight"]), matrix_from_json(m["state"])) for m in obj["members"]
    )
    return Ensemble(space, members)


def povm_to_json(p: Povm) -> dict:
    return {"dim": p.dim, "elements": [matrix_to_json(e) for e in p.elements]}


def povm_from_json(obj: dict) -> Povm:
    return Povm(int(obj["dim"]), tuple(matrix_from_json(e) for e in obj["elements"]))


def instrument_to_json(inst: Instrument) -> dict:
    return {
        "in_dim": inst.in_dim,
        "branches": [
            {
                "label": label,
                "out_dim": cp.out_dim,
                "kraus": [matrix_to_json(k) for k in cp.kraus],
            }
            for label, cp in inst.branches
        ],
    }


def instrument_from_json(obj: dict) -> Instrument:
    in_dim = int(obj["in_dim"])
    branches = tuple(
        (
            b["label"],
            CpMap(in_dim, int(b["out_dim"]), tuple(matrix_from_json(k) for k in b["kraus"])),
        )
        for b in obj["branches"]
    )
    return Instrument(in_dim, branches)


def _vertex_to_json(vertex: Node | Leaf) -> dict:
    if isinstance(vertex, Leaf):
        return {"label": int(vertex.label)}
    return {
        "party": vertex.party,
        "edges": [
            {"kraus": [matrix_to_json(k) for k in e.kraus], "child": _vertex_to_json(e.child)}
            for e in vertex.edges
        ],
    }


def _vertex_from_json(obj: dict) -> Node | Leaf:
    if "label" in obj:
        return Leaf(int(obj["label"]))
    edges = tuple(
        Edge(
            tuple(matrix_from_json(k) for k in e["kraus"]),
            _vertex_from_json(e["child"]),
        )
        for e in obj["edges"]
    )
    return Node(int(obj["party"]), edges)


def tree_to_json(tree: ProtocolTree) -> dict:
    return {
        "version": TREE_SCHEMA,
        "party_dims": list(tree.space.party_dims),
        "root": _vertex_to_json(tree.root),
    }


def tree_from_json(obj: dict) -> ProtocolTree:
    version = obj.get("version")
    if version != TREE_SCHEMA:
        raise ValueError(f"unsupported tree schema {version!r}, expected {TREE_SCHEMA!r}")
    space = MultipartiteSpace(tuple(obj["party_dims"]))
    return ProtocolTree(space, _vertex_from_json(obj["root"]))
