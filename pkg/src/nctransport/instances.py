"""Instance files: JSON descriptions of a calculus plus states (schema 1).

Graph instance:

    {"schema": 1, "kind": "graph", "nodes": 2,
     "m": [0.5, 0.5],
     "b": [[0, 1, 1.0]],
     "rho0": [0.4, 1.6], "rho1": [1.5, 0.5],
     "a": [0.3, -0.9]}

Matrix (Lindblad) instance:

    {"schema": 1, "kind": "lindblad",
     "blocks": [[2, 0.5]],
     "jumps": [{"re": [[[0, 0.5], [0.5, 0]]], "im": [[[0, 0], [0, 0]]]}],
     "rho0": {"re": [[[1.4, 0.2], [0.2, 0.6]]], "im": [[[0, 0.1], [-0.1, 0]]]},
     "rho1": {"diag": [[0.4, 1.6]]}}

Matrices are given per block: "re"/"im" are lists of dim x dim rows per
block, or "diag" gives per-block diagonals.  "rho0"/"rho1"/"rho"/"a" are
optional depending on the command.  Graph densities and observables are
per-node value arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraSpec, Density, Element, element_from_values
from .calculus import (Derivation, GraphSpec, LindbladSpec, graph_calculus,
                       lindblad_calculus)
from .errors import ValidationError


@dataclass(frozen=True)
class Instance:
    kind: str
    derivation: Derivation
    rho0: Density | None
    rho1: Density | None
    a: Element | None
    raw: dict


def _fail(field: str, msg: str):
    raise ValidationError(f"instance field '{field}': {msg}")


def _block_matrices(algebra: AlgebraSpec, node, field: str) -> Element:
    if isinstance(node, dict) and "diag" in node:
        diags = node["diag"]
        if len(diags) != algebra.n_blocks:
            _fail(field, f"expected {algebra.n_blocks} diagonal blocks")
        blocks = []
        for dim, dvals in zip(algebra.dims, diags):
            v = np.asarray(dvals, dtype=float)
            if v.shape != (dim,):
                _fail(field, f"diagonal length {v.shape} != block dim {dim}")
            blocks.append(np.diag(v).astype(complex))
        return Element(algebra, tuple(blocks))
    if not isinstance(node, dict) or "re" not in node:
        _fail(field, "expected an object with 're'/'im' or 'diag'")
    re = node["re"]
    im = node.get("im")
    if len(re) != algebra.n_blocks:
        _fail(field, f"expected {algebra.n_blocks} blocks")
    blocks = []
    for k, dim in enumerate(algebra.dims):
        r = np.asarray(re[k], dtype=float)
        if r.shape != (dim, dim):
            _fail(field, f"block {k} shape {r.shape} != ({dim}, {dim})")
        if im is not None:
            ii = np.asarray(im[k], dtype=float)
            if ii.shape != (dim, dim):
                _fail(field, f"block {k} imaginary shape mismatch")
            blocks.append(r + 1j * ii)
        else:
            blocks.append(r.astype(complex))
    return Element(algebra, tuple(blocks))


def _load_graph(doc: dict) -> tuple[Derivation, AlgebraSpec]:
    try:
        n = int(doc["nodes"])
    except (KeyError, TypeError, ValueError):
        _fail("nodes", "missing or not an integer")
    m = np.asarray(doc.get("m", [1.0] * n), dtype=float)
    if m.shape != (n,):
        _fail("m", f"expected {n} node weights")
    b = np.zeros((n, n))
    for row in doc.get("b", []):
        if len(row) != 3:
            _fail("b", f"edge row {row!r} is not [i, j, weight]")
        i, j, w = int(row[0]), int(row[1]), float(row[2])
        if not (0 <= i < n and 0 <= j < n):
            _fail("b", f"edge ({i}, {j}) out of range")
        b[i, j] = w
        b[j, i] = w
    g = GraphSpec(n, b, m)
    return graph_calculus(g), g.algebra


def _load_lindblad(doc: dict) -> tuple[Derivation, AlgebraSpec]:
    try:
        blocks = tuple((int(dim), float(w)) for dim, w in doc["blocks"])
    except (KeyError, TypeError, ValueError):
        _fail("blocks", "expected a list of [dim, weight] pairs")
    algebra = AlgebraSpec(blocks)
    jumps = []
    for k, node in enumerate(doc.get("jumps", [])):
        v = _block_matrices(algebra, node, f"jumps[{k}]")
        jumps.append(v.hermitian_part())
    if not jumps:
        _fail("jumps", "at least one jump operator is required")
    spec = LindbladSpec(algebra, tuple(jumps))
    return lindblad_calculus(spec), algebra


def _state(kind: str, algebra: AlgebraSpec, doc: dict, field: str,
           density: bool):
    if field not in doc:
        return None
    node = doc[field]
    if kind == "graph":
        v = np.asarray(node, dtype=float)
        if v.shape != (algebra.n_blocks,):
            _fail(field, f"expected {algebra.n_blocks} node values")
        x = element_from_values(algebra, v)
    else:
        x = _block_matrices(algebra, node, field).hermitian_part()
    if density:
        try:
            return Density.from_element(x)
        except ValidationError as exc:
            _fail(field, str(exc))
    return x


def load_instance(path: str) -> Instance:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read instance file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"malformed instance file at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("instance file must contain a JSON object")
    if doc.get("schema") != 1:
        _fail("schema", "must be 1")
    kind = doc.get("kind")
    if kind == "graph":
        d, algebra = _load_graph(doc)
    elif kind == "lindblad":
        d, algebra = _load_lindblad(doc)
    else:
        _fail("kind", "must be 'graph' or 'lindblad'")
    rho0 = _state(kind, algebra, doc, "rho0", True)
    if rho0 is None:
        rho0 = _state(kind, algebra, doc, "rho", True)
    rho1 = _state(kind, algebra, doc, "rho1", True)
    a = _state(kind, algebra, doc, "a", False)
    return Instance(kind, d, rho0, rho1, a, doc)


# -- built-in instances ----------------------------------------------------------

_BUILTINS = {
    "two_point": {
        "schema": 1, "kind": "graph", "nodes": 2,
        "m": [0.5, 0.5], "b": [[0, 1, 1.0]],
        "rho0": [0.4, 1.6], "rho1": [1.5, 0.5], "a": [0.3, -0.9],
    },
    "four_cycle": {
        "schema": 1, "kind": "graph", "nodes": 4,
        "m": [0.25, 0.25, 0.25, 0.25],
        "b": [[0, 1, 1.0], [1, 2, 1.0], [2, 3, 1.0], [3, 0, 1.0]],
        "rho0": [2.0, 0.8, 0.4, 0.8], "rho1": [0.4, 1.2, 1.6, 0.8],
        "a": [1.0, -0.5, 0.25, 0.0],
    },
    "qubit_depol": {
        "schema": 1, "kind": "lindblad",
        "blocks": [[2, 0.5]],
        "jumps": [
            {"re": [[[0.0, 0.5], [0.5, 0.0]]]},
            {"im": [[[0.0, -0.5], [0.5, 0.0]]],
             "re": [[[0.0, 0.0], [0.0, 0.0]]]},
            {"re": [[[0.5, 0.0], [0.0, -0.5]]]},
        ],
        "rho0": {"re": [[[1.4, 0.2], [0.2, 0.6]]],
                 "im": [[[0.0, 0.1], [-0.1, 0.0]]]},
        "rho1": {"re": [[[0.4, 0.0], [0.0, 1.6]]],
                 "im": [[[0.0, -0.16], [0.16, 0.0]]]},
        "a": {"re": [[[0.7, 0.3], [0.3, -0.2]]],
              "im": [[[0.0, -0.4], [0.4, 0.0]]]},
    },
}


def builtin_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTINS))


def builtin_document(name: str) -> dict:
    import copy
    if name not in _BUILTINS:
        raise ValidationError(
            f"unknown built-in instance {name!r}; choose from {sorted(_BUILTINS)}")
    return copy.deepcopy(_BUILTINS[name])


def write_builtin(name: str, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(builtin_document(name), fh, indent=2)
        fh.write("\n")


def builtin_instance(name: str) -> Instance:
    import tempfile, os
    doc = builtin_document(name)
    fd, path = tempfile.mkstemp(suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh)
        return load_instance(path)
    finally:
        os.unlink(path)
