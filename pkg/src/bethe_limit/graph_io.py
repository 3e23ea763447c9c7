"""Plain-text graph files.

Line 1 is ``d k n_vars n_factors``; every further line is one edge ``v f``
with 0-based ids, parallel edges repeated.  A header with ``d = k = 0``
makes no degree promise (used for trees and other irregular graphs);
otherwise the degrees are audited on load.  Blank lines and lines starting
with ``#`` after the header are ignored.
"""
from __future__ import annotations

import numpy as np

from .errors import GraphError, ParseError
from .factor_graph import FactorGraph


def _ints(line: str, count: int, lineno: int) -> list[int]:
    parts = line.split()
    if len(parts) != count:
        raise ParseError(lineno, f"expected {count} integers, got {len(parts)}")
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise ParseError(lineno, f"non-integer token in {line.strip()!r}") from None
    if any(v < 0 for v in vals):
        raise ParseError(lineno, "negative value")
    return vals


def parse_graph_file(text: str) -> FactorGraph:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(1, "missing header 'd k n_vars n_factors'")
    d, k, n_vars, n_factors = _ints(lines[0], 4, 1)
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        v, f = _ints(s, 2, lineno)
        if v >= n_vars or f >= n_factors:
            raise ParseError(lineno, f"edge ({v}, {f}) references a node beyond the header counts")
        edges.append((v, f))
    promise = None if d == 0 and k == 0 else (d, k)
    if promise is not None and (d < 1 or k < 1):
        raise ParseError(1, "degrees must both be positive or both be 0")
    return FactorGraph(n_vars, n_factors, np.array(edges, dtype=np.int64).reshape(-1, 2), promise)


def format_graph(graph: FactorGraph) -> str:
    if graph.biregular is not None:
        d, k = graph.biregular
    else:
        dv, df = set(graph.var_degrees.tolist()), set(graph.factor_degrees.tolist())
        d, k = (dv.pop(), df.pop()) if len(dv) == 1 and len(df) == 1 else (0, 0)
    out = [f"{d} {k} {graph.n_vars} {graph.n_factors}"]
    out += [f"{v} {f}" for v, f in graph.edges.tolist()]
    return "\n".join(out) + "\n"


def read_graph(path) -> FactorGraph:
    with open(path) as fh:
        return parse_graph_file(fh.read())


def write_graph(graph: FactorGraph, path) -> None:
    if graph.n_vars == 0:
        raise GraphError("refusing to write an empty graph")
    with open(path, "w") as fh:
        fh.write(format_graph(graph))
