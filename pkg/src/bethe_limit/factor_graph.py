"""Bipartite factor (multi)graphs, generators and girth.

Edges are ``(variable, factor)`` pairs and may repeat; a factor that lists a
variable twice sees that variable's bit twice in its occupancy.  A factor's
*slots* are its incident edges in increasing edge-id order.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import (
    DegreeMismatch,
    DepthTooLarge,
    DivisibilityError,
    GraphError,
    SimpleGraphTimeout,
)

DEFAULT_MAX_NODES = 2_000_000


class DirectedEdgeId(NamedTuple):
    """An edge together with a direction; ``index`` enumerates all 2|E| of them."""

    edge: int
    to_factor: bool

    @property
    def index(self) -> int:
        return 2 * self.edge + (0 if self.to_factor else 1)

    @classmethod
    def from_index(cls, index: int) -> "DirectedEdgeId":
        return cls(index // 2, index % 2 == 0)


@dataclass(frozen=True, eq=False)
class FactorGraph:
    n_vars: int
    n_factors: int
    edges: np.ndarray
    biregular: tuple[int, int] | None = None
    var_adjacency: tuple[np.ndarray, ...] = field(init=False, repr=False)
    factor_adjacency: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        if self.n_vars < 0 or self.n_factors < 0:
            raise GraphError("node counts must be nonnegative")
        if len(edges):
            if edges[:, 0].min() < 0 or edges[:, 0].max() >= self.n_vars:
                raise GraphError("variable id out of range")
            if edges[:, 1].min() < 0 or edges[:, 1].max() >= self.n_factors:
                raise GraphError("factor id out of range")
        object.__setattr__(self, "var_adjacency", _group(edges[:, 0], self.n_vars))
        object.__setattr__(self, "factor_adjacency", _group(edges[:, 1], self.n_factors))
        if self.biregular is not None:
            d, k = self.biregular
            object.__setattr__(self, "biregular", (int(d), int(k)))
            bad_v = np.flatnonzero(self.var_degrees != d)
            if len(bad_v):
                raise DegreeMismatch(f"variable {bad_v[0]}")
            bad_f = np.flatnonzero(self.factor_degrees != k)
            if len(bad_f):
                raise DegreeMismatch(f"factor {bad_f[0]}")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def var_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.n_vars)

    @cached_property
    def factor_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 1], minlength=self.n_factors)

    @cached_property
    def incidence(self) -> np.ndarray:
        """``(n_vars, n_factors)`` edge-multiplicity matrix."""
        inc = np.zeros((self.n_vars, self.n_factors), dtype=np.int64)
        np.add.at(inc, (self.edges[:, 0], self.edges[:, 1]), 1)
        return inc

    @cached_property
    def factor_edges(self) -> np.ndarray:
        """``(n_factors, k)`` edge ids per factor slot; requires equal factor degrees."""
        degs = set(self.factor_degrees.tolist())
        if len(degs) > 1:
            raise GraphError("factor degrees differ, slots are ragged")
        k = degs.pop() if degs else 0
        return np.array([adj for adj in self.factor_adjacency], dtype=np.int64).reshape(self.n_factors, k)

    @cached_property
    def factor_vars(self) -> np.ndarray:
        return self.edges[:, 0][self.factor_edges]

    def is_biregular(self, d: int, k: int) -> bool:
        return bool(np.all(self.var_degrees == d) and np.all(self.factor_degrees == k))

    def n_components(self) -> int:
        parent = list(range(self.n_vars + self.n_factors))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        comps = self.n_vars + self.n_factors
        for v, f in self.edges.tolist():
            ra, rb = find(v), find(self.n_vars + f)
            if ra != rb:
                parent[ra] = rb
                comps -= 1
        return comps

    def is_forest(self) -> bool:
        # parallel edges count as a cycle here
        return self.n_edges == self.n_vars + self.n_factors - self.n_components()

    def edge_multiset(self) -> list[tuple[int, int]]:
        return sorted(map(tuple, self.edges.tolist()))


def _group(ids: np.ndarray, n: int) -> tuple[np.ndarray, ...]:
    order = np.argsort(ids, kind="stable")
    counts = np.bincount(ids, minlength=n)
    out = tuple(np.split(order, np.cumsum(counts)[:-1])) if n else ()
    for arr in out:
        arr.setflags(write=False)
    return out


def relabel(graph: FactorGraph, var_perm, factor_perm) -> FactorGraph:
    """Graph with variable ``v`` renamed ``var_perm[v]`` and factor ``f`` renamed ``factor_perm[f]``."""
    var_perm = np.asarray(var_perm)
    factor_perm = np.asarray(factor_perm)
    edges = np.column_stack([var_perm[graph.edges[:, 0]], factor_perm[graph.edges[:, 1]]])
    return FactorGraph(graph.n_vars, graph.n_factors, edges, graph.biregular)


def generate_biregular(d: int, k: int, n_vars: int, seed=None, simple: bool = False,
                       max_retries: int = 1000) -> FactorGraph:
    """Configuration-model ``(d, k)``-biregular graph.

    Variable stubs are matched to factor stubs by a uniform random
    permutation.  With ``simple=True`` the draw is repeated until no parallel
    edge remains, giving up after ``max_retries`` draws.
    """
    if (n_vars * d) % k:
        raise DivisibilityError(f"n_vars*d = {n_vars * d} is not divisible by k = {k}")
    n_factors = n_vars * d // k
    rng = np.random.default_rng(seed)
    var_stubs = np.repeat(np.arange(n_vars), d)
    factor_stubs = np.repeat(np.arange(n_factors), k)
    for _ in range(max_retries):
        edges = np.column_stack([var_stubs, rng.permutation(factor_stubs)])
        if not simple or not _has_parallel(edges, n_factors):
            return FactorGraph(n_vars, n_factors, edges, (d, k))
    raise SimpleGraphTimeout(max_retries)


def _has_parallel(edges: np.ndarray, n_factors: int) -> bool:
    keys = edges[:, 0] * n_factors + edges[:, 1]
    return len(np.unique(keys)) < len(keys)


def generate_large_girth(d: int, k: int, n_vars: int, min_girth: float, seed=None,
                         max_retries: int = 100_000) -> FactorGraph:
    """Resample configuration-model graphs until ``girth >= min_girth``.

    Short cycles are roughly Poisson in number, so even girth 6 for
    ``d = k = 3`` accepts only about one draw in a thousand; hence the
    generous default cap.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        graph = generate_biregular(d, k, n_vars, seed=rng)
        if girth(graph) >= min_girth:
            return graph
    raise SimpleGraphTimeout(max_retries, f"no graph with girth >= {min_girth} after {max_retries} draws")


def cycle_graph(n: int) -> FactorGraph:
    """The alternating cycle ``v_0 f_0 v_1 f_1 ... v_{n-1} f_{n-1} v_0``."""
    if n < 1:
        raise GraphError("cycle needs at least one variable")
    edges = []
    for i in range(n):
        edges.append((i, i))
        edges.append(((i + 1) % n, i))
    return FactorGraph(n, n, edges, (2, 2))


def truncated_tree(d: int, k: int, depth: int, max_nodes: int = DEFAULT_MAX_NODES):
    """Ball around a root factor in the ``(d, k)``-biregular tree.

    ``depth`` counts factor levels below the root: the root factor is factor
    0; every interior variable has ``d - 1`` child factors and every factor
    ``k - 1`` child variables.  Returns ``(graph, boundary)`` where
    ``boundary`` holds the ids of the degree-one leaf variables.
    """
    if depth < 0:
        raise GraphError("depth must be >= 0")
    branch = (d - 1) * (k - 1)
    n_vars = k * sum(branch ** j for j in range(depth + 1))
    n_factors = 1 + k * (d - 1) * sum(branch ** j for j in range(depth))
    if n_vars + n_factors > max_nodes:
        raise DepthTooLarge(f"depth {depth} needs {n_vars + n_factors} nodes, cap is {max_nodes}")

    edge_v = [np.arange(k)]
    edge_f = [np.zeros(k, dtype=np.int64)]
    level = np.arange(k)
    next_var, next_factor = k, 1
    for _ in range(depth):
        parents = np.repeat(level, d - 1)
        factors = np.arange(next_factor, next_factor + len(parents))
        next_factor += len(parents)
        children = np.arange(next_var, next_var + len(factors) * (k - 1))
        next_var += len(children)
        edge_v += [parents, children]
        edge_f += [factors, np.repeat(factors, k - 1)]
        level = children
    edges = np.column_stack([np.concatenate(edge_v), np.concatenate(edge_f)])
    assert next_var == n_vars and next_factor == n_factors
    return FactorGraph(n_vars, n_factors, edges), level.copy()


def random_forest(k: int, n_factors: int, seed=None, p_new_tree: float = 0.2,
                  isolated: int = 0) -> FactorGraph:
    """Random forest whose factors all have degree ``k``.

    Each factor either starts a new tree (``k`` fresh variables) or hangs
    off one uniformly chosen existing variable plus ``k - 1`` fresh ones.
    ``isolated`` factor-free variables are appended at the end.
    """
    if k < 1 or n_factors < 0:
        raise GraphError("need k >= 1 and n_factors >= 0")
    rng = np.random.default_rng(seed)
    edges = []
    n_vars = 0
    for f in range(n_factors):
        if n_vars == 0 or rng.random() < p_new_tree:
            slots = list(range(n_vars, n_vars + k))
            n_vars += k
        else:
            slots = [int(rng.integers(n_vars))] + list(range(n_vars, n_vars + k - 1))
            n_vars += k - 1
        edges += [(v, f) for v in slots]
    return FactorGraph(n_vars + isolated, n_factors, np.array(edges, dtype=np.int64).reshape(-1, 2))


def girth(graph: FactorGraph) -> float:
    """Shortest cycle length in edges; 2 for a parallel edge, ``math.inf`` for forests."""
    if graph.is_forest():
        return math.inf
    nv = graph.n_vars
    n = nv + graph.n_factors
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for e, (v, f) in enumerate(graph.edges.tolist()):
        adj[v].append((nv + f, e))
        adj[nv + f].append((v, e))
    best = math.inf
    for src in range(n):
        if not adj[src]:
            continue
        dist = {src: 0}
        via = {src: -1}
        queue = deque([src])
        while queue:
            a = queue.popleft()
            # every cycle closed from here has length >= 2 * dist[a]
            if 2 * dist[a] >= best:
                break
            for b, e in adj[a]:
                if e == via[a]:
                    continue
                if b in dist:
                    best = min(best, dist[a] + dist[b] + 1)
                else:
                    dist[b] = dist[a] + 1
                    via[b] = e
                    queue.append(b)
        if best == 2:
            break
    return best
