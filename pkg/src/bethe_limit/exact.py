"""Exact partition functions, free energy densities and Gibbs marginals.

Three independent routes: exhaustive enumeration (any graph, few
variables), leaf elimination (forests of any size) and the 2x2 transfer
matrix (the ``d = k = 2`` cycles).  Every accumulation is done in log space.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import _logpoly
from .errors import DimensionMismatch, NotAForest, TooManyVariables, WrongArity
from .factor_graph import FactorGraph
from .potentials import ModelParams, PotentialSequence

DEFAULT_MAX_VARS = 24
LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ExactResult:
    log_partition: float
    free_energy_density: float
    expected_factor_energy: float


@dataclass(frozen=True)
class GibbsMarginal:
    var_one: np.ndarray
    """P(x_v = 1) per variable."""
    factor_occupancy: np.ndarray
    """(n_factors, k+1) distribution of each factor's occupancy."""


def _check_arity(graph: FactorGraph, params: ModelParams) -> None:
    if graph.n_factors and np.any(graph.factor_degrees != params.k):
        raise DimensionMismatch(f"every factor must have degree k={params.k}")


def _result(graph: FactorGraph, log_z: float, mean_energy: float) -> ExactResult:
    return ExactResult(log_z, log_z / graph.n_vars, mean_energy)


def _state_bits(start: int, stop: int, n: int) -> np.ndarray:
    s = np.arange(start, stop, dtype=np.int64)
    return ((s[:, None] >> np.arange(n)) & 1).astype(np.int64)


def brute_force(graph: FactorGraph, params: ModelParams, max_vars: int = DEFAULT_MAX_VARS,
                chunk: int = 1 << 16) -> tuple[ExactResult, GibbsMarginal]:
    """Enumerate all ``2^n`` assignments.

    Weights are accumulated chunk by chunk against a running maximum of
    ``-beta H`` so nothing under- or overflows at large ``beta``.
    """
    n = graph.n_vars
    if n > max_vars:
        raise TooManyVariables(f"{n} variables exceeds the enumeration cap {max_vars}")
    _check_arity(graph, params)
    k, nf = params.k, graph.n_factors
    h = params.h
    inc = graph.incidence
    offsets = np.arange(nf) * (k + 1)

    top = -np.inf
    z = 0.0
    wh = 0.0
    var_acc = np.zeros(n)
    occ_acc = np.zeros(nf * (k + 1))
    for start in range(0, 1 << n, chunk):
        bits = _state_bits(start, min(start + chunk, 1 << n), n)
        occ = bits @ inc
        energy = h[occ].sum(axis=1)
        logw = -params.beta * energy
        m = logw.max()
        if m > top:
            scale = math.exp(top - m) if math.isfinite(top) else 0.0
            z, wh = z * scale, wh * scale
            var_acc *= scale
            occ_acc *= scale
            top = m
        w = np.exp(logw - top)
        z += w.sum()
        wh += w @ energy
        var_acc += w @ bits
        if nf:
            occ_acc += np.bincount((occ + offsets).ravel(), weights=np.repeat(w, nf),
                                   minlength=nf * (k + 1))
    log_z = top + math.log(z)
    mean_energy = wh / z / nf if nf else 0.0
    marg = GibbsMarginal(var_acc / z, occ_acc.reshape(nf, k + 1) / z)
    return _result(graph, log_z, mean_energy), marg


def energy_levels(graph: FactorGraph, potentials: PotentialSequence,
                  max_vars: int = DEFAULT_MAX_VARS) -> tuple[np.ndarray, np.ndarray]:
    """Distinct energies of ``H_G`` and how many assignments reach each."""
    n = graph.n_vars
    if n > max_vars:
        raise TooManyVariables(f"{n} variables exceeds the enumeration cap {max_vars}")
    if graph.n_factors and np.any(graph.factor_degrees != potentials.k):
        raise DimensionMismatch(f"every factor must have degree k={potentials.k}")
    h = potentials.array
    energies = np.concatenate([
        h[_state_bits(s, min(s + (1 << 16), 1 << n), n) @ graph.incidence].sum(axis=1)
        for s in range(0, 1 << n, 1 << 16)
    ])
    return np.unique(energies, return_counts=True)


def log_partition_curve(graph: FactorGraph, potentials: PotentialSequence, betas,
                        max_vars: int = DEFAULT_MAX_VARS) -> np.ndarray:
    """``log Z_G(beta)`` on a grid, enumerating the states once."""
    levels, counts = energy_levels(graph, potentials, max_vars)
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    return logsumexp(-betas[:, None] * levels[None, :] + np.log(counts)[None, :], axis=1)


def exact_phi_derivative(graph: FactorGraph, params: ModelParams,
                         max_vars: int = DEFAULT_MAX_VARS) -> float:
    """``d/dbeta Phi_G = (|F|/|V|) E[-h(occupancy of a uniform factor)]``.

    For a ``(d, k)``-biregular graph the prefactor is ``d/k``.
    """
    res, _ = brute_force(graph, params, max_vars)
    return -(graph.n_factors / graph.n_vars) * res.expected_factor_energy


# --- forests -------------------------------------------------------------

@dataclass
class _Rooting:
    roots: np.ndarray             # root factor ids
    isolated: np.ndarray          # variables with no factor
    factor_depth: np.ndarray
    slot_vars: np.ndarray         # (n_factors, k) with the parent variable first for non-roots
    parent_var: np.ndarray        # -1 for roots


def _root_forest(graph: FactorGraph) -> _Rooting:
    nv, nf = graph.n_vars, graph.n_factors
    edges = graph.edges
    edge_var = edges[:, 0].tolist()
    edge_fac = edges[:, 1].tolist()
    var_adj = [a.tolist() for a in graph.var_adjacency]
    fac_adj = [a.tolist() for a in graph.factor_adjacency]
    var_seen = np.zeros(nv, dtype=bool)
    factor_depth = np.full(nf, -1, dtype=np.int64)
    parent_edge = np.full(nf, -1, dtype=np.int64)
    var_parent_edge = np.full(nv, -1, dtype=np.int64)
    roots = []
    for root in range(nf):
        if factor_depth[root] >= 0:
            continue
        roots.append(root)
        factor_depth[root] = 0
        queue = deque([root])
        while queue:
            a = queue.popleft()
            for e in fac_adj[a]:
                if e == parent_edge[a]:
                    continue
                v = edge_var[e]
                var_seen[v] = True
                var_parent_edge[v] = e
                for e2 in var_adj[v]:
                    if e2 == e:
                        continue
                    b = edge_fac[e2]
                    factor_depth[b] = factor_depth[a] + 2
                    parent_edge[b] = e2
                    queue.append(b)
    isolated = np.flatnonzero(~var_seen)

    fe = graph.factor_edges
    slot_vars = edges[:, 0][fe].copy()
    has_parent = parent_edge >= 0
    if nf:
        pos = np.argmax(fe == parent_edge[:, None], axis=1)
        rows = np.flatnonzero(has_parent)
        # swap the parent slot to position 0
        first = slot_vars[rows, 0].copy()
        slot_vars[rows, 0] = slot_vars[rows, pos[rows]]
        slot_vars[rows, pos[rows]] = first
    parent_var = np.where(has_parent, slot_vars[:, 0] if nf else -1, -1)
    return _Rooting(np.array(roots, dtype=np.int64), isolated, factor_depth, slot_vars, parent_var)


def _eliminate(graph: FactorGraph, params: ModelParams, clamp=None):
    """Two-pass leaf elimination; returns ``(log_z, var_one, factor_occupancy)``."""
    if not graph.is_forest():
        raise NotAForest("graph has a cycle (or a parallel edge)")
    _check_arity(graph, params)
    nv, nf, k = graph.n_vars, graph.n_factors, params.k
    log_psi = params.log_psi
    clamp_log = np.zeros((nv, 2))
    if clamp is not None:
        for v, val in clamp.items():
            clamp_log[v, 1 - int(val)] = -np.inf

    rt = _root_forest(graph)
    depths = sorted(set(rt.factor_depth.tolist()))
    by_depth = {dep: np.flatnonzero(rt.factor_depth == dep) for dep in depths}

    inside = clamp_log.copy()
    up = np.zeros((nf, 2))
    log_z = 0.0
    for dep in reversed(depths):
        fs = by_depth[dep]
        if dep == 0:
            poly = _logpoly.occupancy(inside[rt.slot_vars[fs]])
            log_z += logsumexp(poly + log_psi, axis=1).sum()
            continue
        poly = _logpoly.occupancy(inside[rt.slot_vars[fs, 1:]])
        msg = np.column_stack([logsumexp(poly + log_psi[x:x + k], axis=1) for x in (0, 1)])
        up[fs] = msg
        np.add.at(inside, rt.parent_var[fs], msg)
    if len(rt.isolated):
        log_z += logsumexp(clamp_log[rt.isolated], axis=1).sum()

    outside = np.zeros((nv, 2))
    factor_occ = np.zeros((nf, k + 1))
    for dep in depths:
        fs = by_depth[dep]
        vecs = inside[rt.slot_vars[fs]]
        if dep > 0:
            p = rt.parent_var[fs]
            vecs[:, 0] = outside[p] + inside[p] - up[fs]
        logits = _logpoly.occupancy(vecs) + log_psi
        factor_occ[fs] = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
        lo = _logpoly.leave_one_out(vecs, log_psi)
        first = 0 if dep == 0 else 1
        outside[rt.slot_vars[fs, first:]] = lo[:, first:]
    logits = inside + outside
    logits[rt.isolated] = clamp_log[rt.isolated]
    var_one = np.exp(logits[:, 1] - logsumexp(logits, axis=1))
    return log_z, var_one, factor_occ


def tree_partition(graph: FactorGraph, params: ModelParams) -> ExactResult:
    """Exact ``log Z`` on a forest by leaf elimination."""
    log_z, _, occ = _eliminate(graph, params)
    mean_energy = float((occ @ params.h).mean()) if graph.n_factors else 0.0
    return _result(graph, log_z, mean_energy)


def tree_marginals(graph: FactorGraph, params: ModelParams, clamp=None) -> GibbsMarginal:
    """Gibbs marginals on a forest, optionally with variables pinned via ``clamp = {v: bit}``."""
    _, var_one, occ = _eliminate(graph, params, clamp)
    return GibbsMarginal(var_one, occ)


def boundary_conditioned_marginal(tree: FactorGraph, boundary, params: ModelParams,
                                  boundary_value: int) -> GibbsMarginal:
    """Marginals of a truncated tree with every boundary variable pinned.

    The root factor is factor 0, so ``factor_occupancy[0]`` is the root's
    conditional occupancy law.
    """
    clamp = {int(v): int(boundary_value) for v in np.asarray(boundary).tolist()}
    return tree_marginals(tree, params, clamp)


# --- d = k = 2 cycles ----------------------------------------------------

def transfer_matrix_cycle(n: int, params: ModelParams) -> ExactResult:
    """``log trace(T^n)`` for the cycle with ``T[x, y] = exp(-beta h(x + y))``."""
    if params.k != 2:
        raise WrongArity(f"transfer matrix needs k = 2, got k = {params.k}")
    if n < 1:
        raise ValueError("n must be >= 1")
    h = params.h
    shift = -params.beta * h[0]
    idx = np.add.outer([0, 1], [0, 1])
    t_scaled = np.exp(-params.beta * h[idx] - shift)
    lam, q = np.linalg.eigh(t_scaled)
    top = lam[-1]
    rho = lam / top
    log_z = n * (shift + math.log(top)) + math.log1p(rho[0] ** n)
    # mean factor energy = tr(T^{n-1} (h o T)) / tr(T^n)
    ht = q.T @ (h[idx] * t_scaled) @ q
    num = np.sum(rho ** (n - 1) * np.diag(ht)) / top
    mean_energy = float(num / (1.0 + rho[0] ** n))
    return ExactResult(log_z, log_z / n, mean_energy)
