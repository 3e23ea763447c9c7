"""Belief propagation in log-likelihood-ratio form and the Bethe functional.

Messages live on edges: ``u[e]`` is the variable-to-factor ratio
``log nu(1)/nu(0)`` and ``u_hat[e]`` the factor-to-variable one.  Parallel
edges carry separate messages.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, xlogy

from . import _logpoly
from .errors import DimensionMismatch, InconsistentTau, IndexMismatch, NotBiregular
from .factor_graph import FactorGraph
from .potentials import ModelParams

CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class MessageSet:
    u: np.ndarray
    u_hat: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        u_hat = np.asarray(self.u_hat, dtype=float)
        if u.shape != u_hat.shape or u.ndim != 1:
            raise IndexMismatch("u and u_hat must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(u_hat))):
            raise ValueError("messages must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "u_hat", u_hat)

    @classmethod
    def constant(cls, n_edges: int, value: float = 0.0) -> "MessageSet":
        return cls(np.full(n_edges, float(value)), np.zeros(n_edges))

    def negated(self) -> "MessageSet":
        return MessageSet(-self.u, -self.u_hat)


@dataclass(frozen=True)
class BpReport:
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class LocalMarginals:
    """Pseudo-marginals: ``tau_v`` is (n_vars, 2); ``tau_a`` is (n_factors, 2^k).

    Column ``p`` of ``tau_a`` is the slot pattern whose bit ``j`` is the
    value at the factor's ``j``-th slot.
    """

    tau_v: np.ndarray
    tau_a: np.ndarray

    @property
    def k(self) -> int:
        return int(self.tau_a.shape[1]).bit_length() - 1

    def occupancy_distribution(self) -> np.ndarray:
        counts = _popcount(self.k)
        return np.stack([self.tau_a[:, counts == s].sum(axis=1) for s in range(self.k + 1)], axis=1)

    def slot_marginals(self) -> np.ndarray:
        """(n_factors, k) probability that each slot is 1 under ``tau_a``."""
        bits = _pattern_bits(self.k)
        return self.tau_a @ bits

    def consistency_residual(self, graph: FactorGraph) -> float:
        """Largest violation of ``sum_{x_{a minus i}} tau_a = tau_i`` over all edges, and of normalisation."""
        norm = max(np.abs(self.tau_v.sum(axis=1) - 1).max(initial=0.0),
                   np.abs(self.tau_a.sum(axis=1) - 1).max(initial=0.0))
        if graph.n_factors == 0:
            return float(norm)
        slot_one = self.slot_marginals()
        target = self.tau_v[graph.factor_vars, 1]
        return float(max(norm, np.abs(slot_one - target).max()))


def _pattern_bits(k: int) -> np.ndarray:
    return ((np.arange(1 << k)[:, None] >> np.arange(k)) & 1).astype(float)


def _popcount(k: int) -> np.ndarray:
    return _pattern_bits(k).sum(axis=1).astype(np.int64)


def _check(graph: FactorGraph, params: ModelParams, messages: MessageSet | None = None) -> None:
    if graph.n_factors and np.any(graph.factor_degrees != params.k):
        raise DimensionMismatch(f"every factor must have degree k={params.k}")
    if messages is not None and len(messages.u) != graph.n_edges:
        raise IndexMismatch(f"{len(messages.u)} messages for {graph.n_edges} edges")


def factor_update(graph: FactorGraph, params: ModelParams, u: np.ndarray) -> np.ndarray:
    """New ``u_hat`` from incoming ``u`` on every edge."""
    u_hat = np.zeros(graph.n_edges)
    if graph.n_factors == 0:
        return u_hat
    fe = graph.factor_edges
    incoming = u[fe]
    vecs = np.stack([np.zeros_like(incoming), incoming], axis=-1)
    out = _logpoly.leave_one_out(vecs, params.log_psi)
    u_hat[fe] = out[..., 1] - out[..., 0]
    return u_hat


def variable_update(graph: FactorGraph, u_hat: np.ndarray) -> np.ndarray:
    """``u[e] = sum of u_hat over the variable's other edges``."""
    var_of = graph.edges[:, 0]
    total = np.bincount(var_of, weights=u_hat, minlength=graph.n_vars)
    return total[var_of] - u_hat


def bp_sweep(graph: FactorGraph, params: ModelParams, messages: MessageSet,
             damping: float = 0.0) -> tuple[MessageSet, float]:
    """One synchronous sweep: factors read the old ``u``, variables read the new ``u_hat``.

    The returned residual is ``max |T(u) - u|`` for the undamped update
    ``T``, so it measures distance from a fixed point whatever ``damping`` is.
    """
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    _check(graph, params, messages)
    u_hat = factor_update(graph, params, messages.u)
    u_new = variable_update(graph, u_hat)
    residual = float(np.abs(u_new - messages.u).max(initial=0.0))
    u = (1.0 - damping) * u_new + damping * messages.u
    return MessageSet(u, u_hat), residual


def initial_messages(graph: FactorGraph, params: ModelParams, init="zero") -> MessageSet:
    """``zero``/``uniform``, ``plus`` or ``minus``; the signed ones start at the a priori message bound."""
    if isinstance(init, MessageSet):
        return init
    dmax = int(graph.var_degrees.max(initial=1))
    bound = max(dmax - 1, 1) * params.beta * params.potentials.spread
    values = {"zero": 0.0, "uniform": 0.0, "plus": bound, "minus": -bound}
    try:
        return MessageSet.constant(graph.n_edges, values[init])
    except KeyError:
        raise ValueError(f"unknown init {init!r}") from None


def run_bp(graph: FactorGraph, params: ModelParams, init="zero", tol: float = 1e-12,
           max_iters: int = 10_000, damping: float | None = None) -> tuple[MessageSet, BpReport]:
    """Iterate :func:`bp_sweep` until the fixed-point residual drops below ``tol``.

    ``damping=None`` picks 0 on forests and 0.5 otherwise.  On success the
    returned messages are the ones whose undamped update moved no ``u`` by
    ``tol`` or more; non-convergence is reported, not raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if damping is None:
        damping = 0.0 if graph.is_forest() else 0.5
    messages = initial_messages(graph, params, init)
    _check(graph, params, messages)
    residual = np.inf
    for it in range(1, max_iters + 1):
        new, residual = bp_sweep(graph, params, messages, damping)
        if residual < tol:
            # keep the certified u, pair it with the u_hat it produces
            return MessageSet(messages.u, new.u_hat), BpReport(it, residual, True)
        messages = new
    return messages, BpReport(max_iters, residual, False)


def beliefs(graph: FactorGraph, params: ModelParams, messages: MessageSet) -> LocalMarginals:
    """``tau_i ~ exp(x_i sum_b u_hat_{b->i})`` and ``tau_a ~ psi_a(x) exp(sum_j x_j u_{j->a})``."""
    _check(graph, params, messages)
    field = np.bincount(graph.edges[:, 0], weights=messages.u_hat, minlength=graph.n_vars)
    v_logits = np.column_stack([np.zeros(graph.n_vars), field])
    tau_v = np.exp(v_logits - logsumexp(v_logits, axis=1, keepdims=True))
    k = params.k
    if graph.n_factors == 0:
        return LocalMarginals(tau_v, np.zeros((0, 1 << k)))
    bits = _pattern_bits(k)
    a_logits = params.log_psi[_popcount(k)][None, :] + messages.u[graph.factor_edges] @ bits.T
    tau_a = np.exp(a_logits - logsumexp(a_logits, axis=1, keepdims=True))
    return LocalMarginals(tau_v, tau_a)


def bethe_functional(graph: FactorGraph, params: ModelParams, tau: LocalMarginals,
                     check: bool = True) -> float:
    """Bethe free energy density at ``tau``.

    ``(1/|V|) [ -beta sum_a E_{tau_a} h - sum_a sum tau_a log tau_a
    + sum_i (deg_i - 1) sum tau_i log tau_i ]``; on a ``(d, k)``-biregular
    graph ``deg_i - 1 = d - 1``.  Entropies use ``0 log 0 = 0``.
    """
    _check(graph, params)
    if check:
        res = tau.consistency_residual(graph)
        if res > CONSISTENCY_TOL:
            raise InconsistentTau(f"edge consistency violated by {res:.3e}")
    energy = (tau.occupancy_distribution() @ params.h).sum() if graph.n_factors else 0.0
    factor_neg_entropy = xlogy(tau.tau_a, tau.tau_a).sum()
    var_neg_entropy = xlogy(tau.tau_v, tau.tau_v).sum(axis=1)
    total = (-params.beta * energy - factor_neg_entropy
             + ((graph.var_degrees - 1) * var_neg_entropy).sum())
    return float(total / graph.n_vars)


def symmetric_tau(graph: FactorGraph, params: ModelParams, t: float) -> LocalMarginals:
    """Pseudo-marginals induced by the constant message ``t`` on a biregular graph."""
    if not graph.is_biregular(params.d, params.k):
        raise NotBiregular(f"graph is not ({params.d}, {params.k})-biregular")
    from .symmetric import t_v

    k = params.k
    counts = _popcount(k)
    logits = params.log_psi[counts] + t * counts
    row = np.exp(logits - logsumexp(logits))
    tau_a = np.broadcast_to(row, (graph.n_factors, 1 << k)).copy()
    tau_v = np.tile([t_v(params.d, -t), t_v(params.d, t)], (graph.n_vars, 1))
    return LocalMarginals(tau_v, tau_a)
