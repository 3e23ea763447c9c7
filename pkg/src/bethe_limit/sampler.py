"""Single-site heat-bath (Glauber) dynamics and thermodynamic integration.

Chains are advanced in lock step as rows of one array, each with its own
``beta`` and its own uniformly chosen site per step, so a whole grid of
temperatures runs in a single vectorised pass.  Chains share no state: row
``c`` depends only on its own bits and random draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, TooManyVariables
from .factor_graph import FactorGraph
from .potentials import ModelParams

LOG2 = math.log(2.0)
N_BATCHES = 20
MAX_MATRIX_VARS = 12


@dataclass(frozen=True)
class _Neighbourhood:
    """Per variable: distinct incident factors and edge multiplicities, padded to equal width.

    Padding points at a dummy factor column ``n_factors`` with multiplicity 0.
    """

    factors: np.ndarray
    mult: np.ndarray


def _neighbourhood(graph: FactorGraph) -> _Neighbourhood:
    rows_f, rows_m = [], []
    for adj in graph.var_adjacency:
        fs, ms = np.unique(graph.edges[adj, 1], return_counts=True)
        rows_f.append(fs)
        rows_m.append(ms)
    width = max((len(r) for r in rows_f), default=0)
    factors = np.full((graph.n_vars, max(width, 1)), graph.n_factors, dtype=np.int64)
    mult = np.zeros_like(factors)
    for v, (fs, ms) in enumerate(zip(rows_f, rows_m)):
        factors[v, :len(fs)] = fs
        mult[v, :len(ms)] = ms
    return _Neighbourhood(factors, mult)


def _check(graph: FactorGraph, params: ModelParams) -> None:
    if graph.n_factors and np.any(graph.factor_degrees != params.k):
        raise DimensionMismatch(f"every factor must have degree k={params.k}")


@dataclass
class ChainState:
    """``x`` is (chains, n_vars); ``occ`` is (chains, n_factors + 1) with a trailing zero column."""

    x: np.ndarray
    occ: np.ndarray
    betas: np.ndarray
    rng: np.random.Generator
    steps: int = 0

    @property
    def n_chains(self) -> int:
        return self.x.shape[0]

    def recount(self, graph: FactorGraph) -> np.ndarray:
        occ = np.zeros_like(self.occ)
        occ[:, :-1] = self.x @ graph.incidence
        return occ

    def check(self, graph: FactorGraph) -> None:
        assert np.array_equal(self.occ, self.recount(graph)), "cached occupancies drifted"


def initial_state(graph: FactorGraph, params: ModelParams, chains: int = 1, seed=None,
                  betas=None) -> ChainState:
    """Uniformly random starting bits; ``betas`` defaults to ``params.beta`` for every chain."""
    _check(graph, params)
    rng = np.random.default_rng(seed)
    if betas is None:
        betas = np.full(chains, params.beta)
    betas = np.asarray(betas, dtype=float)
    if betas.shape != (chains,):
        raise ValueError("need one beta per chain")
    x = rng.integers(0, 2, size=(chains, graph.n_vars))
    state = ChainState(x, np.zeros((chains, graph.n_factors + 1), dtype=np.int64), betas, rng)
    state.occ = state.recount(graph)
    return state


def conditional_one_prob(h_ext: np.ndarray, nb: _Neighbourhood, x: np.ndarray, occ: np.ndarray,
                         rows: np.ndarray, sites: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """``P(x_v = 1 | rest)`` for site ``sites[c]`` of chain ``rows[c]``.

    Only the factors around ``v`` change, so the log odds is
    ``-beta * sum_f [h(o_f + m_f) - h(o_f)]`` with ``o_f`` the occupancy of
    ``f`` with ``v`` set to 0 and ``m_f`` the number of edges ``v``-``f``.
    """
    fs = nb.factors[sites]
    ms = nb.mult[sites]
    base = occ[rows[:, None], fs] - ms * x[rows, sites][:, None]
    delta = (h_ext[base + ms] - h_ext[base]).sum(axis=1)
    return expit(-betas[rows] * delta)


def _h_ext(params: ModelParams) -> np.ndarray:
    # one spare entry so the padded dummy column (occupancy 0, mult 0) is harmless
    return np.append(params.h, 0.0)


def glauber_step(state: ChainState, graph: FactorGraph, params: ModelParams,
                 nb: _Neighbourhood | None = None) -> ChainState:
    """Resample one uniformly chosen site in every chain from its conditional law (in place)."""
    if nb is None:
        nb = _neighbourhood(graph)
    rows = np.arange(state.n_chains)
    sites = state.rng.integers(0, graph.n_vars, size=state.n_chains)
    u = state.rng.random(state.n_chains)
    _apply(state, nb, _h_ext(params), rows, sites, u)
    return state


def _apply(state: ChainState, nb: _Neighbourhood, h_ext, rows, sites, u) -> None:
    p1 = conditional_one_prob(h_ext, nb, state.x, state.occ, rows, sites, state.betas)
    new = (u < p1).astype(np.int64)
    change = new - state.x[rows, sites]
    state.x[rows, sites] = new
    # (row, factor) pairs are distinct apart from the dummy column, whose increment is 0
    state.occ[rows[:, None], nb.factors[sites]] += nb.mult[sites] * change[:, None]
    state.steps += 1


def run_chains(graph: FactorGraph, params: ModelParams, sweeps: int, seed=None, chains: int = 8,
               betas=None, state: ChainState | None = None):
    """Advance ``sweeps * n_vars`` steps and record each chain's total energy after every sweep.

    Returns ``(state, energies)`` with ``energies`` of shape (sweeps, chains).
    """
    _check(graph, params)
    if state is None:
        state = initial_state(graph, params, chains, seed, betas)
    nb = _neighbourhood(graph)
    h_ext = _h_ext(params)
    n, c = graph.n_vars, state.n_chains
    rows = np.arange(c)
    energies = np.empty((sweeps, c))
    for s in range(sweeps):
        sites = state.rng.integers(0, n, size=(n, c))
        u = state.rng.random((n, c))
        for j in range(n):
            _apply(state, nb, h_ext, rows, sites[j], u[j])
        energies[s] = h_ext[state.occ[:, :-1]].sum(axis=1)
    return state, energies


def batch_means(series: np.ndarray, n_batches: int = N_BATCHES) -> tuple[float, float]:
    """Mean and batch-means standard error of a (time, chains) array, batching along time."""
    t = series.shape[0]
    if t < n_batches:
        raise ValueError(f"need at least {n_batches} recorded sweeps, got {t}")
    usable = t - t % n_batches
    batches = series[:usable].reshape(n_batches, usable // n_batches, -1).mean(axis=(1, 2))
    mean = float(series[:usable].mean())
    err = float(batches.std(ddof=1) / math.sqrt(n_batches))
    return mean, err


def estimate_expected_energy(graph: FactorGraph, params: ModelParams, sweeps: int, burn_in: int,
                             seed=None, chains: int = 8) -> tuple[float, float]:
    """Monte Carlo ``Phi_G'(beta) = -(1/|V|) E[H_G]`` with a batch-means error bar.

    On a ``(d, k)``-biregular graph this is ``(d/k)`` times the mean over
    factors of ``-h(occupancy)``.
    """
    if sweeps <= burn_in:
        raise ValueError("sweeps must exceed burn_in")
    _, energies = run_chains(graph, params, sweeps, seed, chains)
    return batch_means(-energies[burn_in:] / graph.n_vars)


@dataclass(frozen=True)
class IntegrationResult:
    phi: float
    std_error: float
    grid: np.ndarray
    derivative: np.ndarray
    derivative_error: np.ndarray


def thermodynamic_integration(graph: FactorGraph, params: ModelParams, beta_1: float, grid=None,
                              sweeps: int = 2000, burn_in: int = 200, seed=None,
                              chains: int = 8, points: int = 21) -> IntegrationResult:
    """``ln 2 + trapezoid`` of the estimated ``Phi_G'`` over a grid on ``[0, beta_1]``.

    Each grid point gets its own ``chains`` chains, all run in one pass, so
    the point estimates are independent and their errors add in quadrature.
    """
    if beta_1 < 0:
        raise ValueError("beta_1 must be >= 0")
    if grid is None:
        grid = np.linspace(0.0, beta_1, points)
    grid = np.asarray(grid, dtype=float)
    if beta_1 == 0:
        return IntegrationResult(LOG2, 0.0, np.zeros(1), np.zeros(1), np.zeros(1))
    if grid[0] != 0 or not math.isclose(grid[-1], beta_1) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must increase strictly from 0 to beta_1")
    if sweeps <= burn_in:
        raise ValueError("sweeps must exceed burn_in")
    betas = np.repeat(grid, chains)
    _, energies = run_chains(graph, params, sweeps, seed, len(betas), betas=betas)
    per_point = -energies[burn_in:] / graph.n_vars
    est = np.empty(len(grid))
    err = np.empty(len(grid))
    for j in range(len(grid)):
        est[j], err[j] = batch_means(per_point[:, j * chains:(j + 1) * chains])
    w = np.zeros(len(grid))
    dx = np.diff(grid)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return IntegrationResult(LOG2 + float(w @ est), float(math.sqrt(w ** 2 @ err ** 2)), grid, est, err)


def transition_matrix(graph: FactorGraph, params: ModelParams,
                      max_vars: int = MAX_MATRIX_VARS) -> np.ndarray:
    """Explicit ``2^n x 2^n`` kernel of one Glauber step, built from the sampler's own conditionals.

    State ``s`` has bit ``v`` equal to ``x_v``.
    """
    _check(graph, params)
    n = graph.n_vars
    if n > max_vars:
        raise TooManyVariables(f"{n} variables exceeds the matrix cap {max_vars}")
    nb = _neighbourhood(graph)
    h_ext = _h_ext(params)
    states = np.arange(1 << n)
    x = ((states[:, None] >> np.arange(n)) & 1).astype(np.int64)
    occ = np.zeros((len(states), graph.n_factors + 1), dtype=np.int64)
    occ[:, :-1] = x @ graph.incidence
    betas = np.full(len(states), params.beta)
    P = np.zeros((len(states), len(states)))
    for v in range(n):
        p1 = conditional_one_prob(h_ext, nb, x, occ, states, np.full(len(states), v), betas)
        off = states & ~(1 << v)
        on = states | (1 << v)
        np.add.at(P, (states, off), (1.0 - p1) / n)
        np.add.at(P, (states, on), p1 / n)
    return P
