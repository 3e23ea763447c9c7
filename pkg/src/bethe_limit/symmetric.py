"""Symmetric BP fixed points of the biregular tree and the Bethe value they induce.

Constant messages ``u = t`` are fixed points exactly when ``F(beta, t) = 0``
with

    F(beta, t) = -t + (d-1) [ log sum_i C(k-1,i) exp(-beta h_{i+1} + i t)
                            - log sum_i C(k-1,i) exp(-beta h_i + i t) ].

``t = 0`` is always a zero.  For ``beta`` above the critical value
``beta_c`` there is one further positive zero ``g(beta)`` (and its
negative), and ``g`` is extended by 0 below ``beta_c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import entr, expit, gammaln, logsumexp

from . import _logpoly
from .errors import ArityTooLarge, BracketFailure, NotAFixedPoint, QuadratureNonConvergence, VerificationFailure
from .potentials import ModelParams, PotentialSequence

LOG2 = math.log(2.0)
ROOT_TOL = 1e-12
FIXED_POINT_TOL = 1e-8
MAX_BISECTIONS = 200
BETA_CAP = 100.0
MAX_ENUM_ARITY = 20


def _log_binom(n: int) -> np.ndarray:
    i = np.arange(n + 1)
    return gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)


def F(params: ModelParams, t):
    """Consistency function whose zeros are the symmetric fixed points; vectorised in ``t``."""
    k, d = params.k, params.d
    t = np.asarray(t, dtype=float)
    i = np.arange(k)
    base = _log_binom(k - 1) + t[..., None] * i
    lp = params.log_psi
    out = -t + (d - 1) * (logsumexp(base + lp[1:], axis=-1) - logsumexp(base + lp[:-1], axis=-1))
    return float(out) if out.ndim == 0 else out


def dF_dt(params: ModelParams, t: float) -> float:
    """Analytic ``partial_t F(beta, t)``: ``-1 + (d-1)`` times a difference of two means of ``i``."""
    k, d = params.k, params.d
    i = np.arange(k)
    base = _log_binom(k - 1) + t * i
    lp = params.log_psi

    def mean_i(logits):
        return float(np.exp(logits - logsumexp(logits)) @ i)

    return -1.0 + (d - 1) * (mean_i(base + lp[1:]) - mean_i(base + lp[:-1]))


def dF_dt_at_zero(params: ModelParams) -> float:
    """``-1 + (2(d-1)/k) E[f(i)]`` with ``f(i) = 2 (i - k/2)^2 - k/2`` and ``i`` weighted by ``C(k,i) e^{-beta h_i}``."""
    k, d = params.k, params.d
    i = np.arange(k + 1)
    f = 2.0 * (i - k / 2.0) ** 2 - k / 2.0
    logits = _log_binom(k) + params.log_psi
    w = np.exp(logits - logsumexp(logits))
    return -1.0 + 2.0 * (d - 1) / k * float(w @ f)


@dataclass(frozen=True)
class CriticalPoint:
    beta_c: float
    """``math.inf`` when no sign change was found below the search cap."""
    slope_at_zero: float
    above_cap: bool
    iterations: int = 0

    def label(self) -> str:
        return "above_cap" if self.above_cap else repr(self.beta_c)


def beta_c(d: int, potentials: PotentialSequence, beta_cap: float = BETA_CAP,
           tol: float = 1e-14) -> CriticalPoint:
    """Locate ``inf {beta : partial_t F(beta, 0) > 0}`` by bisection on ``[0, beta_cap]``.

    The slope at 0 is nondecreasing in ``beta`` and tends to at most
    ``-1 + (d-1)(k-1)``, so for ``d = k = 2`` no finite critical point exists.
    """
    if beta_cap <= 0:
        raise ValueError("beta_cap must be positive")

    def slope(b):
        return dF_dt_at_zero(ModelParams(d, potentials, b))

    k = potentials.k
    top = slope(beta_cap)
    if (d - 1) * (k - 1) <= 1 or top <= 0:
        return CriticalPoint(math.inf, top, True)
    lo, hi = 0.0, float(beta_cap)
    it = 0
    while hi - lo > tol * max(1.0, hi) and it < MAX_BISECTIONS:
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            hi = mid
        else:
            lo = mid
        it += 1
    bc = 0.5 * (lo + hi)
    return CriticalPoint(bc, slope(bc), False, it)


@dataclass(frozen=True)
class PhasePoint:
    beta: float
    t_star: float
    bethe: float
    dphi: float
    slope_at_zero: float
    bracket: tuple[float, float]
    iterations: int
    residual: float


def g(params: ModelParams, tol: float = ROOT_TOL) -> PhasePoint:
    """The nonnegative symmetric fixed point ``g(beta)`` with its Bethe value and slope.

    When the slope of ``F`` at 0 is positive the positive zero is bracketed
    by ``(lo, t_hi)``: ``t_hi = (d-1) beta (h_{floor(k/2)} - h_0) + 1`` lies
    beyond every fixed point, and ``lo`` is found by halving until
    ``F(lo) > 0``.  Bisection then runs to machine precision.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    slope = dF_dt_at_zero(params)
    if slope <= 0:
        return PhasePoint(params.beta, 0.0, bethe_value(params, 0.0), bethe_derivative(params, 0.0),
                          slope, (0.0, 0.0), 0, 0.0)

    hi = params.message_bound + 1.0
    if F(params, hi) >= 0:
        raise BracketFailure(f"F({hi}) >= 0 at beta={params.beta}; potentials violate concavity?")
    lo = 0.5 * hi
    while F(params, lo) <= 0:
        lo *= 0.5
        if lo < 1e-300:
            raise BracketFailure(f"no t > 0 with F > 0 at beta={params.beta}")
    bracket = (lo, hi)
    it = 0
    while it < MAX_BISECTIONS:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        val = F(params, mid)
        if val > 0:
            lo = mid
        elif val < 0:
            hi = mid
        else:
            lo = hi = mid
            break
        it += 1
    t_star = lo if abs(F(params, lo)) <= abs(F(params, hi)) else hi
    residual = abs(F(params, t_star))
    if residual > tol:
        raise BracketFailure(f"bisection stalled at |F| = {residual:.3e} > {tol:.1e}")
    if dF_dt(params, t_star) >= 0:
        raise VerificationFailure(f"slope of F at the positive zero is not negative (beta={params.beta})")
    return PhasePoint(params.beta, t_star, bethe_value(params, t_star),
                      bethe_derivative(params, t_star), slope, bracket, it, residual)


def iterate_message_map(params: ModelParams, t0: float, n: int) -> np.ndarray:
    """``t_{j+1} = (d-1) m(t_j, ..., t_j)``, returning ``t_0..t_n``."""
    ts = [float(t0)]
    for _ in range(n):
        ts.append((params.d - 1) * message_map_m(params, np.full(params.k - 1, ts[-1])))
    return np.array(ts)


def t_v(d: int, t):
    """Probability of a 1 at a variable under the constant message ``t``."""
    return expit(d / (d - 1) * np.asarray(t, dtype=float))


def binary_entropy(p):
    return entr(p) + entr(1.0 - p)


def _occupancy_logits(params: ModelParams, t: float) -> np.ndarray:
    i = np.arange(params.k + 1)
    return _log_binom(params.k) + params.log_psi + i * t


def bethe_value(params: ModelParams, t: float) -> float:
    """``-d t t_v + (d/k) log sum_i C(k,i) e^{-beta h_i + i t} - (d-1) H_2(t_v)``.

    Meaningful on the zero set of ``F``; evaluated anywhere for diagnostics.
    """
    d, k = params.d, params.k
    s = d / (d - 1) * t
    p1 = float(expit(s))
    # H_2 written through the logit keeps precision when t_v is close to 1
    h2 = float(entr(expit(s)) + entr(expit(-s)))
    return -d * t * p1 + d / k * float(logsumexp(_occupancy_logits(params, t))) - (d - 1) * h2


def bethe_derivative(params: ModelParams, t: float, check: bool = True) -> float:
    """``d/dbeta`` of ``Phi(beta, t(beta))`` along a branch of zeros: ``(d/k) E[-h]``."""
    if check:
        res = abs(F(params, t))
        if res > FIXED_POINT_TOL:
            raise NotAFixedPoint(f"|F(beta, t)| = {res:.3e} at t = {t}")
    logits = _occupancy_logits(params, t)
    w = np.exp(logits - logsumexp(logits))
    return -params.d / params.k * float(w @ params.h)


def phase_point(d: int, potentials: PotentialSequence, beta: float) -> PhasePoint:
    return g(ModelParams(d, potentials, beta))


def bethe_limit(d: int, potentials: PotentialSequence, beta: float) -> float:
    """``Phi(beta, g(beta))``, the limiting free energy density."""
    return phase_point(d, potentials, beta).bethe


def interpolate(params: ModelParams, beta_1: float, tol: float = 1e-10) -> float:
    """``int_0^{beta_1} dPhi/dbeta (beta, g(beta)) dbeta``, split at ``beta_c``.

    Only ``params.d`` and ``params.potentials`` are used.
    """
    if beta_1 < 0:
        raise ValueError("beta_1 must be >= 0")
    if beta_1 == 0:
        return 0.0
    d, pots = params.d, params.potentials

    def integrand(b):
        return phase_point(d, pots, b).dphi

    crit = beta_c(d, pots)
    cuts = [0.0]
    if not crit.above_cap and 0 < crit.beta_c < beta_1:
        cuts.append(crit.beta_c)
    cuts.append(float(beta_1))
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, err, info = integrate.quad(integrand, a, b, epsabs=tol, epsrel=tol, limit=200,
                                        full_output=1)[:3]
        if err > 10 * max(tol, tol * abs(val)) and info.get("neval", 0) >= 21 * 200:
            raise QuadratureNonConvergence(f"quad on [{a}, {b}] reports error {err:.2e}")
        total += val
    return total


def message_map_m(params: ModelParams, ts) -> float:
    """``log sum_v e^{-beta H(v1) + (v,t)} - log sum_v e^{-beta H(v0) + (v,t)}`` over ``v in {0,1}^{k-1}``."""
    ts = np.asarray(ts, dtype=float)
    if ts.shape != (params.k - 1,):
        raise ValueError(f"need k-1 = {params.k - 1} incoming messages")
    vecs = np.stack([np.zeros_like(ts), ts], axis=-1)[None]
    poly = _logpoly.occupancy(vecs)[0]
    lp = params.log_psi
    return float(logsumexp(poly + lp[1:]) - logsumexp(poly + lp[:-1]))


def _patterns(k: int) -> np.ndarray:
    return ((np.arange(1 << k)[:, None] >> np.arange(k)) & 1).astype(float)


def a_beta(params: ModelParams, t) -> float | np.ndarray:
    """Mean of ``-H(v)`` under weights ``e^{-beta H(v) + (v, t)}`` on ``{0,1}^k``.

    ``t`` may carry leading batch axes.  Constant vectors go through the
    ``k + 1`` occupancy classes; everything else through the full ``2^k`` sum.
    """
    k = params.k
    t = np.asarray(t, dtype=float)
    if t.shape[-1] != k:
        raise ValueError(f"t must have last axis of length k = {k}")
    if t.ndim == 1 and np.all(t == t[0]):
        logits = _occupancy_logits(params, float(t[0]))
        return float(np.exp(logits - logsumexp(logits)) @ -params.h)
    if k > MAX_ENUM_ARITY:
        raise ArityTooLarge(f"k = {k} exceeds enumeration guard {MAX_ENUM_ARITY}")
    v = _patterns(k)
    counts = v.sum(axis=1).astype(np.int64)
    logits = params.log_psi[counts] + t @ v.T
    w = np.exp(logits - logsumexp(logits, axis=-1, keepdims=True))
    out = w @ -params.h[counts]
    return float(out) if out.ndim == 0 else out
