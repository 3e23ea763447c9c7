"""Exhaustive oracles for the correlation inequalities behind the limit theorem.

Every check evaluates its inequality literally on a small instance and
reports a signed slack (nonnegative when it holds) together with the
magnitude it was compared against.  Randomness only enters through
:func:`oracle_battery`, which draws instances inside each hypothesis.

Cube points are integers; bit ``j`` holds coordinate ``j + 1``, so the
"last" coordinates are the high bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DimensionTooLarge, DivisionByZeroWeight, HypothesisViolated
from .potentials import ModelParams, random_potentials

REL_TOL = 1e-12
MAX_CUBE_DIM = 16
MAX_ENUM_DIM = 20


@dataclass(frozen=True)
class CheckResult:
    holds: bool
    slack: float
    scale: float

    def __bool__(self) -> bool:
        return self.holds


def _result(lhs: float, rhs: float, scale: float) -> CheckResult:
    slack = rhs - lhs
    return CheckResult(bool(slack >= -REL_TOL * scale), float(slack), float(scale))


@dataclass(frozen=True)
class WeightedFunctionTriple:
    nu: np.ndarray
    f: np.ndarray
    g: np.ndarray
    K: np.ndarray | None = None

    def __post_init__(self):
        arrs = {}
        for name in ("nu", "f", "g", "K"):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.asarray(val, dtype=float).ravel()
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arrs[name] = arr
            object.__setattr__(self, name, arr)
        if len({len(a) for a in arrs.values()}) != 1:
            raise ValueError("nu, f, g (and K) must have the same length")
        if np.any(arrs["nu"] < 0):
            raise ValueError("nu must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.nu)


def _discordant(a: np.ndarray, b: np.ndarray, decreasing: bool) -> bool:
    """Is there a pair with ``a(x) < a(y)`` and ``b`` moving strictly the wrong way?

    Ties in ``a`` are allowed to carry any ``b``; this is exactly the
    condition under which the pairwise expansion of the inequality is
    termwise nonnegative.  ``b`` is compared with a relative tolerance.
    """
    if len(a) < 2:
        return False
    tol = REL_TOL * max(1.0, float(np.abs(b).max()))
    up = a[:, None] < a[None, :]
    db = b[None, :] - b[:, None]
    wrong = db > tol if decreasing else db < -tol
    return bool(np.any(up & wrong))


def fkg_check(triple: WeightedFunctionTriple, decreasing: bool = False) -> CheckResult:
    """``(sum nu f)(sum nu g) <= (sum nu)(sum nu f g)`` for comonotone ``f, g``.

    With ``decreasing=True`` the hypothesis and the inequality are both
    reversed.  Only points with ``nu > 0`` enter the hypothesis.
    """
    nu, f, g = triple.nu, triple.f, triple.g
    sup = nu > 0
    if _discordant(f[sup], g[sup], decreasing):
        raise HypothesisViolated("f and g are not " + ("anti" if decreasing else "") + "monotone on supp(nu)")
    lhs = (nu @ f) * (nu @ g)
    rhs = nu.sum() * (nu @ (f * g))
    scale = max((nu @ np.abs(f)) * (nu @ np.abs(g)), nu.sum() * (nu @ np.abs(f * g)), np.finfo(float).tiny)
    return _result(rhs, lhs, scale) if decreasing else _result(lhs, rhs, scale)


def fkg2_check(triple: WeightedFunctionTriple, decreasing: bool = False) -> CheckResult:
    """``(sum nu f)(sum nu g K) <= (sum nu g)(sum nu f K)`` when ``f/g`` increases with ``K``.

    ``g`` must be positive on the support of ``nu``; ``f`` may take either
    sign since the statement reduces to :func:`fkg_check` with weight
    ``nu g``.
    """
    if triple.K is None:
        raise ValueError("fkg2_check needs K")
    nu, f, g, K = triple.nu, triple.f, triple.g, triple.K
    sup = nu > 0
    if np.any(g[sup] <= 0):
        raise DivisionByZeroWeight("g must be positive where nu > 0")
    ratio = f[sup] / g[sup]
    if _discordant(K[sup], ratio, decreasing):
        raise HypothesisViolated("f/g is not " + ("de" if decreasing else "in") + "creasing in K on supp(nu)")
    lhs = (nu @ f) * (nu @ (g * K))
    rhs = (nu @ g) * (nu @ (f * K))
    scale = max((nu @ np.abs(f)) * (nu @ np.abs(g * K)), (nu @ np.abs(g)) * (nu @ np.abs(f * K)),
                np.finfo(float).tiny)
    return _result(rhs, lhs, scale) if decreasing else _result(lhs, rhs, scale)


# --- Boolean cube --------------------------------------------------------

@dataclass(frozen=True)
class CubeFunction:
    k: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if len(vals) != 1 << self.k:
            raise ValueError(f"need 2^{self.k} values, got {len(vals)}")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("cube function values must be finite and nonnegative")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_log(cls, k: int, log_values) -> "CubeFunction":
        """Exponentiate after shifting by the maximum, so huge exponents stay representable."""
        lv = np.asarray(log_values, dtype=float)
        return cls(k, np.exp(lv - lv.max()))


def cube_points(k: int) -> np.ndarray:
    """(2^k, k) 0/1 matrix, row ``p`` holding the bits of ``p``."""
    return ((np.arange(1 << k)[:, None] >> np.arange(k)) & 1).astype(np.int64)


def gibbs_weight(params: ModelParams, t) -> CubeFunction:
    """``v -> exp(-beta H(v) + (v, t))`` on ``{0,1}^k``."""
    k = params.k
    t = np.asarray(t, dtype=float)
    if t.shape != (k,):
        raise ValueError(f"t must have length k = {k}")
    pts = cube_points(k)
    return CubeFunction.from_log(k, params.log_psi[pts.sum(axis=1)] + pts @ t)


@dataclass(frozen=True)
class LsmResult:
    holds: bool
    slack: float
    """Smallest ``(F(v|w)F(v&w) - F(v)F(w)) / scale`` over all pairs."""
    worst_pair: tuple[tuple[int, ...], tuple[int, ...]] | None

    def __bool__(self) -> bool:
        return self.holds


def _bits(p: int, k: int) -> tuple[int, ...]:
    return tuple((p >> j) & 1 for j in range(k))


def logsupermodular_check(F: CubeFunction, chunk: int = 512) -> LsmResult:
    """``F(v)F(w) <= F(v or w) F(v and w)`` over every pair, exhaustively."""
    k = F.k
    if k > MAX_CUBE_DIM:
        raise DimensionTooLarge(f"k = {k} > {MAX_CUBE_DIM}")
    vals = F.values
    top = vals.max()
    if top > 0:
        vals = vals / top
    n = len(vals)
    w = np.arange(n)
    best, best_pair = np.inf, None
    for start in range(0, n, chunk):
        v = np.arange(start, min(start + chunk, n))[:, None]
        lhs = vals[v] * vals[w]
        rhs = vals[v | w] * vals[v & w]
        scale = np.maximum(np.maximum(lhs, rhs), np.finfo(float).tiny)
        rel = (rhs - lhs) / scale
        idx = np.unravel_index(np.argmin(rel), rel.shape)
        if rel[idx] < best:
            best = float(rel[idx])
            best_pair = (int(v[idx[0], 0]), int(w[idx[1]]))
    holds = best >= -REL_TOL
    pair = None if holds else (_bits(best_pair[0], k), _bits(best_pair[1], k))
    return LsmResult(holds, best, pair)


def marginal(F: CubeFunction, keep: int) -> CubeFunction:
    """Sum out coordinates ``keep + 1 .. k``."""
    if not 0 <= keep <= F.k:
        raise ValueError(f"keep must lie in 0..{F.k}")
    return CubeFunction(keep, F.values.reshape(1 << (F.k - keep), 1 << keep).sum(axis=0))


def marginal_lsm_check(F: CubeFunction, keep: int) -> LsmResult:
    """Log-supermodularity of the marginal on the first ``keep`` coordinates."""
    if F.k > MAX_CUBE_DIM:
        raise DimensionTooLarge(f"k = {F.k} > {MAX_CUBE_DIM}")
    if not logsupermodular_check(F):
        raise HypothesisViolated("F itself is not log-supermodular")
    return logsupermodular_check(marginal(F, keep))


# --- internals of the concavity and monotonicity proofs -------------------

@dataclass(frozen=True)
class AbcdResult:
    A: float
    B: float
    C: float
    D: float
    bc_le_ad: CheckResult
    a_ge_d: CheckResult
    b_eq_c: bool

    @property
    def holds(self) -> bool:
        return self.bc_le_ad.holds and self.a_ge_d.holds and self.b_eq_c


def abcd_sums(params: ModelParams, t) -> tuple[float, float, float, float]:
    """``A, B, C, D`` as sums over ``v in {0,1}^{k-2}`` of ``exp(-beta H(v ab) + (v, t))``.

    The suffix ``ab`` is ``11, 01, 10, 00`` respectively.  Returned relative
    to a common scale so that ratios and products are safe.
    """
    k = params.k
    t = np.asarray(t, dtype=float).ravel()
    if k < 2:
        raise ValueError("need k >= 2")
    if t.shape != (k - 2,):
        raise ValueError(f"need k-2 = {k - 2} values of t")
    if k - 2 > MAX_ENUM_DIM:
        raise DimensionTooLarge(f"2^{k - 2} terms is too many")
    pts = cube_points(k - 2)
    ones = pts.sum(axis=1)
    lin = pts @ t
    lp = params.log_psi
    # suffix (a, b) adds a + b ones
    logs = [logsumexp(lp[ones + a + b] + lin) for a, b in ((1, 1), (0, 1), (1, 0), (0, 0))]
    shift = max(logs)
    A, B, C, D = (float(np.exp(x - shift)) for x in logs)
    return A, B, C, D


def abcd_check(params: ModelParams, t) -> AbcdResult:
    """``BC <= AD`` (any ``t``), ``A >= D`` (needs ``t >= 0``) and ``B = C``."""
    t = np.asarray(t, dtype=float).ravel()
    if np.any(t < 0):
        raise HypothesisViolated("A >= D is only claimed for nonnegative t")
    A, B, C, D = abcd_sums(params, t)
    bc = _result(B * C, A * D, max(B * C, A * D))
    ad = _result(D, A, max(A, D))
    b_eq_c = abs(B - C) <= REL_TOL * max(B, C)
    return AbcdResult(A, B, C, D, bc, ad, b_eq_c)


@dataclass(frozen=True)
class NewtonResult:
    holds: bool
    slack: float
    log_f: np.ndarray
    log_ratios: np.ndarray
    """``log f(i+1) - log f(i)`` for ``i = 0..k-1``."""

    def __bool__(self) -> bool:
        return self.holds


def newton_ratio_check(t, z: float) -> NewtonResult:
    """``z >= f(1)/f(0) >= ... >= f(k)/f(k-1) >= 1/z`` with ``f(i) = e(i)/C(k,i)``.

    ``e(i)`` is summed over all ``|v| = i`` with ``v`` in ``{0,1}^k``.  The
    box ``|t_i| <= log z`` is required.
    """
    t = np.asarray(t, dtype=float).ravel()
    k = len(t)
    if k < 1:
        raise ValueError("need at least one coordinate")
    if k > MAX_ENUM_DIM:
        raise DimensionTooLarge(f"2^{k} terms is too many")
    if not z >= 1:
        raise HypothesisViolated("need z >= 1")
    log_z = float(np.log(z))
    tol = REL_TOL * max(1.0, log_z, float(np.abs(t).max()))
    if np.any(np.abs(t) > log_z + tol):
        raise HypothesisViolated("t leaves the box [-log z, log z]^k")
    pts = cube_points(k)
    ones = pts.sum(axis=1)
    lin = pts @ t
    log_e = np.array([logsumexp(lin[ones == i]) for i in range(k + 1)])
    i = np.arange(k + 1)
    log_binom = gammaln(k + 1) - gammaln(i + 1) - gammaln(k - i + 1)
    log_f = log_e - log_binom
    r = np.diff(log_f)
    margins = np.concatenate([r[:-1] - r[1:], log_z - r, r + log_z])
    slack = float(margins.min())
    return NewtonResult(bool(slack >= -tol), slack, log_f, r)


def slope_triple(params: ModelParams) -> WeightedFunctionTriple:
    """Occupancy weights ``C(k,i) e^{-beta h_i}``, ``f(i) = 2(i-k/2)^2 - k/2``, ``g = 1``, ``K = h``.

    The decreasing form of :func:`fkg2_check` on this triple is the
    statement that the slope of ``F`` at 0 does not decrease in ``beta``.
    """
    k = params.k
    i = np.arange(k + 1)
    log_binom = gammaln(k + 1) - gammaln(i + 1) - gammaln(k - i + 1)
    logits = log_binom + params.log_psi
    nu = np.exp(logits - logits.max())
    f = 2.0 * (i - k / 2.0) ** 2 - k / 2.0
    return WeightedFunctionTriple(nu, f, np.ones(k + 1), params.h)


def corner_triple(params: ModelParams, t, t_star: float) -> WeightedFunctionTriple:
    """``nu = e^{-beta h_i}``, ``f = e(i) + e(k-i)``, ``g = C(k,i)(z^i + z^{k-i})``, ``K = h``, ``z = e^{t_star}``.

    Increasing :func:`fkg2_check` on this triple gives ``a_beta(t) <= a_beta(t_star, ..., t_star)``.
    Everything is scaled by a common factor, which leaves the inequality alone.
    """
    k = params.k
    t = np.asarray(t, dtype=float).ravel()
    pts = cube_points(k)
    ones = pts.sum(axis=1)
    lin = pts @ t
    i = np.arange(k + 1)
    log_e = np.array([logsumexp(lin[ones == j]) for j in i])
    log_f = np.logaddexp(log_e, log_e[::-1])
    log_binom = gammaln(k + 1) - gammaln(i + 1) - gammaln(k - i + 1)
    log_g = log_binom + np.logaddexp(i * t_star, (k - i) * t_star)
    shift = max(log_f.max(), log_g.max())
    nu = np.exp(params.log_psi - params.log_psi.max())
    return WeightedFunctionTriple(nu, np.exp(log_f - shift), np.exp(log_g - shift), params.h)


# --- randomized battery --------------------------------------------------

@dataclass
class BatteryRow:
    name: str
    instances: int = 0
    failures: int = 0
    min_slack: float = np.inf
    notes: list[str] = field(default_factory=list)

    def record(self, ok: bool, slack: float, note: str = "") -> None:
        self.instances += 1
        self.min_slack = min(self.min_slack, float(slack))
        if not ok:
            self.failures += 1
            if note and len(self.notes) < 5:
                self.notes.append(note)


def _random_model(rng: np.random.Generator, k_range=(2, 6), beta_max: float = 5.0) -> ModelParams:
    k = int(rng.integers(k_range[0], k_range[1] + 1))
    d = int(rng.integers(2, 5))
    return ModelParams(d, random_potentials(k, rng), float(rng.uniform(0, beta_max)))


def _monotone_image(rng: np.random.Generator, x: np.ndarray) -> np.ndarray:
    """A random nondecreasing function of ``x`` (ties preserved)."""
    uniq = np.unique(x)
    steps = np.cumsum(rng.exponential(size=len(uniq)) * (rng.random(len(uniq)) < 0.8))
    return steps[np.searchsorted(uniq, x)] + rng.normal()


def oracle_battery(seed: int = 0, n: int = 500) -> list[BatteryRow]:
    """Run every check on ``n`` random instances drawn inside its hypotheses."""
    from .symmetric import a_beta, phase_point

    rng = np.random.default_rng(seed)
    rows = {name: BatteryRow(name) for name in (
        "fkg", "fkg_decreasing", "fkg2", "fkg2_slope", "fkg2_corner",
        "logsupermodular", "marginal_lsm", "abcd", "newton_ratio", "a_beta_corner")}

    for _ in range(n):
        m = int(rng.integers(2, 9))
        nu = rng.exponential(size=m) * (rng.random(m) < 0.9)
        f = rng.integers(-3, 4, size=m).astype(float) if rng.random() < 0.3 else rng.normal(size=m)
        g = _monotone_image(rng, f)
        r = fkg_check(WeightedFunctionTriple(nu, f, g))
        rows["fkg"].record(r.holds, r.slack / r.scale)
        r = fkg_check(WeightedFunctionTriple(nu, f, -g), decreasing=True)
        rows["fkg_decreasing"].record(r.holds, r.slack / r.scale)

        K = rng.normal(size=m)
        gg = rng.exponential(size=m) + 1e-3
        ff = np.exp(_monotone_image(rng, K)) * gg
        r = fkg2_check(WeightedFunctionTriple(nu, ff, gg, K))
        rows["fkg2"].record(r.holds, r.slack / r.scale)

        params = _random_model(rng)
        r = fkg2_check(slope_triple(params), decreasing=True)
        rows["fkg2_slope"].record(r.holds, r.slack / r.scale, f"{params}")

        pp = phase_point(params.d, params.potentials, params.beta)
        tb = rng.uniform(-pp.t_star, pp.t_star, size=params.k)
        r = fkg2_check(corner_triple(params, tb, pp.t_star))
        rows["fkg2_corner"].record(r.holds, r.slack / r.scale, f"{params} t={tb}")
        corner = a_beta(params, np.full(params.k, pp.t_star))
        val = a_beta(params, tb)
        scale = max(1.0, abs(corner))
        rows["a_beta_corner"].record(val <= corner + REL_TOL * scale, (corner - val) / scale,
                                     f"{params} t={tb}")

        t = rng.normal(scale=2.0, size=params.k)
        Fw = gibbs_weight(params, t)
        r = logsupermodular_check(Fw)
        rows["logsupermodular"].record(r.holds, r.slack, f"{params} t={t}")
        keep = int(rng.integers(0, params.k + 1))
        r = marginal_lsm_check(Fw, keep)
        rows["marginal_lsm"].record(r.holds, r.slack, f"{params} t={t} keep={keep}")

        p2 = _random_model(rng, (2, 7))
        t2 = rng.exponential(size=p2.k - 2) * (rng.random(p2.k - 2) < 0.8)
        r = abcd_check(p2, t2)
        rows["abcd"].record(r.holds, min(r.bc_le_ad.slack / r.bc_le_ad.scale, r.a_ge_d.slack / r.a_ge_d.scale),
                            f"{p2} t={t2}")

        kk = int(rng.integers(1, 11))
        z = float(np.exp(rng.uniform(0, 3)))
        tn = rng.uniform(-np.log(z), np.log(z), size=kk)
        r = newton_ratio_check(tn, z)
        rows["newton_ratio"].record(r.holds, r.slack, f"z={z} t={tn}")
    return list(rows.values())


def format_battery(rows: list[BatteryRow]) -> str:
    lines = [f"{'check':<18} {'instances':>9} {'failures':>8} {'min_slack':>12}"]
    for row in rows:
        lines.append(f"{row.name:<18} {row.instances:>9d} {row.failures:>8d} {row.min_slack:>12.3e}")
    return "\n".join(lines)
