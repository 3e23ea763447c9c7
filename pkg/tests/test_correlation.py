import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bethe_limit.correlation import (
    CubeFunction,
    WeightedFunctionTriple,
    abcd_check,
    abcd_sums,
    fkg2_check,
    fkg_check,
    format_battery,
    gibbs_weight,
    slope_triple,
    corner_triple,
    logsupermodular_check,
    marginal,
    marginal_lsm_check,
    newton_ratio_check,
    oracle_battery,
)
from bethe_limit.errors import DimensionTooLarge, DivisionByZeroWeight, HypothesisViolated
from bethe_limit.potentials import ModelParams, random_potentials
from bethe_limit.symmetric import a_beta, dF_dt_at_zero, phase_point

from conftest import H_33, H_34


def test_fkg_examples():
    x = np.arange(1.0, 5.0)
    r = fkg_check(WeightedFunctionTriple(np.ones(4), x, x))
    assert r.slack == 20.0 and r.holds
    r = fkg_check(WeightedFunctionTriple(np.ones(4), np.full(4, 2.0), np.array([3.0, -1, 0, 5])))
    assert r.slack == 0.0


def test_fkg_rejects_discordant_pair():
    with pytest.raises(HypothesisViolated):
        fkg_check(WeightedFunctionTriple(np.ones(2), [0.0, 1.0], [1.0, 0.0]))
    # off the support the hypothesis is not needed
    r = fkg_check(WeightedFunctionTriple([1.0, 0.0, 1.0], [0.0, 1.0, 2.0], [0.0, -9.0, 1.0]))
    assert r.holds


@settings(max_examples=300, deadline=None)
@given(data=st.data(), m=st.integers(1, 8))
def test_fkg_random_comonotone(data, m):
    nu = np.array(data.draw(st.lists(st.floats(0, 10), min_size=m, max_size=m)))
    f = np.array(data.draw(st.lists(st.integers(-5, 5), min_size=m, max_size=m)), dtype=float)
    slope = data.draw(st.floats(0, 5))
    g = slope * f ** 3 + data.draw(st.floats(-3, 3))
    assert fkg_check(WeightedFunctionTriple(nu, f, g)).holds
    assert fkg_check(WeightedFunctionTriple(nu, f, -g), decreasing=True).holds


def test_fkg_literal_recomputation(rng):
    for _ in range(200):
        m = int(rng.integers(2, 8))
        nu = rng.exponential(size=m)
        f = np.sort(rng.normal(size=m))
        g = np.sort(rng.normal(size=m))
        r = fkg_check(WeightedFunctionTriple(nu, f, g))
        # pairwise form: (1/2) sum_xy nu_x nu_y (f_x - f_y)(g_x - g_y)
        pair = 0.5 * sum(nu[a] * nu[b] * (f[a] - f[b]) * (g[a] - g[b]) for a in range(m) for b in range(m))
        assert r.slack == pytest.approx(pair, abs=1e-12)


def test_fkg2_examples(rng):
    nu = rng.exponential(size=5)
    f = rng.exponential(size=5)
    assert fkg2_check(WeightedFunctionTriple(nu, f, f, rng.normal(size=5))).slack == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DivisionByZeroWeight):
        fkg2_check(WeightedFunctionTriple(np.ones(2), [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]))
    with pytest.raises(HypothesisViolated):
        fkg2_check(WeightedFunctionTriple(np.ones(2), [2.0, 1.0], [1.0, 1.0], [0.0, 1.0]))


@pytest.mark.parametrize("model", [(3, H_33), (3, H_34), (4, H_34)])
def test_fkg2_slope_instance(model):
    d, h = model
    prev = -np.inf
    for beta in np.linspace(0, 6, 25):
        p = ModelParams(d, h, beta)
        r = fkg2_check(slope_triple(p), decreasing=True)
        assert r.holds
        # the inequality is the statement that the slope derivative in beta is >= 0
        slope = dF_dt_at_zero(p)
        assert slope >= prev - 1e-12
        prev = slope


def test_slope_triple_is_slope_derivative():
    p = ModelParams(3, H_34, 1.3)
    tri = slope_triple(p)
    nu = tri.nu / tri.nu.sum()
    cov = nu @ (tri.f * tri.K) - (nu @ tri.f) * (nu @ tri.K)
    step = 1e-5
    fd = (dF_dt_at_zero(p.with_beta(1.3 + step)) - dF_dt_at_zero(p.with_beta(1.3 - step))) / (2 * step)
    # d/dbeta E[f] = -Cov(f, h)
    assert -cov * 2 * (p.d - 1) / p.k == pytest.approx(fd, abs=1e-6)
    assert fkg2_check(tri, decreasing=True).slack >= 0


def test_fkg2_corner_instance(rng):
    for _ in range(100):
        k = int(rng.integers(2, 6))
        p = ModelParams(3, random_potentials(k, rng), float(rng.uniform(0.5, 5)))
        ts = phase_point(3, p.potentials, p.beta).t_star
        t = rng.uniform(-ts, ts, size=k)
        assert fkg2_check(corner_triple(p, t, ts)).holds


def test_corner_triple_ratio_is_a_beta(rng):
    # sum nu f K / sum nu f is -a_beta(t); the same with g is -a_beta at the corner
    k = 4
    p = ModelParams(3, H_34, 2.0)
    ts = phase_point(3, H_34, 2.0).t_star
    t = rng.uniform(-ts, ts, size=k)
    tri = corner_triple(p, t, ts)
    assert (tri.nu @ (tri.f * tri.K)) / (tri.nu @ tri.f) == pytest.approx(-a_beta(p, t), rel=1e-12)
    assert (tri.nu @ (tri.g * tri.K)) / (tri.nu @ tri.g) == pytest.approx(-a_beta(p, np.full(k, ts)), rel=1e-12)


def test_lsm_examples(rng):
    for _ in range(20):
        p = ModelParams(3, random_potentials(4, rng), float(rng.uniform(0, 5)))
        assert logsupermodular_check(gibbs_weight(p, rng.normal(scale=2, size=4))).holds
    bad = CubeFunction(2, [0.0, 1.0, 1.0, 0.0])
    r = logsupermodular_check(bad)
    assert not r.holds
    assert set(r.worst_pair) == {(1, 0), (0, 1)}
    r = logsupermodular_check(CubeFunction(3, np.full(8, 2.5)))
    assert r.holds and r.slack == 0.0
    with pytest.raises(DimensionTooLarge):
        logsupermodular_check(CubeFunction(17, np.ones(1 << 17)))


def test_lsm_against_pair_loop(rng):
    for _ in range(30):
        k = 3
        vals = rng.exponential(size=8)
        r = logsupermodular_check(CubeFunction(k, vals))
        ok = all(vals[v] * vals[w] <= vals[v | w] * vals[v & w] * (1 + 1e-12)
                 for v, w in itertools.product(range(8), repeat=2))
        assert r.holds == ok


def test_marginal_examples(rng):
    p = ModelParams(3, H_34, 2.0)
    Fw = gibbs_weight(p, rng.normal(size=4))
    for keep in range(5):
        assert marginal_lsm_check(Fw, keep).holds
    assert marginal_lsm_check(Fw, 4) == logsupermodular_check(Fw)
    probs = rng.uniform(0.1, 0.9, size=4)
    prod = CubeFunction(4, [np.prod([probs[j] if (x >> j) & 1 else 1 - probs[j] for j in range(4)]) for x in range(16)])
    r = marginal_lsm_check(prod, 2)
    assert r.holds and abs(r.slack) < 1e-12
    # summing out high bits by hand
    m = marginal(Fw, 1)
    assert m.values[1] == pytest.approx(Fw.values[1::2].sum(), rel=1e-14)
    with pytest.raises(HypothesisViolated):
        marginal_lsm_check(CubeFunction(2, [0.0, 1.0, 1.0, 0.0]), 1)


def test_abcd_examples(rng):
    res = abcd_check(ModelParams(3, random_potentials(5, rng), 0.0), np.zeros(3))
    assert res.A == res.B == res.C == res.D == 1.0
    for _ in range(500):
        k = int(rng.integers(2, 8))
        p = ModelParams(3, random_potentials(k, rng), float(rng.uniform(0, 5)))
        t = rng.exponential(size=k - 2)
        res = abcd_check(p, t)
        assert res.holds
        assert abs(res.B - res.C) <= 1e-12 * max(res.B, res.C)
    with pytest.raises(HypothesisViolated):
        abcd_check(ModelParams(3, H_34, 1.0), [-1.0, 0.0])


def test_abcd_against_loop():
    p = ModelParams(3, H_34, 1.4)
    t = np.array([0.3, 1.1])
    h = H_34.array
    raw = []
    for a, b in ((1, 1), (0, 1), (1, 0), (0, 0)):
        raw.append(sum(math.exp(-1.4 * h[v0 + v1 + a + b] + v0 * t[0] + v1 * t[1])
                       for v0, v1 in itertools.product((0, 1), repeat=2)))
    got = abcd_sums(p, t)
    np.testing.assert_allclose(np.array(got) / got[0], np.array(raw) / raw[0], rtol=1e-13)


def test_newton_examples(rng):
    r = newton_ratio_check(np.zeros(5), 3.0)
    np.testing.assert_allclose(r.log_f, 0, atol=1e-14)
    np.testing.assert_allclose(r.log_ratios, 0, atol=1e-14)
    z = 2.5
    r = newton_ratio_check(np.full(4, math.log(z)), z)
    np.testing.assert_allclose(r.log_ratios, math.log(z), atol=1e-13)
    assert r.holds
    for _ in range(500):
        k = int(rng.integers(1, 11))
        z = float(np.exp(rng.uniform(0, 3)))
        assert newton_ratio_check(rng.uniform(-math.log(z), math.log(z), size=k), z).holds
    with pytest.raises(HypothesisViolated):
        newton_ratio_check([2.0], math.e)


def test_battery_has_no_failures():
    rows = oracle_battery(seed=1, n=200)
    assert {r.name for r in rows} >= {"fkg", "fkg2", "logsupermodular", "abcd", "newton_ratio"}
    for row in rows:
        assert row.instances == 200 and row.failures == 0, row
    text = format_battery(rows)
    assert text.splitlines()[0].split() == ["check", "instances", "failures", "min_slack"]
    assert len(text.splitlines()) == len(rows) + 1
