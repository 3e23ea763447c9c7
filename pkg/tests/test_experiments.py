import csv
import io
import math

import numpy as np
import pytest

from bethe_limit.errors import VerificationFailure
from bethe_limit.experiments import (
    CONVERGE_COLUMNS,
    PHASE_COLUMNS,
    ExperimentConfig,
    beta_grid,
    phase_csv,
    run_convergence_experiment,
    run_phase_scan,
    to_csv,
)
from bethe_limit.factor_graph import generate_biregular
from bethe_limit.potentials import PotentialSequence
from bethe_limit.symmetric import phase_point

from conftest import H_22, H_33

RHO = (math.e - 1) / (math.e + 1)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(3, H_33, ())
    with pytest.raises(ValueError):
        ExperimentConfig(3, H_33, (1.0, 0.5))
    with pytest.raises(ValueError):
        ExperimentConfig(3, H_33, (1.0,), sizes=(9,))
    with pytest.raises(ValueError):
        ExperimentConfig(3, H_33, (1.0,), kind="cycle")
    with pytest.raises(ValueError):
        ExperimentConfig(3, H_33, (1.0,), kind="lattice")


def test_cycle_gap_has_closed_form():
    cfg = ExperimentConfig(2, H_22, (1.0,), sizes=tuple(range(2, 13)), kind="cycle")
    rows = run_convergence_experiment(cfg)
    gaps = np.array([r["gap"] for r in rows])
    ns = np.array([r["n_vars"] for r in rows])
    assert np.all(np.diff(gaps) < 0)
    assert gaps[-1] < 1e-3
    # trace(T^n) = (1+e^-1)^n + (1-e^-1)^n gives the gap exactly
    np.testing.assert_allclose(gaps, np.log1p(RHO ** ns) / ns, rtol=1e-8, atol=1e-15)
    assert rows[-1]["phi_bethe"] == pytest.approx(math.log1p(math.exp(-1)), abs=1e-12)
    assert all(r["girth"] == 2 * r["n_vars"] for r in rows)


def test_beta_zero_gap_vanishes():
    cfg = ExperimentConfig(3, H_33, (0.0, 1.0), sizes=(9, 12), seeds=(0, 1), instances=2)
    rows = run_convergence_experiment(cfg)
    assert len(rows) == 8
    for r in rows:
        if r["beta"] == 0.0:
            assert abs(r["gap"]) <= 1e-12


def test_large_girth_gaps_nonnegative():
    cfg = ExperimentConfig(3, H_33, tuple(np.linspace(0, 4, 9)), sizes=(12, 15, 18),
                           seeds=(0,), min_girth=6)
    rows = run_convergence_experiment(cfg)
    assert all(r["girth"] >= 6 and r["gap"] >= -1e-9 for r in rows)


def test_convergence_falls_back_to_sampler():
    g = generate_biregular(2, 2, 8, seed=0)
    cfg = ExperimentConfig(2, H_22, (0.5,), graphs=(g,), exact_cap=4, seeds=(3,),
                           sweeps=400, burn_in=40, chains=4, ti_points=5)
    (row,) = run_convergence_experiment(cfg)
    assert row["phi_error"] > 0


def test_phase_scan_examples():
    rows, crit = run_phase_scan(ExperimentConfig(3, H_33, beta_grid(0, 3, 31)))
    assert crit.beta_c == pytest.approx(0.8473, abs=1e-4)
    for r in rows:
        if r["beta"] < crit.beta_c:
            assert r["t_star"] == 0
        else:
            assert r["t_star"] > 0
    above = [r["t_star"] for r in rows if r["beta"] > crit.beta_c]
    assert np.all(np.diff(above) > 0)

    rows, crit = run_phase_scan(ExperimentConfig(2, H_22, beta_grid(0, 5, 11)))
    assert crit.above_cap and all(r["t_star"] == 0 for r in rows)
    assert phase_csv(rows, crit).splitlines()[-1] == "# beta_c=above_cap"

    zero = PotentialSequence((0.0, 0.0, 0.0, 0.0))
    rows, _ = run_phase_scan(ExperimentConfig(3, zero, beta_grid(0, 5, 6)))
    for r in rows:
        assert r["phi"] == pytest.approx(math.log(2), abs=1e-14)


def test_csv_format():
    rows = [dict(a=1, b=np.float64(0.1), c=True, d=math.inf)]
    text = to_csv(rows, ("a", "b", "c", "d"), ["note"])
    assert text == "a,b,c,d\n1,0.1,True,inf\n# note\n"
    rows, crit = run_phase_scan(ExperimentConfig(3, H_33, (1.0, 2.0)))
    text = phase_csv(rows, crit)
    parsed = list(csv.reader(io.StringIO(text)))
    assert tuple(parsed[0]) == PHASE_COLUMNS
    assert float(parsed[2][1]) == phase_point(3, H_33, 2.0).t_star
    assert parsed[-1][0].startswith("# beta_c=0.847")


def test_lower_bound_violation_is_raised(monkeypatch):
    import bethe_limit.experiments as ex

    monkeypatch.setattr(ex, "_exact_phi", lambda *a: -1.0)
    cfg = ExperimentConfig(2, H_22, (1.0,), sizes=(3,), kind="cycle")
    with pytest.raises(VerificationFailure):
        run_convergence_experiment(cfg)


def test_beta_grid():
    assert beta_grid(0, 1, 1) == (0.0,)
    assert beta_grid(0, 1, 5) == (0.0, 0.25, 0.5, 0.75, 1.0)
    with pytest.raises(ValueError):
        beta_grid(0, 1, 0)
    assert CONVERGE_COLUMNS == ("n_vars", "girth", "beta", "phi_exact_or_mc", "phi_error", "phi_bethe", "gap")
