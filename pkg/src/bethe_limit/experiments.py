"""Convergence studies and phase scans, emitted as CSV rows."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import exact, sampler
from .errors import VerificationFailure
from .factor_graph import FactorGraph, cycle_graph, generate_biregular, generate_large_girth, girth
from .potentials import ModelParams, PotentialSequence
from .symmetric import beta_c, phase_point

LOWER_BOUND_TOL = 1e-9
CONVERGE_COLUMNS = ("n_vars", "girth", "beta", "phi_exact_or_mc", "phi_error", "phi_bethe", "gap")
PHASE_COLUMNS = ("beta", "t_star", "phi", "dphi", "slope_at_zero")


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    potentials: PotentialSequence
    betas: tuple[float, ...]
    sizes: tuple[int, ...] = ()
    """Variable counts of the generated instances (convergence runs only)."""
    kind: str = "biregular"
    """``biregular`` (configuration model) or ``cycle`` (needs ``d = k = 2``)."""
    seeds: tuple[int, ...] = ()
    instances: int = 1
    min_girth: float = 0
    simple: bool = False
    exact_cap: int = 18
    sweeps: int = 2000
    burn_in: int = 200
    chains: int = 8
    ti_points: int = 21
    out: str | None = None
    graphs: tuple[FactorGraph, ...] = field(default=(), repr=False)
    """Explicit instances; used instead of generating from ``sizes``."""

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        object.__setattr__(self, "betas", betas)
        if not betas:
            raise ValueError("beta grid is empty")
        if any(b1 <= b0 for b0, b1 in zip(betas, betas[1:])):
            raise ValueError("beta grid must be strictly increasing")
        if self.kind not in ("biregular", "cycle"):
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.kind == "cycle" and (self.d, self.potentials.k) != (2, 2):
            raise ValueError("cycles are (2, 2)-biregular")
        if self.kind == "biregular" and self.sizes and not self.graphs and not self.seeds:
            raise ValueError("generated instances need seeds")

    @property
    def k(self) -> int:
        return self.potentials.k


def _instances(config: ExperimentConfig):
    if config.graphs:
        yield from config.graphs
        return
    for n in config.sizes:
        if config.kind == "cycle":
            yield cycle_graph(n)
            continue
        for seed in config.seeds[:config.instances] if config.instances else config.seeds:
            if config.min_girth > 0:
                yield generate_large_girth(config.d, config.k, n, config.min_girth, seed=seed)
            else:
                yield generate_biregular(config.d, config.k, n, seed=seed, simple=config.simple)


def _exact_phi(graph: FactorGraph, params: ModelParams, cap: int):
    """Exact ``Phi_G`` when some engine applies, else ``None``."""
    if graph.biregular == (2, 2) and _is_cycle(graph):
        return exact.transfer_matrix_cycle(graph.n_vars, params).free_energy_density
    if graph.is_forest():
        return exact.tree_partition(graph, params).free_energy_density
    if graph.n_vars <= cap:
        return exact.brute_force(graph, params, max_vars=cap)[0].free_energy_density
    return None


def _is_cycle(graph: FactorGraph) -> bool:
    if graph.n_components() != 1:
        return False
    ref = cycle_graph(graph.n_vars)
    return graph.edge_multiset() == ref.edge_multiset()


def run_convergence_experiment(config: ExperimentConfig) -> list[dict]:
    """One row per (instance, beta); asserts the Bethe lower bound on every exact row."""
    bethe = {b: phase_point(config.d, config.potentials, b).bethe for b in config.betas}
    rows = []
    for i, graph in enumerate(_instances(config)):
        g = girth(graph)
        for beta in config.betas:
            params = ModelParams(config.d, config.potentials, beta)
            phi = _exact_phi(graph, params, config.exact_cap)
            if phi is None:
                res = sampler.thermodynamic_integration(
                    graph, params, beta, sweeps=config.sweeps, burn_in=config.burn_in,
                    seed=(config.seeds[i % len(config.seeds)] if config.seeds else 0),
                    chains=config.chains, points=config.ti_points)
                phi, err = res.phi, res.std_error
            else:
                err = 0.0
            gap = phi - bethe[beta]
            if err == 0.0 and gap < -LOWER_BOUND_TOL:
                raise VerificationFailure(
                    f"exact Phi_G = {phi!r} is below the Bethe value {bethe[beta]!r} at beta={beta}")
            rows.append(dict(n_vars=graph.n_vars, girth=g, beta=beta, phi_exact_or_mc=phi,
                             phi_error=err, phi_bethe=bethe[beta], gap=gap))
    return rows


def run_phase_scan(config: ExperimentConfig) -> tuple[list[dict], object]:
    """Rows ``beta, t_star, phi, dphi, slope_at_zero`` plus the critical point."""
    rows = []
    for beta in config.betas:
        pp = phase_point(config.d, config.potentials, beta)
        rows.append(dict(beta=beta, t_star=pp.t_star, phi=pp.bethe, dphi=pp.dphi,
                         slope_at_zero=pp.slope_at_zero))
    ts = [r["t_star"] for r in rows]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise VerificationFailure("t_star decreased along an increasing beta grid")
    return rows, beta_c(config.d, config.potentials)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def to_csv(rows: list[dict], columns, comments=()) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    for line in comments:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def phase_csv(rows: list[dict], crit) -> str:
    return to_csv(rows, PHASE_COLUMNS, [f"beta_c={crit.label()}"])


def beta_grid(beta_min: float, beta_max: float, steps: int) -> tuple[float, ...]:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        return (float(beta_min),)
    return tuple(np.linspace(beta_min, beta_max, steps).tolist())
