"""Shared independent oracles and model fixtures.

The oracles here are deliberately naive (itertools loops, plain floats) so
they share no code path with the package.
"""
import itertools
import math

import numpy as np
import pytest

from bethe_limit.potentials import ModelParams, PotentialSequence

H_33 = PotentialSequence((0.0, 1.0, 1.0, 0.0))
H_22 = PotentialSequence((0.0, 1.0, 0.0))
H_34 = PotentialSequence((0.0, 2.0, 3.0, 2.0, 0.0))


def naive_energy(edges, h, x):
    occ = {}
    for v, f in edges:
        occ[f] = occ.get(f, 0) + x[v]
    return sum(h[o] for o in occ.values())


def naive_log_z(graph, h, beta):
    """``log sum_x exp(-beta H(x))`` by a plain loop with a max shift."""
    edges = [tuple(e) for e in graph.edges.tolist()]
    logs = [-beta * naive_energy(edges, h, x)
            for x in itertools.product((0, 1), repeat=graph.n_vars)]
    top = max(logs)
    return top + math.log(sum(math.exp(v - top) for v in logs))


def naive_marginals(graph, h, beta):
    edges = [tuple(e) for e in graph.edges.tolist()]
    z = 0.0
    acc = [0.0] * graph.n_vars
    for x in itertools.product((0, 1), repeat=graph.n_vars):
        w = math.exp(-beta * naive_energy(edges, h, x))
        z += w
        for v in range(graph.n_vars):
            acc[v] += w * x[v]
    return np.array(acc) / z


def naive_message(h, beta, ts):
    """The factor-to-variable ratio by summing over all ``2^{k-1}`` patterns."""
    num = den = 0.0
    for v in itertools.product((0, 1), repeat=len(ts)):
        lin = sum(a * b for a, b in zip(v, ts))
        s = sum(v)
        num += math.exp(-beta * h[s + 1] + lin)
        den += math.exp(-beta * h[s] + lin)
    return math.log(num) - math.log(den)


def naive_F(d, h, beta, t):
    k = len(h) - 1
    num = sum(math.comb(k - 1, i) * math.exp(-beta * h[i + 1] + i * t) for i in range(k))
    den = sum(math.comb(k - 1, i) * math.exp(-beta * h[i] + i * t) for i in range(k))
    return -t + (d - 1) * (math.log(num) - math.log(den))


@pytest.fixture
def model33():
    return ModelParams(3, H_33, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
