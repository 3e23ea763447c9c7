"""Free energies of biregular factor graphs with symmetric concave potentials.

Exact engines, belief propagation, the symmetric fixed-point analysis of the
biregular tree, correlation-inequality oracles and a Glauber sampler.
"""
from .errors import BetheLimitError
from .factor_graph import (
    FactorGraph,
    cycle_graph,
    generate_biregular,
    generate_large_girth,
    girth,
    truncated_tree,
)
from .potentials import ModelParams, PotentialSequence, hamiltonian, parse_potentials
from .symmetric import beta_c, bethe_limit, bethe_value, g, phase_point

__all__ = [
    "BetheLimitError", "FactorGraph", "ModelParams", "PotentialSequence",
    "beta_c", "bethe_limit", "bethe_value", "cycle_graph", "g", "generate_biregular",
    "generate_large_girth", "girth", "hamiltonian", "parse_potentials", "phase_point",
    "truncated_tree",
]

__version__ = "0.1.0"
