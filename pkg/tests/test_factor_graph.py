import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bethe_limit.errors import DegreeMismatch, DepthTooLarge, DivisibilityError, GraphError, SimpleGraphTimeout
from bethe_limit.factor_graph import (
    DirectedEdgeId,
    FactorGraph,
    cycle_graph,
    generate_biregular,
    generate_large_girth,
    girth,
    random_forest,
    relabel,
    truncated_tree,
)


def nx_girth(graph: FactorGraph) -> float:
    """Oracle: networkx multigraph girth, with parallel edges giving 2."""
    if len(set(map(tuple, graph.edges.tolist()))) < graph.n_edges:
        return 2
    G = nx.Graph()
    G.add_edges_from((("v", v), ("f", f)) for v, f in graph.edges.tolist())
    g = nx.girth(G)
    return math.inf if g == math.inf else g


def test_double_edge_from_smallest_configuration():
    g = generate_biregular(2, 2, 1, seed=7)
    assert (g.n_vars, g.n_factors, g.n_edges) == (1, 1, 2)
    assert girth(g) == 2


def test_degree_audit_and_handshake():
    g = generate_biregular(3, 3, 6, seed=42)
    assert (g.n_vars, g.n_factors) == (6, 6)
    assert np.all(g.var_degrees == 3) and np.all(g.factor_degrees == 3)
    assert g.n_vars * 3 == g.n_edges == g.n_factors * 3
    assert g.is_biregular(3, 3)


@pytest.mark.parametrize("d,k,n", [(2, 3, 6), (3, 2, 8), (4, 6, 9), (5, 5, 20)])
def test_handshake_for_many_shapes(d, k, n):
    g = generate_biregular(d, k, n, seed=n)
    assert n * d == g.n_edges == g.n_factors * k
    assert np.all(g.var_degrees == d) and np.all(g.factor_degrees == k)


def test_divisibility_error():
    with pytest.raises(DivisibilityError):
        generate_biregular(2, 3, 4, seed=0)


def test_simple_generation_and_timeout():
    g = generate_biregular(3, 3, 12, seed=1, simple=True)
    assert girth(g) > 2
    with pytest.raises(SimpleGraphTimeout) as info:
        generate_biregular(2, 2, 1, seed=0, simple=True, max_retries=5)
    assert info.value.retries == 5


def test_generation_is_deterministic():
    a = generate_biregular(3, 3, 9, seed=11)
    b = generate_biregular(3, 3, 9, seed=11)
    np.testing.assert_array_equal(a.edges, b.edges)


def test_biregular_flag_audits_degrees():
    with pytest.raises(DegreeMismatch):
        FactorGraph(2, 1, [(0, 0), (1, 0)], biregular=(2, 2))
    with pytest.raises(GraphError):
        FactorGraph(1, 1, [(1, 0)])


def test_adjacency_consistent_with_edges():
    g = generate_biregular(3, 3, 9, seed=3)
    for v, adj in enumerate(g.var_adjacency):
        assert all(g.edges[e, 0] == v for e in adj)
    for f, adj in enumerate(g.factor_adjacency):
        assert all(g.edges[e, 1] == f for e in adj)
    assert sum(map(len, g.var_adjacency)) == sum(map(len, g.factor_adjacency)) == g.n_edges


def test_directed_edge_ids_are_a_bijection():
    g = generate_biregular(3, 3, 6, seed=0)
    ids = {DirectedEdgeId(e, b).index for e in range(g.n_edges) for b in (True, False)}
    assert ids == set(range(2 * g.n_edges))
    for i in range(2 * g.n_edges):
        assert DirectedEdgeId.from_index(i).index == i


def test_cycle_graph_shapes():
    assert cycle_graph(2).edge_multiset() == [(0, 0), (0, 1), (1, 0), (1, 1)]
    one = cycle_graph(1)
    assert one.n_vars == one.n_factors == 1 and girth(one) == 2
    assert girth(cycle_graph(3)) == 6
    assert girth(cycle_graph(5)) == 10


def test_truncated_tree_counts():
    g, leaves = truncated_tree(2, 2, 0)
    assert (g.n_vars, g.n_factors, len(leaves)) == (2, 1, 2)
    g, leaves = truncated_tree(3, 3, 1)
    assert g.n_factors == 1 + 6
    assert g.n_vars == 3 + 12 and len(leaves) == 12
    assert np.all(g.var_degrees[leaves] == 1)
    interior = np.setdiff1d(np.arange(g.n_vars), leaves)
    assert np.all(g.var_degrees[interior] == 3) and np.all(g.factor_degrees == 3)
    assert girth(g) == math.inf and girth(truncated_tree(3, 3, 2)[0]) == math.inf


def test_truncated_tree_cap():
    with pytest.raises(DepthTooLarge):
        truncated_tree(3, 3, 30)


def test_random_forest_is_forest():
    for seed in range(20):
        g = random_forest(3, 5, seed=seed, isolated=seed % 2)
        assert g.is_forest()
        assert np.all(g.factor_degrees == 3)


@pytest.mark.parametrize("seed", range(15))
def test_girth_matches_networkx(seed):
    rng = np.random.default_rng(seed)
    d, k = [(2, 2), (3, 3), (2, 3), (3, 2), (2, 4)][seed % 5]
    n = {2: 10, 3: 9, 4: 12}[k] if (d, k) != (3, 2) else 10
    g = generate_biregular(d, k, n, seed=rng)
    assert girth(g) == nx_girth(g)


def test_large_girth_filter():
    g = generate_large_girth(3, 3, 24, min_girth=6, seed=5)
    assert girth(g) >= 6
    assert girth(g) == nx_girth(g)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_girth_invariant_under_relabeling(seed):
    rng = np.random.default_rng(seed)
    g = generate_biregular(3, 3, 12, seed=rng)
    h = relabel(g, rng.permutation(g.n_vars), rng.permutation(g.n_factors))
    assert girth(h) == girth(g)
    assert h.is_biregular(3, 3)
