import itertools
import math
import random

import numpy as np
import pytest

from subsetbell import graph
from subsetbell.errors import (
    DomainError,
    GraphTooLargeError,
    InconsistentRowsError,
    InfeasibleError,
    MissingProbabilityError,
    UnknownContextError,
)
from subsetbell.graph import OrthogonalityGraph, complete_graph, cycle_graph


def brute_alpha(g):
    best = 0
    for r in range(g.num_vertices, 0, -1):
        for subset in itertools.combinations(range(g.num_vertices), r):
            s = set(subset)
            if not any(i in s and j in s for i, j in g.edges):
                return r
    return best


def random_graph(rng, n_max=12):
    n = rng.randint(1, n_max)
    p = rng.random()
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return OrthogonalityGraph.from_edges(n, edges)


def random_probabilities(rng, g):
    probs = {(i, i): rng.random() for i in range(g.num_vertices)}
    for i, j in g.edges:
        probs[(i, j)] = rng.random()
        probs[(j, i)] = rng.random()
    return probs


def test_graph_invariants():
    g = cycle_graph(5)
    assert g.num_edges == 5
    assert g.total_contexts == 15
    with pytest.raises(DomainError):
        OrthogonalityGraph.from_edges(3, [(0, 0)])
    with pytest.raises(DomainError):
        OrthogonalityGraph.from_edges(3, [(0, 5)])
    with pytest.raises(DomainError):
        OrthogonalityGraph(3, independence_number=4, num_edges=1)
    with pytest.raises(DomainError):
        OrthogonalityGraph(3)


def test_bell_value_examples():
    g = cycle_graph(5)
    probs = {(i, i): 0.5 for i in range(5)}
    for i, j in g.edges:
        probs[(i, j)] = probs[(j, i)] = 0.25
    assert graph.graph_bell_value(g, probs) == pytest.approx(1.25)
    zeros = {k: 0.0 for k in probs}
    assert graph.graph_bell_value(g, zeros) == 0.0
    # p_ii = 1/xi with no cross terms gives |V|/xi
    xi = 2.0
    diag = {k: (1 / xi if k[0] == k[1] else 0.0) for k in probs}
    assert graph.graph_bell_value(g, diag) == pytest.approx(5 / xi)


def test_bell_value_missing():
    g = cycle_graph(5)
    with pytest.raises(MissingProbabilityError):
        graph.graph_bell_value(g, {(i, i): 0.5 for i in range(5)})


@pytest.mark.parametrize("g, expected", [
    (cycle_graph(5), 2),
    (complete_graph(6), 1),
    (OrthogonalityGraph.from_edges(7, []), 7),
    (cycle_graph(8), 4),
])
def test_independence_known(g, expected):
    assert graph.independence_number(g) == expected


def test_independence_random_corpus():
    rng = random.Random(2024)
    for _ in range(150):
        g = random_graph(rng)
        assert graph.independence_number(g) == brute_alpha(g)


def test_independence_larger_graphs_against_networkx():
    nx = pytest.importorskip("networkx")
    rng = random.Random(11)
    for _ in range(10):
        n = rng.randint(20, 40)
        g = random_graph(rng, n_max=n)
        G = nx.Graph()
        G.add_nodes_from(range(g.num_vertices))
        G.add_edges_from(g.edges)
        # maximum clique of the complement equals alpha
        clique, _ = nx.max_weight_clique(nx.complement(G), weight=None)
        assert graph.independence_number(g) == len(clique)


def test_independence_budget():
    with pytest.raises(GraphTooLargeError):
        graph.independence_number(OrthogonalityGraph.from_edges(65, []))
    with pytest.raises(GraphTooLargeError):
        graph.independence_number(OrthogonalityGraph(10, num_edges=3))


def test_context_distribution():
    d = graph.context_distribution(cycle_graph(5))
    assert d.diagonal_weight == pytest.approx(1 / 3)
    assert len(d.contexts) == 15
    assert np.allclose(d.probabilities, 1 / 15)
    assert d.prob(1, 2) == pytest.approx(1 / 15)
    assert d.prob(0, 2) == 0.0
    empty = graph.context_distribution(OrthogonalityGraph.from_edges(4, []))
    assert empty.diagonal_weight == 1.0


def test_estimator_examples():
    g = cycle_graph(5)
    assert graph.graph_estimator(g, 2, 2, 0.5) == pytest.approx(7.5)
    assert graph.graph_estimator(g, 1, 2, 0.25) == pytest.approx(-1.875)
    assert graph.graph_estimator(g, 2, 1, 0.0) == 0.0
    with pytest.raises(UnknownContextError):
        graph.graph_estimator(g, 0, 2, 0.1)


def test_estimator_unbiased_c5():
    g = cycle_graph(5)
    probs = {(i, i): 0.5 for i in range(5)}
    for i, j in g.edges:
        probs[(i, j)] = probs[(j, i)] = 0.25
    d = graph.context_distribution(g)
    expectation = sum(
        p * graph.graph_estimator(g, i, j, probs[(i, j)]) for (i, j), p in zip(d.contexts, d.probabilities)
    )
    assert expectation == pytest.approx(graph.graph_bell_value(g, probs), abs=1e-12)


def test_estimator_unbiased_random():
    rng = random.Random(99)
    for _ in range(100):
        g = random_graph(rng, n_max=20)
        g = g.with_constants(xi_number=rng.choice([1.0, 1.5, 2.0]))
        probs = random_probabilities(rng, g)
        d = graph.context_distribution(g)
        expectation = math.fsum(
            p * graph.graph_estimator(g, i, j, probs[(i, j)])
            for (i, j), p in zip(d.contexts, d.probabilities)
        )
        assert expectation == pytest.approx(graph.graph_bell_value(g, probs), abs=1e-10)


def test_hoeffding_contexts():
    g = cycle_graph(5)
    assert graph.hoeffding_contexts(g, 1.0, math.exp(-1)) == 11
    assert graph.hoeffding_contexts(g, 0.1, 3e-5) == 10_545
    with pytest.raises(DomainError):
        graph.hoeffding_contexts(OrthogonalityGraph.from_edges(3, []), 0.1, 0.1)


def test_hoeffding_inverse_square_law():
    g = cycle_graph(7)
    raw = lambda eps: -math.log(0.01) * g.total_contexts ** 4 / (8 * eps ** 2 * 49 * 49)
    assert raw(0.05) == pytest.approx(4 * raw(0.1))
    assert graph.hoeffding_contexts(g, 0.05, 0.01) == math.ceil(raw(0.05))


def _catalog_graph(V=10_000, E=400_000, C=20, Q=50.0):
    return OrthogonalityGraph(V, num_edges=E, independence_number=C, quantum_value=Q)


def test_min_efficiency_closed_form_limits():
    g = _catalog_graph()
    assert graph.graph_min_efficiency(g, 0.5, 1.0) == pytest.approx(math.sqrt(20 / 50), abs=1e-15)
    # large nu drives the statistics term to zero
    assert graph.graph_min_efficiency(g, 1e30, 3e-5) == pytest.approx(math.sqrt(0.4), abs=1e-9)


def test_min_efficiency_errors():
    with pytest.raises(DomainError):
        graph.graph_min_efficiency(OrthogonalityGraph(10, num_edges=3), 0.5, 0.1)
    with pytest.raises(InfeasibleError):
        graph.graph_min_efficiency(_catalog_graph(C=45), 1e-6, 3e-5)


def test_min_efficiency_monotone():
    g = _catalog_graph()
    nus = [1e-3, 1e-2, 0.1, 0.5, 1.0]
    etas = [graph.graph_min_efficiency(g, nu, 3e-5) for nu in nus]
    assert all(a > b for a, b in zip(etas, etas[1:]))
    deltas = [1e-6, 1e-4, 1e-2, 0.5]
    etas = [graph.graph_min_efficiency(g, 0.1, d) for d in deltas]
    assert all(a > b for a, b in zip(etas, etas[1:]))


def test_fraction_inverts_efficiency():
    g = _catalog_graph()
    for nu in (1e-3, 0.05, 0.7):
        eta = graph.graph_min_efficiency(g, nu, 3e-5)
        assert graph.graph_fraction_required(g, eta, 3e-5) == pytest.approx(nu, rel=1e-10)


def test_ratio_law_random_parameters():
    rng = random.Random(5)
    for _ in range(200):
        V = rng.randint(5, 10 ** 6)
        E = rng.randint(1, 10 ** 7)
        Q = rng.uniform(2, 100)
        C = rng.randint(1, max(1, int(Q) - 1))
        g = OrthogonalityGraph(V, num_edges=E, independence_number=C, quantum_value=Q)
        nu_a, nu_b = 10 ** rng.uniform(-20, 0), 10 ** rng.uniform(-20, 0)
        try:
            ea = graph.graph_min_efficiency(g, nu_a, 3e-5)
            eb = graph.graph_min_efficiency(g, nu_b, 3e-5)
        except InfeasibleError:
            continue
        lhs = (ea ** 2 - C / Q) / (eb ** 2 - C / Q)
        assert lhs == pytest.approx(math.sqrt(nu_b / nu_a), rel=1e-9)


Y32 = graph.GraphCatalogEntry(
    "Y32", 32, 3.22e17, 0.326,
    ((0.4, 4.51e-13), (0.6, 2.03e-14), (0.8, 4.54e-15), (0.95, 2.02e-15)),
)
P3C = graph.GraphCatalogEntry("P3C", 8, 341280, 0.73, ((0.75, 0.098), (0.85, 0.002), (0.95, 6.17e-4)))


def test_calibrate_y32():
    cal = graph.calibrate_from_rows(Y32)
    assert cal.c_over_q == pytest.approx(0.326 ** 2)
    assert cal.c_over_q == pytest.approx(0.1063, abs=1e-4)
    assert cal.stat_const == pytest.approx(4.51e-13 * (0.16 - 0.326 ** 2) ** 2, rel=1e-12)
    assert cal.stat_const == pytest.approx(1.30e-15, rel=0.01)
    assert cal.predict_nu(0.6) == pytest.approx(2.03e-14, rel=0.05)
    assert cal.predict_eta(4.51e-13) == pytest.approx(0.4, abs=1e-12)


def test_calibrate_p3c_last_row():
    cal = graph.calibrate_from_rows(P3C, tolerance=None)
    assert cal.c_over_q == pytest.approx(0.5329)
    assert cal.predict_nu(0.95) == pytest.approx(6.17e-4, rel=0.10)


def test_calibrate_inconsistent_rows():
    with pytest.raises(DomainError):
        # rows must descend in nu
        graph.GraphCatalogEntry("bad", 4, 100, 0.5, ((0.6, 1e-3), (0.8, 1e-2)))
    skew = graph.GraphCatalogEntry("skew", 4, 100, 0.5, ((0.6, 1e-3), (0.8, 1e-5)))
    with pytest.raises(InconsistentRowsError):
        graph.calibrate_from_rows(skew)
    with pytest.raises(DomainError):
        graph.calibrate_from_rows(graph.GraphCatalogEntry("empty", 4, 240, 0.912))


def test_entry_validation():
    with pytest.raises(DomainError):
        graph.GraphCatalogEntry("x", 4, 100, 1.2)
