"""Graph-theoretic Bell inequalities built from an orthogonality graph G.

The functional is

    beta_G = sum_i p(Pi_i^A = Pi_i^B = 1)
             - 1/(2 Xi) sum_{(i,j) in E} [p(Pi_i^A = Pi_j^B = 1) + p(Pi_j^A = Pi_i^B = 1)]

with local bound C = alpha(G) and quantum value Q = |V|/xi.  Its contexts
are the |V| diagonal pairs (i, i) and both orientations of every edge,
M = |V| + 2|E| in total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import (
    DomainError,
    GraphTooLargeError,
    InconsistentRowsError,
    InfeasibleError,
    MissingProbabilityError,
    UnknownContextError,
)
from .planner import ceil_count

MAX_EXACT_VERTICES = 64


@dataclass(frozen=True)
class OrthogonalityGraph:
    """Vertex count, optional explicit edge list, and graph constants.

    When ``edges`` is None the graph is known only through its constants
    (``num_edges``, C, Q); structural operations refuse such graphs.
    """

    num_vertices: int
    edges: Optional[frozenset] = None
    num_edges: Optional[int] = None
    xi_number: float = 1.0
    independence_number: Optional[int] = None
    quantum_value: Optional[float] = None
    dimension: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        if self.num_vertices < 1:
            raise DomainError("graph needs at least one vertex")
        if self.edges is not None:
            norm = set()
            for i, j in self.edges:
                if i == j:
                    raise DomainError(f"self-loop at {i}")
                if not (0 <= i < self.num_vertices and 0 <= j < self.num_vertices):
                    raise DomainError(f"edge ({i}, {j}) out of range")
                norm.add((min(i, j), max(i, j)))
            object.__setattr__(self, "edges", frozenset(norm))
            if self.num_edges is not None and self.num_edges != len(norm):
                raise DomainError("num_edges disagrees with edge list")
            object.__setattr__(self, "num_edges", len(norm))
        elif self.num_edges is None:
            raise DomainError("either edges or num_edges is required")
        c = self.independence_number
        if c is not None and not 1 <= c <= self.num_vertices:
            raise DomainError("independence number must lie in [1, |V|]")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable, **kw) -> "OrthogonalityGraph":
        return cls(n, frozenset(tuple(e) for e in edges), **kw)

    @property
    def total_contexts(self) -> int:
        return self.num_vertices + 2 * self.num_edges

    @property
    def has_structure(self) -> bool:
        return self.edges is not None

    def require_structure(self):
        if self.edges is None:
            raise GraphTooLargeError(f"graph {self.name or '?'} is catalog-only (no edge list)")

    def adjacency_masks(self) -> list[int]:
        self.require_structure()
        adj = [0] * self.num_vertices
        for i, j in self.edges:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        return adj

    def with_constants(self, **kw) -> "OrthogonalityGraph":
        fields = dict(
            num_vertices=self.num_vertices, edges=self.edges, num_edges=self.num_edges,
            xi_number=self.xi_number, independence_number=self.independence_number,
            quantum_value=self.quantum_value, dimension=self.dimension, name=self.name,
        )
        fields.update(kw)
        return OrthogonalityGraph(**fields)


def cycle_graph(n: int, **kw) -> OrthogonalityGraph:
    return OrthogonalityGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], **kw)


def complete_graph(n: int, **kw) -> OrthogonalityGraph:
    return OrthogonalityGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)], **kw)


def graph_bell_value(g: OrthogonalityGraph, beh: Mapping[tuple, float]) -> float:
    """beta_G from probabilities keyed by (i, i) and by both orientations of each edge."""
    g.require_structure()
    try:
        diag = math.fsum(beh[(i, i)] for i in range(g.num_vertices))
        cross = math.fsum(beh[(i, j)] + beh[(j, i)] for i, j in sorted(g.edges))
    except KeyError as exc:
        raise MissingProbabilityError(exc.args[0]) from None
    return diag - cross / (2.0 * g.xi_number)


# -- independence number -------------------------------------------------------

def _cover_order(cand: int, adj: list[int]) -> list[tuple[int, int]]:
    """Greedy clique cover of ``cand``; returns (vertex, cliques used so far) pairs.

    An independent set meets each clique at most once, so the running
    clique count bounds the independent sets among the vertices listed
    up to that point.
    """
    order = []
    k = 0
    uncovered = cand
    while uncovered:
        k += 1
        room = uncovered
        while room:
            low = room & -room
            v = low.bit_length() - 1
            uncovered &= ~low
            room &= ~low
            room &= adj[v]
            order.append((v, k))
    return order


def independence_number(g: OrthogonalityGraph) -> int:
    """Exact alpha(G) by branch and bound with greedy clique-cover bounds."""
    if g.num_vertices > MAX_EXACT_VERTICES:
        raise GraphTooLargeError(
            f"|V|={g.num_vertices} exceeds exact budget {MAX_EXACT_VERTICES}; supply C from a catalog"
        )
    adj = g.adjacency_masks()
    best = 0

    def expand(cand: int, size: int):
        nonlocal best
        order = _cover_order(cand, adj)
        for v, bound in reversed(order):
            if size + bound <= best:
                return
            bit = 1 << v
            rest = cand & ~adj[v] & ~bit
            if rest:
                expand(rest, size + 1)
            elif size + 1 > best:
                best = size + 1
            cand &= ~bit

    expand((1 << g.num_vertices) - 1, 0)
    return best


# -- context sampling and estimator -------------------------------------------

@dataclass(frozen=True)
class ContextDistribution:
    """Distribution over graph contexts: diagonal pairs then oriented edges.

    Block weights are |V|/M and 2|E|/M, uniform inside each block, so every
    context carries probability 1/M.
    """

    contexts: tuple
    probabilities: np.ndarray = field(repr=False)
    diagonal_weight: float
    edge_weight: float

    def prob(self, i, j) -> float:
        try:
            return float(self.probabilities[self.contexts.index((i, j))])
        except ValueError:
            return 0.0


def graph_contexts(g: OrthogonalityGraph) -> tuple:
    g.require_structure()
    diag = [(i, i) for i in range(g.num_vertices)]
    oriented = []
    for i, j in sorted(g.edges):
        oriented.append((i, j))
        oriented.append((j, i))
    return tuple(diag + oriented)


def context_distribution(g: OrthogonalityGraph) -> ContextDistribution:
    ctxs = graph_contexts(g)
    M = g.total_contexts
    probs = np.full(M, 1.0 / M)
    return ContextDistribution(ctxs, probs, g.num_vertices / M, 2 * g.num_edges / M)


def graph_estimator(g: OrthogonalityGraph, i: int, j: int, beta_ij: float) -> float:
    """Single-context estimate: M*beta for i == j, -M/(2 Xi)*beta on an edge.

    The edge weight carries the 1/(2 Xi) Bell coefficient so the estimate
    stays unbiased under the uniform 1/M context distribution.
    """
    M = g.total_contexts
    if i == j:
        if not 0 <= i < g.num_vertices:
            raise UnknownContextError((i, j))
        return M * beta_ij
    g.require_structure()
    if (min(i, j), max(i, j)) not in g.edges:
        raise UnknownContextError((i, j))
    return -M / (2.0 * g.xi_number) * beta_ij


def _check_eps_delta(epsilon, delta):
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")


def hoeffding_contexts(g: OrthogonalityGraph, epsilon: float, delta: float) -> int:
    """L = ceil(-ln(delta) (|V| + 2|E|)^4 / (8 eps^2 |E|^2 |V|^2))."""
    _check_eps_delta(epsilon, delta)
    if g.num_edges == 0:
        raise DomainError("Hoeffding context bound needs at least one edge")
    V, E, M = g.num_vertices, g.num_edges, g.total_contexts
    return ceil_count(-math.log(delta) * M ** 4 / (8.0 * epsilon ** 2 * E ** 2 * V ** 2))


def _stat_term(g: OrthogonalityGraph, delta: float) -> float:
    # -ln(delta) (|V| + 2|E|)^3 / (2 |V|^2 |E|^2), computed in floats for huge catalog graphs
    V, E = float(g.num_vertices), float(g.num_edges)
    return -math.log(delta) * (V + 2 * E) ** 3 / (2.0 * V * V * E * E)


def _require_cq(g):
    if g.independence_number is None or g.quantum_value is None:
        raise DomainError(f"graph {g.name or '?'} needs both C and Q")
    if g.num_edges == 0:
        raise DomainError("efficiency bound needs at least one edge")


def graph_min_efficiency(g: OrthogonalityGraph, nu: float, delta: float) -> float:
    """eta_nu = sqrt( sqrt(stat / nu) / Q + C/Q ), no-clicks binned to outcome 0."""
    _require_cq(g)
    if not nu > 0:
        raise DomainError("nu must be positive")
    if not 0 < delta <= 1:
        raise DomainError("delta must lie in (0, 1]")
    C, Q = g.independence_number, g.quantum_value
    eta = math.sqrt(math.sqrt(_stat_term(g, delta) / nu) / Q + C / Q)
    if eta > 1:
        raise InfeasibleError(f"required efficiency {eta:.6g} exceeds 1")
    return eta


def graph_fraction_required(g: OrthogonalityGraph, eta: float, delta: float) -> float:
    """Inverse of graph_min_efficiency: nu = stat / (Q (eta^2 - C/Q))^2."""
    _require_cq(g)
    if not 0 < delta <= 1:
        raise DomainError("delta must lie in (0, 1]")
    C, Q = g.independence_number, g.quantum_value
    excess = eta * eta - C / Q
    if not excess > 0:
        raise InfeasibleError(f"eta={eta} at or below sqrt(C/Q)={math.sqrt(C / Q):.6g}")
    return _stat_term(g, delta) / (Q * excess) ** 2


# -- catalog entries and calibration ------------------------------------------

@dataclass(frozen=True)
class GraphCatalogEntry:
    name: str
    dimension: int
    total_contexts: float
    eta_crit: float
    rows: tuple[tuple[float, float], ...] = ()
    num_vertices: Optional[int] = None
    num_edges: Optional[int] = None
    independence_number: Optional[int] = None
    quantum_value: Optional[float] = None
    note: str = ""

    def __post_init__(self):
        if not 0 < self.eta_crit <= 1:
            raise DomainError(f"{self.name}: eta_crit must lie in (0, 1]")
        rows = tuple((float(e), float(v)) for e, v in self.rows)
        object.__setattr__(self, "rows", rows)
        etas = [e for e, _ in rows]
        nus = [v for _, v in rows]
        if etas != sorted(etas) or nus != sorted(nus, reverse=True):
            raise DomainError(f"{self.name}: rows must ascend in eta and descend in nu")

    def graph(self) -> Optional[OrthogonalityGraph]:
        """Constants-only graph when |V| and |E| are known, else None."""
        if self.num_vertices is None or self.num_edges is None:
            return None
        return OrthogonalityGraph(
            self.num_vertices, num_edges=self.num_edges,
            independence_number=self.independence_number,
            quantum_value=self.quantum_value, dimension=self.dimension, name=self.name,
        )


@dataclass(frozen=True)
class Calibration:
    """eta^2 = sqrt(G / nu) + C/Q with both constants fitted from table rows."""

    c_over_q: float
    stat_const: float

    def predict_nu(self, eta: float) -> float:
        excess = eta * eta - self.c_over_q
        if not excess > 0:
            raise InfeasibleError(f"eta={eta} at or below calibrated sqrt(C/Q)")
        return self.stat_const / excess ** 2

    def predict_eta(self, nu: float) -> float:
        if not nu > 0:
            raise DomainError("nu must be positive")
        return math.sqrt(math.sqrt(self.stat_const / nu) + self.c_over_q)


def calibrate_from_rows(entry: GraphCatalogEntry, tolerance: Optional[float] = 0.10) -> Calibration:
    """Fit C/Q from eta_crit and the statistics constant from the first row.

    Remaining rows are checked against the fit; any relative deviation
    above ``tolerance`` raises InconsistentRowsError (None skips the check).
    """
    if not entry.rows:
        raise DomainError(f"{entry.name}: no (eta, nu) rows to calibrate from")
    c_over_q = entry.eta_crit ** 2
    eta0, nu0 = entry.rows[0]
    if not eta0 ** 2 > c_over_q:
        raise DomainError(f"{entry.name}: first row eta not above eta_crit")
    cal = Calibration(c_over_q, nu0 * (eta0 ** 2 - c_over_q) ** 2)
    if tolerance is not None:
        for eta, nu in entry.rows[1:]:
            dev = abs(cal.predict_nu(eta) / nu - 1.0)
            if dev > tolerance:
                raise InconsistentRowsError(
                    f"{entry.name}: row eta={eta} deviates {dev:.1%} from calibrated prediction"
                )
    return cal


def row_deviations(entry: GraphCatalogEntry, cal: Calibration) -> list[tuple[float, float, float, float]]:
    """(eta, printed nu, predicted nu, relative deviation) for every row after the first."""
    out = []
    for eta, nu in entry.rows[1:]:
        pred = cal.predict_nu(eta)
        out.append((eta, nu, pred, pred / nu - 1.0))
    return out
