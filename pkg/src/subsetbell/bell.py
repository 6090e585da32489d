"""Bipartite Bell functionals and behaviors.

A Bell functional is a real linear combination of joint conditional
probabilities p(a, b | x, y).  The terms sharing one pair of settings
(x, y) form a *context*; the functional value is the sum of the
per-context values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

from .errors import (
    DomainError,
    InvalidBehaviorError,
    MissingContextError,
    UnknownContextError,
)

Context = tuple[Hashable, Hashable]
Key = tuple[Hashable, Hashable, Hashable, Hashable]

NORMALIZATION_TOL = 1e-12

#: Value of each CHSH context for the optimal qubit strategy.
CHSH_OPTIMAL_TERM = math.cos(math.pi / 8) ** 2
CHSH_QUANTUM_VALUE = 2.0 + math.sqrt(2.0)


def _sort_key(obj):
    # ints and tuples of ints must order deterministically together
    return (isinstance(obj, tuple), obj)


@dataclass(frozen=True)
class BellInequality:
    """Linear Bell functional sum c[a,b,x,y] * p(a,b|x,y) <= local_bound.

    ``coefficients`` maps ``(a, b, x, y)`` to a real weight; zero weights
    may be omitted.  Contexts are ordered deterministically.
    """

    coefficients: Mapping[Key, float]
    local_bound: float
    algebraic_bound: float
    name: str = ""
    contexts: tuple[Context, ...] = field(init=False)
    _by_context: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.local_bound > self.algebraic_bound:
            raise DomainError("local bound exceeds algebraic bound")
        by_ctx: dict[Context, dict] = {}
        for (a, b, x, y), c in self.coefficients.items():
            if c != 0:
                by_ctx.setdefault((x, y), {})[(a, b)] = float(c)
        ordered = tuple(sorted(by_ctx, key=lambda j: (_sort_key(j[0]), _sort_key(j[1]))))
        object.__setattr__(self, "contexts", ordered)
        object.__setattr__(self, "_by_context", by_ctx)

    @property
    def num_contexts(self) -> int:
        return len(self.contexts)

    def context_coefficients(self, context: Context) -> dict:
        """Nonzero coefficients ``{(a, b): c}`` of one context."""
        try:
            return self._by_context[context]
        except KeyError:
            raise UnknownContextError(context) from None

    def per_round_bound(self) -> float:
        """Largest |c| over all outcome pairs: the range of a single-round term."""
        return max(abs(c) for coeffs in self._by_context.values() for c in coeffs.values())


class Behavior:
    """Dense table of joint conditional probabilities p(a, b | x, y).

    Probabilities are grouped by context.  Every context must normalize to
    one within ``NORMALIZATION_TOL`` and carry no negative entries.
    """

    def __init__(self, probs: Mapping[Key, float]):
        tables: dict[Context, dict] = {}
        for (a, b, x, y), p in probs.items():
            tables.setdefault((x, y), {})[(a, b)] = float(p)
        for ctx, table in tables.items():
            if any(p < 0 for p in table.values()):
                raise InvalidBehaviorError(f"negative probability in context {ctx}")
            total = math.fsum(table.values())
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise InvalidBehaviorError(f"context {ctx} sums to {total!r}")
        self._tables = tables

    @classmethod
    def from_tables(cls, tables: Mapping[Context, Mapping[tuple, float]]) -> "Behavior":
        probs = {
            (a, b, x, y): p for (x, y), t in tables.items() for (a, b), p in t.items()
        }
        return cls(probs)

    @property
    def contexts(self) -> tuple[Context, ...]:
        return tuple(self._tables)

    def context_table(self, context: Context) -> dict:
        """Joint outcome distribution ``{(a, b): p}`` for one context."""
        try:
            return self._tables[context]
        except KeyError:
            raise MissingContextError(context) from None

    def probs(self) -> dict[Key, float]:
        return {
            (a, b, x, y): p
            for (x, y), t in self._tables.items()
            for (a, b), p in t.items()
        }

    def mix(self, other: "Behavior", t: float) -> "Behavior":
        """Convex mixture t*self + (1-t)*other over the union of outcome keys."""
        if not 0.0 <= t <= 1.0:
            raise DomainError("mixing weight must lie in [0, 1]")
        tables = {}
        for ctx in self._tables:
            mine, theirs = self._tables[ctx], other.context_table(ctx)
            keys = set(mine) | set(theirs)
            tables[ctx] = {k: t * mine.get(k, 0.0) + (1 - t) * theirs.get(k, 0.0) for k in keys}
        return Behavior.from_tables(tables)

    def __repr__(self):
        return f"Behavior(contexts={len(self._tables)})"


@dataclass(frozen=True)
class ContextValue:
    context: Context
    value: float


def context_term(ineq: BellInequality, beh: Behavior, j: Context) -> ContextValue:
    """Per-context Bell value sum_{a,b} c[a,b|j] p(a,b|j)."""
    coeffs = ineq.context_coefficients(j)
    table = beh.context_table(j)
    value = math.fsum(c * table.get(ab, 0.0) for ab, c in coeffs.items())
    return ContextValue(j, value)


def context_values(ineq: BellInequality, beh: Behavior) -> list[ContextValue]:
    return [context_term(ineq, beh, j) for j in ineq.contexts]


def evaluate_bell(ineq: BellInequality, beh: Behavior) -> float:
    return math.fsum(cv.value for cv in context_values(ineq, beh))


def chsh_inequality() -> BellInequality:
    """CHSH in probability form: c = 1 iff a XOR b == x*y; C = 3, Sigma = 4."""
    coeffs = {
        (a, b, x, y): 1.0
        for a, b, x, y in itertools.product((0, 1), repeat=4)
        if (a ^ b) == x * y
    }
    return BellInequality(coeffs, local_bound=3.0, algebraic_bound=4.0, name="CHSH")


def chsh_quantum_behavior(visibility: float) -> Behavior:
    """Optimal-CHSH two-qubit correlations mixed with white noise.

    Each context has uniform marginals and correlator (-1)^{xy} V/sqrt(2),
    so every Bell term equals V*cos^2(pi/8) + (1 - V)/2.
    """
    if not 0.0 <= visibility <= 1.0:
        raise DomainError(f"visibility {visibility} outside [0, 1]")
    corr = visibility / math.sqrt(2.0)
    probs = {}
    for a, b, x, y in itertools.product((0, 1), repeat=4):
        sign = 1.0 if (a ^ b) == x * y else -1.0
        probs[(a, b, x, y)] = 0.25 * (1.0 + sign * corr)
    return Behavior(probs)


def uniform_behavior(ineq: BellInequality, outcomes: Iterable = (0, 1)) -> Behavior:
    outs = list(outcomes)
    p = 1.0 / (len(outs) ** 2)
    return Behavior(
        {(a, b, x, y): p for (x, y) in ineq.contexts for a in outs for b in outs}
    )


def deterministic_behavior(strategy_a: Mapping, strategy_b: Mapping, ineq: BellInequality,
                           outcomes: Iterable = (0, 1)) -> Behavior:
    """Behavior of a local deterministic strategy a = f(x), b = g(y)."""
    outs = list(outcomes)
    probs = {}
    for x, y in ineq.contexts:
        for a in outs:
            for b in outs:
                probs[(a, b, x, y)] = 1.0 if (a == strategy_a[x] and b == strategy_b[y]) else 0.0
    return Behavior(probs)


def product_inequality(base: BellInequality, n: int, name: str = "") -> BellInequality:
    """n-fold product functional with coefficients prod_i c[a_i,b_i,x_i,y_i].

    Labels become length-n tuples.  Only practical for small n: the number
    of coefficients grows as (nonzero terms per context * contexts)^n.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    items = [(k, c) for k, c in base.coefficients.items() if c != 0]
    coeffs = {}
    for combo in itertools.product(items, repeat=n):
        a = tuple(k[0] for k, _ in combo)
        b = tuple(k[1] for k, _ in combo)
        x = tuple(k[2] for k, _ in combo)
        y = tuple(k[3] for k, _ in combo)
        coeffs[(a, b, x, y)] = math.prod(c for _, c in combo)
    return BellInequality(
        coeffs,
        local_bound=base.local_bound ** n,
        algebraic_bound=base.algebraic_bound ** n,
        name=name or f"{base.name}^{n}",
    )


def product_behavior(base: Behavior, n: int) -> Behavior:
    """n independent copies of ``base``; contexts and outcomes are tuples."""
    if n < 1:
        raise DomainError("n must be >= 1")
    ctxs = base.contexts
    tables = {}
    for combo in itertools.product(ctxs, repeat=n):
        x = tuple(j[0] for j in combo)
        y = tuple(j[1] for j in combo)
        parts = [list(base.context_table(j).items()) for j in combo]
        table = {}
        for outs in itertools.product(*parts):
            a = tuple(ab[0] for ab, _ in outs)
            b = tuple(ab[1] for ab, _ in outs)
            table[(a, b)] = math.prod(p for _, p in outs)
        tables[(x, y)] = table
    return Behavior.from_tables(tables)
