"""Penalized n-product (PNP) CHSH inequalities under inefficient detection.

n CHSH copies run in parallel, giving 2^n settings per party and 4^n
contexts.  With no-clicks binned to a fixed outcome, the Bell value is
a quadratic in the efficiency eta built from the single-copy quantum
value Q, the one-sided (binned partner) values A and B, and the local
bound C.  A marginal-consistency penalty kappa*(A+B) keeps the local bound
at C^n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

from scipy.optimize import bisect

from . import planner
from .bell import CHSH_QUANTUM_VALUE, Behavior
from .errors import (
    DomainError,
    IncompleteTableError,
    InfeasibleError,
    NoViolationError,
    NotFoundError,
)

CHSH_LOCAL_BOUND = 3.0
CHSH_ALGEBRAIC_BOUND = 4.0
CHSH_MARGINAL_VALUE = 2.0

EFFICIENCY_XTOL = 1e-9


def _check_unit(name, v):
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"{name} {v} outside [0, 1]")


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")


def single_copy_values(V: float) -> tuple[float, float, float]:
    """Single-copy (Q, A, B) at visibility V.

    Q interpolates linearly between 2 and 2 + sqrt(2).  A and B are 2 for
    any V: with uniform marginals and the partner's outcome fixed to 0,
    sum_{x,y} p(a = xy | x) = 4 * 1/2.
    """
    _check_unit("visibility", V)
    q = 2.0 + (CHSH_QUANTUM_VALUE - 2.0) * V
    return q, CHSH_MARGINAL_VALUE, CHSH_MARGINAL_VALUE


def penalty_kappa(n: int, sigma: float = CHSH_ALGEBRAIC_BOUND,
                  c: float = CHSH_LOCAL_BOUND) -> float:
    """kappa = 2^(n-1) * (sigma^n - c^n)."""
    _check_n(n)
    if sigma < c:
        raise DomainError("algebraic bound below local bound")
    return 2.0 ** (n - 1) * (sigma ** n - c ** n)


@dataclass(frozen=True)
class MarginalTables:
    """Slot marginals p(a_i = o | x) keyed by (slot i, outcome o, setting vector x).

    ``alice`` and ``bob`` use the same layout; slots are 0-based.
    """

    alice: Mapping[tuple, float]
    bob: Mapping[tuple, float]


def slot_marginals(beh: Behavior, n: int) -> MarginalTables:
    """Slot marginals of a dense n-copy behavior with tuple labels."""
    alice: dict = {}
    bob: dict = {}
    seen_x, seen_y = set(), set()
    for (x, y) in beh.contexts:
        table = beh.context_table((x, y))
        if x not in seen_x:
            seen_x.add(x)
            for (a, _), p in table.items():
                for i in range(n):
                    alice[(i, a[i], x)] = alice.get((i, a[i], x), 0.0) + p
        if y not in seen_y:
            seen_y.add(y)
            for (_, b), p in table.items():
                for i in range(n):
                    bob[(i, b[i], y)] = bob.get((i, b[i], y), 0.0) + p
    return MarginalTables(alice, bob)


def _one_side(table: Mapping[tuple, float], n: int, outcome) -> float:
    settings = sorted({key[2] for key in table})
    total = 0.0
    for i in range(n):
        for x in settings:
            px = table.get((i, outcome, x))
            if px is None:
                raise IncompleteTableError((i, outcome, x))
            for xp in settings:
                if xp == x or xp[i] != x[i]:
                    continue
                pxp = table.get((i, outcome, xp))
                if pxp is None:
                    raise IncompleteTableError((i, outcome, xp))
                total += abs(px - pxp)
    return total


def penalty_sum(marg: MarginalTables, n: int, outcome=0, binary: bool = True) -> float:
    """A + B: total variation of slot marginals between setting vectors that agree on that slot.

    Sums over ordered pairs (x, x') with x != x' and x_i == x'_i, and over
    the single outcome value ``outcome`` of slot i.  Setting vectors must
    cover all of {0,1}^n when ``binary`` is true.
    """
    _check_n(n)
    for side in (marg.alice, marg.bob):
        settings = {key[2] for key in side}
        if binary and len(settings) != 2 ** n:
            raise IncompleteTableError(f"expected {2 ** n} setting vectors, got {len(settings)}")
    return _one_side(marg.alice, n, outcome) + _one_side(marg.bob, n, outcome)


def product_marginals(single_alice: Mapping[tuple, float], single_bob: Mapping[tuple, float],
                      n: int) -> MarginalTables:
    """Slot marginals for n copies sharing single-copy marginals {(o, x): p}."""
    def build(single):
        settings = sorted({x for (_, x) in single})
        outs = sorted({o for (o, _) in single})
        return {
            (i, o, xv): single[(o, xv[i])]
            for xv in itertools.product(settings, repeat=n)
            for i in range(n)
            for o in outs
        }
    return MarginalTables(build(single_alice), build(single_bob))


def pnp_quantum_value(n: int, eta: float, V: float,
                      c: float = CHSH_LOCAL_BOUND) -> float:
    """Binned Bell value eta^2 Q^n + eta(1-eta)(A^n + B^n) + (1-eta)^2 C^n."""
    _check_n(n)
    _check_unit("efficiency", eta)
    q, a, b = single_copy_values(V)
    return eta * eta * q ** n + eta * (1 - eta) * (a ** n + b ** n) + (1 - eta) ** 2 * c ** n


def effective_value(n, eta, V, penalty=0.0, sigma=CHSH_ALGEBRAIC_BOUND, c=CHSH_LOCAL_BOUND):
    value = pnp_quantum_value(n, eta, V, c)
    if penalty:
        value -= penalty_kappa(n, sigma, c) * penalty
    return value


def fraction_required(n: int, eta: float, V: float, delta: float, penalty: float = 0.0,
                      sigma: float = CHSH_ALGEBRAIC_BOUND, c: float = CHSH_LOCAL_BOUND,
                      safety: float = 1.0) -> float:
    """Context fraction nu = beta_eff / (eps^2 delta), eps = s * (beta_eff - C^n).

    Values above 1 mean that sampling a strict subset cannot certify the
    violation at this confidence.
    """
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    if not 0 < safety <= 1:
        raise DomainError("safety factor must lie in (0, 1]")
    beta = effective_value(n, eta, V, penalty, sigma, c)
    margin = beta - c ** n
    if not margin > 0:
        raise NoViolationError(
            f"beta_eff={beta:.6g} does not exceed local bound {c ** n:.6g} (n={n}, eta={eta}, V={V})"
        )
    eps = safety * margin
    return beta / (eps * eps * delta)


def critical_efficiency(n: int, V: float, penalty: float = 0.0) -> float:
    """Smallest eta for which the binned value exceeds C^n (all contexts measured)."""
    _check_n(n)
    def excess(eta):
        return effective_value(n, eta, V, penalty) - CHSH_LOCAL_BOUND ** n
    if excess(1.0) <= 0:
        raise InfeasibleError(f"no violation even at eta=1 (n={n}, V={V})")
    # excess(0) == 0 exactly; the root of interest is the upper one
    lo = _last_nonpositive(excess)
    return bisect(excess, lo, 1.0, xtol=EFFICIENCY_XTOL)


def _last_nonpositive(f, grid=2048):
    # the binned value is a quadratic in eta, so a grid scan isolates the upper sign change
    lo = 0.0
    for k in range(grid, -1, -1):
        eta = k / grid
        if f(eta) <= 0:
            lo = eta
            break
    return lo


def min_efficiency(n: int, nu: float, V: float, delta: float) -> float:
    """Smallest efficiency eta_nu allowing certification with context fraction nu.

    For nu >= 1 every context is measured, so no sampling error enters and
    the result is the critical efficiency where the binned value reaches C^n.
    For nu < 1 this bisects fraction_required(n, eta) = nu above that point.
    """
    if not nu > 0:
        raise DomainError("nu must be positive")
    eta_crit = critical_efficiency(n, V)
    if nu >= 1:
        return eta_crit

    def gap(eta):
        if eta <= eta_crit:
            return math.inf
        return fraction_required(n, eta, V, delta) - nu

    if gap(1.0) > 0:
        raise InfeasibleError(f"fraction {nu} unreachable even at eta=1 (n={n}, V={V})")
    # step off the pole at eta_crit where fraction_required diverges
    lo_eval = min(1.0, eta_crit + EFFICIENCY_XTOL)
    if gap(lo_eval) <= 0:
        return lo_eval
    return bisect(gap, lo_eval, 1.0, xtol=EFFICIENCY_XTOL)


def min_n_for_subset(V: float, delta: float, cap: int = 64) -> int:
    """Smallest number of copies for which a strict context subset suffices at eta = 1."""
    for n in range(1, cap + 1):
        try:
            if fraction_required(n, 1.0, V, delta) < 1:
                return n
        except NoViolationError:
            continue
    raise NotFoundError(f"no n <= {cap} with nu < 1 (V={V}, delta={delta})")


def chebyshev_plan_for(n: int, eta: float, V: float, delta: float,
                       penalty: float = 0.0, safety: float = 1.0) -> planner.SamplingPlan:
    """Integer plan (ceil'd L over M = 4^n) matching fraction_required."""
    beta = effective_value(n, eta, V, penalty)
    margin = beta - CHSH_LOCAL_BOUND ** n
    if not margin > 0:
        raise NoViolationError(f"no violation at n={n}, eta={eta}, V={V}")
    return planner.chebyshev_plan(4 ** n, beta, margin, delta, safety)


@dataclass(frozen=True)
class PnpModel:
    n: int
    visibility: float = 1.0
    efficiency: float = 1.0
    local_bound: float = CHSH_LOCAL_BOUND
    algebraic_bound: float = CHSH_ALGEBRAIC_BOUND
    penalty: float = 0.0

    def __post_init__(self):
        _check_n(self.n)
        _check_unit("visibility", self.visibility)
        _check_unit("efficiency", self.efficiency)

    @property
    def single_copy(self):
        return single_copy_values(self.visibility)

    @property
    def kappa(self) -> float:
        return penalty_kappa(self.n, self.algebraic_bound, self.local_bound)

    @property
    def settings_per_party(self) -> int:
        return 2 ** self.n

    @property
    def num_contexts(self) -> int:
        return 4 ** self.n

    @property
    def value(self) -> float:
        return effective_value(self.n, self.efficiency, self.visibility, self.penalty,
                               self.algebraic_bound, self.local_bound)

    def fraction(self, delta: float) -> float:
        return fraction_required(self.n, self.efficiency, self.visibility, delta,
                                 self.penalty, self.algebraic_bound, self.local_bound)
