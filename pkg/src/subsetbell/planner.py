"""Sampling plans for estimating a Bell value from a random subset of contexts.

Each context j contributes beta_j to the Bell value beta.  Drawing j
uniformly and reporting X = M * beta_j gives an unbiased estimate of
beta; averaging L such draws and applying Chebyshev's inequality with
Var(X) <= M * beta fixes how many contexts are needed for a given
error and failure probability.  Per-context rounds are sized with
Hoeffding's inequality.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .bell import ContextValue
from .errors import DomainError, DuplicateContextError


def ceil_count(x: float) -> int:
    """Ceiling that ignores floating noise just above an integer."""
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


@dataclass(frozen=True)
class SamplingPlan:
    epsilon: float
    delta: float
    num_contexts: int
    contexts_required: int
    beta: float
    safety: float = 1.0
    rounds_per_context: Optional[int] = None
    epsilon_prime: Optional[float] = None
    delta_prime: Optional[float] = None

    @property
    def lam(self) -> float:
        return 1.0 / math.sqrt(self.delta)

    @property
    def fraction(self) -> float:
        return self.contexts_required / self.num_contexts

    @property
    def feasible(self) -> bool:
        return self.contexts_required <= self.num_contexts

    @property
    def effective_epsilon(self) -> float:
        return self.safety * self.epsilon

    def with_rounds(self, epsilon_prime: float, delta_prime: float,
                    per_round_bound: float = 1.0) -> "SamplingPlan":
        k = rounds_required(epsilon_prime, delta_prime, per_round_bound)
        return SamplingPlan(
            self.epsilon, self.delta, self.num_contexts, self.contexts_required,
            self.beta, self.safety, k, epsilon_prime, delta_prime,
        )


def _check_eps_delta(epsilon, delta):
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


def chebyshev_plan(M: int, beta: float, epsilon: float, delta: float,
                   safety: float = 1.0) -> SamplingPlan:
    """Number of contexts L = ceil(M*beta / ((s*epsilon)^2 * delta)).

    With L uniform draws, P(|Y - beta| >= s*epsilon) <= delta provided the
    single-draw variance is at most M*beta (true when 0 <= beta_j <= 1).
    ``safety`` (s in (0, 1]) shrinks the error margin actually certified.
    """
    if M < 1:
        raise DomainError("M must be >= 1")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    _check_eps_delta(epsilon, delta)
    if not 0 < safety <= 1:
        raise DomainError("safety factor must lie in (0, 1]")
    eps = safety * epsilon
    L = ceil_count(M * beta / (eps * eps * delta))
    return SamplingPlan(epsilon, delta, M, L, beta, safety)


def rounds_required(epsilon_prime: float, delta_prime: float,
                    per_round_bound: float = 1.0) -> int:
    """Smallest K with exp(-2 K eps'^2 / b^2) <= delta'."""
    _check_eps_delta(epsilon_prime, delta_prime)
    if not per_round_bound > 0:
        raise DomainError("per-round bound must be positive")
    b = per_round_bound
    return ceil_count(-math.log(delta_prime) * b * b / (2.0 * epsilon_prime ** 2))


@dataclass(frozen=True)
class SubsetEstimate:
    chosen_contexts: tuple
    estimator_values: tuple[float, ...]
    mean: float


def estimate_from_subset(values: Sequence[ContextValue], M: int) -> SubsetEstimate:
    """Y = (1/L) sum_l M * beta_{j_l} over distinct chosen contexts."""
    if not values:
        raise DomainError("no context values supplied")
    ctxs = [v.context for v in values]
    if len(set(ctxs)) != len(ctxs):
        raise DuplicateContextError("chosen contexts must be distinct")
    xs = tuple(M * v.value for v in values)
    return SubsetEstimate(tuple(ctxs), xs, math.fsum(xs) / len(xs))


class Decision(str, enum.Enum):
    CERTIFIED = "violation-certified"
    INCONCLUSIVE = "inconclusive"


def certify(Y: float, epsilon: float, local_bound: float) -> Decision:
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    return Decision.CERTIFIED if Y - epsilon > local_bound else Decision.INCONCLUSIVE


def single_draw_variance(context_values: Sequence[float]) -> float:
    """Var(X) for X = M*beta_j with j uniform: M * sum beta_j^2 - beta^2."""
    M = len(context_values)
    beta = math.fsum(context_values)
    return M * math.fsum(v * v for v in context_values) - beta * beta
