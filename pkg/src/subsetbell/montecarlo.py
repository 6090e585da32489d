"""Seeded Monte Carlo validation of the subset-of-contexts protocol.

Every trial draws its own generator from ``(seed, trial)`` so trials can
run in any order or in parallel and still reproduce bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

import numpy as np

from .bell import Behavior, BellInequality, evaluate_bell
from .errors import DomainError, InvalidBehaviorError
from .planner import Decision, SamplingPlan, certify


@dataclass(frozen=True)
class DetectorModel:
    """Detector efficiency, source visibility and the no-click bin.

    ``visibility`` < 1 mixes white noise into the source behavior before
    binning; leave it at 1 when the behavior already carries its noise.
    """

    efficiency: float
    visibility: float = 1.0
    bin_outcome: Hashable = 0

    def __post_init__(self):
        for name in ("efficiency", "visibility"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} {v} outside [0, 1]")


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Independent counter-based stream for one trial."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2 ** 64 - 1), spawn_key=(int(trial),))
    return np.random.Generator(np.random.Philox(ss))


def _bin_label(det_bin, sample_label):
    if isinstance(sample_label, tuple) and not isinstance(det_bin, tuple):
        return (det_bin,) * len(sample_label)
    return det_bin


def simulate_detector(beh: Behavior, det: DetectorModel, rng=None) -> Behavior:
    """Exact behavior seen after no-click binning.

    Both sides click with probability eta^2; one side is binned with
    probability eta(1 - eta) each; both are binned with (1 - eta)^2.
    ``rng`` is accepted for interface symmetry and unused.
    """
    eta = det.efficiency
    tables = {}
    for ctx in beh.contexts:
        table = beh.context_table(ctx)
        outs_a = sorted({a for a, _ in table}, key=repr)
        outs_b = sorted({b for _, b in table}, key=repr)
        bin_a = _bin_label(det.bin_outcome, outs_a[0])
        bin_b = _bin_label(det.bin_outcome, outs_b[0])
        if bin_a not in outs_a or bin_b not in outs_b:
            raise InvalidBehaviorError(f"bin outcome {det.bin_outcome!r} not in outcome alphabet of {ctx}")
        if det.visibility < 1.0:
            noise = 1.0 / (len(outs_a) * len(outs_b))
            table = {
                (a, b): det.visibility * table.get((a, b), 0.0) + (1 - det.visibility) * noise
                for a in outs_a for b in outs_b
            }
        pa = {a: 0.0 for a in outs_a}
        pb = {b: 0.0 for b in outs_b}
        for (a, b), p in table.items():
            pa[a] += p
            pb[b] += p
        new = {}
        for a in outs_a:
            for b in outs_b:
                p = eta * eta * table.get((a, b), 0.0)
                p += eta * (1 - eta) * ((pa[a] if b == bin_b else 0.0) + (pb[b] if a == bin_a else 0.0))
                if a == bin_a and b == bin_b:
                    p += (1 - eta) ** 2
                new[(a, b)] = p
        tables[ctx] = new
    return Behavior.from_tables(tables)


def sample_contexts(M: int, L: int, mode: str = "uniform", rng: Optional[np.random.Generator] = None,
                    *, replace: bool = False, distribution=None) -> np.ndarray:
    """Indices of L contexts out of M.

    ``mode="graph"`` draws from ``distribution.probabilities`` (a
    ContextDistribution); ``replace`` switches between distinct contexts
    (protocol) and i.i.d. draws (variance analysis).
    """
    if rng is None:
        raise DomainError("an explicit generator is required")
    if L < 1:
        raise DomainError("L must be >= 1")
    if not replace and L > M:
        raise DomainError(f"cannot draw {L} distinct contexts out of {M}")
    if mode == "uniform":
        p = None
    elif mode == "graph":
        if distribution is None:
            raise DomainError("graph mode needs a context distribution")
        p = np.asarray(distribution.probabilities)
        if len(p) != M:
            raise DomainError("distribution size does not match M")
    else:
        raise DomainError(f"unknown sampling mode {mode!r}")
    return rng.choice(M, size=L, replace=replace, p=p)


class SimulationInstance:
    """Precomputed per-context data for one (inequality, behavior, detector) triple."""

    def __init__(self, ineq: BellInequality, beh: Behavior, det: Optional[DetectorModel] = None):
        det = det or DetectorModel(1.0)
        self.inequality = ineq
        self.detector = det
        self.behavior = simulate_detector(beh, det)
        self.contexts = ineq.contexts
        self.num_contexts = ineq.num_contexts
        probs, coeffs, values = [], [], []
        for ctx in self.contexts:
            table = self.behavior.context_table(ctx)
            cmap = ineq.context_coefficients(ctx)
            keys = list(table)
            p = np.array([table[k] for k in keys])
            c = np.array([cmap.get(k, 0.0) for k in keys])
            probs.append(p / p.sum())
            coeffs.append(c)
            values.append(math.fsum(p * c))
        self.outcome_probs = probs
        self.outcome_coeffs = coeffs
        self.context_values = np.array(values)
        self.beta_true = evaluate_bell(ineq, self.behavior)

    def estimate_contexts(self, idx: np.ndarray, rounds: Optional[int], rng) -> np.ndarray:
        """beta_j for the chosen indices: exact, or from K multinomial rounds."""
        if rounds is None:
            return self.context_values[idx]
        out = np.empty(len(idx))
        for n, j in enumerate(idx):
            counts = rng.multinomial(rounds, self.outcome_probs[j])
            out[n] = counts @ self.outcome_coeffs[j] / rounds
        return out


@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    Y: float
    beta_true: float
    within_epsilon: bool
    certified: bool
    contexts_used: int
    rounds_used: int


def _trial(inst: SimulationInstance, plan: SamplingPlan, seed: int, trial: int,
           replace: bool) -> TrialResult:
    rng = trial_rng(seed, trial)
    M = inst.num_contexts
    L = plan.contexts_required
    idx = sample_contexts(M, L, "uniform", rng, replace=replace)
    K = plan.rounds_per_context
    betas = inst.estimate_contexts(idx, K, rng)
    Y = float(M * betas.mean())
    eps = plan.effective_epsilon
    return TrialResult(
        trial=trial,
        seed=seed,
        Y=Y,
        beta_true=inst.beta_true,
        within_epsilon=abs(Y - inst.beta_true) < eps,
        certified=certify(Y, eps, inst.inequality.local_bound) is Decision.CERTIFIED,
        contexts_used=L,
        rounds_used=0 if K is None else K * L,
    )


def run_trial(ineq: BellInequality, beh: Behavior, det: DetectorModel, plan: SamplingPlan,
              seed: int, trial: int = 0, *, replace: bool = False,
              instance: Optional[SimulationInstance] = None) -> TrialResult:
    """One protocol run: sample contexts, estimate each beta_j, average, certify.

    ``plan.rounds_per_context`` of None uses the exact beta_j values.
    """
    inst = instance or SimulationInstance(ineq, beh, det)
    return _trial(inst, plan, seed, trial, replace)


def run_trials(inst: SimulationInstance, plan: SamplingPlan, trials: int, seed: int,
               *, replace: bool = False, threads: int = 1) -> list[TrialResult]:
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if threads <= 1:
        return [_trial(inst, plan, seed, t, replace) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: _trial(inst, plan, seed, t, replace), range(trials)))


@dataclass(frozen=True)
class CoverageResult:
    trials: int
    failures: int
    delta: float

    @property
    def rate(self) -> float:
        return self.failures / self.trials

    @property
    def threshold(self) -> float:
        """delta plus 3-sigma binomial slack."""
        return self.delta + 3.0 * math.sqrt(self.delta / self.trials)

    @property
    def passed(self) -> bool:
        return self.rate <= self.threshold


def coverage_experiment(inst: SimulationInstance, plan: SamplingPlan, trials: int, seed: int,
                        *, replace: bool = False, threads: int = 1) -> CoverageResult:
    """Empirical frequency of |Y - beta| >= eps over seeded trials."""
    if trials < 1000:
        raise DomainError("coverage experiments need at least 1000 trials")
    eps = plan.effective_epsilon
    results = run_trials(inst, plan, trials, seed, replace=replace, threads=threads)
    failures = sum(1 for r in results if abs(r.Y - r.beta_true) >= eps)
    return CoverageResult(trials, failures, plan.delta)


def sample_joint_outcomes(beh: Behavior, context, K: int, rng) -> list:
    """K joint outcomes (a, b) drawn from one context of a dense behavior."""
    table = beh.context_table(context)
    keys = list(table)
    p = np.array([table[k] for k in keys])
    draws = rng.choice(len(keys), size=K, p=p / p.sum())
    return [keys[i] for i in draws]


def sample_product_outcomes(base: Behavior, contexts: Sequence, K: int, rng) -> list:
    """K joint outcomes of an n-copy product behavior, sampling each copy on its own."""
    per_copy = [sample_joint_outcomes(base, ctx, K, rng) for ctx in contexts]
    return [
        (tuple(c[k][0] for c in per_copy), tuple(c[k][1] for c in per_copy))
        for k in range(K)
    ]
