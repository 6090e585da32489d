"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test reports a PASS/FAIL line through the ``criterion`` fixture;
the lines are repeated in the terminal summary.
"""

import itertools
import math
import random

from subsetbell import catalog as catalog_mod, graph, pnp
from subsetbell.bell import chsh_inequality, chsh_quantum_behavior, product_behavior, product_inequality
from subsetbell.cli import main
from subsetbell.graph import OrthogonalityGraph
from subsetbell.montecarlo import DetectorModel, SimulationInstance, coverage_experiment
from subsetbell.planner import SamplingPlan, chebyshev_plan

DELTA = 3e-5


def test_criterion_01_chsh_infeasible(criterion):
    rec = criterion(1, "CHSH subset plan is infeasible")
    plan = chebyshev_plan(4, 3.272, 0.272, DELTA)
    ok = abs(plan.contexts_required - 5_896_771) <= 1 and not plan.feasible
    rec(ok, f"L={plan.contexts_required}, feasible={plan.feasible}")


def test_criterion_02_pnp_critical_efficiencies(criterion):
    rec = criterion(2, "PNP critical efficiencies n=10..14 within 0.005")
    expected = {10: 0.43, 11: 0.38, 12: 0.34, 13: 0.31, 14: 0.28}
    parts, ok = [], True
    for n, want in expected.items():
        got = pnp.min_efficiency(n, 1.0, 1.0, DELTA)
        good = abs(got - want) <= 0.005
        ok &= good
        parts.append(f"n={n}: {got:.4f} vs {want}{'' if good else ' MISS'}")
    rec(ok, "; ".join(parts))


TABLE_ONE = [
    (14, 0.40, 0.081), (14, 0.60, 0.008), (14, 0.80, 0.003), (14, 0.95, 0.001),
    (13, 0.40, 0.528), (13, 0.60, 0.036), (13, 0.80, 0.011), (13, 0.95, 0.006),
    (12, 0.60, 0.157), (12, 0.80, 0.045), (12, 0.95, 0.025),
    (11, 0.60, 0.728), (11, 0.80, 0.176), (11, 0.95, 0.093),
    (10, 0.80, 0.710), (10, 0.95, 0.353),
]


def test_criterion_03_table_one(criterion):
    rec = criterion(3, "fraction table rows within max(10%, 0.002)")
    misses, worst = [], 0.0
    for n, eta, nu in TABLE_ONE:
        got = pnp.fraction_required(n, eta, 1.0, DELTA)
        err = abs(got - nu)
        worst = max(worst, err / max(0.10 * nu, 0.002))
        if err > max(0.10 * nu, 0.002):
            misses.append(f"n={n} eta={eta}: {got:.4g} vs {nu}")
    rec(not misses, f"{len(TABLE_ONE)} rows, worst band use {worst:.2f}" + (f"; {misses}" if misses else ""))


def test_criterion_04_ten_copy_threshold(criterion):
    rec = criterion(4, "minimum copies for a subset at V=0.9")
    n_min = pnp.min_n_for_subset(0.9, DELTA)
    nu9 = pnp.fraction_required(9, 1.0, 0.9, DELTA)
    nu10 = pnp.fraction_required(10, 1.0, 0.9, DELTA)
    rec(n_min == 10 and nu9 > 1 and nu10 < 1, f"n_min={n_min}, nu(9)={nu9:.4f}, nu(10)={nu10:.4f}")


def test_criterion_05_penalty_violation(criterion):
    rec = criterion(5, "penalized violation at n=14, V=0.9")
    kappa = pnp.penalty_kappa(14)
    beta_eff = pnp.effective_value(14, 1.0, 0.9, penalty=1e-6)
    ok = kappa == 2 ** 13 * (4 ** 14 - 3 ** 14) and beta_eff > 3 ** 14
    rec(ok, f"kappa={kappa:.4g}, beta_eff={beta_eff:.6g} vs C={3 ** 14}")


def test_criterion_06_ratio_law(criterion):
    rec = criterion(6, "calibrated graph rows within 10%")
    cat = catalog_mod.load()
    parts, ok = [], True
    for name in ("Y28", "Y32", "Y36", "Y44", "P3C"):
        entry = cat.graph(name)
        cal = graph.calibrate_from_rows(entry, tolerance=None)
        for eta, nu, pred, dev in graph.row_deviations(entry, cal):
            if abs(dev) > 0.10:
                ok = False
                parts.append(f"{name} eta={eta}: {pred:.3g} vs {nu:.3g} ({dev:+.1%})")
    spot = graph.calibrate_from_rows(cat.graph("Y32"), tolerance=None).predict_nu(0.6)
    detail = f"Y32 eta=0.6 predicts {spot:.3g}"
    rec(ok, detail + ("; misses: " + ", ".join(parts) if parts else ""))


def _binned_chsh_value(eta, V):
    """Brute force: enumerate click patterns over the 16-entry CHSH table."""
    s = math.sqrt(2) / 2
    total = 0.0
    for a, b, x, y in itertools.product((0, 1), repeat=4):
        corr = -s if x == y == 1 else s
        p = (1 + (-1) ** (a ^ b) * V * corr) / 4
        for ca, cb in itertools.product((True, False), repeat=2):
            w = (eta if ca else 1 - eta) * (eta if cb else 1 - eta)
            ao, bo = (a if ca else 0), (b if cb else 0)
            if ao ^ bo == x * y:
                total += w * p
    return total


def test_criterion_07_detector_oracle(criterion):
    rec = criterion(7, "single-copy binned value vs brute force")
    worst = 0.0
    for eta, V in itertools.product((0.0, 0.25, 0.5, 0.75, 1.0), (0.0, 0.5, 1.0)):
        worst = max(worst, abs(pnp.pnp_quantum_value(1, eta, V) - _binned_chsh_value(eta, V)))
    rec(worst <= 1e-9, f"15 grid points, max |diff| = {worst:.2e}")


def _brute_alpha(n, edges):
    for r in range(n, 0, -1):
        for subset in itertools.combinations(range(n), r):
            s = set(subset)
            if not any(i in s and j in s for i, j in edges):
                return r
    return 0


def test_criterion_08_estimator_and_independence(criterion):
    rec = criterion(8, "graph estimator unbiased and independence number exact")
    rng = random.Random(8)
    worst, alpha_miss = 0.0, 0
    for _ in range(100):
        n = rng.randint(1, 12)
        p = rng.random()
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
        g = OrthogonalityGraph.from_edges(n, edges)
        probs = {(i, i): rng.random() for i in range(n)}
        for i, j in edges:
            probs[(i, j)], probs[(j, i)] = rng.random(), rng.random()
        d = graph.context_distribution(g)
        expectation = math.fsum(
            q * graph.graph_estimator(g, i, j, probs[(i, j)]) for (i, j), q in zip(d.contexts, d.probabilities)
        )
        worst = max(worst, abs(expectation - graph.graph_bell_value(g, probs)))
        alpha_miss += graph.independence_number(g) != _brute_alpha(n, edges)
    rec(worst <= 1e-10 and alpha_miss == 0, f"max bias {worst:.2e}, independence mismatches {alpha_miss}")


TRIALS = 10_000


def _coverage(inst, plan, seed):
    return coverage_experiment(inst, plan, TRIALS, seed, replace=True, threads=4)


def test_criterion_09_coverage(criterion):
    rec = criterion(9, "Monte Carlo coverage within delta + 3 sigma")
    parts, ok = [], True
    chsh = chsh_inequality()
    for eta in (1.0, 0.8):
        inst = SimulationInstance(chsh, chsh_quantum_behavior(1.0), DetectorModel(eta))
        plan = chebyshev_plan(4, inst.beta_true, 0.3, 0.05)
        res = _coverage(inst, plan, seed=2024)
        ok &= res.passed
        parts.append(f"CHSH eta={eta} L={plan.contexts_required}: {res.rate:.4f} <= {res.threshold:.4f}")
    n, delta = 3, 0.05
    ineq = product_inequality(chsh, n)
    for eta in (1.0, 0.8):
        inst = SimulationInstance(ineq, product_behavior(chsh_quantum_behavior(1.0), n),
                                  DetectorModel(eta, bin_outcome=(0,) * n))
        eps = math.sqrt(64 * inst.beta_true / (16 * delta))
        plan = SamplingPlan(eps, delta, 64, 16, inst.beta_true)
        res = _coverage(inst, plan, seed=2025)
        ok &= res.passed
        parts.append(f"PNP n=3 eta={eta} L=16: {res.rate:.4f} <= {res.threshold:.4f}")
    rec(ok, "; ".join(parts))


def test_criterion_10_simulate_deterministic(criterion, tmp_path):
    rec = criterion(10, "simulate output byte-identical per seed")
    argv = ["simulate", "pnp", "--n", "2", "--seed", "314159", "--trials", "200", "--eta", "0.85",
            "--contexts", "8", "--rounds", "100"]
    outputs = []
    for k, threads in enumerate(("1", "1", "4")):
        path = tmp_path / f"run{k}.csv"
        assert main(argv + ["--threads", threads, "--out", str(path)]) == 0
        outputs.append(path.read_bytes())
    chsh = tmp_path / "chsh.csv"
    argv_chsh = ["simulate", "chsh", "--seed", "7", "--trials", "100", "--sampling", "with"]
    main(argv_chsh + ["--out", str(chsh)])
    first = chsh.read_bytes()
    main(argv_chsh + ["--out", str(chsh)])
    ok = outputs[0] == outputs[1] == outputs[2] and chsh.read_bytes() == first
    rec(ok, f"3 PNP runs ({len(outputs[0])} bytes) and 2 CHSH runs identical")
