"""Command-line front end.

Exit statuses: 0 success, 1 usage error, 2 infeasible / no violation,
3 I/O or catalog validation failure.  All tabular output is CSV preceded
by a ``#`` metadata block.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

from . import __version__, catalog as catalog_mod, graph, pnp
from .bell import chsh_inequality, chsh_quantum_behavior, product_behavior, product_inequality
from .errors import (
    CatalogError,
    DomainError,
    InfeasibleError,
    NoViolationError,
    NotFoundError,
    SubsetBellError,
    UnknownEntryError,
)
from .montecarlo import DetectorModel, SimulationInstance, run_trials
from .planner import SamplingPlan, chebyshev_plan

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3

VERBS = ("design", "pnp-table", "pnp-curve", "graph-nu", "graph-table", "simulate", "validate-catalog")
TABLE_DELTA = 3e-5
# the delta at which the packaged graph rows were published
CATALOG_DELTA = 3e-5


class UsageError(SubsetBellError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _float_in(lo, hi, lo_open=False, hi_open=False):
    def conv(s):
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {s!r}")
        bad = (v < lo or v > hi or (lo_open and v == lo) or (hi_open and v == hi)
               or math.isnan(v))
        if bad:
            lb, rb = "(" if lo_open else "[", ")" if hi_open else "]"
            raise argparse.ArgumentTypeError(f"{v} outside {lb}{lo}, {hi}{rb}")
        return v
    return conv


_unit = _float_in(0.0, 1.0)
_prob = _float_in(0.0, 1.0, lo_open=True, hi_open=True)
_posfloat = _float_in(0.0, math.inf, lo_open=True)
_nonneg = _float_in(0.0, math.inf)
_safety = _float_in(0.0, 1.0, lo_open=True)


def _seed(s):
    try:
        v = int(s, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {s!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--precision", type=_positive_int, default=6,
                        help="significant digits for floats (default 6)")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--catalog", help="catalog file (default: packaged catalog)")
    common.add_argument("--threads", type=_positive_int, default=1)

    p = _Parser(prog="subsetbell", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    d = sub.add_parser("design", parents=[common], help="context fraction for given hardware")
    d.add_argument("--family", choices=("pnp", "graph"), required=True)
    d.add_argument("--n", type=_positive_int, help="PNP copies")
    d.add_argument("--name", help="graph catalog entry")
    d.add_argument("--eta", type=_unit, required=True)
    d.add_argument("--visibility", type=_unit, default=1.0)
    d.add_argument("--delta", type=_prob, default=TABLE_DELTA)
    d.add_argument("--penalty", type=_nonneg, default=0.0, help="A + B marginal penalty")
    d.add_argument("--safety", type=_safety, default=1.0)

    t = sub.add_parser("pnp-table", parents=[common], help="fraction table for PNP CHSH")
    t.add_argument("--n", type=_positive_int, nargs="+", default=[14, 13, 12, 11, 10])
    t.add_argument("--eta", type=_unit, nargs="+", default=[0.40, 0.60, 0.80, 0.95])
    t.add_argument("--visibility", type=_unit, default=1.0)
    t.add_argument("--delta", type=_prob, default=TABLE_DELTA)
    t.add_argument("--penalty", type=_nonneg, default=0.0)

    c = sub.add_parser("pnp-curve", parents=[common], help="minimum efficiency versus fraction")
    c.add_argument("--n", type=_positive_int, nargs="+", default=[10, 11, 12, 13, 14])
    c.add_argument("--nu-min", type=_float_in(0.0, 1.0, lo_open=True), default=1e-3)
    c.add_argument("--points", type=_positive_int, default=31)
    c.add_argument("--visibility", type=_unit, default=1.0)
    c.add_argument("--delta", type=_prob, default=TABLE_DELTA)

    g = sub.add_parser("graph-nu", parents=[common], help="fraction for a graph inequality")
    g.add_argument("--name", help="graph catalog entry")
    g.add_argument("--vertices", type=_positive_int)
    g.add_argument("--edges", type=_positive_int)
    g.add_argument("--independence", type=_positive_int, help="independence number C")
    g.add_argument("--quantum", type=_posfloat, help="quantum value Q")
    g.add_argument("--eta", type=_unit, nargs="+", required=True)
    g.add_argument("--delta", type=_prob, default=TABLE_DELTA)

    gt = sub.add_parser("graph-table", parents=[common], help="graph table with calibrated predictions")
    gt.add_argument("--name", nargs="*", help="restrict to these entries")

    s = sub.add_parser("simulate", parents=[common], help="seeded Monte Carlo of the protocol")
    s.add_argument("instance", choices=("chsh", "pnp"))
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--trials", type=_positive_int, default=1000)
    s.add_argument("--n", type=_positive_int, default=2, help="PNP copies (<= 4)")
    s.add_argument("--eta", type=_unit, default=1.0)
    s.add_argument("--visibility", type=_unit, default=1.0)
    s.add_argument("--epsilon", type=_posfloat, default=0.3)
    s.add_argument("--delta", type=_prob, default=0.05)
    s.add_argument("--safety", type=_safety, default=1.0)
    s.add_argument("--contexts", type=_positive_int, help="override L from the Chebyshev plan")
    s.add_argument("--rounds", type=_positive_int, help="rounds per context (default: exact beta_j)")
    s.add_argument("--sampling", choices=("with", "without"), default="without",
                   help="context draws with or without replacement")

    v = sub.add_parser("validate-catalog", parents=[common], help="check a catalog file")
    v.add_argument("--roundtrip", action="store_true", help="also require canonical formatting")
    return p


@dataclass
class Command:
    verb: str
    params: dict = field(default_factory=dict)


def parse_command(argv: Sequence[str]) -> Command:
    ns = build_parser().parse_args(list(argv))
    params = {k: v for k, v in vars(ns).items() if k != "verb"}
    cmd = Command(ns.verb, params)
    _validate(cmd)
    return cmd


def _validate(cmd: Command):
    p = cmd.params
    if cmd.verb == "design":
        if p["family"] == "pnp" and p["n"] is None:
            raise UsageError("design --family pnp requires --n")
        if p["family"] == "graph":
            if not p["name"]:
                raise UsageError("design --family graph requires --name")
            if p["visibility"] != 1.0:
                raise UsageError("graph designs are tabulated at visibility 1 only")
    elif cmd.verb == "graph-nu":
        explicit = [p[k] for k in ("vertices", "edges", "independence", "quantum")]
        if p["name"] is None and any(v is None for v in explicit):
            raise UsageError("graph-nu needs --name or all of --vertices --edges --independence --quantum")
    elif cmd.verb == "simulate":
        if p["instance"] == "pnp" and p["n"] > 4:
            raise UsageError("simulate pnp materializes 16^n outcomes; use --n <= 4")


# -- output -------------------------------------------------------------------

class _Emitter:
    def __init__(self, verb: str, params: dict, precision: int):
        self.precision = precision
        self.buf = io.StringIO()
        self.buf.write(f"# tool: subsetbell {__version__}\n")
        self.buf.write(f"# command: {verb}\n")
        self.buf.write(f"# seed: {params.get('seed', 'none')}\n")
        for key in sorted(params):
            if key in ("out", "seed", "precision", "threads"):
                continue
            val = params[key]
            if val is None:
                continue
            self.buf.write(f"# {key}: {self._fmt_param(val)}\n")
        self.writer = csv.writer(self.buf, lineterminator="\n")

    def _fmt_param(self, val):
        if isinstance(val, list):
            return " ".join(self._fmt_param(v) for v in val)
        if isinstance(val, float):
            return repr(val)
        return str(val)

    def fmt(self, v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return f"{v:.{self.precision}g}"
        return str(v)

    def header(self, *cols):
        self.writer.writerow(cols)

    def row(self, *vals):
        self.writer.writerow([self.fmt(v) for v in vals])

    def text(self):
        return self.buf.getvalue()


# -- verbs --------------------------------------------------------------------

def _graph_nu(entry: graph.GraphCatalogEntry, eta: float, delta: float):
    """(nu, source) for a catalog entry: exact constants if known, else calibrated."""
    g = entry.graph()
    if g is not None and g.independence_number is not None and g.quantum_value is not None:
        return graph.graph_fraction_required(g, eta, delta), "computed"
    cal = graph.calibrate_from_rows(entry, tolerance=None)
    # the statistics constant scales with -ln(delta)
    scale = math.log(delta) / math.log(CATALOG_DELTA)
    return graph.Calibration(cal.c_over_q, cal.stat_const * scale).predict_nu(eta), "calibrated"


def _design(p, cat, em):
    status = EXIT_OK
    em.header("family", "instance", "eta", "visibility", "delta", "nu", "status")
    if p["family"] == "pnp":
        inst = f"n={p['n']}"
        try:
            nu = pnp.fraction_required(p["n"], p["eta"], p["visibility"], p["delta"],
                                       p["penalty"], safety=p["safety"])
        except NoViolationError:
            em.row("pnp", inst, p["eta"], p["visibility"], p["delta"], "nan", "no-violation")
            return EXIT_INFEASIBLE
    else:
        entry = cat.graph(p["name"])
        inst = entry.name
        try:
            nu, _ = _graph_nu(entry, p["eta"], p["delta"])
        except (InfeasibleError, DomainError):
            em.row("graph", inst, p["eta"], p["visibility"], p["delta"], "nan", "no-violation")
            return EXIT_INFEASIBLE
    if nu > 1:
        status = EXIT_INFEASIBLE
    em.row(p["family"], inst, p["eta"], p["visibility"], p["delta"], nu,
           "feasible" if nu <= 1 else "infeasible")
    return status


def _pnp_table(p, cat, em):
    em.header("n", "eta", "nu")
    for n in p["n"]:
        try:
            em.row(n, pnp.critical_efficiency(n, p["visibility"], p["penalty"]), 1.0)
        except InfeasibleError:
            continue
        for eta in sorted(p["eta"]):
            try:
                nu = pnp.fraction_required(n, eta, p["visibility"], p["delta"], p["penalty"])
            except NoViolationError:
                continue
            if nu <= 1:
                em.row(n, eta, nu)
    return EXIT_OK


def _pnp_curve(p, cat, em):
    em.header("n", "nu", "eta_nu")
    k = p["points"]
    lo = math.log10(p["nu_min"])
    grid = [10 ** (lo + (0 - lo) * i / (k - 1)) for i in range(k)] if k > 1 else [1.0]
    for n in p["n"]:
        for nu in grid:
            try:
                em.row(n, nu, pnp.min_efficiency(n, nu, p["visibility"], p["delta"]))
            except InfeasibleError:
                continue
    return EXIT_OK


def _graph_nu_verb(p, cat, em):
    em.header("name", "eta", "nu", "source")
    status = EXIT_OK
    if p["name"]:
        entry = cat.graph(p["name"])
        name = entry.name
        compute = lambda eta: _graph_nu(entry, eta, p["delta"])
    else:
        g = graph.OrthogonalityGraph(p["vertices"], num_edges=p["edges"],
                                     independence_number=p["independence"],
                                     quantum_value=p["quantum"])
        name = "custom"
        compute = lambda eta: (graph.graph_fraction_required(g, eta, p["delta"]), "computed")
    for eta in p["eta"]:
        try:
            nu, source = compute(eta)
        except InfeasibleError:
            em.row(name, eta, "nan", "infeasible")
            status = EXIT_INFEASIBLE
            continue
        em.row(name, eta, nu, source)
        if nu > 1:
            status = EXIT_INFEASIBLE
    return status


def _graph_table(p, cat, em):
    em.header("name", "d", "M", "eta", "nu", "source")
    wanted = {n.lower() for n in p["name"]} if p["name"] else None
    for entry in cat.graphs:
        if wanted is not None and entry.name.lower() not in wanted:
            continue
        em.row(entry.name, entry.dimension, float(entry.total_contexts), entry.eta_crit, 1.0, "paper")
        for eta, nu in entry.rows:
            em.row(entry.name, entry.dimension, float(entry.total_contexts), eta, nu, "paper")
        if len(entry.rows) >= 1:
            cal = graph.calibrate_from_rows(entry, tolerance=None)
            for eta, _ in entry.rows:
                em.row(entry.name, entry.dimension, float(entry.total_contexts), eta,
                       cal.predict_nu(eta), "calibrated")
        g = entry.graph()
        if g is not None and g.independence_number is not None and g.quantum_value is not None:
            for eta, _ in entry.rows:
                em.row(entry.name, entry.dimension, float(entry.total_contexts), eta,
                       graph.graph_fraction_required(g, eta, CATALOG_DELTA), "computed")
    return EXIT_OK


def simulation_setup(p):
    """Instance and plan for the simulate verb (shared with tests)."""
    det = DetectorModel(p["eta"], p["visibility"])
    if p["instance"] == "chsh":
        ineq, beh = chsh_inequality(), chsh_quantum_behavior(1.0)
    else:
        n = p["n"]
        ineq = product_inequality(chsh_inequality(), n, name=f"PNP-CHSH n={n}")
        beh = product_behavior(chsh_quantum_behavior(1.0), n)
    inst = SimulationInstance(ineq, beh, det)
    M = inst.num_contexts
    if p["contexts"] is not None:
        plan = SamplingPlan(p["epsilon"], p["delta"], M, p["contexts"], inst.beta_true, p["safety"])
    else:
        plan = chebyshev_plan(M, inst.beta_true, p["epsilon"], p["delta"], p["safety"])
    if p["rounds"] is not None:
        plan = SamplingPlan(plan.epsilon, plan.delta, M, plan.contexts_required, plan.beta,
                            plan.safety, p["rounds"])
    return inst, plan


def _simulate(p, cat, em):
    inst, plan = simulation_setup(p)
    replace = p["sampling"] == "with"
    if not replace and plan.contexts_required > inst.num_contexts:
        raise InfeasibleError(
            f"plan needs L={plan.contexts_required} > M={inst.num_contexts} distinct contexts; "
            "use --sampling with"
        )
    results = run_trials(inst, plan, p["trials"], p["seed"], replace=replace, threads=p["threads"])
    em.buf.write(f"# contexts_required: {plan.contexts_required}\n")
    em.buf.write(f"# num_contexts: {inst.num_contexts}\n")
    em.header("trial", "Y", "beta_true", "within_epsilon", "certified")
    for r in results:
        em.row(r.trial, r.Y, r.beta_true, r.within_epsilon, r.certified)
    return EXIT_OK


def _validate_catalog(p, cat, em):
    em.header("kind", "name", "status")
    for i in cat.inequalities:
        em.row("inequality", i.name, "ok")
    for g in cat.graphs:
        em.row("graph", g.name, "ok")
    return EXIT_OK


_HANDLERS = {
    "design": _design,
    "pnp-table": _pnp_table,
    "pnp-curve": _pnp_curve,
    "graph-nu": _graph_nu_verb,
    "graph-table": _graph_table,
    "simulate": _simulate,
    "validate-catalog": _validate_catalog,
}


def run_command(cmd: Command, cat: Optional[catalog_mod.Catalog] = None,
                stdout: TextIO = None, stderr: TextIO = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    p = cmd.params
    try:
        if cat is None:
            text = None
            if p.get("catalog"):
                with open(p["catalog"]) as fh:
                    text = fh.read()
                cat = catalog_mod.loads(text)
            else:
                cat = catalog_mod.load()
            if cmd.verb == "validate-catalog" and p.get("roundtrip") and text is not None:
                if catalog_mod.dumps(cat) != text:
                    raise CatalogError("catalog is valid but not in canonical form")
        em = _Emitter(cmd.verb, p, p.get("precision", 6))
        status = _HANDLERS[cmd.verb](p, cat, em)
        out = em.text()
        if p.get("out"):
            with open(p["out"], "w") as fh:
                fh.write(out)
        else:
            stdout.write(out)
    except (OSError, CatalogError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_IO
    except (InfeasibleError, NoViolationError, NotFoundError) as exc:
        print(f"infeasible: {exc}", file=stderr)
        return EXIT_INFEASIBLE
    except (DomainError, UnknownEntryError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    if status == EXIT_INFEASIBLE:
        print("infeasible: requested setting cannot be certified", file=stderr)
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cmd = parse_command(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    return run_command(cmd)


if __name__ == "__main__":
    sys.exit(main())
