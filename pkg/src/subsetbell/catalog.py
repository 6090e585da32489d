"""Catalog of Bell-inequality descriptors and graph table entries.

The on-disk format is canonical JSON (sorted keys, two-space indent,
shortest round-trip float repr, trailing newline), so
``dumps(loads(text)) == text`` for any file this module wrote.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .errors import CatalogError, SubsetBellError, UnknownEntryError
from .graph import GraphCatalogEntry

FORMAT_VERSION = 1
FAMILIES = ("chsh", "pnp")

_GRAPH_REQUIRED = {"name", "dimension", "total_contexts", "eta_crit", "rows"}
_GRAPH_OPTIONAL = {"num_vertices", "num_edges", "independence_number", "quantum_value", "note"}
_INEQ_REQUIRED = {"name", "family", "local_bound", "algebraic_bound"}
_INEQ_OPTIONAL = {"quantum_value", "num_contexts", "note"}


@dataclass(frozen=True)
class InequalityDescriptor:
    name: str
    family: str
    local_bound: float
    algebraic_bound: float
    quantum_value: Optional[float] = None
    num_contexts: Optional[int] = None
    note: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise CatalogError(f"{self.name}: unknown family {self.family!r}")
        if self.local_bound > self.algebraic_bound:
            raise CatalogError(f"{self.name}: local bound exceeds algebraic bound")
        if self.quantum_value is not None and not (
            self.local_bound <= self.quantum_value <= self.algebraic_bound
        ):
            raise CatalogError(f"{self.name}: quantum value outside [C, Sigma]")
        if self.family == "chsh" and self.num_contexts not in (None, 4):
            raise CatalogError(f"{self.name}: CHSH has 4 contexts")


@dataclass(frozen=True)
class Catalog:
    inequalities: tuple[InequalityDescriptor, ...] = ()
    graphs: tuple[GraphCatalogEntry, ...] = ()
    format_version: int = FORMAT_VERSION
    note: str = ""

    def __post_init__(self):
        for kind, items in (("inequality", self.inequalities), ("graph", self.graphs)):
            names = [i.name for i in items]
            dup = {n for n in names if names.count(n) > 1}
            if dup:
                raise CatalogError(f"duplicate {kind} names: {sorted(dup)}")

    def graph(self, name: str) -> GraphCatalogEntry:
        for g in self.graphs:
            if g.name.lower() == name.lower():
                return g
        raise UnknownEntryError(f"no graph named {name!r} in catalog")

    def inequality(self, name: str) -> InequalityDescriptor:
        for i in self.inequalities:
            if i.name.lower() == name.lower():
                return i
        raise UnknownEntryError(f"no inequality named {name!r} in catalog")


def _check_keys(obj, required, optional, what):
    if not isinstance(obj, dict):
        raise CatalogError(f"{what} must be an object")
    missing = required - obj.keys()
    extra = obj.keys() - required - optional
    if missing:
        raise CatalogError(f"{what} missing keys {sorted(missing)}")
    if extra:
        raise CatalogError(f"{what} has unknown keys {sorted(extra)}")


def from_dict(data: dict) -> Catalog:
    _check_keys(data, {"format_version", "inequalities", "graphs"}, {"note"}, "catalog")
    if data["format_version"] != FORMAT_VERSION:
        raise CatalogError(f"unsupported format_version {data['format_version']!r}")
    try:
        ineqs = []
        for item in data["inequalities"]:
            _check_keys(item, _INEQ_REQUIRED, _INEQ_OPTIONAL, "inequality")
            ineqs.append(InequalityDescriptor(**item))
        graphs = []
        for item in data["graphs"]:
            _check_keys(item, _GRAPH_REQUIRED, _GRAPH_OPTIONAL, "graph")
            kw = dict(item)
            kw["rows"] = tuple(tuple(r) for r in kw["rows"])
            if any(len(r) != 2 for r in kw["rows"]):
                raise CatalogError(f"{kw['name']}: rows must be [eta, nu] pairs")
            graphs.append(GraphCatalogEntry(**kw))
        return Catalog(tuple(ineqs), tuple(graphs), data["format_version"], data.get("note", ""))
    except CatalogError:
        raise
    except (SubsetBellError, TypeError, ValueError) as exc:
        raise CatalogError(str(exc)) from exc


def _drop_empty(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None and v != ""}


def to_dict(cat: Catalog) -> dict:
    out = {
        "format_version": cat.format_version,
        "inequalities": [
            _drop_empty({
                "name": i.name, "family": i.family, "local_bound": i.local_bound,
                "algebraic_bound": i.algebraic_bound, "quantum_value": i.quantum_value,
                "num_contexts": i.num_contexts, "note": i.note,
            })
            for i in cat.inequalities
        ],
        "graphs": [
            _drop_empty({
                "name": g.name, "dimension": g.dimension, "total_contexts": g.total_contexts,
                "eta_crit": g.eta_crit, "rows": [list(r) for r in g.rows],
                "num_vertices": g.num_vertices, "num_edges": g.num_edges,
                "independence_number": g.independence_number,
                "quantum_value": g.quantum_value, "note": g.note,
            })
            for g in cat.graphs
        ],
    }
    if cat.note:
        out["note"] = cat.note
    return out


def dumps(cat: Catalog) -> str:
    return json.dumps(to_dict(cat), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> Catalog:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"invalid JSON: {exc}") from exc
    return from_dict(data)


def load(path: Union[str, Path, None] = None) -> Catalog:
    """Read a catalog file; ``None`` loads the packaged default."""
    if path is None:
        text = resources.files("subsetbell.data").joinpath("catalog.json").read_text()
    else:
        text = Path(path).read_text()
    return loads(text)


def save(cat: Catalog, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(cat))
