"""Compact metric graphs with standard/Dirichlet vertices and a contact set.

Edges carry an orientation that fixes the coordinate ``x in [0, length]``;
physical quantities never depend on it. Multi-edges and loops are allowed,
so incidence is kept per edge endpoint rather than as adjacency sets.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence


class GraphError(ValueError):
    pass


class GraphParseError(GraphError):
    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class Condition(str, Enum):
    STANDARD = "standard"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class Vertex:
    id: str
    condition: Condition = Condition.STANDARD


@dataclass(frozen=True)
class Edge:
    id: str
    start: str
    end: str
    length: float

    @property
    def is_loop(self) -> bool:
        return self.start == self.end


@dataclass(frozen=True)
class Endpoint:
    """One end of an edge: ``at_end`` is False for x=0, True for x=length."""

    edge: int
    at_end: bool


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    contacts: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "contacts", tuple(self.contacts))

    @cached_property
    def vertex_index(self) -> dict[str, int]:
        return {v.id: i for i, v in enumerate(self.vertices)}

    @cached_property
    def incidence(self) -> dict[str, tuple[Endpoint, ...]]:
        """Edge endpoints attached to each vertex, in edge order (a loop appears twice)."""
        inc: dict[str, list[Endpoint]] = {v.id: [] for v in self.vertices}
        for n, e in enumerate(self.edges):
            inc.setdefault(e.start, []).append(Endpoint(n, False))
            inc.setdefault(e.end, []).append(Endpoint(n, True))
        return {vid: tuple(eps) for vid, eps in inc.items()}

    def vertex(self, vid: str) -> Vertex:
        try:
            return self.vertices[self.vertex_index[vid]]
        except KeyError:
            raise GraphError(f"unknown vertex {vid!r}") from None

    def valency(self, vid: str) -> int:
        return len(self.incidence.get(vid, ()))

    @property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self.edges)

    def with_contacts(self, contacts: Sequence[str]) -> MetricGraph:
        return replace(self, contacts=tuple(contacts))

    def flipped(self, edge_ids: Iterable[str]) -> MetricGraph:
        """Same graph with the orientation of the given edges reversed."""
        flip = set(edge_ids)
        edges = tuple(
            replace(e, start=e.end, end=e.start) if e.id in flip else e for e in self.edges
        )
        return replace(self, edges=edges)

    def subdivided(self, edge_id: str, fraction: float, new_vertex: str | None = None) -> MetricGraph:
        """Insert a standard valency-2 vertex at ``fraction`` of the edge length."""
        if not 0.0 < fraction < 1.0:
            raise GraphError("fraction must lie strictly between 0 and 1")
        ids = {v.id for v in self.vertices} | {e.id for e in self.edges}
        new_vertex = new_vertex or _fresh(f"{edge_id}_mid", ids)
        edges: list[Edge] = []
        for e in self.edges:
            if e.id != edge_id:
                edges.append(e)
                continue
            first = e.length * fraction
            edges.append(Edge(_fresh(f"{e.id}a", ids), e.start, new_vertex, first))
            edges.append(Edge(_fresh(f"{e.id}b", ids), new_vertex, e.end, e.length - first))
        if len(edges) == len(self.edges):
            raise GraphError(f"unknown edge {edge_id!r}")
        return replace(self, vertices=self.vertices + (Vertex(new_vertex),), edges=tuple(edges))


def _fresh(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name += "'"
    taken.add(name)
    return name


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return not self.violations

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(graph: MetricGraph) -> ValidationReport:
    report = ValidationReport()
    bad = report.violations
    seen: set[str] = set()
    for v in graph.vertices:
        if not v.id:
            bad.append("empty vertex id")
        if v.id in seen:
            bad.append(f"duplicate vertex id {v.id!r}")
        seen.add(v.id)
        if not isinstance(v.condition, Condition):
            bad.append(f"vertex {v.id!r}: unknown condition {v.condition!r}")
    edge_ids: set[str] = set()
    for e in graph.edges:
        if not e.id:
            bad.append("empty edge id")
        if e.id in edge_ids:
            bad.append(f"duplicate edge id {e.id!r}")
        edge_ids.add(e.id)
        if not (isinstance(e.length, (int, float)) and math.isfinite(e.length) and e.length > 0):
            bad.append(f"edge {e.id!r}: non-positive edge length {e.length!r}")
        for end in (e.start, e.end):
            if end not in seen:
                bad.append(f"edge {e.id!r}: dangling vertex reference {end!r}")
    if graph.contacts and len(set(graph.contacts)) != len(graph.contacts):
        bad.append("duplicate contact")
    for c in graph.contacts:
        if c not in seen:
            bad.append(f"contact {c!r} is not a vertex")
            continue
        if graph.vertex(c).condition is Condition.DIRICHLET:
            bad.append(f"Dirichlet contact {c!r}")
        if graph.valency(c) == 0:
            bad.append(f"isolated contact {c!r}")
    if not graph.edges:
        bad.append("graph has no edges")
    return report


def ensure_valid(graph: MetricGraph) -> MetricGraph:
    report = validate(graph)
    if not report.ok:
        raise GraphError("invalid graph: " + "; ".join(report.violations))
    return graph


GluePairing = Sequence[tuple[str, str]]


def glue(a: MetricGraph, b: MetricGraph, pairing: GluePairing | None = None) -> MetricGraph:
    """Identify contacts of ``a`` with contacts of ``b``.

    ``pairing`` lists ``(contact of a, contact of b)``; by default contacts are
    paired in order. Glued vertices keep the id from ``a``; colliding ids from
    ``b`` get primes appended. The result's contacts are the glued vertices in
    pairing order.
    """
    if pairing is None:
        if len(a.contacts) != len(b.contacts):
            raise GraphError("contact sets differ in size")
        pairing = list(zip(a.contacts, b.contacts))
    pairing = [tuple(p) for p in pairing]
    left = [p[0] for p in pairing]
    right = [p[1] for p in pairing]
    for name, side, graph in (("a", left, a), ("b", right, b)):
        for c in side:
            if c not in graph.contacts:
                raise GraphError(f"{c!r} is not a contact of graph {name}")
        if len(set(side)) != len(side) or len(side) != len(graph.contacts):
            raise GraphError(f"pairing is not a bijection on the contacts of graph {name}")

    taken = {v.id for v in a.vertices} | {e.id for e in a.edges}
    rename = dict((r, l) for l, r in pairing)
    vertices = [
        replace(v, condition=Condition.STANDARD) if v.id in left else v for v in a.vertices
    ]
    for v in b.vertices:
        if v.id in rename:
            continue
        rename[v.id] = _fresh(v.id, taken)
        vertices.append(replace(v, id=rename[v.id]))
    edges = list(a.edges)
    for e in b.edges:
        edges.append(Edge(_fresh(e.id, taken), rename[e.start], rename[e.end], e.length))
    return MetricGraph(tuple(vertices), tuple(edges), tuple(left))


# -- graph file format -------------------------------------------------------

_TOP_KEYS = {"vertices", "edges", "contacts"}
_VERTEX_KEYS = {"id", "condition"}
_EDGE_KEYS = {"id", "from", "to", "length_m"}


def serialize_graph(graph: MetricGraph, header: str | None = None) -> str:
    doc: dict = {}
    if header:
        doc["comment"] = header
    doc["vertices"] = [{"id": v.id, "condition": v.condition.value} for v in graph.vertices]
    doc["edges"] = [
        {"id": e.id, "from": e.start, "to": e.end, "length_m": float(e.length)} for e in graph.edges
    ]
    doc["contacts"] = list(graph.contacts)
    return json.dumps(doc, indent=2) + "\n"


def parse_graph(text: str) -> MetricGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise GraphParseError("top level must be an object")
    _check_keys(doc, _TOP_KEYS | {"comment"}, "document", required=_TOP_KEYS)

    vertices = []
    for i, item in enumerate(_list(doc, "vertices")):
        where = f"vertices[{i}]"
        _check_keys(item, _VERTEX_KEYS, where, required={"id"})
        vid = _ident(item, "id", where)
        try:
            cond = Condition(item.get("condition", "standard"))
        except ValueError:
            raise GraphParseError(f"unknown condition {item.get('condition')!r}", f"{where}.condition") from None
        vertices.append(Vertex(vid, cond))
    ids = [v.id for v in vertices]
    _no_duplicates(ids, "vertex")

    edges = []
    for i, item in enumerate(_list(doc, "edges")):
        where = f"edges[{i}]"
        _check_keys(item, _EDGE_KEYS, where, required=_EDGE_KEYS)
        eid = _ident(item, "id", where)
        ends = []
        for key in ("from", "to"):
            ref = _ident(item, key, where)
            if ref not in ids:
                raise GraphParseError(f"undefined vertex {ref!r}", f"{where}.{key}")
            ends.append(ref)
        length = item["length_m"]
        if isinstance(length, bool) or not isinstance(length, (int, float)):
            raise GraphParseError("length must be a decimal number", f"{where}.length_m")
        if not (math.isfinite(length) and length > 0):
            raise GraphParseError("non-positive edge length", f"{where}.length_m")
        edges.append(Edge(eid, ends[0], ends[1], float(length)))
    _no_duplicates([e.id for e in edges], "edge")

    contacts = _list(doc, "contacts")
    for i, c in enumerate(contacts):
        if not isinstance(c, str) or c not in ids:
            raise GraphParseError(f"undefined vertex {c!r}", f"contacts[{i}]")
    graph = MetricGraph(tuple(vertices), tuple(edges), tuple(contacts))
    report = validate(graph)
    if not report.ok:
        raise GraphParseError("; ".join(report.violations))
    return graph


def load_graph(path) -> MetricGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def _check_keys(item, allowed: set[str], where: str, required: set[str] = frozenset()) -> None:
    if not isinstance(item, dict):
        raise GraphParseError("expected an object", where)
    unknown = sorted(set(item) - allowed)
    if unknown:
        raise GraphParseError(f"unknown key {unknown[0]!r}", where)
    missing = sorted(required - set(item))
    if missing:
        raise GraphParseError(f"missing key {missing[0]!r}", where)


def _list(doc: dict, key: str) -> list:
    value = doc[key]
    if not isinstance(value, list):
        raise GraphParseError("expected a list", key)
    return value


def _ident(item: dict, key: str, where: str) -> str:
    value = item[key]
    if not isinstance(value, str) or not value:
        raise GraphParseError("ids must be nonempty strings", f"{where}.{key}")
    return value


def _no_duplicates(ids: list[str], kind: str) -> None:
    seen: set[str] = set()
    for i in ids:
        if i in seen:
            raise GraphParseError(f"duplicate {kind} id {i!r}")
        seen.add(i)
