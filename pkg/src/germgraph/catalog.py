"""Builders for the named graphs and the measured network constants.

Germ labeling used throughout (all four edges have length ``ell``)::

    v1 --e4--> v2 <--e3-- v3 <==e1,e2== v4

``v1`` is the pendant end (valency 1), ``v3`` the valency-3 vertex and the
parallel pair ``e1, e2`` joins ``v3`` to ``v4``. Contact ``v2`` splits the germ
into a pendant interval plus a lollipop; contact ``v4`` sits on the doubled
edge. Both choices give the same M-function.
"""
from __future__ import annotations

from dataclasses import dataclass

from .graph import Condition, Edge, GraphError, MetricGraph, Vertex, glue

GERM_LABELS = "v1: pendant end (valency 1); v2: contact A (valency 2); v3: branch vertex (valency 3); v4: contact B (valency 2)"
GERM_CONTACTS = ("v2", "v4")

PRESETS = (
    "interval_N",
    "interval_D",
    "interval_DD",
    "star",
    "germ",
    "germ_plus_interval_N",
    "germ_plus_interval_D",
    "germ_plus_star",
)

_PARAMS = {
    "interval_N": ("a",),
    "interval_D": ("a",),
    "interval_DD": ("a",),
    "star": ("b", "c", "d"),
    "germ": ("ell",),
    "germ_plus_interval_N": ("ell", "a"),
    "germ_plus_interval_D": ("ell", "a"),
    "germ_plus_star": ("ell", "b", "c", "d"),
}


@dataclass(frozen=True)
class NetworkConstants:
    """Lengths (m), absorption (m^-1/2) and frequency window (GHz) of one measured network."""

    name: str
    ell: float
    beta: float
    nu_range: tuple[float, float]
    star: tuple[float, float, float] | None = None

    @property
    def germ_length(self) -> float:
        return 4 * self.ell


# Germ with leads, total length 1.1580 m.
GERM_NETWORK = NetworkConstants("germ-network", ell=0.2895, beta=0.0055, nu_range=(0.01, 2.0))
# Germ of total length 3.0000 m with the star (b, c, d) glued to the contact.
GERM_STAR_NETWORK = NetworkConstants(
    "germ-star-network", ell=0.75, beta=0.0084, nu_range=(0.01, 1.0), star=(0.0809, 0.2400, 0.1909)
)


def _positive(**lengths: float) -> None:
    for name, value in lengths.items():
        if not value > 0:
            raise GraphError(f"length {name} must be positive, got {value!r}")


def interval(a: float, far: str = "N", *, near: str = "p0", far_id: str = "p1", edge: str = "e") -> MetricGraph:
    """Interval of length ``a`` with its contact at ``near``."""
    _positive(a=a)
    cond = {"N": Condition.STANDARD, "D": Condition.DIRICHLET}[far]
    return MetricGraph((Vertex(near), Vertex(far_id, cond)), (Edge(edge, far_id, near, a),), (near,))


def interval_dd(a: float) -> MetricGraph:
    _positive(a=a)
    d = Condition.DIRICHLET
    return MetricGraph((Vertex("p0", d), Vertex("p1", d)), (Edge("e", "p0", "p1", a),), ())


def star(b: float, c: float, d: float) -> MetricGraph:
    """Three-edge star, all edges pointing toward the contact at the free end of ``d``."""
    _positive(b=b, c=c, d=d)
    vertices = (Vertex("sb"), Vertex("sc"), Vertex("s0"), Vertex("sd"))
    edges = (
        Edge("b", "sb", "s0", b),
        Edge("c", "sc", "s0", c),
        Edge("d", "s0", "sd", d),
    )
    return MetricGraph(vertices, edges, ("sd",))


def germ(ell: float, contact: str | tuple[str, ...] = "v2") -> MetricGraph:
    _positive(ell=ell)
    contacts = (contact,) if isinstance(contact, str) else tuple(contact)
    for c in contacts:
        if c not in ("v1", "v2", "v3", "v4"):
            raise GraphError(f"unknown germ vertex {c!r}")
    vertices = tuple(Vertex(f"v{i}") for i in range(1, 5))
    edges = (
        Edge("e1", "v4", "v3", ell),
        Edge("e2", "v4", "v3", ell),
        Edge("e3", "v3", "v2", ell),
        Edge("e4", "v1", "v2", ell),
    )
    return MetricGraph(vertices, edges, contacts)


def germ_plus_interval(ell: float, a: float, far: str = "N", contact: str = "v2") -> MetricGraph:
    """Germ with an interval of length ``a`` attached at ``contact``; far end is vertex ``v5``."""
    piece = interval(a, far, near="p0", far_id="v5", edge="e5")
    return glue(germ(ell, contact), piece)


def germ_plus_star(ell: float, b: float, c: float, d: float, contact: str = "v2") -> MetricGraph:
    return glue(germ(ell, contact), star(b, c, d))


def catalog_graph(name: str, contact: str = "v2", **params: float) -> MetricGraph:
    """Build a named graph. ``contact`` selects v2 or v4 for germ-based presets."""
    if name not in _PARAMS:
        raise GraphError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    missing = [p for p in _PARAMS[name] if p not in params]
    if missing:
        raise GraphError(f"preset {name} needs parameter(s) {', '.join(missing)}")
    extra = sorted(set(params) - set(_PARAMS[name]))
    if extra:
        raise GraphError(f"preset {name} does not take parameter(s) {', '.join(extra)}")
    p = {k: float(v) for k, v in params.items()}
    if name == "interval_N":
        return interval(p["a"], "N")
    if name == "interval_D":
        return interval(p["a"], "D")
    if name == "interval_DD":
        return interval_dd(p["a"])
    if name == "star":
        return star(p["b"], p["c"], p["d"])
    if name == "germ":
        return germ(p["ell"], contact)
    if name == "germ_plus_interval_N":
        return germ_plus_interval(p["ell"], p["a"], "N", contact)
    if name == "germ_plus_interval_D":
        return germ_plus_interval(p["ell"], p["a"], "D", contact)
    return germ_plus_star(p["ell"], p["b"], p["c"], p["d"], contact)


def preset_parameters(name: str) -> tuple[str, ...]:
    if name not in _PARAMS:
        raise GraphError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    return _PARAMS[name]
