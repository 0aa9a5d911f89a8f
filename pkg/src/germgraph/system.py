"""Vertex-condition linear system for ``u_n(x) = A_n cos kx + B_n sin kx``.

Unknowns are ordered ``(A_0, B_0, A_1, B_1, ...)``. Derivative rows are
divided by ``k`` so every coefficient is one of ``1, cos(k l_n), sin(k l_n)``
up to sign; for real ``k`` the matrix is real.

Outgoing (into the edge) derivatives divided by k:
    at x = 0:      B
    at x = length: A sin(k l) - B cos(k l)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Condition, Endpoint, MetricGraph

_ONE, _COS, _SIN = 0, 1, 2

Term = tuple[int, int, int, float]  # (column, kind, edge, sign)


def _value(p: Endpoint) -> list[Term]:
    a, b = 2 * p.edge, 2 * p.edge + 1
    if p.at_end:
        return [(a, _COS, p.edge, 1.0), (b, _SIN, p.edge, 1.0)]
    return [(a, _ONE, p.edge, 1.0)]


def _flux(p: Endpoint) -> list[Term]:
    a, b = 2 * p.edge, 2 * p.edge + 1
    if p.at_end:
        return [(a, _SIN, p.edge, 1.0), (b, _COS, p.edge, -1.0)]
    return [(b, _ONE, p.edge, 1.0)]


def _neg(terms: list[Term]) -> list[Term]:
    return [(c, kind, e, -s) for c, kind, e, s in terms]


@dataclass
class _Rows:
    terms: list[list[Term]]

    def assemble(self, cos: np.ndarray, sin: np.ndarray, size: int) -> np.ndarray:
        n = cos.shape[0]
        out = np.zeros((n, len(self.terms), size), dtype=np.result_type(cos, sin))
        for r, row in enumerate(self.terms):
            for col, kind, e, sign in row:
                if kind == _ONE:
                    out[:, r, col] += sign
                elif kind == _COS:
                    out[:, r, col] += sign * cos[:, e]
                else:
                    out[:, r, col] += sign * sin[:, e]
        return out


class EdgeSystem:
    """Assembles the square system imposing the vertex conditions of a graph.

    With ``prescribe_contacts`` each contact vertex gets a row fixing its value
    (right-hand side supplied by the caller) instead of the Kirchhoff flux row,
    and the contact fluxes are available from :meth:`contact_flux`. Without it
    the contacts are plain standard vertices and the rows form the homogeneous
    eigenvalue system of the closed graph. ``free_contacts`` drops the contact
    rows entirely, leaving ``2E - |contacts|`` rows whose null space spans the
    boundary relation.
    """

    def __init__(self, graph: MetricGraph, mode: str = "closed"):
        if mode not in ("closed", "prescribe_contacts", "free_contacts"):
            raise ValueError(f"unknown mode {mode!r}")
        self.graph = graph
        self.mode = mode
        self.lengths = np.array([e.length for e in graph.edges], dtype=float)
        self.size = 2 * len(graph.edges)
        contacts = set(graph.contacts) if mode != "closed" else set()

        rows: list[list[Term]] = []
        prescribed: dict[str, int] = {}
        flux_rows: list[list[Term]] = []
        value_rows: list[list[Term]] = []
        for v in graph.vertices:
            ends = graph.incidence.get(v.id, ())
            if not ends:
                continue
            if v.condition is Condition.DIRICHLET:
                rows.extend(_value(p) for p in ends)
                continue
            first = _value(ends[0])
            rows.extend(first + _neg(_value(p)) for p in ends[1:])
            flux = [t for p in ends for t in _flux(p)]
            if v.id in contacts:
                if mode == "prescribe_contacts":
                    prescribed[v.id] = len(rows)
                    rows.append(first)
            else:
                rows.append(flux)
        for c in graph.contacts:
            ends = graph.incidence.get(c, ())
            flux_rows.append([t for p in ends for t in _flux(p)])
            value_rows.append(_value(ends[0]) if ends else [])
        self.contact_rows = [prescribed[c] for c in graph.contacts] if prescribed else []
        self._rows = _Rows(rows)
        self._flux = _Rows(flux_rows)
        self._values = _Rows(value_rows)
        self.n_rows = len(rows)

    def _trig(self, ks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        phase = np.multiply.outer(ks, self.lengths)
        return np.cos(phase), np.sin(phase)

    def matrix(self, ks) -> np.ndarray:
        """Stacked system matrices, shape ``(len(ks), n_rows, 2E)``."""
        ks = np.atleast_1d(np.asarray(ks))
        return self._rows.assemble(*self._trig(ks), self.size)

    def contact_flux(self, ks) -> np.ndarray:
        """Rows mapping coefficients to (derivative sum / k) at each contact."""
        ks = np.atleast_1d(np.asarray(ks))
        return self._flux.assemble(*self._trig(ks), self.size)

    def contact_values(self, ks) -> np.ndarray:
        ks = np.atleast_1d(np.asarray(ks))
        return self._values.assemble(*self._trig(ks), self.size)

    def rhs(self) -> np.ndarray:
        """Right-hand sides prescribing unit value at one contact at a time."""
        b = np.zeros((self.n_rows, len(self.graph.contacts)))
        for j, r in enumerate(self.contact_rows):
            b[r, j] = 1.0
        return b


def row_normalized(a: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(a, axis=-1, keepdims=True)
    norms[norms == 0] = 1.0
    return a / norms
