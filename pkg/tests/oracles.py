"""Reference computations that share no code with the package.

Kept deliberately naive: exponential edge basis instead of cos/sin, scalar
Python loops, plain bisection.
"""
from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np

from germgraph.graph import Condition, MetricGraph


def bisect(f, a: float, b: float, tol: float = 1e-15) -> float:
    fa = f(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0 or b - a < tol * max(1.0, abs(m)):
            return m
        if (fa < 0) == (fm < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def grid_roots(f, lo: float, hi: float, n: int = 20000, max_jump: float = 1.0) -> list[float]:
    """Sign changes of ``f`` on a fine grid, refined by bisection; jumps larger than ``max_jump`` are poles."""
    xs = np.linspace(lo, hi, n)
    ys = [f(x) for x in xs]
    roots = []
    for i in range(n - 1):
        if ys[i] == 0:
            roots.append(float(xs[i]))
        elif ys[i] * ys[i + 1] < 0 and abs(ys[i] - ys[i + 1]) < max_jump:
            roots.append(bisect(f, float(xs[i]), float(xs[i + 1])))
    return roots


def _endpoint_rows(graph: MetricGraph, k: float):
    """Per vertex: list of (value row, outgoing-derivative/ik row) in the exponential basis."""
    n = 2 * len(graph.edges)
    ends: dict[str, list[tuple[np.ndarray, np.ndarray]]] = {v.id: [] for v in graph.vertices}
    for j, e in enumerate(graph.edges):
        ep, em = cmath.exp(1j * k * e.length), cmath.exp(-1j * k * e.length)
        val0, der0 = np.zeros(n, complex), np.zeros(n, complex)
        val0[2 * j], val0[2 * j + 1] = 1, 1
        der0[2 * j], der0[2 * j + 1] = 1, -1
        val1, der1 = np.zeros(n, complex), np.zeros(n, complex)
        val1[2 * j], val1[2 * j + 1] = ep, em
        der1[2 * j], der1[2 * j + 1] = -ep, em
        ends[e.start].append((val0, der0))
        ends[e.end].append((val1, der1))
    return ends


def closed_matrix(graph: MetricGraph, k: float, pin_contacts: bool = False) -> np.ndarray:
    rows = []
    ends = _endpoint_rows(graph, k)
    for v in graph.vertices:
        eps = ends[v.id]
        if v.condition == Condition.DIRICHLET:
            rows += [val for val, _ in eps]
            continue
        rows += [eps[0][0] - other for other, _ in eps[1:]]
        rows.append(sum(der for _, der in eps))
        if pin_contacts and v.id in graph.contacts:
            rows.append(eps[0][0])
    a = np.array(rows)
    return a / np.linalg.norm(a, axis=1, keepdims=True)


def nullity(graph: MetricGraph, k: float, pin_contacts: bool = False, cutoff: float = 1e-7) -> int:
    s = np.linalg.svd(closed_matrix(graph, k, pin_contacts), compute_uv=False)
    return int(np.sum(s < cutoff * s[0])) + max(0, 2 * len(graph.edges) - len(s))


def germ_m_mp(ell, k, dps: int = 50):
    """Germ closed form at high precision."""
    with mpmath.workdps(dps):
        k, ell = mpmath.mpf(k), mpmath.mpf(ell)
        s, c = mpmath.sin(k * ell), mpmath.cos(k * ell)
        return 2 * k * (2 - 3 * s**2) * s / ((1 - 3 * s**2) * c)


def star_m_mp(b, c, d, k, dps: int = 50):
    with mpmath.workdps(dps):
        k = mpmath.mpf(k)
        tb, tc, td = (mpmath.tan(k * mpmath.mpf(x)) for x in (b, c, d))
        return k * (tb + tc + td) / (1 - td * (tb + tc))


def hz_to_k(nu_ghz: float) -> float:
    return 2 * math.pi * nu_ghz * 1e9 / 299792458.0
