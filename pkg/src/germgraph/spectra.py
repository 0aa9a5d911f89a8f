"""Eigenvalues of compact graphs and the visible/invisible split.

The direct spectrum comes from the closed vertex-condition system: its
determinant (real for real k, entire in k) changes sign at every eigenvalue
of odd multiplicity, and its smallest singular value touches zero at every
eigenvalue, which catches the even-multiplicity ones the sign scan misses.
Visible eigenvalues are zeros of ``det M(k)`` for the M-function at the
contact set; poles of ``M`` produce sign changes too and are rejected by
the size of ``|det M|`` at the converged point. Cells where a zero hides
next to a pole are found through the interior determinant and subdivided.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import brentq

from .graph import MetricGraph, ensure_valid
from .mfunction import GraphM, MEvaluator, SumM
from .system import EdgeSystem, row_normalized

NULLSPACE_CUTOFF = 1e-8
GRID_DENSITY = 32

VISIBLE, INVISIBLE, UNCLASSIFIED = "visible", "invisible", "unclassified"


@dataclass
class RootFindConfig:
    k_min: float
    k_max: float
    grid_points: int = 1024
    value_tol: float | None = None  # None: 1e-6 x median |f| on the grid
    merge_tol: float = 1e-9  # relative
    pole_value_threshold: float | None = None

    def __post_init__(self) -> None:
        if not 0 < self.k_min < self.k_max:
            raise ValueError("need 0 < k_min < k_max")
        if self.grid_points < 16:
            raise ValueError("grid_points must be at least 16")
        if self.merge_tol <= 0 or (self.value_tol is not None and self.value_tol <= 0):
            raise ValueError("tolerances must be positive")

    @classmethod
    def for_length(cls, total_length: float, k_max: float, k_min: float | None = None, **kw) -> RootFindConfig:
        """Grid with ``GRID_DENSITY`` points per mean eigenvalue spacing ``pi / L``."""
        spacing = math.pi / total_length
        k_min = 0.01 * spacing if k_min is None else k_min
        points = max(16, math.ceil(GRID_DENSITY * (k_max - k_min) / spacing) + 1)
        return cls(k_min, k_max, kw.pop("grid_points", points), **kw)

    def grid(self) -> np.ndarray:
        return np.linspace(self.k_min, self.k_max, self.grid_points)


class RootList(list):
    """Sorted roots; ``rejected`` counts pole-like sign changes, ``skipped`` unusable segments."""

    rejected: int = 0
    skipped: int = 0


def _merge(ks: Iterable[float], tol: float) -> list[float]:
    out: list[float] = []
    for k in sorted(ks):
        if out and abs(k - out[-1]) <= tol * max(abs(k), 1.0):
            continue
        out.append(k)
    return out


def find_roots(f: Callable, cfg: RootFindConfig, *, vectorized: bool = False) -> RootList:
    """Zeros of a real function with sign-change bracketing and pole rejection.

    ``f`` may return NaN where it is undefined; segments touching NaN are
    skipped. With ``vectorized`` the grid is evaluated in one call.
    """
    grid = cfg.grid()
    vals = np.asarray(f(grid) if vectorized else [f(k) for k in grid], dtype=float)
    scalar = (lambda k: float(np.asarray(f(np.array([k])))[0])) if vectorized else (lambda k: float(f(k)))
    finite = np.isfinite(vals)
    value_tol = cfg.value_tol
    if value_tol is None:
        value_tol = 1e-6 * float(np.median(np.abs(vals[finite]))) if finite.any() else 0.0

    out = RootList()
    found = [float(k) for k, v in zip(grid, vals) if v == 0.0]
    for i in range(len(grid) - 1):
        va, vb = vals[i], vals[i + 1]
        if not (finite[i] and finite[i + 1]):
            out.skipped += 1
            continue
        if va == 0.0 or vb == 0.0 or (va > 0) == (vb > 0):
            continue
        if cfg.pole_value_threshold is not None and max(abs(va), abs(vb)) > cfg.pole_value_threshold:
            out.rejected += 1
            continue
        a, b = grid[i], grid[i + 1]
        try:
            r = brentq(scalar, a, b, xtol=1e-12 * a, rtol=4 * np.finfo(float).eps)
        except ValueError:
            out.skipped += 1
            continue
        fr = scalar(r)
        if math.isfinite(fr) and abs(fr) < value_tol:
            found.append(float(r))
        else:
            out.rejected += 1
    out.extend(_merge(found, cfg.merge_tol))
    return out


@dataclass
class SpectrumEntry:
    k: float
    multiplicity: int = 1
    visibility: str = UNCLASSIFIED


@dataclass
class Spectrum:
    entries: list[SpectrumEntry] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def ks(self) -> np.ndarray:
        """Eigenvalues repeated according to multiplicity."""
        return np.array([e.k for e in self.entries for _ in range(e.multiplicity)])

    def count(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    def counting(self, k: float) -> int:
        return sum(e.multiplicity for e in self.entries if e.k <= k)

    def first(self, n: int) -> Spectrum:
        """Truncate to the first ``n`` eigenvalues counted with multiplicity."""
        out, left = [], n
        for e in self.entries:
            if left <= 0:
                break
            out.append(SpectrumEntry(e.k, min(e.multiplicity, left), e.visibility))
            left -= e.multiplicity
        return Spectrum(out, list(self.notes))

    def labeled(self, visibility: str) -> Spectrum:
        return Spectrum([SpectrumEntry(e.k, e.multiplicity, visibility) for e in self.entries], list(self.notes))


def _closed_system(graph: MetricGraph) -> EdgeSystem:
    ensure_valid_closed(graph)
    return EdgeSystem(graph, "closed")


def ensure_valid_closed(graph: MetricGraph) -> None:
    # contacts play no role in the closed problem
    ensure_valid(graph.with_contacts(()))


def _sv_ratio(sys: EdgeSystem, ks: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(sys.matrix(ks), compute_uv=False)
    return s[:, -1] / s[:, 0]


def _nullity(sys: EdgeSystem, k: float) -> int:
    s = np.linalg.svd(sys.matrix([k])[0], compute_uv=False)
    return int(np.sum(s < NULLSPACE_CUTOFF * s[0]))


def _golden_min(f: Callable[[float], float], a: float, b: float, rel_tol: float = 1e-14) -> float:
    # plain golden section: the minima here are V-shaped (|k - k*|), where
    # parabolic steps stall at sqrt(eps) relative accuracy
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > rel_tol * b:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def direct_spectrum(graph: MetricGraph, cfg: RootFindConfig) -> Spectrum:
    """Eigenvalues ``k > 0`` of the closed graph in ``[cfg.k_min, cfg.k_max]``."""
    sys = _closed_system(graph)
    grid = cfg.grid()
    mats = row_normalized(sys.matrix(grid))
    sign, _ = np.linalg.slogdet(mats)
    ratio = _sv_ratio(sys, grid)

    def det(k: float) -> float:
        return float(np.linalg.det(row_normalized(sys.matrix([k]))[0]))

    candidates = [float(k) for k, s in zip(grid, sign) if s == 0]
    for i in range(len(grid) - 1):
        if sign[i] * sign[i + 1] < 0:
            a, b = grid[i], grid[i + 1]
            candidates.append(brentq(det, a, b, xtol=1e-12 * a, rtol=4 * np.finfo(float).eps))
    # even-multiplicity eigenvalues: local minima of the singular-value ratio
    for i in range(1, len(grid) - 1):
        if ratio[i] <= ratio[i - 1] and ratio[i] <= ratio[i + 1]:
            k = _golden_min(lambda x: float(_sv_ratio(sys, np.array([x]))[0]), grid[i - 1], grid[i + 1])
            if _sv_ratio(sys, np.array([k]))[0] < NULLSPACE_CUTOFF:
                candidates.append(float(k))

    entries = []
    for k in _merge(candidates, cfg.merge_tol):
        if cfg.k_min <= k <= cfg.k_max:
            entries.append(SpectrumEntry(float(k), max(1, _nullity(sys, k))))
    return Spectrum(entries)


def first_eigenvalues(graph: MetricGraph, n: int, **kw) -> Spectrum:
    """The first ``n`` positive eigenvalues (with multiplicity)."""
    ensure_valid_closed(graph)
    length = graph.total_length
    slack = len(graph.vertices) + len(graph.edges)
    k_max = math.pi * (n + slack + 1) / length
    while True:
        spec = direct_spectrum(graph, RootFindConfig.for_length(length, k_max, **kw))
        if spec.count() >= n:
            return spec.first(n)
        k_max *= 1.5


def _as_evaluator(part) -> MEvaluator:
    return GraphM(part) if isinstance(part, MetricGraph) else part


def secular_value(parts, k) -> complex:
    """``det(sum of M)`` at ``k``; NaN at poles."""
    ev = SumM([_as_evaluator(p) for p in parts])
    batch = ev.many([k])
    if batch.pole[0]:
        return complex(np.nan)
    return complex(np.linalg.det(batch.m[0]))


def _secular_values(ev: MEvaluator, ks: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """``det M`` on ``ks`` (NaN at flagged poles) and the interior determinant sign."""
    batch = ev.many(ks)
    with np.errstate(invalid="ignore"):
        vals = np.linalg.det(batch.m).real
    vals[batch.pole] = np.nan
    return vals, batch.pole_sign


SUBDIVISIONS = 8
MAX_REFINE_DEPTH = 10


def _secular_roots(ev: MEvaluator, cfg: RootFindConfig) -> RootList:
    """Zeros of ``det M`` with cells refined until poles and zeros are separated.

    A zero of ``M`` can sit arbitrarily close to a pole, and a grid cell holding
    both shows no net sign change. The interior determinant flips sign at
    every simple pole, so a cell where it flips while ``det M`` does not (or
    where the bracketed point turns out to be a pole) is subdivided.
    """
    grid = cfg.grid()
    vals, signs = _secular_values(ev, grid)
    finite = np.isfinite(vals)
    value_tol = cfg.value_tol
    if value_tol is None:
        value_tol = 1e-6 * float(np.median(np.abs(vals[finite]))) if finite.any() else 0.0

    def scalar(k: float) -> float:
        return float(_secular_values(ev, np.array([k]))[0][0])

    out = RootList()
    found = [float(k) for k, v in zip(grid, vals) if v == 0.0]
    # cells as (a, b, fa, fb, sa, sb, depth); processed in order of k
    stack = [
        (grid[i], grid[i + 1], vals[i], vals[i + 1], None if signs is None else signs[i], None if signs is None else signs[i + 1], 0)
        for i in range(len(grid) - 1)
    ][::-1]
    while stack:
        a, b, fa, fb, sa, sb, depth = stack.pop()
        if not (math.isfinite(fa) and math.isfinite(fb)):
            out.skipped += 1
            continue
        f_flip = fa * fb < 0
        pole_flip = sa is not None and sa * sb < 0
        hidden = pole_flip and not f_flip
        if f_flip:
            try:
                r = brentq(scalar, a, b, xtol=1e-12 * a, rtol=4 * np.finfo(float).eps)
                fr = scalar(r)
            except ValueError:  # landed on a flagged pole
                fr = math.nan
            if math.isfinite(fr) and abs(fr) < value_tol:
                found.append(float(r))
                continue
            hidden = not pole_flip
            if not hidden:
                out.rejected += 1
        if hidden and depth < MAX_REFINE_DEPTH:
            ks = np.linspace(a, b, SUBDIVISIONS + 1)
            fv, sv = _secular_values(ev, ks[1:-1])
            fv = np.concatenate([[fa], fv, [fb]])
            sv = None if sv is None else np.concatenate([[sa], sv, [sb]])
            found.extend(float(k) for k, v in zip(ks[1:-1], fv[1:-1]) if v == 0.0)
            for j in range(SUBDIVISIONS - 1, -1, -1):
                stack.append((ks[j], ks[j + 1], fv[j], fv[j + 1], None if sv is None else sv[j], None if sv is None else sv[j + 1], depth + 1))
        elif hidden and f_flip:
            out.rejected += 1
    out.extend(_merge(found, cfg.merge_tol))
    return out


def visible_spectrum(germ_m, attach_m=None, cfg: RootFindConfig | None = None) -> Spectrum:
    """Zeros of ``det(M_germ + M_attach)``; either part may be a graph or an evaluator.

    Multiplicity is the nullity of the summed M-matrix at the root.
    """
    if cfg is None:
        raise ValueError("a RootFindConfig is required")
    parts = [_as_evaluator(germ_m)] + ([_as_evaluator(attach_m)] if attach_m is not None else [])
    ev = parts[0] if len(parts) == 1 else SumM(parts)
    roots = _secular_roots(ev, cfg)
    entries = []
    for k in roots:
        m = ev.many([k]).m[0]
        s = np.linalg.svd(m, compute_uv=False)
        mult = int(np.sum(s < 1e-6 * max(1.0, abs(k))))
        entries.append(SpectrumEntry(float(k), max(1, mult), VISIBLE))
    return Spectrum(entries)


def multiset_difference(full: Spectrum, part: Spectrum, tol: float) -> tuple[Spectrum, list[str]]:
    """``full - part`` with multiplicities; returns the rest and discrepancy notes."""
    remaining = {i: e.multiplicity for i, e in enumerate(full.entries)}
    notes = []
    for p in part.entries:
        match = [i for i, e in enumerate(full.entries) if abs(e.k - p.k) <= tol * max(1.0, p.k)]
        if not match:
            notes.append(f"visible eigenvalue {p.k!r} not found in the direct spectrum")
            continue
        i = min(match, key=lambda j: abs(full.entries[j].k - p.k))
        take = min(p.multiplicity, remaining[i])
        if take < p.multiplicity:
            notes.append(f"multiplicity at {p.k!r} exceeds the direct multiplicity")
        remaining[i] -= take
    rest = [SpectrumEntry(e.k, remaining[i], e.visibility) for i, e in enumerate(full.entries) if remaining[i] > 0]
    return Spectrum(rest), notes


def classify_spectrum(graph: MetricGraph, cfg: RootFindConfig, match_tol: float = 1e-8) -> tuple[Spectrum, Spectrum, Spectrum]:
    """Direct, visible and invisible spectra of a graph with respect to its contacts."""
    if not graph.contacts:
        raise ValueError("graph has no contact vertices")
    direct = direct_spectrum(graph, cfg)
    visible = visible_spectrum(graph, None, cfg)
    invisible, notes = multiset_difference(direct, visible, match_tol)
    invisible = invisible.labeled(INVISIBLE)
    invisible.notes.extend(notes)
    return direct, visible, invisible


def invisible_spectrum(graph: MetricGraph, cfg: RootFindConfig) -> Spectrum:
    return classify_spectrum(graph, cfg)[2]


@dataclass
class ComparisonReport:
    matched: list[tuple[float, float, float]] = field(default_factory=list)
    unmatched_first: list[float] = field(default_factory=list)
    unmatched_second: list[float] = field(default_factory=list)
    multiplicity_mismatches: list[tuple[float, int, int]] = field(default_factory=list)
    tolerance: float = 1e-8

    @property
    def isospectral(self) -> bool:
        return not (self.unmatched_first or self.unmatched_second or self.multiplicity_mismatches)

    @property
    def max_residual(self) -> float:
        return max((r for _, _, r in self.matched), default=0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = "isospectral" if self.isospectral else "not isospectral"
        d["max_residual"] = self.max_residual
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def compare_spectra(s1: Spectrum, s2: Spectrum, tol: float = 1e-8) -> ComparisonReport:
    """Pair eigenvalues within relative ``tol`` and compare multiplicities."""
    report = ComparisonReport(tolerance=tol)
    a, b = s1.entries, s2.entries
    i = j = 0
    while i < len(a) and j < len(b):
        ka, kb = a[i].k, b[j].k
        rel = abs(ka - kb) / max(abs(ka), abs(kb))
        if rel <= tol:
            report.matched.append((ka, kb, rel))
            if a[i].multiplicity != b[j].multiplicity:
                report.multiplicity_mismatches.append((ka, a[i].multiplicity, b[j].multiplicity))
            i += 1
            j += 1
        elif ka < kb:
            report.unmatched_first.append(ka)
            i += 1
        else:
            report.unmatched_second.append(kb)
            j += 1
    report.unmatched_first.extend(e.k for e in a[i:])
    report.unmatched_second.extend(e.k for e in b[j:])
    return report
