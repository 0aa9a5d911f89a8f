"""Titchmarsh-Weyl M-functions of compact graphs.

``M(k)`` maps prescribed values at the contact vertices to the sums of
normal derivatives there, for solutions of ``-u'' = k^2 u`` satisfying the
vertex conditions elsewhere. Normal derivatives point into the graph, so an
interval of length ``a`` with a Neumann far end has ``M = k tan(ka)``.

Evaluators come in two flavours sharing one interface: :class:`GraphM`
solves the vertex-condition system of an arbitrary graph, while
:class:`IntervalM`, :class:`StarM` and :class:`GermM` hard-code closed
forms. Every evaluator maps a 1-d array of wavenumbers to an :class:`MBatch`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import MetricGraph, ensure_valid
from .system import EdgeSystem, row_normalized

COND_LIMIT = 1e12
POLE_TOL = 1e-12
RESIDUAL_TOL = 1e-9


class MFunctionError(ValueError):
    pass


@dataclass
class MFunctionValue:
    """M-matrix at one wavenumber.

    When ``pole_flag`` is set ``m`` is NaN and, if available,
    ``boundary_pair = (X, Y)`` spans the limiting relation
    ``{(X c, Y c)}`` between contact values and derivative sums.
    """

    m: np.ndarray
    k: complex
    condition_estimate: float = 1.0
    pole_flag: bool = False
    boundary_pair: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def size(self) -> int:
        return self.m.shape[0]

    @property
    def scalar(self) -> complex:
        return complex(self.m[0, 0])


@dataclass
class MBatch:
    k: np.ndarray
    m: np.ndarray  # (N, n, n) complex
    condition: np.ndarray
    pole: np.ndarray
    pairs: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    # sign of the interior determinant (real k only); it flips at simple poles of M
    pole_sign: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.k)

    def __getitem__(self, i: int) -> MFunctionValue:
        return MFunctionValue(
            self.m[i].copy(), self.k[i], float(self.condition[i]), bool(self.pole[i]), self.pairs.get(i)
        )


def _as_k(ks) -> np.ndarray:
    ks = np.atleast_1d(np.asarray(ks))
    if ks.ndim != 1:
        raise MFunctionError("wavenumbers must be a scalar or 1-d array")
    if np.any(ks == 0):
        raise MFunctionError("k = 0 is excluded from evaluation")
    if np.iscomplexobj(ks) and not np.any(ks.imag):
        ks = ks.real
    return ks


class MEvaluator:
    """Common interface: ``many(ks) -> MBatch`` and ``ev(k) -> MFunctionValue``."""

    size: int = 1

    def many(self, ks) -> MBatch:  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, k) -> MFunctionValue:
        return self.many([k])[0]

    def __add__(self, other: MEvaluator) -> SumM:
        return SumM([self, other])


class GraphM(MEvaluator):
    """General evaluator: solves the vertex-condition system once per contact."""

    def __init__(self, graph: MetricGraph):
        ensure_valid(graph)
        if not graph.contacts:
            raise MFunctionError("graph has no contact vertices")
        self.graph = graph
        self.size = len(graph.contacts)
        self._system = EdgeSystem(graph, "prescribe_contacts")
        self._free: EdgeSystem | None = None

    def many(self, ks) -> MBatch:
        ks = _as_k(ks)
        sys = self._system
        a = sys.matrix(ks)
        b = sys.rhs()
        flux = sys.contact_flux(ks)
        n = len(ks)
        cond = np.linalg.cond(a)
        cond = np.where(np.isfinite(cond), cond, np.inf)
        x = np.empty((n, sys.size, self.size), dtype=a.dtype)
        pole = np.zeros(n, dtype=bool)
        pairs: dict[int, tuple[np.ndarray, np.ndarray]] = {}

        good = cond < COND_LIMIT
        if good.any():
            x[good] = np.linalg.solve(a[good], np.broadcast_to(b, (int(good.sum()),) + b.shape))
            # defer points failing the residual check to the least-squares path
            res = np.abs(a[good] @ x[good] - b).max(axis=(1, 2))
            scale = np.maximum(1.0, np.abs(x[good]).max(axis=(1, 2)))
            bad_res = np.flatnonzero(good)[res > RESIDUAL_TOL * scale]
            good[bad_res] = False
        for i in np.flatnonzero(~good):
            xi, *_ = np.linalg.lstsq(a[i], b, rcond=None)
            res = np.abs(a[i] @ xi - b).max()
            if res > RESIDUAL_TOL * max(1.0, np.abs(xi).max()):
                pole[i] = True
                x[i] = np.nan
                pairs[i] = self._boundary_pair(ks[i])
            else:
                x[i] = xi
        m = ks[:, None, None] * (flux @ x)
        sign = None if np.iscomplexobj(ks) else np.linalg.slogdet(row_normalized(a))[0]
        return MBatch(ks, m.astype(complex), cond, pole, pairs, sign)

    def _boundary_pair(self, k) -> tuple[np.ndarray, np.ndarray]:
        if self._free is None:
            self._free = EdgeSystem(self.graph, "free_contacts")
        r = self._free.matrix([k])[0]
        _, s, vh = np.linalg.svd(r)
        rank = int(np.sum(s > 1e-9 * s[0])) if s.size else 0
        null = vh[rank:].conj().T
        vals = self._free.contact_values([k])[0] @ null
        flux = k * (self._free.contact_flux([k])[0] @ null)
        u, _, _ = np.linalg.svd(np.vstack([vals, flux]))
        basis = u[:, : self.size]
        return basis[: self.size].astype(complex), basis[self.size :].astype(complex)


class _ScalarClosedForm(MEvaluator):
    size = 1

    def _parts(self, ks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def many(self, ks) -> MBatch:
        ks = _as_k(ks)
        num, den = self._parts(ks)
        pole = np.abs(den) < POLE_TOL
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.where(pole, np.nan, num / np.where(pole, 1.0, den))
            cond = 1.0 / np.abs(den)
        pairs = {int(i): (np.zeros((1, 1), complex), np.ones((1, 1), complex)) for i in np.flatnonzero(pole)}
        sign = None if np.iscomplexobj(den) else np.sign(den)
        return MBatch(ks, m.astype(complex).reshape(-1, 1, 1), cond, pole, pairs, sign)


class IntervalM(_ScalarClosedForm):
    """``k tan(ka)`` (Neumann far end) or ``-k cot(ka)`` (Dirichlet far end)."""

    def __init__(self, a: float, far: str = "N"):
        if not a > 0:
            raise MFunctionError("interval length must be positive")
        if far not in ("N", "D"):
            raise MFunctionError("far end must be 'N' or 'D'")
        self.a, self.far = a, far

    def _parts(self, ks):
        c, s = np.cos(ks * self.a), np.sin(ks * self.a)
        return (ks * s, c) if self.far == "N" else (-ks * c, s)


class StarM(_ScalarClosedForm):
    """Three-edge star seen from the free end of ``d``.

    ``k (tb + tc + td) / (1 - td (tb + tc))`` with ``t = tan``, multiplied
    through by ``cos kb cos kc cos kd`` so that poles of the individual
    tangents are not spurious poles of the star.
    """

    def __init__(self, b: float, c: float, d: float):
        if min(b, c, d) <= 0:
            raise MFunctionError("star edge lengths must be positive")
        self.b, self.c, self.d = b, c, d

    def _parts(self, ks):
        cb, sb = np.cos(ks * self.b), np.sin(ks * self.b)
        cc, sc = np.cos(ks * self.c), np.sin(ks * self.c)
        cd, sd = np.cos(ks * self.d), np.sin(ks * self.d)
        num = ks * (sb * cc * cd + cb * sc * cd + cb * cc * sd)
        den = cb * cc * cd - sd * (sb * cc + cb * sc)
        return num, den


class GermM(_ScalarClosedForm):
    """Germ seen from either contact: ``2k (2 - 3 s^2) s / ((1 - 3 s^2) c)``, ``s, c = sin, cos(k ell)``."""

    def __init__(self, ell: float):
        if not ell > 0:
            raise MFunctionError("germ edge length must be positive")
        self.ell = ell

    def _parts(self, ks):
        s, c = np.sin(ks * self.ell), np.cos(ks * self.ell)
        return 2 * ks * (2 - 3 * s**2) * s, (1 - 3 * s**2) * c


class SumM(MEvaluator):
    """M-function of parts glued at their (equally ordered) contacts."""

    def __init__(self, parts: Iterable[MEvaluator]):
        self.parts = list(parts)
        if not self.parts:
            raise MFunctionError("empty sum")
        sizes = {p.size for p in self.parts}
        if len(sizes) != 1:
            raise MFunctionError(f"M-functions of different sizes: {sorted(sizes)}")
        self.size = sizes.pop()

    def many(self, ks) -> MBatch:
        return _sum_batches([p.many(ks) for p in self.parts])


def _sum_batches(batches: Sequence[MBatch]) -> MBatch:
    first = batches[0]
    m = sum(b.m for b in batches)
    pole = np.logical_or.reduce([b.pole for b in batches])
    cond = np.maximum.reduce([b.condition for b in batches])
    pairs = {}
    for i in np.flatnonzero(pole):
        pair = _sum_pair([b[i] for b in batches])
        if pair is not None:
            pairs[int(i)] = pair
    signs = [b.pole_sign for b in batches]
    sign = None if any(x is None for x in signs) else np.multiply.reduce(signs)
    return MBatch(first.k, m, cond, pole, pairs, sign)


def _sum_pair(values: Sequence[MFunctionValue]) -> tuple[np.ndarray, np.ndarray] | None:
    flagged = [v for v in values if v.pole_flag]
    n = values[0].size
    if n == 1:
        return np.zeros((1, 1), complex), np.ones((1, 1), complex)
    if len(flagged) != 1 or flagged[0].boundary_pair is None:
        return None
    x, y = flagged[0].boundary_pair
    finite = sum((v.m for v in values if not v.pole_flag), np.zeros((n, n), complex))
    return x, y + finite @ x


# -- value-level API ---------------------------------------------------------


def eval_m(graph: MetricGraph, k) -> MFunctionValue:
    return GraphM(graph)(k)


def eval_m_many(graph: MetricGraph, ks) -> MBatch:
    return GraphM(graph).many(ks)


def m_interval(a: float, far: str, k) -> MFunctionValue:
    return IntervalM(a, far)(k)


def m_star(b: float, c: float, d: float, k) -> MFunctionValue:
    return StarM(b, c, d)(k)


def m_germ(ell: float, k) -> MFunctionValue:
    return GermM(ell)(k)


def m_sum(values: Sequence[MFunctionValue]) -> MFunctionValue:
    """Entrywise sum; contact orderings must already agree."""
    if not values:
        raise MFunctionError("empty sum")
    if len({v.size for v in values}) != 1:
        raise MFunctionError("M-functions of different sizes")
    pole = any(v.pole_flag for v in values)
    m = sum((v.m for v in values), np.zeros_like(values[0].m, dtype=complex))
    return MFunctionValue(
        m,
        values[0].k,
        max(v.condition_estimate for v in values),
        pole,
        _sum_pair(values) if pole else None,
    )


def wigner_k(value: MFunctionValue, k=None) -> np.ndarray:
    """Wigner reaction matrix ``K = -M / k``."""
    k = value.k if k is None else k
    if k == 0:
        raise MFunctionError("k = 0 is excluded")
    return -value.m / k
