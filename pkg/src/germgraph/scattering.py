"""Scattering matrices of compact graphs with leads at the contacts.

``S(k) = (ik I - M(k)) (ik I + M(k))^{-1}``. Absorption in the cables is
modelled by evaluating at ``k + i beta sqrt(k)``; in the default
``uniform`` mode the shifted wavenumber is used everywhere, in ``m-only``
mode only inside ``M`` while the ``ik`` terms keep the real wavenumber.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import MetricGraph
from .mfunction import GraphM, MBatch, MEvaluator, MFunctionValue

SPEED_OF_LIGHT = 299_792_458.0
DISSIPATION_MODES = ("uniform", "m-only")
THREADS_ENV = "GERMGRAPH_THREADS"


class ScatteringError(ArithmeticError):
    def __init__(self, message: str, condition: float):
        self.condition = condition
        super().__init__(f"{message} (condition estimate {condition:.3g})")


@dataclass(frozen=True)
class DissipationModel:
    beta: float = 0.0

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.beta > 0.1:
            warnings.warn(f"beta={self.beta} is not small; the substitution assumes beta << 1", stacklevel=2)


@dataclass
class SMatrixValue:
    s: np.ndarray
    k: complex


def freq_to_k(nu_ghz):
    """Vacuum wavenumber (rad/m) for a frequency in GHz."""
    nu = np.asarray(nu_ghz, dtype=float)
    if np.any(nu <= 0):
        raise ValueError("frequency must be positive")
    k = 2 * math.pi * nu * 1e9 / SPEED_OF_LIGHT
    return float(k) if k.ndim == 0 else k


def dissipative_wavenumber(k, model: DissipationModel | float):
    """``k + i beta sqrt(k)`` for real ``k > 0``."""
    beta = model.beta if isinstance(model, DissipationModel) else float(model)
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("k must be positive")
    out = k + 1j * beta * np.sqrt(k) if beta else k.copy()
    return out.item() if out.ndim == 0 else out


def _s_matrix(ik: complex, m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    eye = np.eye(n)
    den = ik * eye + m
    cond = np.linalg.cond(den)
    if not np.isfinite(cond) or cond > 1e14:
        raise ScatteringError("ikI + M is numerically singular", float(cond))
    # S = (ikI - M) den^{-1}  <=>  den^T S^T = (ikI - M)^T
    return np.linalg.solve(den.T, (ik * eye - m).T).T


def _s_from_pair(ik: complex, pair: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    x, y = pair
    den = ik * x + y
    cond = np.linalg.cond(den)
    if not np.isfinite(cond) or cond > 1e14:
        raise ScatteringError("boundary relation is degenerate", float(cond))
    return np.linalg.solve(den.T, (ik * x - y).T).T


def s_from_m(value: MFunctionValue, k=None) -> SMatrixValue:
    """Scattering matrix from an M-function value.

    ``k`` defaults to the wavenumber ``value`` was evaluated at. At a pole of
    ``M`` the limiting boundary relation is used; without one a scalar pole
    gives ``S = -1``.
    """
    k = value.k if k is None else k
    if k == 0:
        raise ValueError("k = 0 is excluded")
    ik = 1j * k
    if value.pole_flag:
        if value.boundary_pair is not None:
            return SMatrixValue(_s_from_pair(ik, value.boundary_pair), k)
        if value.size == 1:
            return SMatrixValue(-np.ones((1, 1), complex), k)
        raise ScatteringError("pole without a boundary relation", math.inf)
    return SMatrixValue(_s_matrix(ik, value.m), k)


def m_from_s(s: np.ndarray, k) -> np.ndarray:
    """Inverse Cayley transform ``M = ik (I - S)(I + S)^{-1}``."""
    eye = np.eye(s.shape[0])
    return 1j * k * np.linalg.solve((eye + s).T, (eye - s).T).T


def s_batch(batch: MBatch, ik: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scattering matrices for a batch; returns ``(s, failed)``."""
    n = len(batch)
    size = batch.m.shape[1]
    s = np.full((n, size, size), np.nan + 0j)
    failed = np.zeros(n, dtype=bool)
    eye = np.eye(size)
    ok = ~batch.pole
    if ok.any():
        den = ik[ok, None, None] * eye + batch.m[ok]
        num = ik[ok, None, None] * eye - batch.m[ok]
        cond = np.linalg.cond(den)
        fine = np.isfinite(cond) & (cond < 1e14)
        idx = np.flatnonzero(ok)
        if fine.any():
            s[idx[fine]] = np.swapaxes(
                np.linalg.solve(np.swapaxes(den[fine], 1, 2), np.swapaxes(num[fine], 1, 2)), 1, 2
            )
        failed[idx[~fine]] = True
    for i in np.flatnonzero(batch.pole):
        pair = batch.pairs.get(int(i))
        try:
            if pair is not None:
                s[i] = _s_from_pair(ik[i], pair)
            elif size == 1:
                s[i] = -1.0
            else:
                failed[i] = True
        except ScatteringError:
            failed[i] = True
    return s, failed


def principal_phase(z: np.ndarray) -> np.ndarray:
    """Argument in ``(-pi, pi]``."""
    phi = np.angle(z)
    return np.where(phi <= -math.pi, math.pi, phi)


@dataclass
class ScatterTrace:
    nu: np.ndarray  # GHz, strictly increasing
    k: np.ndarray  # wavenumber used in M (complex under dissipation)
    s: np.ndarray  # (N, n, n)
    failed: np.ndarray
    pole: np.ndarray
    beta: float = 0.0
    mode: str = "uniform"
    notes: list[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.s.shape[1]

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.s)

    @property
    def phase(self) -> np.ndarray:
        return principal_phase(self.s)

    @property
    def phase_unwrapped(self) -> np.ndarray:
        phase = self.phase
        out = np.empty_like(phase)
        for i in range(self.size):
            for j in range(self.size):
                column = phase[:, i, j]
                good = np.isfinite(column)
                out[:, i, j] = np.nan
                out[good, i, j] = np.unwrap(column[good])
        return out

    def unitarity_defect(self) -> np.ndarray:
        """``max |S S^dagger - I|`` per point."""
        eye = np.eye(self.size)
        prod = self.s @ np.conj(np.swapaxes(self.s, 1, 2))
        return np.abs(prod - eye).max(axis=(1, 2))


def _default_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return 1


def scan(
    source: MetricGraph | MEvaluator,
    nu_range: tuple[float, float],
    n_points: int = 4000,
    model: DissipationModel | float = 0.0,
    *,
    mode: str = "uniform",
    workers: int | None = None,
    chunk: int = 512,
) -> ScatterTrace:
    """Scattering trace on a uniform frequency grid.

    ``source`` is a graph (general solver) or any M evaluator. Chunks run
    in parallel when ``workers > 1``; output order is always by frequency.
    """
    if mode not in DISSIPATION_MODES:
        raise ValueError(f"dissipation mode must be one of {DISSIPATION_MODES}")
    if n_points < 2:
        raise ValueError("need at least two points")
    lo, hi = map(float, nu_range)
    if not 0 < lo < hi:
        raise ValueError("frequency range must satisfy 0 < start < stop")
    model = model if isinstance(model, DissipationModel) else DissipationModel(float(model))
    evaluator = GraphM(source) if isinstance(source, MetricGraph) else source

    nu = np.linspace(lo, hi, n_points)
    k_real = freq_to_k(nu)
    k_eff = dissipative_wavenumber(k_real, model)
    ik = 1j * (k_eff if mode == "uniform" else k_real)

    def run(sl: slice):
        batch = evaluator.many(k_eff[sl])
        s, failed = s_batch(batch, ik[sl])
        return s, failed, batch.pole

    slices = [slice(i, min(i + chunk, n_points)) for i in range(0, n_points, chunk)]
    workers = workers or _default_workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, slices))
    else:
        parts = [run(sl) for sl in slices]
    s = np.concatenate([p[0] for p in parts])
    failed = np.concatenate([p[1] for p in parts])
    pole = np.concatenate([p[2] for p in parts])
    trace = ScatterTrace(nu, np.asarray(k_eff), s, failed, pole, model.beta, mode)
    if failed.all():
        raise ScatteringError("every grid point failed", math.inf)
    if failed.any():
        trace.notes.append(f"{int(failed.sum())} point(s) failed and are stored as NaN")
    return trace
