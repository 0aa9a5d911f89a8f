"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is echoed in the terminal summary.
Run alone with ``pytest tests/test_acceptance.py -m acceptance``.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from conftest import random_graph, record_criterion
from germgraph import cli
from germgraph.catalog import (
    GERM_CONTACTS,
    GERM_NETWORK,
    GERM_STAR_NETWORK,
    germ,
    germ_plus_interval,
    germ_plus_star,
    interval,
    star,
)
from germgraph.graph import glue
from germgraph.mfunction import GermM, GraphM, IntervalM, StarM
from germgraph.scattering import SPEED_OF_LIGHT, freq_to_k, scan
from germgraph.spectra import (
    RootFindConfig,
    classify_spectrum,
    compare_spectra,
    find_roots,
    first_eigenvalues,
    visible_spectrum,
)
from oracles import grid_roots

pytestmark = pytest.mark.acceptance
PI = math.pi


def _pole_free(evaluator, n, length, seed, margin):
    rng = np.random.default_rng(seed)
    out: list[float] = []
    while len(out) < n:
        ks = rng.uniform(0.05, 20.0, size=2 * n) / length
        _, den = evaluator._parts(ks)
        out.extend(ks[np.abs(den) > margin].tolist())
    return np.array(out[:n])


def test_criterion_01_germ_isoscattering():
    ell = GERM_NETWORK.ell
    start = time.perf_counter()
    ks = _pole_free(GermM(ell), 10_000, ell, seed=1, margin=1e-3)
    closed = {c: GermM(ell).many(ks).m[:, 0, 0] for c in GERM_CONTACTS}
    general = {c: GraphM(germ(ell, c)).many(ks).m[:, 0, 0] for c in GERM_CONTACTS}
    elapsed = time.perf_counter() - start
    scale = 1 + np.abs(closed["v2"])
    worst = max(
        float(np.max(np.abs(closed["v2"] - closed["v4"]) / scale)),
        float(np.max(np.abs(general["v2"] - general["v4"]) / scale)),
        float(np.max(np.abs(general["v2"] - closed["v2"]) / scale)),
    )
    ok = worst <= 1e-10 and elapsed <= 10.0
    record_criterion(1, ok, f"max scaled |dM| = {worst:.2e} over 1e4 samples in {elapsed:.2f} s")
    assert ok


def test_criterion_02_general_solver_matches_closed_forms():
    b, c, d = GERM_STAR_NETWORK.star
    cases = {
        "interval_N": (IntervalM(0.6, "N"), interval(0.6, "N"), 0.6),
        "interval_D": (IntervalM(0.6, "D"), interval(0.6, "D"), 0.6),
        "star": (StarM(b, c, d), star(b, c, d), c),
        "germ": (GermM(0.75), germ(0.75), 0.75),
    }
    worst = {}
    for seed, (name, (closed, graph, length)) in enumerate(cases.items()):
        ks = _pole_free(closed, 1000, length, seed=10 + seed, margin=1e-3)
        ref = closed.many(ks).m[:, 0, 0]
        got = GraphM(graph).many(ks).m[:, 0, 0]
        worst[name] = float(np.max(np.abs(got - ref) / (1 + np.abs(ref))))
    ok = max(worst.values()) <= 1e-9
    record_criterion(2, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


def test_criterion_03_gluing_additivity():
    rng = np.random.default_rng(3)
    worst = 0.0
    for pair in range(50):
        n = 1 + pair % 2
        a = random_graph(rng, contacts=n, n_vertices=int(rng.integers(n + 1, 6)), dirichlet=True, prefix="a")
        b = random_graph(rng, contacts=n, n_vertices=int(rng.integers(n + 1, 6)), dirichlet=True, prefix="b")
        ks = rng.uniform(0.3, 12.0, size=4)
        ma, mb, mg = (GraphM(g).many(ks) for g in (a, b, glue(a, b)))
        keep = ~(ma.pole | mb.pole | mg.pole)
        lhs, rhs = mg.m[keep], ma.m[keep] + mb.m[keep]
        scale = np.maximum(1.0, np.abs(rhs).max(axis=(1, 2)))
        worst = max(worst, float((np.abs(lhs - rhs).max(axis=(1, 2)) / scale).max()))
    ok = worst <= 1e-9
    record_criterion(3, ok, f"50 random pairs, max relative deviation {worst:.2e}")
    assert ok


def test_criterion_04_unitarity():
    net = GERM_STAR_NETWORK
    sources = {
        "germ network": (germ(GERM_NETWORK.ell), GERM_NETWORK.nu_range),
        "germ+star network": (germ_plus_star(net.ell, *net.star), net.nu_range),
        "germ closed form": (GermM(GERM_NETWORK.ell), GERM_NETWORK.nu_range),
        "germ+star closed form": (GermM(net.ell) + StarM(*net.star), net.nu_range),
    }
    worst = 0.0
    for source, nu in sources.values():
        trace = scan(source, nu, 4000, 0.0)
        worst = max(worst, float(trace.unitarity_defect()[~trace.failed].max()))
    ok = worst <= 1e-10
    record_criterion(4, ok, f"max |S S^H - I| = {worst:.2e} over four 4000-point scans")
    assert ok


def test_criterion_05_isospectral_attachments():
    start = time.perf_counter()
    worst, verdicts = 0.0, []
    for far in ("N", "D"):
        s2 = first_eigenvalues(germ_plus_interval(1.0, 0.33, far, "v2"), 20)
        s4 = first_eigenvalues(germ_plus_interval(1.0, 0.33, far, "v4"), 20)
        report = compare_spectra(s2, s4, 1e-8)
        verdicts.append(report.isospectral and s2.count() == 20)
        worst = max(worst, report.max_residual)
    elapsed = time.perf_counter() - start
    ok = all(verdicts) and elapsed <= 30.0
    record_criterion(5, ok, f"N and D attachments, 20 eigenvalues each, max rel residual {worst:.1e}, {elapsed:.1f} s")
    assert ok


def _fixture_graphs():
    rng = np.random.default_rng(6)
    graphs = [
        glue(interval(1.0), interval(1.0)),
        germ_plus_interval(1.0, 1.0, "N"),
        germ_plus_interval(1.0, 0.33, "D", "v4"),
        germ_plus_star(0.75, *GERM_STAR_NETWORK.star),
        germ(0.2895, "v2"),
        germ(1.0, "v4"),
        star(0.3, 0.5, 0.7),
    ]
    graphs += [random_graph(rng, 4, 2, contacts=1 + i % 2, dirichlet=True) for i in range(4)]
    return graphs


def test_criterion_06_secular_roots_and_decomposition():
    expected = grid_roots(lambda k: math.sin(k) * (5 - 9 * math.sin(k) ** 2), 0.1, 3.2)
    visible = visible_spectrum(GermM(1.0), IntervalM(1.0, "N"), RootFindConfig(0.01, 4.0, 1024)).ks()
    found = all(np.min(np.abs(visible - k)) <= 1e-8 for k in expected)
    bad = []
    for i, g in enumerate(_fixture_graphs()):
        cfg = RootFindConfig.for_length(g.total_length, 15.0, k_min=1e-3)
        direct, vis, inv = classify_spectrum(g, cfg)
        merged = np.sort(np.concatenate([vis.ks(), inv.ks()]))
        if inv.notes or len(merged) != len(direct.ks()) or np.abs(merged - direct.ks()).max(initial=0) > 1e-8 * 15:
            bad.append(i)
    ok = found and len(expected) == 3 and not bad
    record_criterion(6, ok, f"secular roots {'found' if found else 'missing'}; decomposition failures on fixtures {bad}")
    assert ok


def _local_minima(values: np.ndarray) -> np.ndarray:
    inner = (values[1:-1] < values[:-2]) & (values[1:-1] <= values[2:])
    return np.flatnonzero(inner) + 1


def _figure_check(const, closed_graph):
    traces = [
        scan(g, const.nu_range, 4000, const.beta)
        for g in (
            (germ(const.ell, c) for c in GERM_CONTACTS)
            if const.star is None
            else (germ_plus_star(const.ell, *const.star, contact=c) for c in GERM_CONTACTS)
        )
    ]
    amp = traces[0].amplitude[:, 0, 0]
    step = traces[0].nu[1] - traces[0].nu[0]
    k_lo, k_hi = freq_to_k(const.nu_range[0]), freq_to_k(const.nu_range[1])
    cfg = RootFindConfig.for_length(closed_graph.total_length, 1.05 * k_hi, k_min=0.5 * k_lo)
    eig_nu = visible_spectrum(closed_graph, None, cfg).ks() * SPEED_OF_LIGHT / (2 * PI * 1e9)
    offsets = [float(np.min(np.abs(eig_nu - traces[0].nu[i])) / step) for i in _local_minima(amp)]
    in_range = bool(np.all(amp > 0) and np.all(amp <= 1 + 1e-12))
    same = float(np.abs(traces[0].s - traces[1].s).max())
    return offsets, in_range, same, (float(amp.min()), float(amp.max()))


def test_criterion_07_dissipative_traces():
    results = {
        "2cd": _figure_check(GERM_NETWORK, germ(GERM_NETWORK.ell)),
        "3cd": _figure_check(GERM_STAR_NETWORK, germ_plus_star(GERM_STAR_NETWORK.ell, *GERM_STAR_NETWORK.star)),
    }
    parts, ok = [], True
    for fig, (offsets, in_range, same, (lo, hi)) in results.items():
        far = [round(x, 1) for x in offsets if x > 1.0]
        ok &= not far and in_range and same <= 1e-10
        parts.append(
            f"{fig}: {len(offsets)} minima, {len(far)} beyond one grid step (worst {max(offsets):.1f} steps), "
            f"|S| in [{lo:.4f}, {hi:.4f}], v2/v4 max diff {same:.1e}"
        )
    record_criterion(7, ok, "; ".join(parts))
    for fig, (offsets, in_range, same, _) in results.items():
        assert in_range, fig
        assert same <= 1e-10, fig
    assert all(x <= 1.0 for offsets, *_ in results.values() for x in offsets), (
        "minima of |S| under absorption follow the complex resonances (roots of ik + M = 0) and, at the "
        "lowest frequencies, the sqrt(k) absorption law; both sit more than one grid step from the real "
        "eigenfrequencies"
    )


def test_criterion_08_subdivision_invariance():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(10):
        g = random_graph(rng, dirichlet=True)
        e = g.edges[int(rng.integers(len(g.edges)))]
        sub = g.subdivided(e.id, float(rng.uniform(0.05, 0.95)))
        a, b = first_eigenvalues(g, 20).ks(), first_eigenvalues(sub, 20).ks()
        worst = max(worst, float(np.max(np.abs(a - b) / a)))
    ok = worst <= 1e-9
    record_criterion(8, ok, f"10 random graphs, first 20 eigenvalues, max relative shift {worst:.1e}")
    assert ok


def test_criterion_09_pole_rejection():
    roots = find_roots(math.tan, RootFindConfig(0.1, 10.0))
    ok = len(roots) == 3 and np.allclose(roots, [PI, 2 * PI, 3 * PI], rtol=0, atol=1e-10)
    record_criterion(9, ok, f"roots {[round(r, 12) for r in roots]}, {roots.rejected} pole crossings rejected")
    assert ok


def test_criterion_10_figure_files_deterministic(tmp_path):
    blobs = []
    for run in ("first", "second"):
        assert cli.main(["paper-figures", "2cd", "--out-dir", str(tmp_path / run)]) == 0
        blobs.append({p.name: p.read_bytes() for p in sorted((tmp_path / run).iterdir())})
    ok = blobs[0] == blobs[1] and len(blobs[0]) == 2
    record_criterion(10, ok, f"files {sorted(blobs[0])} byte-identical across runs")
    assert ok
