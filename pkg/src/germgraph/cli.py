"""Command-line front end.

Exit codes: 0 success (or positive verdict), 1 negative verdict,
2 usage/configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import catalog
from .graph import GraphError, MetricGraph, load_graph
from .mfunction import GermM, IntervalM, MEvaluator, MFunctionError, StarM, SumM
from .output import columns_csv, spectrum_csv, spectrum_json, trace_csv, trace_json, write_text
from .scattering import DISSIPATION_MODES, ScatteringError, scan
from .spectra import RootFindConfig, classify_spectrum, compare_spectra, direct_spectrum, first_eigenvalues, visible_spectrum

log = logging.getLogger("germgraph")

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# CLI preset name -> (catalog preset, default parameters)
CLI_PRESETS: dict[str, tuple[str, dict[str, float]]] = {
    "interval-n": ("interval_N", {}),
    "interval-nn": ("interval_N", {}),
    "interval-d": ("interval_D", {}),
    "interval-dd": ("interval_DD", {}),
    "star": ("star", {}),
    "germ": ("germ", {}),
    "germ-plus-interval-n": ("germ_plus_interval_N", {}),
    "germ-plus-interval-d": ("germ_plus_interval_D", {}),
    "germ-plus-star": ("germ_plus_star", {}),
    "germ-network": ("germ", {"ell": catalog.GERM_NETWORK.ell}),
    "germ-star-network": (
        "germ_plus_star",
        dict(zip("bcd", catalog.GERM_STAR_NETWORK.star), ell=catalog.GERM_STAR_NETWORK.ell),
    ),
}
LENGTH_FLAGS = ("ell", "a", "b", "c", "d")
FIGURES = ("2cd", "3cd")


class UsageError(Exception):
    pass


@dataclass
class Scenario:
    graph: MetricGraph
    closed_form: MEvaluator | None
    label: str


def _closed_form(preset: str, p: dict[str, float]) -> MEvaluator | None:
    if preset == "interval_N":
        return IntervalM(p["a"], "N")
    if preset == "interval_D":
        return IntervalM(p["a"], "D")
    if preset == "star":
        return StarM(p["b"], p["c"], p["d"])
    if preset == "germ":
        return GermM(p["ell"])
    if preset in ("germ_plus_interval_N", "germ_plus_interval_D"):
        return SumM([GermM(p["ell"]), IntervalM(p["a"], preset[-1])])
    if preset == "germ_plus_star":
        return SumM([GermM(p["ell"]), StarM(p["b"], p["c"], p["d"])])
    return None


def parse_preset(spec: str) -> tuple[str, dict[str, float]]:
    """``name`` or ``name:key=value,key=value``."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise UsageError(f"bad preset parameter {item!r}; expected key=value")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"preset parameter {key!r} is not a number") from None
    return name, params


def resolve(graph_path: str | None, preset: str | None, contact: str | None, shared: dict[str, float]) -> Scenario:
    if (graph_path is None) == (preset is None):
        raise UsageError("give exactly one of a graph file or a preset")
    if graph_path is not None:
        graph = load_graph(graph_path)
        if contact:
            graph = graph.with_contacts(contact.split(","))
        return Scenario(graph, None, graph_path)
    name, inline = parse_preset(preset)
    if name not in CLI_PRESETS:
        raise UsageError(f"unknown preset {name!r}; valid presets: {', '.join(CLI_PRESETS)}")
    cat_name, defaults = CLI_PRESETS[name]
    wanted = catalog.preset_parameters(cat_name)
    params = {k: v for k, v in defaults.items()}
    params.update({k: v for k, v in shared.items() if v is not None and k in wanted})
    params.update(inline)
    missing = [k for k in wanted if k not in params]
    if missing:
        raise UsageError(f"preset {name} needs --{' --'.join(missing)}")
    kwargs = {k: params[k] for k in wanted}
    graph = catalog.catalog_graph(cat_name, contact=contact or "v2", **kwargs)
    label = f"{name}@{contact}" if contact else name
    return Scenario(graph, _closed_form(cat_name, kwargs), label)


def parse_range(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(":")
    try:
        if not sep:
            raise ValueError
        return float(lo), float(hi)
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected start:stop") from None


def _shared_lengths(args) -> dict[str, float]:
    return {k: getattr(args, k, None) for k in LENGTH_FLAGS}


def _write(path: str, text: str) -> None:
    write_text(path, text)
    if path != "-":
        log.info("wrote %s", path)


# -- commands -----------------------------------------------------------------


def cmd_scan(args) -> int:
    sc = resolve(args.graph, args.preset, args.contact, _shared_lengths(args))
    if not sc.graph.contacts:
        raise UsageError("scan needs a graph with contact vertices")
    source = sc.closed_form if (sc.closed_form is not None and args.solver == "closed-form") else sc.graph
    trace = scan(source, parse_range(args.nu), args.points, args.beta, mode=args.dissipation_mode, workers=args.threads)
    text = trace_json(trace) if args.format == "json" else trace_csv(trace, unwrapped=not args.no_unwrap)
    _write(args.out, text)
    return EXIT_OK


def _root_config(args, graph: MetricGraph) -> RootFindConfig:
    kw = {}
    if args.grid_points:
        kw["grid_points"] = args.grid_points
    return RootFindConfig.for_length(graph.total_length, args.kmax, args.kmin, **kw)


def cmd_spectrum(args) -> int:
    if args.kmax is None:
        raise UsageError("spectrum needs --kmax")
    sc = resolve(args.graph, args.preset, args.contact, _shared_lengths(args))
    cfg = _root_config(args, sc.graph)
    if args.mode == "direct":
        spec = direct_spectrum(sc.graph, cfg)
    elif args.mode == "visible":
        if not sc.graph.contacts:
            raise UsageError("visible spectrum needs contact vertices")
        use_closed = sc.closed_form is not None and args.solver == "closed-form"
        spec = visible_spectrum(sc.closed_form if use_closed else sc.graph, None, cfg)
    else:
        if not sc.graph.contacts:
            raise UsageError("invisible spectrum needs contact vertices")
        spec = classify_spectrum(sc.graph, cfg)[2]
    for note in spec.notes:
        log.warning("%s", note)
    _write(args.out, spectrum_json(spec) if args.format == "json" else spectrum_csv(spec))
    return EXIT_OK


def cmd_compare(args) -> int:
    shared = _shared_lengths(args)
    first = resolve(args.graph1, args.preset1, args.contact1, shared)
    second = resolve(args.graph2, args.preset2, args.contact2, shared)
    if args.what == "spectrum":
        tol = args.tol if args.tol is not None else 1e-8
        if args.kmax is not None:
            s1 = direct_spectrum(first.graph, _root_config(args, first.graph))
            s2 = direct_spectrum(second.graph, _root_config(args, second.graph))
        else:
            s1 = first_eigenvalues(first.graph, args.count)
            s2 = first_eigenvalues(second.graph, args.count)
        report = compare_spectra(s1, s2, tol)
        doc = {"what": "spectrum", "first": first.label, "second": second.label, **report.to_dict()}
        positive = report.isospectral
    else:
        tol = args.tol if args.tol is not None else 1e-10
        if len(first.graph.contacts) != len(second.graph.contacts):
            raise UsageError("graphs have different numbers of contacts")
        nu = parse_range(args.nu)
        t1 = scan(first.graph, nu, args.points, args.beta, mode=args.dissipation_mode, workers=args.threads)
        t2 = scan(second.graph, nu, args.points, args.beta, mode=args.dissipation_mode, workers=args.threads)
        ok = ~(t1.failed | t2.failed)
        diff = np.abs(t1.s[ok] - t2.s[ok]).max() if ok.any() else math.inf
        positive = bool(diff <= tol)
        doc = {
            "what": "scattering",
            "first": first.label,
            "second": second.label,
            "beta": args.beta,
            "points_compared": int(ok.sum()),
            "max_abs_difference": float(diff),
            "tolerance": tol,
            "verdict": "isoscattering" if positive else "not isoscattering",
        }
    _write(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK if positive else EXIT_NEGATIVE


def figure_traces(figure: str, points: int = 4000, workers: int | None = None):
    """Dissipative traces for the v2- and v4-lead networks of a figure."""
    if figure == "2cd":
        const = catalog.GERM_NETWORK
        graphs = [catalog.germ(const.ell, c) for c in catalog.GERM_CONTACTS]
    elif figure == "3cd":
        const = catalog.GERM_STAR_NETWORK
        graphs = [catalog.germ_plus_star(const.ell, *const.star, contact=c) for c in catalog.GERM_CONTACTS]
    else:
        raise UsageError(f"unknown figure {figure!r}; valid: {', '.join(FIGURES)}")
    return const, [scan(g, const.nu_range, points, const.beta, workers=workers) for g in graphs]


def cmd_paper_figures(args) -> int:
    const, (t2, t4) = figure_traces(args.figure, args.points, args.threads)
    out = Path(args.out_dir)
    fig = args.figure[0]
    _write(
        str(out / f"fig{fig}c_amplitude.csv"),
        columns_csv(["nu_ghz", "abs_s_v2", "abs_s_v4"], [t2.nu, t2.amplitude[:, 0, 0], t4.amplitude[:, 0, 0]]),
    )
    _write(
        str(out / f"fig{fig}d_phase.csv"),
        columns_csv(
            ["nu_ghz", "phase_rad_v2", "phase_rad_v4", "phase_unwrapped_v2", "phase_unwrapped_v4"],
            [t2.nu, t2.phase[:, 0, 0], t4.phase[:, 0, 0], t2.phase_unwrapped[:, 0, 0], t4.phase_unwrapped[:, 0, 0]],
        ),
    )
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


def _graph_slot(p: argparse.ArgumentParser, suffix: str = "") -> None:
    p.add_argument(f"--graph{suffix}", metavar="PATH", help="graph file (JSON)")
    p.add_argument(f"--preset{suffix}", metavar="NAME[:k=v,...]", help=f"named graph: {', '.join(CLI_PRESETS)}")
    p.add_argument(f"--contact{suffix}", help="contact vertex (v2 or v4 for germ presets)")


def _lengths(p: argparse.ArgumentParser) -> None:
    for name in LENGTH_FLAGS:
        p.add_argument(f"--{name}", type=float, help=f"length {name} (m)")


def _scan_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta", type=float, default=0.0, help="absorption coefficient (m^-1/2)")
    p.add_argument("--nu", default="0.01:2", help="frequency range in GHz, start:stop")
    p.add_argument("--points", type=int, default=4000)
    p.add_argument("--dissipation-mode", choices=DISSIPATION_MODES, default="uniform")


def _k_opts(p: argparse.ArgumentParser, kmax_default: float | None) -> None:
    p.add_argument("--kmin", type=float, default=None)
    p.add_argument("--kmax", type=float, default=kmax_default)
    p.add_argument("--grid-points", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="germgraph", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with default values for any flag")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: $GERMGRAPH_THREADS or 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="scattering trace over a frequency range")
    _graph_slot(p)
    _lengths(p)
    _scan_opts(p)
    p.add_argument("--solver", choices=("closed-form", "general"), default="closed-form")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-unwrap", action="store_true", help="omit the unwrapped phase columns")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("spectrum", help="direct, visible or invisible eigenvalues")
    _graph_slot(p)
    _lengths(p)
    _k_opts(p, None)
    p.add_argument("--mode", choices=("direct", "visible", "invisible"), default="direct")
    p.add_argument("--solver", choices=("closed-form", "general"), default="closed-form")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("compare", help="compare spectra or scattering of two graphs")
    _graph_slot(p, "1")
    _graph_slot(p, "2")
    _lengths(p)
    _scan_opts(p)
    _k_opts(p, None)
    p.add_argument("--what", choices=("spectrum", "scattering"), default="spectrum")
    p.add_argument("--count", type=int, default=20, help="number of eigenvalues when --kmax is not given")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("paper-figures", help="theoretical traces of the measured networks")
    p.add_argument("figure", help=f"one of {', '.join(FIGURES)}")
    p.add_argument("--points", type=int, default=4000)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_paper_figures)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config, encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    config = {k.replace("-", "_"): v for k, v in config.items()}
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    top = {a.dest for a in parser._actions}
    parser.set_defaults(**{k: v for k, v in config.items() if k in top})
    known_dests = set(top)
    for sp in subparsers.choices.values():
        dests = {a.dest for a in sp._actions}
        known_dests |= dests
        sp.set_defaults(**{k: v for k, v in config.items() if k in dests})
    unknown = sorted(set(config) - known_dests)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"germgraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, GraphError) as exc:
        print(f"germgraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScatteringError, MFunctionError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"germgraph: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"germgraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
