"""File writers. Floats use the shortest round-trip repr so reruns are byte-identical."""
from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .scattering import ScatterTrace
from .spectra import Spectrum


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _pair_labels(n: int) -> list[tuple[int, int, str]]:
    return [(i, j, f"s_{i + 1}{j + 1}") for i in range(n) for j in range(n)]


def trace_csv(trace: ScatterTrace, unwrapped: bool = True) -> str:
    labels = _pair_labels(trace.size)
    header = ["nu_ghz"]
    for _, _, name in labels:
        header += [f"{name}_abs", f"{name}_phase_rad"] + ([f"{name}_phase_unwrapped"] if unwrapped else [])
    amp, phase = trace.amplitude, trace.phase
    unwr = trace.phase_unwrapped if unwrapped else None
    lines = [",".join(header)]
    for p in range(len(trace.nu)):
        row = [fmt(trace.nu[p])]
        for i, j, _ in labels:
            row += [fmt(amp[p, i, j]), fmt(phase[p, i, j])]
            if unwr is not None:
                row.append(fmt(unwr[p, i, j]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _num(x):
    x = float(x)
    return None if math.isnan(x) else x


def trace_json(trace: ScatterTrace) -> str:
    amp, phase, unwr = trace.amplitude, trace.phase, trace.phase_unwrapped
    points = []
    for p in range(len(trace.nu)):
        s = trace.s[p]
        points.append(
            {
                "nu_ghz": float(trace.nu[p]),
                "s_real": [[_num(v) for v in row] for row in s.real],
                "s_imag": [[_num(v) for v in row] for row in s.imag],
                "abs": [[_num(v) for v in row] for row in amp[p]],
                "phase_rad": [[_num(v) for v in row] for row in phase[p]],
                "phase_unwrapped": [[_num(v) for v in row] for row in unwr[p]],
                "failed": bool(trace.failed[p]),
            }
        )
    doc = {"beta": trace.beta, "dissipation_mode": trace.mode, "contacts": trace.size, "notes": trace.notes, "points": points}
    return json.dumps(doc, indent=1) + "\n"


def spectrum_csv(spectrum: Spectrum) -> str:
    lines = ["k_rad_per_m,multiplicity,visibility"]
    lines += [f"{fmt(e.k)},{e.multiplicity},{e.visibility}" for e in spectrum.entries]
    return "\n".join(lines) + "\n"


def spectrum_json(spectrum: Spectrum) -> str:
    doc = {
        "entries": [{"k_rad_per_m": e.k, "multiplicity": e.multiplicity, "visibility": e.visibility} for e in spectrum.entries],
        "notes": spectrum.notes,
    }
    return json.dumps(doc, indent=1) + "\n"


def columns_csv(header: list[str], columns: list[np.ndarray]) -> str:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_text(path: str | Path, text: str) -> None:
    """Write atomically (temp file + rename); ``-`` means standard output."""
    if str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
