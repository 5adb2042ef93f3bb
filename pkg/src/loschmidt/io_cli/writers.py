"""Deterministic CSV/JSON/gnuplot emission.

Floats are printed with 17 significant digits, which round-trips IEEE
doubles exactly, so re-reading a CSV reproduces the in-memory values bit
for bit.  Metadata contains no timestamps or other run-to-run noise: a
fixed config and seed produce byte-identical output files on a platform.
"""

from __future__ import annotations

import json
import platform
import sys
from pathlib import Path

import numpy as np

from ..diagnostics import EchoRecord
from ..scenarios import ScanResult, SpectrumResult

ECHO_HEADER = "t,fidelity,symmetry,e_kin,e_pot,e_fermi,e_pert,e_total"
SPECTRUM_HEADER = "omega,power"
SCAN_HEADER = "param,tau_c,crossed,rate,fit_quality"

FIDELITY_NORMALIZATION_NOTE = (
    "fidelity = |<a|b>|^2 with <a|b> = (1/N) sum_i conj(a_i) b_i, the "
    "grid mean of the pointwise product; unit-mass states give F(0) = 1")


def fmt(x) -> str:
    """One CSV cell: 17-significant-digit floats, empty cell for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as err:
        raise OSError(f"failed to write {path}: {err}") from err


def write_echo_csv(record: EchoRecord, path) -> None:
    lines = [ECHO_HEADER]
    for k in range(len(record)):
        lines.append(",".join(fmt(v) for v in (
            record.times[k], record.fidelity[k], record.symmetry[k],
            record.e_kin[k], record.e_pot[k], record.e_fermi[k],
            record.e_pert[k], record.e_total[k])))
    _write_text(Path(path), "\n".join(lines) + "\n")


def read_echo_csv(path) -> dict:
    """Columns of an echo CSV as float arrays keyed by header name."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    names = lines[0].split(",")
    cols = {name: [] for name in names}
    for ln in lines[1:]:
        for name, cell in zip(names, ln.split(",")):
            cols[name].append(float(cell) if cell else np.nan)
    return {name: np.array(vals) for name, vals in cols.items()}


def write_spectrum_csv(result: SpectrumResult, path) -> None:
    lines = [SPECTRUM_HEADER]
    for omega, power in result.spectrum:
        lines.append(f"{fmt(omega)},{fmt(power)}")
    _write_text(Path(path), "\n".join(lines) + "\n")


def write_scan_csv(result: ScanResult, path) -> None:
    lines = [SCAN_HEADER]
    for p in result.points:
        lines.append(",".join(
            (fmt(p.param), fmt(p.tau_c), fmt(p.crossed), fmt(p.rate),
             fmt(p.fit_quality))))
    _write_text(Path(path), "\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_metadata(meta: dict, path) -> None:
    """Sorted-key JSON with a trailing newline; no timestamps anywhere."""
    text = json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n"
    _write_text(Path(path), text)


def base_metadata(config_echo: dict, n_points: int) -> dict:
    from .. import __version__
    return {
        "config": config_echo,
        "code_version": __version__,
        "grid": {"n_points": n_points, "spacing": 2.0 * np.pi / n_points},
        "platform": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "machine": platform.machine(),
            "system": platform.system(),
        },
        "fidelity_normalization": FIDELITY_NORMALIZATION_NOTE,
    }


_GNUPLOT_BODY = {
    "echo": """\
set datafile separator ','
set key left bottom
set xlabel 't (1/omega_p)'
set ylabel 'F, Sigma'
set logscale y
plot '{csv}' using 1:2 with lines title 'fidelity', \\
     '{csv}' using 1:3 with lines title 'symmetry'
""",
    "spectrum": """\
set datafile separator ','
set xlabel 'omega / omega_p'
set ylabel 'power'
set xrange [0:5]
plot '{csv}' using 1:2 with lines title 'E_pot spectrum'
""",
    "tauc-scan": """\
set datafile separator ','
set logscale x
set xlabel 'epsilon'
set ylabel 'tau_c (1/omega_p)'
plot '{csv}' using 1:2 with points pt 7 title 'tau_c'
""",
    "fgr-scan": """\
set datafile separator ','
set logscale x
set xlabel 'epsilon'
set ylabel 'decay rate'
plot '{csv}' using 1:4 with points pt 7 title 'rate'
""",
    "beta-scan": """\
set datafile separator ','
set xlabel 'beta'
set ylabel 'time to threshold (1/omega_p)'
plot '{csv}' using 1:2 with linespoints pt 7 title 'time to F=0.1'
""",
}


def write_gnuplot(scenario: str, csv_name: str, path) -> None:
    body = _GNUPLOT_BODY[scenario].format(csv=csv_name)
    _write_text(Path(path), body)
