"""Command-line surface: ``loschmidt <scenario> [options] [--key=value ...]``.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical
blow-up.  All state lives in the config and seeds; no environment
variables are consulted, so a command line is a complete description of a
run.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..diagnostics import detect_critical_time, downward_crossings
from ..errors import BlowUpError, ConfigError, LoschmidtError
from ..scenarios import run_echo, run_spectrum, scan_beta, scan_fgr, scan_tau_c
from .config import CLI_ALIASES, SCENARIOS, build_config, load_config_file
from .writers import (
    base_metadata,
    write_echo_csv,
    write_gnuplot,
    write_metadata,
    write_scan_csv,
    write_spectrum_csv,
)


def _parse_override_tokens(tokens: list) -> dict:
    """Turn leftover ``--key=value`` tokens into dotted config overrides."""
    out = {}
    for tok in tokens:
        if not tok.startswith("--") or "=" not in tok:
            raise ConfigError(
                f"unrecognized argument {tok!r}; overrides look like "
                f"--section.key=value")
        key, _, raw = tok[2:].partition("=")
        key = CLI_ALIASES.get(key, key)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _echo_meta(cfg, record) -> dict:
    meta = base_metadata(cfg.effective(), cfg["numerics.n_points"])
    threshold = cfg["diagnostics.threshold"]
    fid_result = detect_critical_time(record, threshold)
    meta["fidelity_crossings"] = list(fid_result.crossings)
    meta["tau_c"] = fid_result.tau_c
    meta["crossed"] = fid_result.crossed
    meta["threshold"] = threshold
    meta["symmetry_crossings"] = list(
        downward_crossings(record.times, record.symmetry, threshold))
    meta["truncated"] = record.truncated
    if record.blowup:
        meta["blowup"] = record.blowup
    return meta


def _write_curves(curves, stem: str, out: Path, meta: dict) -> bool:
    names = []
    truncated = False
    for i, record in enumerate(curves):
        name = f"{stem}_curve_{i:03d}.csv"
        write_echo_csv(record, out / name)
        names.append(name)
        truncated = truncated or record.truncated
    meta["curve_files"] = names
    return truncated


def _run_echo_scenario(cfg, out: Path) -> int:
    params = cfg.sim_params()
    spec0, spec1 = cfg.spec_pair()
    record = run_echo(params, spec0, spec1,
                      symmetry_source=cfg["diagnostics.symmetry_source"])
    write_echo_csv(record, out / "echo.csv")
    write_gnuplot("echo", "echo.csv", out / "echo.gp")
    write_metadata(_echo_meta(cfg, record), out / "echo_meta.json")
    return 3 if record.truncated else 0


def _run_spectrum_scenario(cfg, out: Path) -> int:
    if cfg["perturbation.epsilon"] != 0.0:
        raise ConfigError(
            "perturbation.epsilon: the spectrum scenario is unperturbed; "
            "set it to 0", key="perturbation.epsilon")
    if cfg["hamiltonian.source"] != "self-consistent":
        raise ConfigError(
            "hamiltonian.source: the spectrum scenario runs the "
            "self-consistent dynamics", key="hamiltonian.source")
    params = cfg.sim_params()
    result = run_spectrum(params, window=cfg["spectrum.window"])
    write_spectrum_csv(result, out / "spectrum.csv")
    lines = ["t,e_pot"] + [
        f"{format(t, '.17g')},{format(e, '.17g')}" for t, e in result.epot_series]
    (out / "spectrum_epot.csv").write_text("\n".join(lines) + "\n",
                                           encoding="utf-8")
    write_gnuplot("spectrum", "spectrum.csv", out / "spectrum.gp")
    meta = base_metadata(cfg.effective(), cfg["numerics.n_points"])
    meta.update(result.metadata)
    write_metadata(meta, out / "spectrum_meta.json")
    return 0


def _run_tauc_scenario(cfg, out: Path) -> int:
    if cfg["hamiltonian.source"] != "self-consistent":
        raise ConfigError(
            "hamiltonian.source: the critical-time scan runs the "
            "self-consistent dynamics", key="hamiltonian.source")
    base = cfg.sim_params()
    seeds = cfg["scan.seeds"] or [cfg.seed]
    results = [
        scan_tau_c(base, cfg["scan.epsilons"], cfg["scan.h_values"], s,
                   workers=cfg["workers"],
                   threshold=cfg["diagnostics.threshold"],
                   n_min=cfg["perturbation.n_min"],
                   n_max=cfg["perturbation.n_max"])
        for s in seeds
    ]
    primary = results[0]
    write_scan_csv(primary, out / "tauc_scan.csv")
    write_gnuplot("tauc-scan", "tauc_scan.csv", out / "tauc_scan.gp")
    meta = base_metadata(cfg.effective(), cfg["numerics.n_points"])
    meta["scan"] = primary.metadata
    if len(results) > 1:
        per_seed = {}
        for s, r in zip(seeds, results):
            per_seed[str(s)] = r.metadata["fits"]
        t0s = [f["t0"] for r in results for f in r.fits.values()]
        meta["per_seed_fits"] = per_seed
        meta["t0_mean_over_seeds"] = sum(t0s) / len(t0s) if t0s else None
    write_metadata(meta, out / "tauc_scan_meta.json")
    truncated = any(row.get("truncated") for r in results
                    for row in r.metadata["rows"])
    return 3 if truncated else 0


def _run_fgr_scenario(cfg, out: Path) -> int:
    if cfg["hamiltonian.source"] != "external":
        raise ConfigError(
            "hamiltonian.source: the decay-rate scan drives the density "
            "externally; set source=external", key="hamiltonian.source")
    base = cfg.sim_params()
    result = scan_fgr(base, cfg["hamiltonian.delta"], cfg["scan.epsilons"],
                      cfg.seed, workers=cfg["workers"],
                      n_modes=cfg["hamiltonian.n_modes"],
                      n_min=cfg["perturbation.n_min"],
                      n_max=cfg["perturbation.n_max"])
    write_scan_csv(result, out / "fgr_scan.csv")
    write_gnuplot("fgr-scan", "fgr_scan.csv", out / "fgr_scan.gp")
    meta = base_metadata(cfg.effective(), cfg["numerics.n_points"])
    meta["scan"] = result.metadata
    truncated = _write_curves(result.curves, "fgr", out, meta)
    write_metadata(meta, out / "fgr_scan_meta.json")
    return 3 if truncated else 0


def _run_beta_scenario(cfg, out: Path) -> int:
    if cfg["hamiltonian.source"] != "mixed":
        raise ConfigError(
            "hamiltonian.source: the mixing scan needs source=mixed",
            key="hamiltonian.source")
    base = cfg.sim_params()
    result = scan_beta(base, cfg["hamiltonian.delta"],
                       cfg["perturbation.epsilon"], cfg["scan.betas"],
                       cfg.seed, workers=cfg["workers"],
                       n_modes=cfg["hamiltonian.n_modes"],
                       n_min=cfg["perturbation.n_min"],
                       n_max=cfg["perturbation.n_max"])
    write_scan_csv(result, out / "beta_scan.csv")
    write_gnuplot("beta-scan", "beta_scan.csv", out / "beta_scan.gp")
    meta = base_metadata(cfg.effective(), cfg["numerics.n_points"])
    meta["scan"] = result.metadata
    truncated = _write_curves(result.curves, "beta", out, meta)
    write_metadata(meta, out / "beta_scan_meta.json")
    return 3 if truncated else 0


_RUNNERS = {
    "echo": _run_echo_scenario,
    "spectrum": _run_spectrum_scenario,
    "tauc-scan": _run_tauc_scenario,
    "fgr-scan": _run_fgr_scenario,
    "beta-scan": _run_beta_scenario,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loschmidt",
        description="Deterministic 1D Schrodinger-Poisson simulator: "
                    "fidelity decay, symmetry breaking, critical-time scaling.",
        epilog="Any config key can be overridden with --section.key=value; "
               "shorthand flags: " + ", ".join(
                   f"--{a}" for a in sorted(CLI_ALIASES)))
    parser.add_argument("scenario", choices=SCENARIOS,
                        help="which experiment to run")
    parser.add_argument("--config", default=None,
                        help="config file (flat key=value lines or JSON)")
    parser.add_argument("--out", default=".",
                        help="output directory (created if missing)")
    return parser


def main(argv: list | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        overrides = _parse_override_tokens(extra)
        file_values = load_config_file(args.config) if args.config else {}
        cfg = build_config(file_values, overrides, scenario=args.scenario)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _RUNNERS[cfg.scenario](cfg, out)
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except BlowUpError as err:
        print(f"error: numerical blow-up: {err}", file=sys.stderr)
        return 3
    except LoschmidtError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
