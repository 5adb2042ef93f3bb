"""Twin-run echo harness and the parameter-scan experiments.

Five ready-made experiments:

  run_echo      one twin run: same initial state, two Hamiltonians that
                differ only in the static perturbation
  scan_tau_c    critical time tau_c vs perturbation strength eps for one or
                more values of h, with the -t0*ln(eps) fit
  scan_fgr      fidelity decay rate vs eps under an external traveling-wave
                drive (golden-rule regime, rate ~ eps^2)
  scan_beta     decay curves for mixed external/self-consistent densities
                interpolated by beta
  run_spectrum  frequency spectrum of the potential energy of an
                unperturbed self-consistent run

Every experiment is deterministic given (config, seed): random phases come
from the seeded generator, scan points are collected in axis order, and no
global state exists anywhere.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import SimParams, WaveField, make_initial_state
from .diagnostics import (
    CriticalTimeResult,
    EchoRecord,
    detect_critical_time,
    downward_crossings,
    energy_components,
    fidelity,
    symmetry,
)
from .errors import BlowUpError, InvalidExperimentError, InvalidParameterError
from .fields import HamiltonianSpec, StaticPerturbation
from .propagator import _check_state, step
from .stochastic import DRIVE_SEED_OFFSET, PERTURBATION_SEED_OFFSET

__all__ = [
    "ScanPoint",
    "ScanResult",
    "SpectrumResult",
    "run_echo",
    "scan_tau_c",
    "scan_fgr",
    "scan_beta",
    "run_spectrum",
    "default_epsilon_axis",
]

# Fit windows, recorded in every scan's metadata.
FGR_FIT_WINDOW = (0.9, 0.2)    # fidelity range for the ln F rate fit
BETA_RATE_WINDOW = (0.99, 0.93)  # onset window where every mixing strength still decays at the linear-response slope; by F ~ 0.5 strong mixing has already left that regime
BETA_DEPARTURE_FACTOR = 10.0   # departure when -ln F exceeds 10x the reference


def default_epsilon_axis() -> np.ndarray:
    """Log-spaced perturbation strengths, one point per decade 1e-9..1e-3."""
    return np.logspace(-9.0, -3.0, 7)


@dataclass(frozen=True)
class ScanPoint:
    """One scan point; unused diagnostics stay None."""

    param: float
    tau_c: float | None = None
    crossed: bool = False
    rate: float | None = None
    fit_quality: float | None = None


@dataclass(frozen=True)
class ScanResult:
    """Scan points in axis order plus fits and a full metadata echo."""

    axis_name: str
    axis: tuple
    points: tuple
    fits: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    curves: tuple | None = None

    def __post_init__(self):
        if len(self.points) != len(self.axis) and not self.metadata.get(
                "points_per_axis_value"):
            raise InvalidParameterError(
                "scan points do not align with the scan axis")


@dataclass(frozen=True)
class SpectrumResult:
    """One-sided potential-energy spectrum and the series it came from."""

    spectrum: np.ndarray        # rows (omega, power)
    epot_series: np.ndarray     # rows (t, E_pot)
    metadata: dict = field(default_factory=dict)


def perturbation_for(base_seed: int, epsilon: float, n_min: int = 1,
                     n_max: int = 20) -> StaticPerturbation | None:
    """Standard static perturbation in the perturbation seed namespace."""
    if epsilon == 0.0:
        return None
    return StaticPerturbation(epsilon=epsilon, n_min=n_min, n_max=n_max,
                              phase_seed=base_seed + PERTURBATION_SEED_OFFSET)


def run_echo(params: SimParams, spec_unperturbed: HamiltonianSpec,
             spec_perturbed: HamiltonianSpec, *,
             symmetry_source: str = "perturbed") -> EchoRecord:
    """Evolve twin trajectories in lockstep and sample fidelity decay.

    Both trajectories start from the same initial state and share the step
    count and sampling grid exactly.  The two Hamiltonians must share the
    density source; comparing different source families is not a supported
    protocol.  Energies are sampled on the perturbed trajectory.

    On blow-up of either trajectory the record collected so far is returned
    with ``truncated=True`` and the abort diagnostics in ``blowup``.
    """
    if not spec_unperturbed.same_density_source(spec_perturbed):
        raise InvalidExperimentError(
            "twin runs must share the density source; only the static "
            "perturbation may differ")
    if symmetry_source not in ("perturbed", "unperturbed"):
        raise InvalidParameterError(
            f"symmetry_source must be 'perturbed' or 'unperturbed', "
            f"got {symmetry_source!r}")

    grid = params.grid()
    psi0 = make_initial_state(params, grid)
    psi_u = psi0
    psi_p = psi0

    dt = params.dt
    n_steps = int(round(params.t_end / dt))
    if abs(n_steps * dt - params.t_end) > 1e-9 * max(1.0, abs(params.t_end)):
        raise InvalidParameterError(
            f"t_end={params.t_end} is not an integer number of steps of dt={dt}")

    times, fid, sym = [], [], []
    energies = [[] for _ in range(5)]

    def sample(t: float, u: WaveField, p: WaveField) -> None:
        times.append(t)
        fid.append(fidelity(u, p))
        sym.append(symmetry(p if symmetry_source == "perturbed" else u))
        for slot, val in zip(energies, energy_components(p, spec_perturbed,
                                                         params, t)):
            slot.append(val)

    truncated = False
    blowup = None
    sample(0.0, psi_u, psi_p)
    try:
        for k in range(1, n_steps + 1):
            t_prev = (k - 1) * dt
            psi_u = step(psi_u, spec_unperturbed, params, t_prev)
            psi_p = step(psi_p, spec_perturbed, params, t_prev)
            t = k * dt
            _check_state(psi_u.values, params.blowup_threshold, k, t)
            _check_state(psi_p.values, params.blowup_threshold, k, t)
            if k % params.sample_every == 0 or k == n_steps:
                sample(t, psi_u, psi_p)
    except BlowUpError as err:
        truncated = True
        blowup = {"step": err.step, "t": err.t, "max_density": err.max_density}

    e_kin, e_pot, e_fermi, e_pert, e_total = (np.array(e) for e in energies)
    return EchoRecord(times=np.array(times), fidelity=np.array(fid),
                      symmetry=np.array(sym), e_kin=e_kin, e_pot=e_pot,
                      e_fermi=e_fermi, e_pert=e_pert, e_total=e_total,
                      truncated=truncated, blowup=blowup)


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple:
    """Least-squares line fit: (slope, intercept, r_squared)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def _map_tasks(fn, arg_tuples: list, workers: int) -> list:
    """Run tasks serially or on a process pool; results kept in task order."""
    if workers <= 1 or len(arg_tuples) <= 1:
        return [fn(args) for args in arg_tuples]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, arg_tuples))


def _tau_c_task(args: tuple) -> dict:
    """One (h, eps) point of the critical-time scan; runs in a worker."""
    base, h, eps, seed, threshold, n_min, n_max = args
    params = dataclasses.replace(base, h=h)
    pert = perturbation_for(seed, eps, n_min, n_max)
    spec0 = HamiltonianSpec.self_consistent()
    spec1 = HamiltonianSpec.self_consistent(perturbation=pert)

    record = run_echo(params, spec0, spec1)
    result = detect_critical_time(record, threshold)
    extended = False
    if not result.crossed and not record.truncated:
        # one doubling of the horizon for slow (small-eps) decays
        extended = True
        params = dataclasses.replace(params, t_end=2.0 * params.t_end)
        record = run_echo(params, spec0, spec1)
        result = detect_critical_time(record, threshold)
    return {
        "h": h, "eps": eps, "tau_c": result.tau_c, "crossed": result.crossed,
        "crossings": list(result.crossings), "t_end_used": params.t_end,
        "extended": extended, "truncated": record.truncated,
    }


def scan_tau_c(base: SimParams, epsilons, h_values, seed: int, *,
               workers: int = 1, threshold: float = 0.1, n_min: int = 1,
               n_max: int = 20) -> ScanResult:
    """Critical time vs perturbation strength, fitted to tau_c = -t0 ln eps.

    For each h the fit runs over the crossed points only and needs at least
    three of them.  All points share one phase realization (fixed seed), so
    the eps dependence is not confounded by realization noise.
    """
    epsilons = [float(e) for e in epsilons]
    if any(e <= 0 for e in epsilons) or sorted(epsilons) != epsilons:
        raise InvalidParameterError("epsilons must be positive and sorted")
    h_values = [float(h) for h in h_values]

    tasks = [(base, h, eps, seed, threshold, n_min, n_max)
             for h in h_values for eps in epsilons]
    rows = _map_tasks(_tau_c_task, tasks, workers)

    points = tuple(ScanPoint(param=r["eps"], tau_c=r["tau_c"],
                             crossed=r["crossed"]) for r in rows)
    fits = {}
    for h in h_values:
        sub = [r for r in rows if r["h"] == h and r["crossed"]]
        if len(sub) >= 3:
            ln_eps = np.log([r["eps"] for r in sub])
            tau = np.array([r["tau_c"] for r in sub])
            slope, intercept, r2 = _linear_fit(ln_eps, tau)
            fits[h] = {"t0": -slope, "intercept": intercept, "r_squared": r2,
                       "n_points": len(sub)}
    metadata = {
        "scan": "tau_c",
        "threshold": threshold,
        "seed": seed,
        "h_values": h_values,
        "epsilons": epsilons,
        "points_per_axis_value": len(h_values),
        "h_per_point": [r["h"] for r in rows],
        "rows": rows,
        "fits": {str(h): f for h, f in fits.items()},
    }
    return ScanResult(axis_name="epsilon", axis=tuple(epsilons) * len(h_values),
                      points=points, fits=fits, metadata=metadata)


def _fit_decay_rate(record: EchoRecord, window: tuple) -> dict:
    """Exponential decay rate from ln F on the first pass through a window.

    The fit uses the contiguous initial segment where the fidelity first
    sits inside [low, high]; later re-entries (chaotic fluctuations around
    the noise floor) are excluded.  ``low_confidence`` flags runs that never
    reached the lower edge.
    """
    high, low = window
    f = record.fidelity
    t = record.times
    inside = np.nonzero(f <= high)[0]
    if inside.shape[0] == 0:
        return {"rate": None, "r_squared": None, "n_samples": 0,
                "low_confidence": True, "window": [high, low]}
    i0 = int(inside[0])
    below = np.nonzero(f < low)[0]
    i1 = int(below[0]) if below.shape[0] else f.shape[0]
    reached_low = bool(below.shape[0])
    sel = slice(i0, max(i1, i0))
    tw, fw = t[sel], f[sel]
    keep = fw > 0
    tw, fw = tw[keep], fw[keep]
    if tw.shape[0] < 3:
        return {"rate": None, "r_squared": None, "n_samples": int(tw.shape[0]),
                "low_confidence": True, "window": [high, low]}
    slope, _, r2 = _linear_fit(tw, np.log(fw))
    return {"rate": -slope, "r_squared": r2, "n_samples": int(tw.shape[0]),
            "low_confidence": not reached_low, "window": [high, low]}


def _external_twin_record(base: SimParams, beta: float, delta: float,
                          epsilon: float, seed: int, n_modes: int,
                          n_min: int, n_max: int) -> EchoRecord:
    drive_seed = seed + DRIVE_SEED_OFFSET
    spec0 = HamiltonianSpec.mixed(beta=beta, delta=delta, n_modes=n_modes,
                                  drive_seed=drive_seed)
    spec1 = spec0.with_perturbation(perturbation_for(seed, epsilon, n_min, n_max))
    return run_echo(base, spec0, spec1)


def _fgr_task(args: tuple) -> EchoRecord:
    base, delta, eps, seed, n_modes, n_min, n_max = args
    return _external_twin_record(base, 0.0, delta, eps, seed, n_modes,
                                 n_min, n_max)


def scan_fgr(base: SimParams, delta: float, epsilons, seed: int, *,
             workers: int = 1, n_modes: int = 25, n_min: int = 1,
             n_max: int = 20) -> ScanResult:
    """Golden-rule scan: decay rate vs eps under the external drive.

    Requires the externally driven protocol with the degeneracy pressure
    disabled (vf_ratio = 0), so the unperturbed dynamics is linear in psi
    and the perturbation theory premise holds cleanly.
    """
    if base.vf_ratio != 0.0:
        raise InvalidExperimentError(
            "the decay-rate scan requires vf_ratio=0 (degeneracy pressure off)")
    if delta <= 0:
        raise InvalidExperimentError(
            "the decay-rate scan requires a driven density (delta > 0)")
    epsilons = [float(e) for e in epsilons]
    if any(e < 0 for e in epsilons):
        raise InvalidParameterError("epsilons must be nonnegative")

    tasks = [(base, delta, eps, seed, n_modes, n_min, n_max) for eps in epsilons]
    records = _map_tasks(_fgr_task, tasks, workers)

    points = []
    rate_rows = []
    for eps, record in zip(epsilons, records):
        # a frozen drive would conserve energy; the scan is meaningless then
        if len(record) > 1:
            e_span = float(np.ptp(record.e_total))
            if e_span < 1e-12:
                raise InvalidExperimentError(
                    "total energy did not vary under the time-dependent drive; "
                    "the external density appears frozen")
        fit = _fit_decay_rate(record, FGR_FIT_WINDOW)
        crossing = detect_critical_time(record)
        points.append(ScanPoint(param=eps, tau_c=crossing.tau_c,
                                crossed=crossing.crossed, rate=fit["rate"],
                                fit_quality=fit["r_squared"]))
        rate_rows.append(fit)

    rates = [p.rate for p in points]
    scaled = [r / e ** 2 if (r is not None and e > 0) else None
              for r, e in zip(rates, epsilons)]
    ratios = []
    for (e1, r1), (e2, r2) in zip(zip(epsilons, rates), zip(epsilons[1:], rates[1:])):
        if r1 and r2:
            ratios.append({"eps_pair": [e1, e2], "rate_ratio": r2 / r1,
                           "eps_sq_ratio": (e2 / e1) ** 2})
    metadata = {
        "scan": "fgr",
        "delta": delta,
        "seed": seed,
        "epsilons": epsilons,
        "n_modes": n_modes,
        "fit_window": list(FGR_FIT_WINDOW),
        "rate_fits": rate_rows,
        "rates_over_eps_squared": scaled,
        "adjacent_rate_ratios": ratios,
    }
    return ScanResult(axis_name="epsilon", axis=tuple(epsilons),
                      points=tuple(points), fits={"rate_rows": rate_rows},
                      metadata=metadata, curves=tuple(records))


def _beta_task(args: tuple) -> EchoRecord:
    base, beta, delta, eps, seed, n_modes, n_min, n_max = args
    return _external_twin_record(base, beta, delta, eps, seed, n_modes,
                                 n_min, n_max)


def scan_beta(base: SimParams, delta: float, epsilon: float, betas,
              seed: int, *, workers: int = 1, n_modes: int = 25,
              n_min: int = 1, n_max: int = 20) -> ScanResult:
    """Mixing scan: decay curves as the density interpolates external -> SC.

    Records the full fidelity curve per beta, an early-time decay rate for
    comparison against beta=0, the time-to-threshold, and the time at which
    each curve departs from the beta=0 reference by more than a factor
    BETA_DEPARTURE_FACTOR in -ln F.
    """
    betas = [float(b) for b in betas]
    if any(not (0.0 <= b <= 1.0) for b in betas):
        raise InvalidParameterError("betas must lie in [0, 1]")

    tasks = [(base, b, delta, epsilon, seed, n_modes, n_min, n_max)
             for b in betas]
    records = _map_tasks(_beta_task, tasks, workers)

    reference = None
    for b, record in zip(betas, records):
        if b == 0.0:
            reference = record
            break

    points = []
    departures = []
    rate_rows = []
    for b, record in zip(betas, records):
        fit = _fit_decay_rate(record, BETA_RATE_WINDOW)
        crossing = detect_critical_time(record)
        departure = None
        if reference is not None and record is not reference and len(record):
            n = min(len(record), len(reference))
            with np.errstate(divide="ignore"):
                neg_log = -np.log(record.fidelity[:n])
                neg_log_ref = -np.log(reference.fidelity[:n])
            floor = 1e-12
            mask = (neg_log_ref > floor) & (
                neg_log > BETA_DEPARTURE_FACTOR * neg_log_ref)
            hits = np.nonzero(mask)[0]
            if hits.shape[0]:
                departure = float(record.times[hits[0]])
        departures.append(departure)
        rate_rows.append(fit)
        points.append(ScanPoint(param=b, tau_c=crossing.tau_c,
                                crossed=crossing.crossed, rate=fit["rate"],
                                fit_quality=fit["r_squared"]))

    metadata = {
        "scan": "beta",
        "delta": delta,
        "epsilon": epsilon,
        "seed": seed,
        "betas": betas,
        "n_modes": n_modes,
        "rate_window": list(BETA_RATE_WINDOW),
        "departure_factor": BETA_DEPARTURE_FACTOR,
        "departure_times": departures,
        "rate_fits": rate_rows,
    }
    return ScanResult(axis_name="beta", axis=tuple(betas), points=tuple(points),
                      fits={"rate_rows": rate_rows}, metadata=metadata,
                      curves=tuple(records))


def run_spectrum(params: SimParams, *, window: str = "hann") -> SpectrumResult:
    """Potential-energy spectrum of the unperturbed self-consistent run."""
    from .diagnostics import potential_energy_spectrum
    from .propagator import evolve

    grid = params.grid()
    spec = HamiltonianSpec.self_consistent()
    psi0 = make_initial_state(params, grid)

    times, epot = [], []

    def observe(t: float, psi: WaveField) -> None:
        times.append(t)
        epot.append(energy_components(psi, spec, params, t)[1])

    evolve(psi0, spec, params, observers=[observe])
    series = np.column_stack([np.array(times), np.array(epot)])
    spectrum = potential_energy_spectrum(series, window=window)
    metadata = {
        "scenario": "spectrum",
        "window": window,
        "n_samples": int(series.shape[0]),
        "t_end": params.t_end,
    }
    return SpectrumResult(spectrum=spectrum, epot_series=series,
                          metadata=metadata)
