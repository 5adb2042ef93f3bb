"""Measured quantities: fidelity, symmetry, energies, spectra, critical times.

All diagnostics are pure functions over states or sampled series.  Grid
means double as the quadrature everywhere: on a uniform periodic grid the
trapezoid and midpoint rules coincide and are spectrally accurate for
smooth integrands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SimParams, WaveField, inner_product, reflect_values
from .errors import InvalidParameterError
from .fields import HamiltonianSpec, electrostatic_potential

__all__ = [
    "EchoRecord",
    "CriticalTimeResult",
    "fidelity",
    "symmetry",
    "energy_components",
    "potential_energy_spectrum",
    "downward_crossings",
    "detect_critical_time",
]

ENERGY_COLUMNS = ("e_kin", "e_pot", "e_fermi", "e_pert", "e_total")


@dataclass(frozen=True)
class EchoRecord:
    """Sampled time series of a twin run.

    Energies are those of the perturbed trajectory, in m V0^2 per particle.
    ``truncated`` flags a run aborted by blow-up; the sampled prefix is
    still valid and ``blowup`` carries the abort diagnostics.
    """

    times: np.ndarray
    fidelity: np.ndarray
    symmetry: np.ndarray
    e_kin: np.ndarray
    e_pot: np.ndarray
    e_fermi: np.ndarray
    e_pert: np.ndarray
    e_total: np.ndarray
    truncated: bool = False
    blowup: dict | None = None

    def __post_init__(self):
        n = self.times.shape[0]
        for name in ("fidelity", "symmetry") + ENERGY_COLUMNS:
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise InvalidParameterError(
                    f"echo record column {name} has length {arr.shape}, expected {n}")
        if n > 0:
            if np.any(np.diff(self.times) <= 0):
                raise InvalidParameterError("sample times must strictly increase")
            if abs(self.fidelity[0] - 1.0) > 1e-10:
                raise InvalidParameterError(
                    f"fidelity must start at 1, got {self.fidelity[0]!r}")
            if self.fidelity.min() < -1e-12 or self.fidelity.max() > 1.0 + 1e-9:
                raise InvalidParameterError("fidelity outside [0, 1 + 1e-9]")

    def __len__(self) -> int:
        return self.times.shape[0]

    @classmethod
    def empty(cls) -> "EchoRecord":
        z = np.zeros(0)
        return cls(times=z, fidelity=z, symmetry=z, e_kin=z, e_pot=z,
                   e_fermi=z, e_pert=z, e_total=z)


@dataclass(frozen=True)
class CriticalTimeResult:
    """First time the fidelity falls to the threshold, if it ever does."""

    tau_c: float | None
    threshold: float = 0.1
    crossed: bool = False
    crossings: tuple = ()

    def __post_init__(self):
        if self.crossed and self.tau_c is None:
            raise InvalidParameterError("crossed result must carry tau_c")


def fidelity(psi_unperturbed: WaveField, psi_perturbed: WaveField) -> float:
    """Squared overlap |<a|b>|^2 of the twin states, in [0, 1]."""
    return abs(inner_product(psi_unperturbed, psi_perturbed)) ** 2


def symmetry(psi: WaveField) -> float:
    """Parity functional: 1 for even states, decaying as parity breaks.

    Sigma = |(2/L) integral_0^{L/2} psi(x) conj(psi(-x)) dx|^2, discretized
    by the trapezoid rule on the half interval [0, pi].  The endpoint
    half-weights make Sigma equal exactly (mean density)^2 = 1 for even
    unit-mass states.
    """
    n = psi.grid.n_points
    if n % 2 != 0:
        raise InvalidParameterError("symmetry needs an even grid size")
    v = psi.values
    q = v * np.conj(reflect_values(v))
    half = n // 2
    # trapezoid over x in [0, pi]: x=0 is node half, x=pi is node 0 (periodic)
    s = 0.5 * (q[half] + q[0]) + q[half + 1:].sum()
    return abs(s * (2.0 / n)) ** 2


def energy_components(psi: WaveField, spec: HamiltonianSpec, params: SimParams,
                      t: float) -> tuple:
    """(E_kin, E_pot, E_fermi, E_pert, E_total) in m V0^2 per particle.

    Derivatives use the same centered difference as the propagator.  The
    kinetic term contains the quantum (Bohm) energy automatically through
    the phase-and-amplitude gradients of psi.
    """
    v = psi.values
    dx = psi.grid.spacing
    dpsi = (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * dx)
    e_kin = params.a_kin * float(np.mean(dpsi.real ** 2 + dpsi.imag ** 2))

    phi = electrostatic_potential(spec, psi, params, t)
    dphi = (np.roll(phi, -1) - np.roll(phi, 1)) / (2.0 * dx)
    e_pot = 0.5 * params.K0 ** 2 * float(np.mean(dphi ** 2))

    dens = psi.density
    e_fermi = 0.1 * params.vf_ratio ** 2 * float(np.mean(dens ** 3))

    e_pert = 0.0
    pert = spec.perturbation
    if pert is not None and pert.epsilon != 0.0:
        e_pert = pert.epsilon * float(np.mean(pert.profile(psi.grid) * dens))

    return (e_kin, e_pot, e_fermi, e_pert, e_kin + e_pot + e_fermi + e_pert)


def potential_energy_spectrum(series: np.ndarray, window: str = "hann"
                              ) -> np.ndarray:
    """One-sided power spectrum of a uniformly sampled E_pot history.

    ``series`` is an (M, 2) array of rows (t, E_pot) with M >= 256.  Returns
    an (M//2 + 1, 2) array of rows (omega, power) with omega in plasma
    frequency units.  The mean is removed; a Hann window is applied unless
    window="none".
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2 or series.shape[1] != 2:
        raise InvalidParameterError("series must be an (M, 2) array of (t, E_pot)")
    m = series.shape[0]
    if m < 256:
        raise InvalidParameterError(f"need at least 256 samples, got {m}")
    t = series[:, 0]
    steps = np.diff(t)
    dt = steps[0]
    if not (dt > 0) or np.any(np.abs(steps - dt) > 1e-9 * max(dt, 1e-30)):
        raise InvalidParameterError("spectrum requires uniform sampling in time")
    if window not in ("hann", "none"):
        raise InvalidParameterError(f"window must be 'hann' or 'none', got {window!r}")

    e = series[:, 1] - np.mean(series[:, 1])
    if window == "hann":
        e = e * np.hanning(m)
    power = np.abs(np.fft.rfft(e)) ** 2
    omega = 2.0 * np.pi * np.arange(power.shape[0]) / (m * dt)
    return np.column_stack([omega, power])


def downward_crossings(times: np.ndarray, values: np.ndarray, threshold: float
                       ) -> tuple:
    """Interpolated times of every downward crossing through the threshold."""
    above = values > threshold
    out = []
    for k in range(1, values.shape[0]):
        if above[k - 1] and not above[k]:
            frac = (values[k - 1] - threshold) / (values[k - 1] - values[k])
            out.append(float(times[k - 1] + frac * (times[k] - times[k - 1])))
    return tuple(out)


def detect_critical_time(record: EchoRecord, threshold: float = 0.1
                         ) -> CriticalTimeResult:
    """First downward crossing of the fidelity through the threshold.

    The crossing time is refined by linear interpolation between the
    bracketing samples.  All downward crossings are recorded (the fidelity
    of a chaotic run can graze the threshold more than once); tau_c is the
    first one.
    """
    if len(record) == 0:
        raise InvalidParameterError("cannot detect crossings in an empty record")
    crossings = downward_crossings(record.times, record.fidelity, threshold)
    if not crossings:
        return CriticalTimeResult(tau_c=None, threshold=threshold, crossed=False)
    return CriticalTimeResult(tau_c=crossings[0], threshold=threshold,
                              crossed=True, crossings=crossings)
