"""Periodic Poisson solver and assembly of the total potential.

The density fed to Poisson's equation interpolates between a self-consistent
source and an externally prescribed traveling-wave source:

    rho(x, t) = rho_ext(x, t) + beta * (|psi|^2 - 1)

beta = 1 with a trivial external part is the fully self-consistent case,
beta = 0 the fully external one; every spec is normalized to this mixed form
so a single code path exists.  On top of the resulting electrostatic
potential the total potential adds the quintic degeneracy-pressure term and
an optional static multi-mode perturbation eps * W(x).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .core import Grid, SimParams, WaveField, _grid_nodes
from .errors import (
    AliasingError,
    BlowUpError,
    GridMismatchError,
    InvalidParameterError,
)
from .stochastic import generate_phases

__all__ = [
    "StaticPerturbation",
    "HamiltonianSpec",
    "solve_poisson",
    "build_external_density",
    "drive_potential",
    "electrostatic_potential",
    "assemble_potential",
]


@functools.lru_cache(maxsize=64)
def _poisson_inverse_symbol(n_points: int, K0: float, symbol: str) -> np.ndarray:
    """Multipliers turning rfft(rho) into rfft(Phi); mode 0 pinned to zero.

    Solves d^2Phi/dx^2 = (rho - mean(rho)) / K0^2 in the discrete Fourier
    basis: mode j divides by -K0^2 * lambda_j.  Zeroing mode 0 subtracts the
    mean (solvability) and fixes the gauge mean(Phi) = 0 at once.
    """
    dx = 2.0 * np.pi / n_points
    j = np.arange(n_points // 2 + 1, dtype=np.float64)
    if symbol == "fd":
        lam = (2.0 - 2.0 * np.cos(j * dx)) / dx ** 2  # centered second difference
    elif symbol == "spectral":
        lam = j ** 2
    else:
        raise InvalidParameterError(f"unknown poisson symbol {symbol!r}")
    inv = np.zeros(n_points // 2 + 1)
    inv[1:] = -1.0 / (K0 ** 2 * lam[1:])
    inv.setflags(write=False)
    return inv


def solve_poisson(density: np.ndarray, params: SimParams) -> np.ndarray:
    """Zero-mean periodic solution Phi of d^2Phi/dx^2 = (rho - mean)/K0^2."""
    density = np.asarray(density, dtype=np.float64)
    if density.shape != (params.n_points,):
        raise GridMismatchError(
            f"density shape {density.shape} does not match N={params.n_points}")
    if not np.all(np.isfinite(density)):
        raise BlowUpError("non-finite density passed to the Poisson solver")
    inv = _poisson_inverse_symbol(params.n_points, params.K0, params.poisson_symbol)
    return np.fft.irfft(np.fft.rfft(density) * inv, n=params.n_points)


@functools.lru_cache(maxsize=32)
def _perturbation_profile(n_points: int, n_min: int, phases: tuple) -> np.ndarray:
    x = _grid_nodes(n_points)
    w = np.zeros(n_points)
    for k, alpha in enumerate(phases):
        j = n_min + k
        w += np.cos(j * x + alpha)
    w.setflags(write=False)
    return w


@dataclass(frozen=True)
class StaticPerturbation:
    """Static multi-mode potential perturbation eps * W(x).

    W(x) = sum_{j=n_min}^{n_max} cos(j*x + alpha_j) with phases drawn once
    from the seeded generator (or given explicitly for controlled setups).
    The cached profile is immutable after first evaluation on a grid.
    """

    epsilon: float
    n_min: int = 1
    n_max: int = 20
    phase_seed: int | None = None
    phases: tuple = None

    def __post_init__(self):
        if not (self.epsilon >= 0):
            raise InvalidParameterError(
                f"perturbation epsilon must be >= 0, got {self.epsilon}")
        if not (1 <= self.n_min <= self.n_max):
            raise InvalidParameterError(
                f"need 1 <= n_min <= n_max, got n_min={self.n_min} n_max={self.n_max}")
        count = self.n_max - self.n_min + 1
        if self.phases is None:
            if self.phase_seed is None:
                raise InvalidParameterError(
                    "perturbation needs a phase_seed or explicit phases")
            object.__setattr__(
                self, "phases",
                tuple(generate_phases(self.phase_seed, count).phases))
        elif len(self.phases) != count:
            raise InvalidParameterError(
                f"expected {count} phases for modes {self.n_min}..{self.n_max}, "
                f"got {len(self.phases)}")
        else:
            object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))

    def profile(self, grid: Grid) -> np.ndarray:
        """The raw profile W on the grid (without the eps factor)."""
        if self.n_max >= grid.n_points // 2:
            raise AliasingError(
                f"perturbation mode {self.n_max} is not representable on an "
                f"N={grid.n_points} grid (need n_max < N/2)")
        return _perturbation_profile(grid.n_points, self.n_min, self.phases)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Density source for Poisson plus the optional static perturbation.

    Normalized mixed form: rho = rho_ext(t) + beta*(|psi|^2 - 1) with
    rho_ext = 1 + delta * sum_{j=1}^{n_modes} j^2 cos(j*x - t + alpha'_j).
    The j^2 weight makes every mode of the drive potential equally strong
    (Poisson divides by j^2), which is what piles up overlapping resonances.
    """

    beta: float = 1.0
    delta: float = 0.0
    n_modes: int = 25
    drive_seed: int | None = None
    drive_phases: tuple = None
    perturbation: StaticPerturbation | None = None
    source_kind: str = "mixed"

    def __post_init__(self):
        if not (0.0 <= self.beta <= 1.0):
            raise InvalidParameterError(f"beta must be in [0, 1], got {self.beta}")
        if not (self.delta >= 0):
            raise InvalidParameterError(f"delta must be >= 0, got {self.delta}")
        if self.delta > 0:
            if self.n_modes < 1:
                raise InvalidParameterError(
                    f"n_modes must be >= 1 for a driven density, got {self.n_modes}")
            if self.drive_phases is None:
                if self.drive_seed is None:
                    raise InvalidParameterError(
                        "driven density needs a drive_seed or explicit drive_phases")
                object.__setattr__(
                    self, "drive_phases",
                    tuple(generate_phases(self.drive_seed, self.n_modes).phases))
            elif len(self.drive_phases) != self.n_modes:
                raise InvalidParameterError(
                    f"expected {self.n_modes} drive phases, got {len(self.drive_phases)}")
            else:
                object.__setattr__(
                    self, "drive_phases", tuple(float(p) for p in self.drive_phases))

    @classmethod
    def self_consistent(cls, perturbation: StaticPerturbation | None = None
                        ) -> "HamiltonianSpec":
        return cls(beta=1.0, delta=0.0, perturbation=perturbation,
                   source_kind="self-consistent")

    @classmethod
    def external(cls, delta: float, n_modes: int = 25,
                 drive_seed: int | None = None, drive_phases: tuple = None,
                 perturbation: StaticPerturbation | None = None
                 ) -> "HamiltonianSpec":
        return cls(beta=0.0, delta=delta, n_modes=n_modes, drive_seed=drive_seed,
                   drive_phases=drive_phases, perturbation=perturbation,
                   source_kind="external")

    @classmethod
    def mixed(cls, beta: float, delta: float, n_modes: int = 25,
              drive_seed: int | None = None, drive_phases: tuple = None,
              perturbation: StaticPerturbation | None = None
              ) -> "HamiltonianSpec":
        return cls(beta=beta, delta=delta, n_modes=n_modes, drive_seed=drive_seed,
                   drive_phases=drive_phases, perturbation=perturbation,
                   source_kind="mixed")

    def with_perturbation(self, perturbation: StaticPerturbation | None
                          ) -> "HamiltonianSpec":
        """Same density source, different static perturbation."""
        return HamiltonianSpec(
            beta=self.beta, delta=self.delta, n_modes=self.n_modes,
            drive_seed=self.drive_seed, drive_phases=self.drive_phases,
            perturbation=perturbation, source_kind=self.source_kind)

    def same_density_source(self, other: "HamiltonianSpec") -> bool:
        return (self.beta == other.beta and self.delta == other.delta
                and self.n_modes == other.n_modes
                and self.drive_phases == other.drive_phases)


@functools.lru_cache(maxsize=32)
def _drive_basis(n_points: int, phases: tuple) -> tuple:
    """Time-independent quadrature pair of the traveling-wave density.

    With a_j(x) = j*x + alpha'_j the drive sum_j j^2 cos(a_j - t) equals
    cos(t)*Dc + sin(t)*Ds where Dc = sum j^2 cos a_j, Ds = sum j^2 sin a_j.
    """
    x = _grid_nodes(n_points)
    dc = np.zeros(n_points)
    ds = np.zeros(n_points)
    for k, alpha in enumerate(phases):
        j = k + 1
        if j >= n_points // 2:
            raise AliasingError(
                f"drive mode {j} is not representable on an N={n_points} grid")
        a = j * x + alpha
        dc += j ** 2 * np.cos(a)
        ds += j ** 2 * np.sin(a)
    dc.setflags(write=False)
    ds.setflags(write=False)
    return dc, ds


@functools.lru_cache(maxsize=32)
def _drive_potential_basis(n_points: int, phases: tuple, K0: float,
                           symbol: str) -> tuple:
    """Poisson-solved counterpart of the drive basis (unit delta)."""
    dc, ds = _drive_basis(n_points, phases)
    inv = _poisson_inverse_symbol(n_points, K0, symbol)
    pc = np.fft.irfft(np.fft.rfft(dc) * inv, n=n_points)
    ps = np.fft.irfft(np.fft.rfft(ds) * inv, n=n_points)
    pc.setflags(write=False)
    ps.setflags(write=False)
    return pc, ps


def build_external_density(spec: HamiltonianSpec, grid: Grid, t: float
                           ) -> np.ndarray:
    """External density rho_ext(x, t) = 1 + delta sum_j j^2 cos(j*x - t + a'_j)."""
    if spec.delta == 0:
        return np.ones(grid.n_points)
    if spec.n_modes >= grid.n_points // 2:
        raise AliasingError(
            f"drive mode {spec.n_modes} is not representable on an "
            f"N={grid.n_points} grid (need n_modes < N/2)")
    dc, ds = _drive_basis(grid.n_points, spec.drive_phases)
    return 1.0 + spec.delta * (np.cos(t) * dc + np.sin(t) * ds)


def drive_potential(spec: HamiltonianSpec, params: SimParams, t: float
                    ) -> np.ndarray | None:
    """Electrostatic potential of the external density part, or None if delta=0."""
    if spec.delta == 0:
        return None
    if spec.n_modes >= params.n_points // 2:
        raise AliasingError(
            f"drive mode {spec.n_modes} is not representable on an "
            f"N={params.n_points} grid (need n_modes < N/2)")
    pc, ps = _drive_potential_basis(
        params.n_points, spec.drive_phases, params.K0, params.poisson_symbol)
    return spec.delta * (np.cos(t) * pc + np.sin(t) * ps)


def electrostatic_potential(spec: HamiltonianSpec, psi: WaveField,
                            params: SimParams, t: float) -> np.ndarray:
    """Potential of the full mixed density rho_ext + beta*(|psi|^2 - 1).

    Assembled by linearity of the Poisson solve: the time-dependent external
    part comes from a precomputed quadrature basis, the self-consistent part
    from one solve on the instantaneous density.
    """
    phi = None
    if spec.beta != 0.0:
        phi = solve_poisson(psi.density, params)
        if spec.beta != 1.0:
            phi = spec.beta * phi
    ext = drive_potential(spec, params, t)
    if ext is not None:
        phi = ext if phi is None else phi + ext
    if phi is None:
        phi = np.zeros(params.n_points)
    return phi


def assemble_potential(spec: HamiltonianSpec, psi: WaveField,
                       params: SimParams, t: float) -> np.ndarray:
    """Total potential V = -Phi + c_fermi |psi|^4 + eps W, in m V0^2 units."""
    if psi.grid.n_points != params.n_points:
        raise GridMismatchError(
            f"state N={psi.grid.n_points} does not match params N={params.n_points}")
    v = -electrostatic_potential(spec, psi, params, t)
    if params.c_fermi != 0.0:
        dens = psi.density
        v += params.c_fermi * dens * dens
    pert = spec.perturbation
    if pert is not None and pert.epsilon != 0.0:
        v += pert.epsilon * pert.profile(psi.grid)
    return v
