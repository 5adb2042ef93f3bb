"""Dimensionless problem formulation: grid, state, parameters, inner products.

Scaling conventions used throughout the package: time in inverse plasma
frequencies, position x in [-pi, pi) (one period of the initial velocity
wave), velocity in units of the initial velocity amplitude V0, density in
units of the uniform background n0, energies in m*V0^2 per particle.  The
dynamics then depends on three dimensionless numbers:

    K0        normalized wave number of the initial perturbation
    h         normalized Planck constant
    vf_ratio  Fermi velocity over V0

The state is a complex field psi on the periodic grid with mean density
<|psi|^2> = 1.  The evolution equation solved by the propagator module is

    i*h dpsi/dt = -(h^2 K0^2 / 2) d^2psi/dx^2 - Phi psi
                  + (3/10) vf_ratio^2 |psi|^4 psi

with the electrostatic potential Phi from d^2Phi/dx^2 = (|psi|^2 - 1)/K0^2.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import DensityNodeError, GridMismatchError, InvalidParameterError

__all__ = [
    "Grid",
    "WaveField",
    "SimParams",
    "make_initial_state",
    "inner_product",
    "mass",
    "madelung_fields",
    "reflect_indices",
    "reflect_values",
]


@functools.lru_cache(maxsize=32)
def _grid_nodes(n_points: int) -> np.ndarray:
    # Built as (i - N/2)*dx rather than -pi + i*dx so that negation maps
    # nodes onto nodes bit-exactly: -x[i] == x[N-i] for 0 < i < N.
    dx = 2.0 * np.pi / n_points
    nodes = (np.arange(n_points) - n_points // 2) * dx
    nodes.setflags(write=False)
    return nodes


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid of N nodes on [-pi, pi)."""

    n_points: int

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)):
            raise InvalidParameterError(f"n_points must be an integer, got {n!r}")
        if n < 16 or n % 2 != 0:
            raise InvalidParameterError(
                f"n_points must be even and >= 16, got {n}")

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        """Node coordinates x_i = -pi + i*dx, read-only array."""
        return _grid_nodes(self.n_points)


@functools.lru_cache(maxsize=32)
def reflect_indices(n_points: int) -> np.ndarray:
    """Index map i -> (N - i) mod N realizing x -> -x on the grid."""
    idx = (-np.arange(n_points)) % n_points
    idx.setflags(write=False)
    return idx


def reflect_values(values: np.ndarray) -> np.ndarray:
    """Values of the spatially reflected field, psi(-x)."""
    return values[reflect_indices(values.shape[0])]


@dataclass(frozen=True)
class WaveField:
    """Complex field samples on a grid; the state of the electron gas.

    The values array is adopted, not copied: a complex128 input is frozen
    in place (the caller's array becomes read-only too).  The propagator
    builds thousands of these per run, so the constructor stays copy-free.
    """

    values: np.ndarray = field(repr=False)
    grid: Grid

    def __post_init__(self):
        v = self.values
        if v.ndim != 1 or v.shape[0] != self.grid.n_points:
            raise GridMismatchError(
                f"values shape {v.shape} does not match grid N={self.grid.n_points}")
        if v.dtype != np.complex128:
            object.__setattr__(self, "values", v.astype(np.complex128))
        self.values.setflags(write=False)

    @property
    def density(self) -> np.ndarray:
        v = self.values
        return v.real ** 2 + v.imag ** 2

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values.view(np.float64))))


@dataclass(frozen=True)
class SimParams:
    """Dimensionless physics constants plus numerics knobs.

    Physics: K0 > 0, h > 0, vf_ratio >= 0, init_amplitude >= 0.
    Numerics: grid size, time step, end time, sampling cadence, and the
    discrete-operator choices (Poisson symbol, kinetic solver).
    """

    K0: float = 2.0
    h: float = 0.05
    vf_ratio: float = 0.1
    init_amplitude: float = 1.0
    n_points: int = 2048
    dt: float = 1e-3
    t_end: float = 120.0
    sample_every: int = 10
    poisson_symbol: str = "fd"       # "fd" | "spectral"
    kinetic_solver: str = "fft"      # "fft" | "tridiag"
    blowup_threshold: float = 1e6    # abort when max|psi|^2 exceeds this

    def __post_init__(self):
        if not (self.K0 > 0):
            raise InvalidParameterError(f"K0 must be > 0, got {self.K0}")
        if not (self.h > 0):
            raise InvalidParameterError(f"h must be > 0, got {self.h}")
        if not (self.vf_ratio >= 0):
            raise InvalidParameterError(
                f"vf_ratio must be >= 0, got {self.vf_ratio}")
        if not (self.init_amplitude >= 0):
            raise InvalidParameterError(
                f"init_amplitude must be >= 0, got {self.init_amplitude}")
        Grid(self.n_points)  # reuse the grid validation
        if not (self.dt > 0):
            raise InvalidParameterError(f"dt must be > 0, got {self.dt}")
        if not (self.t_end >= 0):
            raise InvalidParameterError(f"t_end must be >= 0, got {self.t_end}")
        if self.sample_every < 1:
            raise InvalidParameterError(
                f"sample_every must be >= 1, got {self.sample_every}")
        if self.poisson_symbol not in ("fd", "spectral"):
            raise InvalidParameterError(
                f"poisson_symbol must be 'fd' or 'spectral', got {self.poisson_symbol!r}")
        if self.kinetic_solver not in ("fft", "tridiag"):
            raise InvalidParameterError(
                f"kinetic_solver must be 'fft' or 'tridiag', got {self.kinetic_solver!r}")
        if not (self.blowup_threshold > 0):
            raise InvalidParameterError(
                f"blowup_threshold must be > 0, got {self.blowup_threshold}")

    # Derived coefficients of the dimensionless evolution equation.
    @property
    def a_kin(self) -> float:
        """Kinetic coefficient h^2 K0^2 / 2."""
        return 0.5 * self.h ** 2 * self.K0 ** 2

    @property
    def a_pois(self) -> float:
        """Poisson coefficient 1 / K0^2."""
        return 1.0 / self.K0 ** 2

    @property
    def c_fermi(self) -> float:
        """Quintic nonlinearity coefficient (3/10) vf_ratio^2."""
        return 0.3 * self.vf_ratio ** 2

    def grid(self) -> Grid:
        return Grid(self.n_points)


def make_initial_state(params: SimParams, grid: Grid) -> WaveField:
    """Uniform-density state with velocity u(x) = -A sin(x).

    psi_i = exp(i A cos(x_i) / (h K0)).  The cosine phase profile is even in
    x, so the state is parity symmetric about x = 0 and the symmetry
    functional starts at exactly 1.
    """
    if grid.n_points != params.n_points:
        raise GridMismatchError(
            f"grid N={grid.n_points} does not match params n_points={params.n_points}")
    hk = params.h * params.K0
    if hk == 0:
        raise InvalidParameterError("h*K0 must be nonzero for the initial phase")
    phase = (params.init_amplitude / hk) * np.cos(grid.nodes)
    return WaveField(values=np.exp(1j * phase), grid=grid)


def mass(psi: WaveField) -> float:
    """Mean density <|psi|^2> (conserved quantity, 1 for physical states)."""
    return float(np.mean(psi.density))


def inner_product(a: WaveField, b: WaveField) -> complex:
    """Grid-mean scalar product (1/N) sum conj(a_i) b_i.

    With unit-mass fields the modulus is bounded by 1 up to roundoff
    (Cauchy-Schwarz), so |result|^2 is a fidelity in [0, 1].
    """
    if a.grid.n_points != b.grid.n_points:
        raise GridMismatchError(
            f"grids differ: N={a.grid.n_points} vs N={b.grid.n_points}")
    return complex(np.vdot(a.values, b.values) / a.grid.n_points)


def madelung_fields(psi: WaveField, params: SimParams):
    """Fluid (density, velocity) representation of the state.

    velocity_i is h*K0 times the centered difference of the unwrapped phase,
    in units of V0.  The phase is unwrapped by nearest branch between
    neighbors, which is well defined while the density stays away from zero.
    Used for diagnostics and validation only, never inside the propagator.
    """
    v = psi.values
    dens = psi.density
    if np.any(np.sqrt(dens) < 1e-8):
        raise DensityNodeError(
            "density too close to zero for a velocity field", density=dens)
    dx = psi.grid.spacing
    # Nearest-branch phase increment between neighbors i -> i+1 (periodic):
    # the argument of psi_{i+1} conj(psi_i) is the increment folded to
    # (-pi, pi], exactly the minimal-|change| branch.
    fwd = np.angle(np.roll(v, -1) * np.conj(v))
    vel = params.h * params.K0 * (fwd + np.roll(fwd, 1)) / (2.0 * dx)
    return dens, vel
