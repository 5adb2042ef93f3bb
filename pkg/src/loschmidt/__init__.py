"""Deterministic 1D mean-field electron gas simulator.

Measures Loschmidt-echo fidelity decay, wave-function symmetry breaking,
and critical-time scaling of a nonlinear Schrodinger-Poisson system under
controlled Hamiltonian perturbations.
"""

__version__ = "0.1.0"

from .core import (
    Grid,
    SimParams,
    WaveField,
    inner_product,
    madelung_fields,
    make_initial_state,
    mass,
    reflect_indices,
    reflect_values,
)
from .diagnostics import (
    ENERGY_COLUMNS,
    CriticalTimeResult,
    EchoRecord,
    detect_critical_time,
    downward_crossings,
    energy_components,
    fidelity,
    potential_energy_spectrum,
    symmetry,
)
from .errors import (
    AliasingError,
    BlowUpError,
    ConfigError,
    DensityNodeError,
    GridMismatchError,
    InvalidExperimentError,
    InvalidParameterError,
    LoschmidtError,
)
from .fields import (
    HamiltonianSpec,
    StaticPerturbation,
    assemble_potential,
    build_external_density,
    drive_potential,
    electrostatic_potential,
    solve_poisson,
)
from .propagator import evolve, kinetic_step, potential_halfstep, step
from .scenarios import (
    ScanPoint,
    ScanResult,
    SpectrumResult,
    default_epsilon_axis,
    perturbation_for,
    run_echo,
    run_spectrum,
    scan_beta,
    scan_fgr,
    scan_tau_c,
)
from .stochastic import (
    DRIVE_SEED_OFFSET,
    PERTURBATION_SEED_OFFSET,
    PhaseSet,
    generate_phases,
    splitmix64_stream,
)

__all__ = [
    "__version__",
    "Grid", "SimParams", "WaveField", "inner_product", "madelung_fields",
    "make_initial_state", "mass", "reflect_indices", "reflect_values",
    "CriticalTimeResult", "EchoRecord", "detect_critical_time",
    "downward_crossings", "energy_components", "fidelity",
    "potential_energy_spectrum", "symmetry", "ENERGY_COLUMNS",
    "AliasingError", "BlowUpError", "ConfigError", "DensityNodeError",
    "GridMismatchError", "InvalidExperimentError", "InvalidParameterError",
    "LoschmidtError",
    "HamiltonianSpec", "StaticPerturbation", "assemble_potential",
    "build_external_density", "drive_potential", "electrostatic_potential",
    "solve_poisson",
    "evolve", "kinetic_step", "potential_halfstep", "step",
    "ScanPoint", "ScanResult", "SpectrumResult", "default_epsilon_axis",
    "perturbation_for", "run_echo", "run_spectrum",
    "scan_beta", "scan_fgr", "scan_tau_c",
    "PhaseSet", "generate_phases", "splitmix64_stream", "DRIVE_SEED_OFFSET",
    "PERTURBATION_SEED_OFFSET",
]
