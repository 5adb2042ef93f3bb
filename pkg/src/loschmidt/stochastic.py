"""Reproducible random-phase generation.

All randomness in the package flows through :func:`generate_phases`, a pure
function of ``(seed, count)`` built on the splitmix64 mixing generator.  The
algorithm and the mapping to ``[0, 2*pi)`` are part of the external contract:
any implementation, in any language, seeded identically must produce the same
phases bit for bit.

Contract
--------
splitmix64 state update and output mix (all arithmetic mod 2**64)::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

Each 64-bit output ``z`` maps to a phase via the top 53 bits::

    phase = (z >> 11) * 2.0**-53 * 2*pi      # in [0, 2*pi)

Known answer: seed 0 produces the output stream
0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, ...

Seed namespaces
---------------
The static perturbation and the traveling-wave drive draw from disjoint seed
namespaces derived from one master seed, so scans can vary perturbation
phases while sharing drive phases (or vice versa):

    perturbation seed = master + PERTURBATION_SEED_OFFSET
    drive seed        = master + DRIVE_SEED_OFFSET
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Offsets defining the two seed namespaces (documented contract).
PERTURBATION_SEED_OFFSET = 0
DRIVE_SEED_OFFSET = 1 << 32

TWO_PI = 2.0 * np.pi


def splitmix64_stream(seed: int, count: int) -> list[int]:
    """Return the first ``count`` raw 64-bit splitmix64 outputs for ``seed``.

    Python integers keep the arithmetic exact; the result is platform
    independent.  Negative or oversized seeds are reduced mod 2**64.
    """
    if count < 1:
        raise InvalidParameterError(f"stream count must be >= 1, got {count}")
    state = seed & _MASK64
    out = []
    for _ in range(count):
        state = (state + _GAMMA) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        z ^= z >> 31
        out.append(z)
    return out


@dataclass(frozen=True)
class PhaseSet:
    """A seed together with the phases it generates, alpha_j in [0, 2*pi)."""

    seed: int
    phases: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.phases.setflags(write=False)

    def __len__(self) -> int:
        return self.phases.shape[0]


def generate_phases(seed: int, count: int) -> PhaseSet:
    """Draw ``count`` uniform phases in [0, 2*pi) from the seeded generator.

    Pure function: same (seed, count) always gives the same PhaseSet, and
    no global generator state exists anywhere in the package.
    """
    if count < 1:
        raise InvalidParameterError(f"phase count must be >= 1, got {count}")
    raw = splitmix64_stream(seed, count)
    # top 53 bits -> exact double in [0, 1) -> scale to [0, 2*pi)
    unit = np.array([(z >> 11) * 2.0 ** -53 for z in raw], dtype=np.float64)
    return PhaseSet(seed=seed & _MASK64, phases=unit * TWO_PI)
