"""Exception hierarchy for the loschmidt package.

Everything raised on purpose derives from LoschmidtError so callers can
catch simulator failures without swallowing programming errors.  Most
validation errors also derive from ValueError for ergonomic use in tests.
"""

from __future__ import annotations


class LoschmidtError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(LoschmidtError, ValueError):
    """A physics or numerics parameter is out of its allowed range."""


class GridMismatchError(LoschmidtError, ValueError):
    """Two fields that must share a grid were built on different grids."""


class DensityNodeError(LoschmidtError, ValueError):
    """The density has a near-zero node, so the velocity field is undefined.

    The density itself is still well defined and is attached as
    ``self.density`` for callers that only need it.
    """

    def __init__(self, message: str, density=None):
        super().__init__(message)
        self.density = density


class AliasingError(LoschmidtError, ValueError):
    """A requested spatial mode is not representable on the grid."""


class BlowUpError(LoschmidtError):
    """The state became non-finite or exceeded the density cap.

    Attributes carry the abort diagnostics: step index, simulation time and
    the maximum density observed.
    """

    def __init__(self, message: str, step: int | None = None,
                 t: float | None = None, max_density: float | None = None):
        super().__init__(message)
        self.step = step
        self.t = t
        self.max_density = max_density


class InvalidExperimentError(LoschmidtError, ValueError):
    """An experiment was set up outside its supported protocol."""


class ConfigError(LoschmidtError, ValueError):
    """Configuration parsing or validation failed.

    ``key`` holds the dotted path of the offending entry when known.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
