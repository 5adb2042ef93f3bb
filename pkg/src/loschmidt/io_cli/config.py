"""Configuration schema, parsing, and validation.

Configs are flat dotted key-value files (``physics.h = 0.025``, ``#``
comments) or JSON; CLI flags override file values.  Every key has a
documented default, several defaults depend on the scenario, and unknown
keys are hard errors so typos cannot silently fall back to defaults.  The
fully resolved config is echoed into each run's metadata, which is enough
to reproduce the run exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..core import SimParams
from ..errors import ConfigError
from ..fields import HamiltonianSpec, StaticPerturbation
from ..stochastic import DRIVE_SEED_OFFSET, PERTURBATION_SEED_OFFSET

SCENARIOS = ("echo", "spectrum", "tauc-scan", "fgr-scan", "beta-scan")

_TAUC_EPSILONS = [10.0 ** k for k in range(-9, -2)]


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _coerce_float(key, value):
    if not _is_number(value):
        raise ConfigError(f"{key}: expected a number, got {value!r}", key=key)
    return float(value)


def _coerce_int(key, value):
    if isinstance(value, bool) or not isinstance(value, int):
        if _is_number(value) and float(value).is_integer():
            return int(value)
        raise ConfigError(f"{key}: expected an integer, got {value!r}", key=key)
    return int(value)


def _coerce_float_list(key, value):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{key}: expected a nonempty list of numbers, "
                          f"got {value!r}", key=key)
    out = []
    for v in value:
        if not _is_number(v):
            raise ConfigError(f"{key}: expected numbers, got {v!r}", key=key)
        out.append(float(v))
    return out


def _coerce_int_list(key, value):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{key}: expected a nonempty list of integers, "
                          f"got {value!r}", key=key)
    return [_coerce_int(key, v) for v in value]


def _coerce_choice(choices):
    def coerce(key, value):
        if value not in choices:
            raise ConfigError(f"{key}: expected one of {choices}, got {value!r}",
                              key=key)
        return value
    return coerce


def _coerce_optional_int(key, value):
    if value is None:
        return None
    return _coerce_int(key, value)


# key -> (coercion, global default).  None defaults are resolved later
# (seed namespaces) or scenario-dependent (see _SCENARIO_DEFAULTS).
_SCHEMA = {
    "scenario": (_coerce_choice(SCENARIOS), None),
    "seed": (_coerce_int, 1),
    "workers": (_coerce_int, 1),
    "physics.K0": (_coerce_float, 2.0),
    "physics.h": (_coerce_float, 0.05),
    "physics.vf_ratio": (_coerce_float, 0.1),
    "physics.init_amplitude": (_coerce_float, 1.0),
    "numerics.n_points": (_coerce_int, 2048),
    "numerics.dt": (_coerce_float, 1e-3),
    "numerics.t_end": (_coerce_float, None),
    "numerics.sample_every": (_coerce_int, 10),
    "numerics.poisson_symbol": (_coerce_choice(("fd", "spectral")), "fd"),
    "numerics.kinetic_solver": (_coerce_choice(("fft", "tridiag")), "fft"),
    "numerics.blowup_threshold": (_coerce_float, 1e6),
    "hamiltonian.source": (_coerce_choice(("self-consistent", "external",
                                           "mixed")), "self-consistent"),
    "hamiltonian.beta": (_coerce_float, 1.0),
    "hamiltonian.delta": (_coerce_float, 0.0),
    "hamiltonian.n_modes": (_coerce_int, 25),
    "hamiltonian.drive_seed": (_coerce_optional_int, None),
    "perturbation.epsilon": (_coerce_float, 1e-9),
    "perturbation.n_min": (_coerce_int, 1),
    "perturbation.n_max": (_coerce_int, 20),
    "perturbation.seed": (_coerce_optional_int, None),
    "scan.epsilons": (_coerce_float_list, list(_TAUC_EPSILONS)),
    "scan.h_values": (_coerce_float_list, [0.05]),
    "scan.betas": (_coerce_float_list, [0.0, 0.01, 0.03, 0.1, 0.3]),
    "scan.seeds": (lambda k, v: _coerce_int_list(k, v) if v is not None else None,
                   None),
    "spectrum.window": (_coerce_choice(("hann", "none")), "hann"),
    "diagnostics.threshold": (_coerce_float, 0.1),
    "diagnostics.symmetry_source": (_coerce_choice(("perturbed",
                                                    "unperturbed")), "perturbed"),
}

# Scenario-dependent defaults, applied below global defaults but above
# nothing: any user-provided value still wins.
_SCENARIO_DEFAULTS = {
    "echo": {
        "numerics.t_end": 120.0,
    },
    "spectrum": {
        "numerics.t_end": 200.0,
        "perturbation.epsilon": 0.0,
    },
    "tauc-scan": {
        "numerics.t_end": 110.0,
        "scan.epsilons": list(_TAUC_EPSILONS),
    },
    "fgr-scan": {
        "numerics.t_end": 300.0,
        "physics.h": 0.025,
        "physics.vf_ratio": 0.0,
        "hamiltonian.source": "external",
        "hamiltonian.delta": 0.5,
        "scan.epsilons": [5e-4, 1e-3, 2e-3],
    },
    "beta-scan": {
        # long horizon: the weakly mixed curves cross F=0.1 only near t=280
        "numerics.t_end": 360.0,
        "physics.h": 0.025,
        "physics.vf_ratio": 0.0,
        "hamiltonian.source": "mixed",
        "hamiltonian.delta": 0.5,
        "perturbation.epsilon": 1e-3,
    },
}

# Short CLI flags -> dotted keys.
CLI_ALIASES = {
    "epsilon": "perturbation.epsilon",
    "h": "physics.h",
    "K0": "physics.K0",
    "vf": "physics.vf_ratio",
    "amplitude": "physics.init_amplitude",
    "N": "numerics.n_points",
    "dt": "numerics.dt",
    "t-end": "numerics.t_end",
    "t_end": "numerics.t_end",
    "beta": "hamiltonian.beta",
    "delta": "hamiltonian.delta",
    "seed": "seed",
    "workers": "workers",
}


def _flatten(prefix: str, obj, out: dict) -> None:
    for k, v in obj.items():
        dotted = f"{prefix}.{k}" if prefix else str(k)
        if isinstance(v, dict):
            _flatten(dotted, v, out)
        else:
            out[dotted] = v


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse flat ``key = value`` lines; values are JSON fragments."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value  # bare string (e.g. scenario names)
    return out


def load_config_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: invalid JSON: {err}") from err
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top-level JSON must be an object")
        flat = {}
        _flatten("", data, flat)
        return flat
    return parse_config_text(text, source=path)


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully resolved configuration for one scenario run."""

    scenario: str
    values: dict = field(repr=False)

    def __getitem__(self, key: str):
        return self.values[key]

    # --- seed namespaces -------------------------------------------------
    @property
    def seed(self) -> int:
        return self.values["seed"]

    @property
    def drive_seed(self) -> int:
        explicit = self.values["hamiltonian.drive_seed"]
        return explicit if explicit is not None else self.seed + DRIVE_SEED_OFFSET

    @property
    def perturbation_seed(self) -> int:
        explicit = self.values["perturbation.seed"]
        return (explicit if explicit is not None
                else self.seed + PERTURBATION_SEED_OFFSET)

    # --- object builders --------------------------------------------------
    def sim_params(self, **overrides) -> SimParams:
        kw = dict(
            K0=self.values["physics.K0"],
            h=self.values["physics.h"],
            vf_ratio=self.values["physics.vf_ratio"],
            init_amplitude=self.values["physics.init_amplitude"],
            n_points=self.values["numerics.n_points"],
            dt=self.values["numerics.dt"],
            t_end=self.values["numerics.t_end"],
            sample_every=self.values["numerics.sample_every"],
            poisson_symbol=self.values["numerics.poisson_symbol"],
            kinetic_solver=self.values["numerics.kinetic_solver"],
            blowup_threshold=self.values["numerics.blowup_threshold"],
        )
        kw.update(overrides)
        return SimParams(**kw)

    def perturbation(self, epsilon: float | None = None
                     ) -> StaticPerturbation | None:
        eps = self.values["perturbation.epsilon"] if epsilon is None else epsilon
        if eps == 0.0:
            return None
        return StaticPerturbation(
            epsilon=eps,
            n_min=self.values["perturbation.n_min"],
            n_max=self.values["perturbation.n_max"],
            phase_seed=self.perturbation_seed)

    def density_source(self) -> HamiltonianSpec:
        source = self.values["hamiltonian.source"]
        if source == "self-consistent":
            return HamiltonianSpec.self_consistent()
        if source == "external":
            return HamiltonianSpec.external(
                delta=self.values["hamiltonian.delta"],
                n_modes=self.values["hamiltonian.n_modes"],
                drive_seed=self.drive_seed)
        return HamiltonianSpec.mixed(
            beta=self.values["hamiltonian.beta"],
            delta=self.values["hamiltonian.delta"],
            n_modes=self.values["hamiltonian.n_modes"],
            drive_seed=self.drive_seed)

    def spec_pair(self) -> tuple:
        """(unperturbed, perturbed) Hamiltonians for a twin run."""
        base = self.density_source()
        return base, base.with_perturbation(self.perturbation())

    def effective(self) -> dict:
        """JSON-ready echo of every resolved key, including derived seeds."""
        out = {"scenario": self.scenario}
        out.update({k: self.values[k] for k in sorted(self.values)})
        out["resolved.drive_seed"] = self.drive_seed
        out["resolved.perturbation_seed"] = self.perturbation_seed
        return out


def _validate(values: dict, scenario: str) -> None:
    def bad(key, msg):
        raise ConfigError(f"{key}: {msg} (got {values[key]!r})", key=key)

    if values["physics.K0"] <= 0:
        bad("physics.K0", "must be > 0")
    if values["physics.h"] <= 0:
        bad("physics.h", "must be > 0")
    if values["physics.vf_ratio"] < 0:
        bad("physics.vf_ratio", "must be >= 0")
    if values["physics.init_amplitude"] < 0:
        bad("physics.init_amplitude", "must be >= 0")
    n = values["numerics.n_points"]
    if n < 16 or n % 2 != 0:
        bad("numerics.n_points", "must be even and >= 16")
    if values["numerics.dt"] <= 0:
        bad("numerics.dt", "must be > 0")
    if values["numerics.t_end"] <= 0:
        bad("numerics.t_end", "must be > 0")
    if values["numerics.sample_every"] < 1:
        bad("numerics.sample_every", "must be >= 1")
    if values["numerics.blowup_threshold"] <= 0:
        bad("numerics.blowup_threshold", "must be > 0")
    if not (0.0 <= values["hamiltonian.beta"] <= 1.0):
        bad("hamiltonian.beta", "must be in [0, 1]")
    if values["hamiltonian.delta"] < 0:
        bad("hamiltonian.delta", "must be >= 0")
    if values["hamiltonian.n_modes"] < 1:
        bad("hamiltonian.n_modes", "must be >= 1")
    if values["hamiltonian.n_modes"] >= n // 2:
        bad("hamiltonian.n_modes", f"must be < N/2 = {n // 2}")
    if values["perturbation.epsilon"] < 0:
        bad("perturbation.epsilon", "must be >= 0")
    if not (1 <= values["perturbation.n_min"] <= values["perturbation.n_max"]):
        bad("perturbation.n_min", "need 1 <= n_min <= n_max")
    if values["perturbation.n_max"] >= n // 2:
        bad("perturbation.n_max", f"must be < N/2 = {n // 2}")
    if values["workers"] < 1:
        bad("workers", "must be >= 1")
    if any(e <= 0 for e in values["scan.epsilons"]) and scenario == "tauc-scan":
        bad("scan.epsilons", "must all be > 0")
    if sorted(values["scan.epsilons"]) != values["scan.epsilons"]:
        bad("scan.epsilons", "must be sorted ascending")
    if any(h <= 0 for h in values["scan.h_values"]):
        bad("scan.h_values", "must all be > 0")
    if any(not (0.0 <= b <= 1.0) for b in values["scan.betas"]):
        bad("scan.betas", "must all be in [0, 1]")
    if not (0.0 < values["diagnostics.threshold"] < 1.0):
        bad("diagnostics.threshold", "must be in (0, 1)")


def build_config(file_values: dict | None = None,
                 override_values: dict | None = None,
                 scenario: str | None = None) -> RunConfig:
    """Merge defaults, scenario defaults, file values, and CLI overrides.

    Precedence (low to high): global defaults, scenario defaults, config
    file, CLI overrides.  Unknown keys anywhere are errors.
    """
    file_values = dict(file_values or {})
    override_values = dict(override_values or {})

    for source in (file_values, override_values):
        for key in source:
            if key not in _SCHEMA:
                raise ConfigError(f"unknown config key {key!r}", key=key)

    merged_inputs = {}
    merged_inputs.update(file_values)
    merged_inputs.update(override_values)

    scen = scenario or merged_inputs.get("scenario")
    if scen is None:
        raise ConfigError("scenario: missing (give it on the command line or "
                          "as 'scenario = <name>' in the config)",
                          key="scenario")
    scen = _SCHEMA["scenario"][0]("scenario", scen)
    if "scenario" in merged_inputs and merged_inputs["scenario"] != scen:
        raise ConfigError(
            f"scenario: command line says {scen!r} but config says "
            f"{merged_inputs['scenario']!r}", key="scenario")

    values = {}
    scen_defaults = _SCENARIO_DEFAULTS.get(scen, {})
    for key, (coerce, default) in _SCHEMA.items():
        if key == "scenario":
            continue
        raw = merged_inputs.get(key, scen_defaults.get(key, default))
        values[key] = coerce(key, raw) if raw is not None else None

    _validate(values, scen)
    return RunConfig(scenario=scen, values=values)
