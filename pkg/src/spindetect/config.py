"""Strict JSON run configuration.

A run is fully described by one JSON document.  The schema is strict: any
key the parser does not recognize raises :class:`ConfigError` naming the
offending dotted path, and a ``schema_version`` field guards against stale
files.  All physical quantities carry SI units, spelled out in the field
names (``kappa_per_s``, ``g_rad_per_s``, ``b0_T``, ...).

Top-level layout::

    {
      "schema_version": 1,
      "system": "nv" | "bi" | "sim" | "custom",
      "model":       { ... spin-resonator dynamics overrides ... },
      "resonator":   { ... electrical parameters ... },
      "geometry":    { ... nanowire geometry ... },
      "spin_point_m": [x, y],
      "nv":          { ... NV Hamiltonian parameters ... },
      "bi":          { ... bismuth-donor Hamiltonian parameters ... },
      "levels":      { "b_min_T": ..., "b_max_T": ..., "steps": ... },
      "run":         { trials, duration, dt, seed, eta list, ... }
    }

``system`` selects a preset baseline; every other section overrides
individual fields of that baseline.  Parsing resolves the overrides, so a
serialized config is always fully explicit and ``parse -> serialize ->
parse`` is idempotent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .device import NanowireGeometry, ResonatorParams
from .dynamics import ModelParams
from .errors import ConfigError
from .presets import (
    DeviceBundle,
    device_bundle,
    model_for_bundle,
    sim_model,
)
from .spins import BiParams, NVParams

__all__ = [
    "SCHEMA_VERSION",
    "LevelsSettings",
    "RunSettings",
    "RunConfig",
    "config_from_preset",
    "load_config",
    "parse_config",
    "serialize_config",
]

SCHEMA_VERSION = 1

SYSTEMS = ("nv", "bi", "sim", "custom")

DEFAULT_TRIALS = 3000
DEFAULT_DURATION_TAU1 = 20.0
DEFAULT_MASTER_SEED = 12345
DEFAULT_PRIOR = 0.5


# ---------------------------------------------------------------------------
# strict-dict helpers
# ---------------------------------------------------------------------------

def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return dict(value)


def _reject_unknown(d: dict, path: str) -> None:
    if d:
        keys = ", ".join(f"{path}.{k}" if path else str(k) for k in sorted(d))
        raise ConfigError(f"unknown field(s): {keys}")


def _pop_number(d: dict, key: str, path: str, default=None, *,
                required: bool = False, allow_none: bool = False):
    if key not in d:
        if required:
            raise ConfigError(f"missing required field {path}.{key}")
        return default
    value = d.pop(key)
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}.{key}: must be finite, got {value!r}")
    return value


def _pop_int(d: dict, key: str, path: str, default=None, *, required: bool = False):
    if key not in d:
        if required:
            raise ConfigError(f"missing required field {path}.{key}")
        return default
    value = d.pop(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {value!r}")
    return int(value)


def _pop_string(d: dict, key: str, path: str, default=None):
    if key not in d:
        return default
    value = d.pop(key)
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{key}: expected a string, got {value!r}")
    return value


def _pop_number_list(d: dict, key: str, path: str, default=None):
    if key not in d:
        return default
    value = d.pop(key)
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}.{key}: expected a non-empty list of numbers")
    out = []
    for i, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{path}.{key}[{i}]: expected a number, got {item!r}")
        item = float(item)
        if not math.isfinite(item):
            raise ConfigError(f"{path}.{key}[{i}]: must be finite")
        out.append(item)
    return out


def _pop_complex_pair(d: dict, key: str, path: str, default=None):
    """Complex number encoded as a two-element [real, imag] list."""
    if key not in d:
        return default
    value = d.pop(key)
    if (not isinstance(value, list) or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)):
        raise ConfigError(f"{path}.{key}: expected [real, imag] numbers, got {value!r}")
    return complex(float(value[0]), float(value[1]))


# ---------------------------------------------------------------------------
# sub-configs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelsSettings:
    """Field sweep for level diagrams."""

    b_min: float = 0.0
    b_max: float = 10e-3
    steps: int = 101

    def __post_init__(self):
        if self.b_max < self.b_min:
            raise ConfigError(
                f"levels.b_max_T ({self.b_max}) must be >= levels.b_min_T ({self.b_min})"
            )
        if self.steps < 1:
            raise ConfigError(f"levels.steps must be >= 1, got {self.steps}")


@dataclass(frozen=True)
class RunSettings:
    """Trial counts, timing, seeding, and output controls.

    Exactly one of ``duration_s`` / ``duration_tau1`` is set; the other is
    None.  ``dt_s`` of None defers to the step-size policy of the dynamics
    module.
    """

    trials: int = DEFAULT_TRIALS
    duration_s: float | None = None
    duration_tau1: float | None = DEFAULT_DURATION_TAU1
    dt_s: float | None = None
    master_seed: int = DEFAULT_MASTER_SEED
    eta_list: tuple = ()
    snapshot_times_tau1: tuple | None = None
    prior: float = DEFAULT_PRIOR
    out_dir: str = "out"

    def __post_init__(self):
        if (self.duration_s is None) == (self.duration_tau1 is None):
            raise ConfigError(
                "run: exactly one of duration_s and duration_tau1 must be set"
            )
        dur = self.duration_s if self.duration_s is not None else self.duration_tau1
        if dur < 0:
            raise ConfigError(f"run: duration must be >= 0, got {dur}")
        if self.trials < 1:
            raise ConfigError(f"run.trials must be >= 1, got {self.trials}")
        if self.dt_s is not None and self.dt_s <= 0:
            raise ConfigError(f"run.dt_s must be positive, got {self.dt_s}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError(
                f"run.master_seed must be an unsigned 64-bit integer, got {self.master_seed}"
            )
        if not 0 < self.prior < 1:
            raise ConfigError(f"run.prior must lie in (0, 1), got {self.prior}")
        for eta in self.eta_list:
            if not 0 < eta <= 1:
                raise ConfigError(f"run.eta_list entries must lie in (0, 1], got {eta}")

    def duration_seconds(self, tau_1: float) -> float:
        """Resolve the run duration to seconds given the model's tau_1."""
        if self.duration_s is not None:
            return self.duration_s
        return self.duration_tau1 * tau_1


@dataclass(frozen=True)
class RunConfig:
    """Complete, resolved description of a run."""

    system: str
    model: ModelParams
    run: RunSettings
    levels: LevelsSettings
    resonator: ResonatorParams | None = None
    geometry: NanowireGeometry | None = None
    spin_point: tuple | None = None
    nv: NVParams | None = None
    bi: BiParams | None = None

    def bundle(self) -> DeviceBundle:
        """Device bundle for this config (systems "nv" and "bi" only)."""
        if self.system not in ("nv", "bi"):
            raise ConfigError(
                f"system {self.system!r} has no device attached; "
                "design and level calculations need system 'nv' or 'bi'"
            )
        base = device_bundle(self.system)
        spin = self.nv if self.system == "nv" else self.bi
        return replace(
            base,
            resonator=self.resonator if self.resonator is not None else base.resonator,
            geometry=self.geometry if self.geometry is not None else base.geometry,
            spin_point=self.spin_point if self.spin_point is not None else base.spin_point,
            spin=spin if spin is not None else base.spin,
        )


# ---------------------------------------------------------------------------
# section parsers
# ---------------------------------------------------------------------------

def _parse_model(section: dict, base: ModelParams, path: str = "model") -> ModelParams:
    d = _expect_mapping(section, path)
    updates = {}

    def grab(json_key, attr):
        value = _pop_number(d, json_key, path)
        if value is not None:
            updates[attr] = value

    grab("g_rad_per_s", "g")
    grab("kappa_per_s", "kappa")
    grab("kappa_1_per_s", "kappa_1")
    grab("gamma_phi_per_s", "gamma_phi")
    grab("gamma_dec_per_s", "gamma_dec")
    grab("delta_r_rad_per_s", "delta_r")
    grab("delta_s_rad_per_s", "delta_s")
    grab("theta_rad", "theta")
    grab("eta", "eta")
    beta = _pop_complex_pair(d, "beta_per_sqrt_s", path)
    if beta is not None:
        updates["beta"] = beta
    n_fock = _pop_int(d, "n_fock", path)
    if n_fock is not None:
        updates["n_fock"] = n_fock
    _reject_unknown(d, path)
    try:
        return base.with_updates(**updates) if updates else base
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _model_to_dict(m: ModelParams) -> dict:
    return {
        "g_rad_per_s": m.g,
        "kappa_per_s": m.kappa,
        "kappa_1_per_s": m.kappa_1,
        "gamma_phi_per_s": m.gamma_phi,
        "gamma_dec_per_s": m.gamma_dec,
        "delta_r_rad_per_s": m.delta_r,
        "delta_s_rad_per_s": m.delta_s,
        "beta_per_sqrt_s": [m.beta.real, m.beta.imag],
        "theta_rad": m.theta,
        "eta": m.eta,
        "n_fock": m.n_fock,
    }


def _parse_resonator(section: dict, base: ResonatorParams | None,
                     path: str = "resonator") -> ResonatorParams:
    d = _expect_mapping(section, path)
    defaults = base
    omega_r = _pop_number(d, "omega_r_rad_per_s", path,
                          None if defaults is None else defaults.omega_r,
                          required=defaults is None)
    z_r = _pop_number(d, "z_r_ohm", path,
                      None if defaults is None else defaults.z_r,
                      required=defaults is None)
    kappa = _pop_number(d, "kappa_per_s", path,
                        None if defaults is None else defaults.kappa,
                        required=defaults is None)
    kappa_1 = _pop_number(d, "kappa_1_per_s", path,
                          None if defaults is None else defaults.kappa_1)
    _reject_unknown(d, path)
    try:
        return ResonatorParams(omega_r=omega_r, z_r=z_r, kappa=kappa, kappa_1=kappa_1)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _resonator_to_dict(r: ResonatorParams) -> dict:
    return {
        "omega_r_rad_per_s": r.omega_r,
        "z_r_ohm": r.z_r,
        "kappa_per_s": r.kappa,
        "kappa_1_per_s": r.kappa_1,
    }


def _parse_geometry(section: dict, base: NanowireGeometry | None,
                    path: str = "geometry") -> NanowireGeometry:
    d = _expect_mapping(section, path)
    req = base is None

    def grab(json_key, attr):
        return _pop_number(d, json_key, path,
                           None if base is None else getattr(base, attr),
                           required=req)

    width = grab("width_m", "width")
    thickness = grab("thickness_m", "thickness")
    length = grab("length_m", "length")
    sheet_resistance = grab("sheet_resistance_ohm", "sheet_resistance")
    gap = grab("gap_J", "gap")
    temperature = grab("temperature_K", "temperature")
    _reject_unknown(d, path)
    try:
        return NanowireGeometry(
            width=width, thickness=thickness, length=length,
            sheet_resistance=sheet_resistance, gap=gap, temperature=temperature,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _geometry_to_dict(g: NanowireGeometry) -> dict:
    return {
        "width_m": g.width,
        "thickness_m": g.thickness,
        "length_m": g.length,
        "sheet_resistance_ohm": g.sheet_resistance,
        "gap_J": g.gap,
        "temperature_K": g.temperature,
    }


def _parse_nv(section: dict, base: NVParams, path: str = "nv") -> NVParams:
    d = _expect_mapping(section, path)
    params = NVParams(
        d=_pop_number(d, "d_rad_per_s", path, base.d),
        a_z=_pop_number(d, "a_z_rad_per_s", path, base.a_z),
        axis_angle=_pop_number(d, "axis_angle_rad", path, base.axis_angle),
        b0=_pop_number(d, "b0_T", path, base.b0),
    )
    _reject_unknown(d, path)
    return params


def _nv_to_dict(p: NVParams) -> dict:
    return {
        "d_rad_per_s": p.d,
        "a_z_rad_per_s": p.a_z,
        "axis_angle_rad": p.axis_angle,
        "b0_T": p.b0,
    }


def _parse_bi(section: dict, base: BiParams, path: str = "bi") -> BiParams:
    d = _expect_mapping(section, path)
    nuclear_spin = _pop_number(d, "nuclear_spin", path, base.nuclear_spin)
    if (2 * nuclear_spin) != round(2 * nuclear_spin) or nuclear_spin <= 0:
        raise ConfigError(
            f"{path}.nuclear_spin must be a positive half-integer, got {nuclear_spin}"
        )
    params = BiParams(
        a_hf=_pop_number(d, "a_hf_rad_per_s", path, base.a_hf),
        nuclear_spin=nuclear_spin,
        b0=_pop_number(d, "b0_T", path, base.b0),
    )
    _reject_unknown(d, path)
    return params


def _bi_to_dict(p: BiParams) -> dict:
    return {
        "a_hf_rad_per_s": p.a_hf,
        "nuclear_spin": p.nuclear_spin,
        "b0_T": p.b0,
    }


def _parse_levels(section: dict, path: str = "levels") -> LevelsSettings:
    d = _expect_mapping(section, path)
    b_min = _pop_number(d, "b_min_T", path, 0.0)
    b_max = _pop_number(d, "b_max_T", path, 10e-3)
    steps = _pop_int(d, "steps", path, 101)
    _reject_unknown(d, path)
    return LevelsSettings(b_min=b_min, b_max=b_max, steps=steps)


def _levels_to_dict(s: LevelsSettings) -> dict:
    return {"b_min_T": s.b_min, "b_max_T": s.b_max, "steps": s.steps}


def _parse_run(section: dict, path: str = "run") -> RunSettings:
    d = _expect_mapping(section, path)
    trials = _pop_int(d, "trials", path, DEFAULT_TRIALS)
    duration_s = _pop_number(d, "duration_s", path, None)
    duration_tau1 = _pop_number(d, "duration_tau1", path, None)
    if duration_s is not None and duration_tau1 is not None:
        raise ConfigError(
            f"{path}: duration_s and duration_tau1 are mutually exclusive"
        )
    if duration_s is None and duration_tau1 is None:
        duration_tau1 = DEFAULT_DURATION_TAU1
    dt_s = _pop_number(d, "dt_s", path, None, allow_none=True)
    master_seed = _pop_int(d, "master_seed", path, DEFAULT_MASTER_SEED)
    eta_list = _pop_number_list(d, "eta_list", path, None)
    snapshots = _pop_number_list(d, "snapshot_times_tau1", path, None)
    prior = _pop_number(d, "prior", path, DEFAULT_PRIOR)
    out_dir = _pop_string(d, "out_dir", path, "out")
    _reject_unknown(d, path)
    return RunSettings(
        trials=trials,
        duration_s=duration_s,
        duration_tau1=duration_tau1,
        dt_s=dt_s,
        master_seed=master_seed,
        eta_list=tuple(eta_list) if eta_list else (),
        snapshot_times_tau1=tuple(snapshots) if snapshots else None,
        prior=prior,
        out_dir=out_dir,
    )


def _run_to_dict(s: RunSettings) -> dict:
    out = {
        "trials": s.trials,
        "master_seed": s.master_seed,
        "prior": s.prior,
        "out_dir": s.out_dir,
    }
    if s.duration_s is not None:
        out["duration_s"] = s.duration_s
    else:
        out["duration_tau1"] = s.duration_tau1
    if s.dt_s is not None:
        out["dt_s"] = s.dt_s
    if s.eta_list:
        out["eta_list"] = list(s.eta_list)
    if s.snapshot_times_tau1 is not None:
        out["snapshot_times_tau1"] = list(s.snapshot_times_tau1)
    return out


# ---------------------------------------------------------------------------
# top level
# ---------------------------------------------------------------------------

def _baseline_model(system: str) -> ModelParams | None:
    if system == "sim":
        return sim_model()
    if system in ("nv", "bi"):
        return model_for_bundle(device_bundle(system))
    return None


def parse_config(document: dict) -> RunConfig:
    """Parse and validate a config document (strict schema)."""
    d = _expect_mapping(document, "")
    version = _pop_int(d, "schema_version", "", required=True)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version: expected {SCHEMA_VERSION}, got {version}"
        )
    system = _pop_string(d, "system", "")
    if system is None:
        raise ConfigError("missing required field system")
    if system not in SYSTEMS:
        raise ConfigError(f"system: expected one of {SYSTEMS}, got {system!r}")

    base_model = _baseline_model(system)
    model_section = d.pop("model", {})
    if base_model is None:
        # custom two-level system: g and kappa are mandatory
        md = _expect_mapping(model_section, "model")
        g = _pop_number(md, "g_rad_per_s", "model", required=True)
        kappa = _pop_number(md, "kappa_per_s", "model", required=True)
        try:
            base_model = ModelParams(g=g, kappa=kappa)
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from exc
        model = _parse_model(md, base_model)
    else:
        model = _parse_model(model_section, base_model)

    if system in ("nv", "bi"):
        bundle = device_bundle(system)
        resonator = _parse_resonator(d.pop("resonator", {}), bundle.resonator)
        geometry = _parse_geometry(d.pop("geometry", {}), bundle.geometry)
        default_point = bundle.spin_point
    else:
        resonator = (_parse_resonator(d.pop("resonator"), None)
                     if "resonator" in d else None)
        geometry = (_parse_geometry(d.pop("geometry"), None)
                    if "geometry" in d else None)
        default_point = None

    spin_point = default_point
    if "spin_point_m" in d:
        pair = _pop_number_list(d, "spin_point_m", "")
        if len(pair) != 2:
            raise ConfigError(f"spin_point_m: expected [x, y], got {pair}")
        spin_point = (pair[0], pair[1])

    nv = _parse_nv(d.pop("nv", {}), NVParams()) if (system == "nv" or "nv" in d) else None
    bi = _parse_bi(d.pop("bi", {}), BiParams()) if (system == "bi" or "bi" in d) else None
    levels = _parse_levels(d.pop("levels", {}))
    run = _parse_run(d.pop("run", {}))
    _reject_unknown(d, "")

    return RunConfig(
        system=system,
        model=model,
        run=run,
        levels=levels,
        resonator=resonator,
        geometry=geometry,
        spin_point=spin_point,
        nv=nv,
        bi=bi,
    )


def serialize_config(cfg: RunConfig) -> dict:
    """Render a config to its fully explicit JSON document."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "system": cfg.system,
        "model": _model_to_dict(cfg.model),
        "levels": _levels_to_dict(cfg.levels),
        "run": _run_to_dict(cfg.run),
    }
    if cfg.resonator is not None:
        doc["resonator"] = _resonator_to_dict(cfg.resonator)
    if cfg.geometry is not None:
        doc["geometry"] = _geometry_to_dict(cfg.geometry)
    if cfg.spin_point is not None:
        doc["spin_point_m"] = [cfg.spin_point[0], cfg.spin_point[1]]
    if cfg.nv is not None:
        doc["nv"] = _nv_to_dict(cfg.nv)
    if cfg.bi is not None:
        doc["bi"] = _bi_to_dict(cfg.bi)
    return doc


def load_config(path) -> RunConfig:
    """Read and parse a JSON config file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(document)


def config_from_preset(name: str) -> RunConfig:
    """Fully resolved config for a named preset ("nv", "bi", or "sim")."""
    if name not in ("nv", "bi", "sim"):
        raise ConfigError(f"unknown preset {name!r}; expected 'nv', 'bi' or 'sim'")
    return parse_config({"schema_version": SCHEMA_VERSION, "system": name})
