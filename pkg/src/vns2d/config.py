"""Run configuration: TOML files, dotted-key overrides, scenario presets.

Every key in the TOML file can also be set on the command line with a flag
of the same dotted name (e.g. ``--time.dt 1e-3``); presets are named
parameter bundles that a config file or flags may override.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "SimConfig", "PRESETS", "load_config", "apply_overrides"]


class ConfigError(ValueError):
    """Invalid configuration; message names the offending key."""


@dataclass
class DomainConfig:
    n: int = 64
    length: float = 1.0


@dataclass
class TimeConfig:
    dt: float | None = 5e-4
    cfl: float | None = None  # used when dt is None
    t_end: float = 5.0
    record_every: int = 10
    dt_max: float = 0.5


@dataclass
class F0Config:
    spatial: str = "uniform"  # uniform | cosine
    eps: float = 0.0
    v_mean: tuple = (0.0, 0.0)
    theta: float = 0.25


@dataclass
class ParticlesConfig:
    count: int = 0
    seed: int = 1234
    f0_scale: float = 1.0
    f0: F0Config = field(default_factory=F0Config)


@dataclass
class FluidConfig:
    u0: str = "zero"  # zero | constant | shear | taylor-green
    amplitude: float = 1.0
    value: tuple = (0.0, 0.0)


@dataclass
class DensityConfig:
    rho0: str = "constant"  # constant | piecewise
    value: float = 1.0
    levels: tuple = (1.0, 2.0)
    smoothing_cells: float = 2.0
    rho_min_guard: float = 0.1


@dataclass
class OutputConfig:
    dir: str = "vns-out"
    fields_every: int = 0


@dataclass
class DiagnosticsConfig:
    lip_eta: float = 0.5
    fit_window: tuple | None = None  # defaults chosen from t_end when None


@dataclass
class OracleConfig:
    n_v: int = 16
    v_max: float | None = None
    dt: float = 2e-3
    t_end: float = 1.0


@dataclass
class SimConfig:
    mode: str = "homogeneous"  # homogeneous | inhomogeneous
    preset: str | None = None
    domain: DomainConfig = field(default_factory=DomainConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    particles: ParticlesConfig = field(default_factory=ParticlesConfig)
    fluid: FluidConfig = field(default_factory=FluidConfig)
    density: DensityConfig = field(default_factory=DensityConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)

    def validate(self):
        if self.mode not in ("homogeneous", "inhomogeneous"):
            raise ConfigError(f"mode must be homogeneous or inhomogeneous, got {self.mode!r}")
        d = self.domain
        if d.n < 8 or d.n % 2:
            raise ConfigError(f"domain.n must be even and >= 8, got {d.n}")
        if d.length <= 0:
            raise ConfigError(f"domain.length must be positive, got {d.length}")
        t = self.time
        if t.dt is None and t.cfl is None:
            raise ConfigError("time.dt or time.cfl must be set")
        if t.dt is not None and t.dt <= 0:
            raise ConfigError(f"time.dt must be positive, got {t.dt}")
        if t.cfl is not None and not 0 < t.cfl <= 1:
            raise ConfigError(f"time.cfl must lie in (0, 1], got {t.cfl}")
        if t.t_end <= 0:
            raise ConfigError(f"time.t_end must be positive, got {t.t_end}")
        if t.record_every < 1:
            raise ConfigError(f"time.record_every must be >= 1, got {t.record_every}")
        p = self.particles
        if p.count < 0:
            raise ConfigError(f"particles.count must be >= 0, got {p.count}")
        if p.f0_scale < 0:
            raise ConfigError(f"particles.f0_scale must be >= 0, got {p.f0_scale}")
        if p.f0.spatial not in ("uniform", "cosine"):
            raise ConfigError(f"particles.f0.spatial must be uniform or cosine, got {p.f0.spatial!r}")
        if p.f0.spatial == "cosine" and not 0 <= p.f0.eps < 1:
            raise ConfigError(
                f"particles.f0.eps must satisfy 0 <= eps < 1 (density stays positive), got {p.f0.eps}"
            )
        if p.f0.theta < 0:
            raise ConfigError(f"particles.f0.theta must be >= 0, got {p.f0.theta}")
        f = self.fluid
        if f.u0 not in ("zero", "constant", "shear", "taylor-green"):
            raise ConfigError(f"fluid.u0 must be zero|constant|shear|taylor-green, got {f.u0!r}")
        if self.mode == "inhomogeneous":
            rho = self.density
            if rho.rho0 not in ("constant", "piecewise"):
                raise ConfigError(f"density.rho0 must be constant or piecewise, got {rho.rho0!r}")
            if rho.rho_min_guard <= 0:
                raise ConfigError(
                    "density.rho_min_guard must be positive: the pressure solve "
                    "degenerates at vacuum"
                )
            levels = [rho.value] if rho.rho0 == "constant" else list(rho.levels)
            if min(levels) < rho.rho_min_guard:
                raise ConfigError(
                    f"density levels {levels} fall below rho_min_guard={rho.rho_min_guard}"
                )
        o = self.output
        if o.fields_every < 0:
            raise ConfigError(f"output.fields_every must be >= 0, got {o.fields_every}")
        return self


_SECTIONS = {
    "domain": DomainConfig,
    "time": TimeConfig,
    "particles": ParticlesConfig,
    "fluid": FluidConfig,
    "density": DensityConfig,
    "output": OutputConfig,
    "diagnostics": DiagnosticsConfig,
    "oracle": OracleConfig,
}


def _set_from_dict(obj, data: dict, prefix: str):
    for key, value in data.items():
        if not hasattr(obj, key):
            raise ConfigError(f"unknown config key {prefix}{key}")
        current = getattr(obj, key)
        if isinstance(current, F0Config):
            if not isinstance(value, dict):
                raise ConfigError(f"{prefix}{key} must be a table")
            _set_from_dict(current, value, f"{prefix}{key}.")
        elif isinstance(value, list):
            setattr(obj, key, tuple(value))
        else:
            setattr(obj, key, value)


def config_from_dict(data: dict) -> SimConfig:
    cfg = SimConfig()
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key} must be a table")
            _set_from_dict(getattr(cfg, key), value, f"{key}.")
        elif key in ("mode", "preset"):
            setattr(cfg, key, value)
        else:
            raise ConfigError(f"unknown config key {key}")
    return cfg


def _config_to_dict(cfg: SimConfig) -> dict:
    from dataclasses import asdict

    return asdict(cfg)


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# scenario presets

PRESETS: dict[str, dict] = {
    # pure Navier-Stokes control (closed-form Taylor-Green reference)
    "fluid-only": {
        "mode": "homogeneous",
        "domain": {"n": 32},
        "time": {"dt": 1e-4, "t_end": 0.1, "record_every": 10},
        "particles": {"count": 0},
        "fluid": {"u0": "taylor-green", "amplitude": 1.0},
    },
    # monokinetic fixed point: all velocities equal the fluid velocity
    "equilibrium": {
        "mode": "homogeneous",
        "domain": {"n": 32},
        "time": {"dt": 1e-3, "t_end": 1.0, "record_every": 10},
        "particles": {
            "count": 20000,
            "seed": 42,
            "f0_scale": 1.0,
            "f0": {"spatial": "uniform", "theta": 0.0, "v_mean": [0.25, 0.0]},
        },
        "fluid": {"u0": "constant", "value": [0.25, 0.0]},
    },
    # order-one data: algebraic-decay regime (also the conservation suite)
    "homog-large": {
        "mode": "homogeneous",
        "domain": {"n": 64},
        "time": {"dt": 5e-4, "t_end": 5.0, "record_every": 10},
        "particles": {
            "count": 100000,
            "seed": 7,
            "f0_scale": 1.0,
            "f0": {"spatial": "cosine", "eps": 0.5, "v_mean": [0.5, 0.25], "theta": 0.3},
        },
        "fluid": {"u0": "taylor-green", "amplitude": 0.5},
    },
    # small distribution function: exponential-decay regime
    "homog-small-f0": {
        "mode": "homogeneous",
        "domain": {"n": 32},
        "time": {"dt": 1e-3, "t_end": 10.0, "record_every": 10},
        "particles": {
            "count": 20000,
            "seed": 11,
            "f0_scale": 0.05,
            "f0": {"spatial": "cosine", "eps": 0.4, "v_mean": [0.6, 0.0], "theta": 0.25},
        },
        "fluid": {"u0": "taylor-green", "amplitude": 0.15},
        "diagnostics": {"fit_window": [2.0, 10.0]},
    },
    # variable density with a smoothed 2:1 jump
    "inhomog-jump": {
        "mode": "inhomogeneous",
        "domain": {"n": 32},
        "time": {"dt": 2e-4, "t_end": 2.0, "record_every": 10},
        "particles": {
            "count": 20000,
            "seed": 5,
            "f0_scale": 0.3,
            "f0": {"spatial": "uniform", "v_mean": [0.4, 0.0], "theta": 0.2},
        },
        "fluid": {"u0": "taylor-green", "amplitude": 0.3},
        "density": {
            "rho0": "piecewise",
            "levels": [1.0, 2.0],
            "smoothing_cells": 2.0,
            "rho_min_guard": 0.1,
        },
    },
}


def load_config(
    path: str | None = None, preset: str | None = None, overrides: dict | None = None
) -> SimConfig:
    """Assemble a validated SimConfig from preset, file, and overrides.

    Precedence (lowest to highest): defaults < preset < TOML file < flags.
    """
    data: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r}; available: {', '.join(sorted(PRESETS))}"
            )
        data = _merge(data, PRESETS[preset])
    if path is not None:
        try:
            with open(path, "rb") as fh:
                file_data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}")
        file_preset = file_data.get("preset")
        if file_preset and preset is None:
            if file_preset not in PRESETS:
                raise ConfigError(f"unknown preset {file_preset!r} in {path}")
            data = _merge(PRESETS[file_preset], data)
        data = _merge(data, file_data)
    if overrides:
        data = _merge(data, overrides)
    cfg = config_from_dict(data)
    if preset is not None:
        cfg.preset = preset
    return cfg.validate()


def apply_overrides(pairs: list[tuple[str, str]]) -> dict:
    """Turn (dotted-key, raw-value) flag pairs into a nested override dict.

    Values are parsed as TOML fragments so numbers, booleans, and arrays
    keep their types; anything unparseable stays a string.
    """
    out: dict = {}
    for dotted, raw in pairs:
        try:
            value = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw
        node = out
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return out
