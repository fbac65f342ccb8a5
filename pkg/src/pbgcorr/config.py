"""Run configuration read from YAML.

Layout (every section and key optional; unknown keys are rejected)::

    preset: fig2            # optional, informational
    emitter:    {omega_0: 0.1}
    reservoir:  {eta: 0.2, k_max: 10, n_quad: 8}
    solver:     {dt: 0.01, t_max: 50, kernel_mode: full-integral}
    initial:    {alpha: 0.7071067811865476}    # beta derived when omitted
    correlations: {partitions: [n1n2], stride: 10, workers: 1}
    discord:    {grid: 64, measured_side: B}
    oracle:     {n_modes: 4000}
    output:     {dir: out}
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .amplitude import SolverConfig
from .correlations import PARTITIONS, InitialWeights
from .errors import ConfigError
from .reservoir import EmitterParams, ReservoirParams
from .tables import atomic_write_text


@dataclass(frozen=True)
class CorrelationSettings:
    partitions: tuple = ("n1n2",)
    stride: int = 10
    workers: int = 1


@dataclass(frozen=True)
class DiscordSettings:
    grid: int = 64
    measured_side: str = "B"


@dataclass(frozen=True)
class RunConfig:
    emitter: EmitterParams = field(default_factory=EmitterParams)
    reservoir: ReservoirParams = field(default_factory=ReservoirParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial: InitialWeights = field(default_factory=lambda: InitialWeights.from_alpha(2 ** -0.5))
    correlations: CorrelationSettings = field(default_factory=CorrelationSettings)
    discord: DiscordSettings = field(default_factory=DiscordSettings)
    oracle_modes: int = 4000
    out_dir: str = "out"
    preset: Optional[str] = None

    def __post_init__(self):
        for p in self.correlations.partitions:
            if p not in PARTITIONS:
                raise ConfigError(f"unknown partition {p!r}; choose from {PARTITIONS}")
        if self.correlations.stride < 1:
            raise ConfigError("correlations.stride must be >= 1")
        if self.correlations.workers < 1:
            raise ConfigError("correlations.workers must be >= 1")
        if self.discord.grid < 2:
            raise ConfigError("discord.grid must be >= 2")
        if self.discord.measured_side not in ("A", "B", "both"):
            raise ConfigError("discord.measured_side must be A, B or both")
        if self.oracle_modes < 1:
            raise ConfigError("oracle.n_modes must be positive")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_SECTIONS = {
    "emitter": {"omega_0": float},
    "reservoir": {"omega_c": float, "A": float, "k0": float, "eta": float, "k_max": float, "n_quad": int},
    "solver": {"dt": float, "t_max": float, "kernel_mode": str},
    "initial": {"alpha": complex, "beta": complex},
    "correlations": {"partitions": list, "stride": int, "workers": int},
    "discord": {"grid": int, "measured_side": str},
    "oracle": {"n_modes": int},
    "output": {"dir": str},
}
_TOP_LEVEL = set(_SECTIONS) | {"preset"}


def _coerce(section: str, key: str, value, kind):
    if kind is float:
        if isinstance(value, str):
            # YAML 1.1 reads exponent forms without a dot, such as 1e-3, as strings
            try:
                return float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
        return value
    if kind is complex:
        if isinstance(value, bool):
            raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
        try:
            z = complex(value.replace(" ", "")) if isinstance(value, str) else complex(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key} must be a real or complex number, got {value!r}") from None
        return z.real if z.imag == 0 else z
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{section}.{key} must be a string, got {value!r}")
        return value
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{section}.{key} must be a list of strings, got {value!r}")
    return [v.lower() for v in value]


def from_mapping(data: dict | None) -> RunConfig:
    """Validate a parsed mapping; unknown sections or keys raise :class:`ConfigError`."""
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    unknown = set(data) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    clean = {}
    for section, keys in _SECTIONS.items():
        raw = data.get(section) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        bad = set(raw) - set(keys)
        if bad:
            raise ConfigError(f"unknown keys in {section!r}: {sorted(bad)}")
        clean[section] = {k: _coerce(section, k, v, keys[k]) for k, v in raw.items()}

    init = clean["initial"]
    if "alpha" in init and "beta" in init:
        weights = InitialWeights(init["alpha"], init["beta"])
    elif "beta" in init:
        weights = InitialWeights(float(np.sqrt(max(0.0, 1 - abs(init["beta"]) ** 2))), init["beta"])
    else:
        weights = InitialWeights.from_alpha(init.get("alpha", 2 ** -0.5))
    weights = InitialWeights(_plain(weights.alpha), _plain(weights.beta))

    corr = dict(clean["correlations"])
    if "partitions" in corr:
        corr["partitions"] = tuple(corr["partitions"])
    preset = data.get("preset")
    if preset is not None and not isinstance(preset, str):
        raise ConfigError("preset must be a string")
    try:
        return RunConfig(
            emitter=EmitterParams(**clean["emitter"]),
            reservoir=ReservoirParams(**clean["reservoir"]),
            solver=SolverConfig(**clean["solver"]),
            initial=weights,
            correlations=CorrelationSettings(**corr),
            discord=DiscordSettings(**clean["discord"]),
            oracle_modes=clean["oracle"].get("n_modes", 4000),
            out_dir=clean["output"].get("dir", "out"),
            preset=preset,
        )
    except TypeError as exc:  # pragma: no cover - guarded by the key checks above
        raise ConfigError(str(exc)) from exc


def _plain(z):
    z = complex(z)
    return z.real if z.imag == 0 else z


def _yaml_number(z):
    z = complex(z)
    return z.real if z.imag == 0 else str(z)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    return from_mapping(data)


def to_mapping(cfg: RunConfig) -> dict:
    """Fully resolved mapping; loading it back gives an equal :class:`RunConfig`."""
    r = cfg.reservoir
    return {
        "preset": cfg.preset,
        "emitter": {"omega_0": cfg.emitter.omega_0},
        "reservoir": {"omega_c": r.omega_c, "A": r.A, "k0": r.k0, "eta": r.eta, "k_max": r.k_max,
                      "n_quad": int(r.n_quad)},
        "solver": {"dt": cfg.solver.dt, "t_max": cfg.solver.t_max, "kernel_mode": cfg.solver.kernel_mode},
        "initial": {"alpha": _yaml_number(cfg.initial.alpha), "beta": _yaml_number(cfg.initial.beta)},
        "correlations": {"partitions": list(cfg.correlations.partitions), "stride": cfg.correlations.stride,
                         "workers": cfg.correlations.workers},
        "discord": {"grid": cfg.discord.grid, "measured_side": cfg.discord.measured_side},
        "oracle": {"n_modes": cfg.oracle_modes},
        "output": {"dir": cfg.out_dir},
    }


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(to_mapping(cfg), sort_keys=False, default_flow_style=False)


def write_resolved(cfg: RunConfig, directory) -> Path:
    return atomic_write_text(Path(directory) / "resolved_config.yaml", dump_config(cfg))
