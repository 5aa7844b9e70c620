"""Scenario and optimizer configuration.

A configuration file is a flat YAML mapping whose keys are the field names of
:class:`SystemConfig` (optimizer knobs included, flattened). Unknown keys are
rejected.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

# rounded so that 30 GHz gives |k_f| = 200*pi exactly
SPEED_OF_LIGHT = 3e8

DEFAULT_SCALE_FACTORS = (1.2, 1.0, 0.8, 0.6, 0.4, 0.2)
DEFAULT_SNR_DB = (10.0, 15.0, 20.0, 25.0, 30.0, 35.0)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizerSettings:
    """Knobs of the projected gradient ascent on the holographic weights."""

    learning_rate: float = 0.01
    tolerance: float = 1e-5
    max_iterations: int = 500
    backtracking: bool = True
    max_halvings: int = 20

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.max_halvings < 0:
            raise ConfigError("max_halvings must be >= 0")


@dataclass(frozen=True)
class SystemConfig:
    num_users: int = 6
    num_feeds: int = 8
    num_elements: int = 36
    p_max: float = 1.0
    r_min: float = 5.0
    snr_db: tuple[float, ...] = DEFAULT_SNR_DB
    realizations: int = 100
    carrier_hz: float = 30e9
    spacing_wavelengths: float = 1.0 / 3.0
    permittivity: float = 3.0
    num_paths: int = 3
    # None picks the decreasing ladder 1.2, 1.0, 0.8, ...
    scale_factors: tuple[float, ...] | None = None
    # "unitary" scales the array response by 1/sqrt(M), "literal" by 1/M
    array_normalization: str = "unitary"
    initial_weight: float = 0.5
    alternation_rounds: int = 3
    # admissions must also not lower the kept sum rate
    require_rate_gain: bool = True
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    seed: int = 2025
    scheme: str = "proposed"

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        factors = self.scale_factors
        if factors is None:
            factors = default_scale_factors(self.num_users)
        object.__setattr__(self, "scale_factors", tuple(float(s) for s in factors))
        side = math.isqrt(self.num_elements)
        if self.num_elements < 1 or side * side != self.num_elements:
            raise ConfigError(f"num_elements={self.num_elements} is not a perfect square")
        if self.num_users < 1:
            raise ConfigError("num_users must be >= 1")
        if self.num_feeds < 1:
            raise ConfigError("num_feeds must be >= 1")
        if self.num_users > self.num_feeds:
            raise ConfigError("num_users must not exceed num_feeds (ZF feasibility)")
        if not self.p_max > 0:
            raise ConfigError("p_max must be positive")
        if self.r_min < 0:
            raise ConfigError("r_min must be non-negative")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.num_paths < 1:
            raise ConfigError("num_paths must be >= 1")
        if len(self.scale_factors) != self.num_users:
            raise ConfigError(
                f"expected {self.num_users} scale factors, got {len(self.scale_factors)}"
            )
        if any(not s > 0 for s in self.scale_factors):
            raise ConfigError("scale factors must be strictly positive")
        if self.array_normalization not in ("literal", "unitary"):
            raise ConfigError("array_normalization must be 'literal' or 'unitary'")
        if not 0.0 <= self.initial_weight <= 1.0:
            raise ConfigError("initial_weight must lie in [0, 1]")
        if self.alternation_rounds < 1:
            raise ConfigError("alternation_rounds must be >= 1")
        if self.scheme not in ("proposed", "benchmark"):
            raise ConfigError("scheme must be 'proposed' or 'benchmark'")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def side(self) -> int:
        return math.isqrt(self.num_elements)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def spacing(self) -> float:
        return self.spacing_wavelengths * self.wavelength

    @property
    def free_space_wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def surface_wavenumber(self) -> float:
        return math.sqrt(self.permittivity) * self.free_space_wavenumber

    def noise_variance(self, snr_db: float) -> float:
        """Noise power giving transmit SNR ``p_max / sigma^2`` of ``snr_db``."""
        return self.p_max / 10 ** (snr_db / 10)

    def replace(self, **changes) -> "SystemConfig":
        opt_changes = {k: changes.pop(k) for k in list(changes) if k in _OPTIMIZER_KEYS}
        if "num_users" in changes and "scale_factors" not in changes:
            changes["scale_factors"] = None
        if opt_changes:
            changes["optimizer"] = dataclasses.replace(self.optimizer, **opt_changes)
        return dataclasses.replace(self, **changes)

    def to_flat_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "optimizer":
                out.update(dataclasses.asdict(value))
            elif isinstance(value, tuple):
                out[f.name] = list(value)
            else:
                out[f.name] = value
        return out

    def digest(self) -> str:
        """Short stable hash of every field, used to tag experiment records."""
        blob = json.dumps(self.to_flat_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_flat_dict(cls, data: dict) -> "SystemConfig":
        unknown = set(data) - _TOP_KEYS - _OPTIMIZER_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        top = {k: v for k, v in data.items() if k in _TOP_KEYS}
        opt = {k: v for k, v in data.items() if k in _OPTIMIZER_KEYS}
        if opt:
            top["optimizer"] = OptimizerSettings(**opt)
        return cls(**top)


_TOP_KEYS = {f.name for f in dataclasses.fields(SystemConfig)} - {"optimizer"}
_OPTIMIZER_KEYS = {f.name for f in dataclasses.fields(OptimizerSettings)}


def default_scale_factors(num_users: int) -> tuple[float, ...]:
    """Gains decreasing by 0.2 per user from 1.2, floored to stay positive."""
    if num_users <= len(DEFAULT_SCALE_FACTORS):
        return DEFAULT_SCALE_FACTORS[:num_users]
    return tuple(max(1.2 - 0.2 * d, 0.05) for d in range(num_users))


def load_config(path: str | Path | None = None, **overrides) -> SystemConfig:
    data = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        loaded = yaml.safe_load(text) or {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: expected a flat key-value mapping")
        for key, value in loaded.items():
            if isinstance(value, dict):
                raise ConfigError(f"{path}: nested value under '{key}' not allowed")
        data.update(loaded)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return SystemConfig.from_flat_dict(data)
