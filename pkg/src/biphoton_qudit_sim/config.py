"""JSON run configuration: geometry, pump, noise, grids, thresholds, quadrature.

Every block is optional in the file; missing fields take the defaults below,
which are the experimental setup values where the experiment fixes them.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .geometry import ExperimentGeometry, GeometryError, validate
from .states import PumpProfile, QuadratureSpec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PumpConfig:
    shape: str = "gaussian"
    waist: float = 4.5e-6
    center: float = 0.0
    samples: list | None = None

    def profile(self) -> PumpProfile:
        samples = None
        if self.samples is not None:
            samples = tuple((float(x), complex(re, im)) for x, re, im in self.samples)
        return PumpProfile(self.shape, self.waist, self.center, samples)


@dataclass(frozen=True)
class NoiseConfig:
    seed: int = 20051
    mean_pair_flux: float = 500.0
    acquisition: float = 10.0
    singles_per_pair: float = 10.0


@dataclass(frozen=True)
class GridConfig:
    scan_points_per_spacing: int = 40
    fringe_half_span: float = 2.5e-3
    fringe_points: int = 501
    x2_slices: tuple[float, ...] = (0.0, 300e-6)
    map_half_span: float = 2.5e-3
    map_points: int = 101


@dataclass(frozen=True)
class ThresholdConfig:
    score: float = 0.05
    visibility: float = 0.1


@dataclass(frozen=True)
class QuadratureConfig:
    order: int = 32
    rtol: float = 1e-8
    max_order: int = 1024

    def spec(self) -> QuadratureSpec:
        return QuadratureSpec(self.order, self.rtol, self.max_order)


@dataclass(frozen=True)
class RunConfig:
    geometry: ExperimentGeometry = field(default_factory=ExperimentGeometry)
    pump: PumpConfig = field(default_factory=PumpConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    grids: GridConfig = field(default_factory=GridConfig)
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def to_dict(self) -> dict[str, Any]:
        out = {"geometry": self.geometry.to_dict()}
        for name in ("pump", "noise", "grids", "thresholds", "quadrature"):
            block = asdict(getattr(self, name))
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in block.items()}
        return out


BLOCKS = {
    "pump": PumpConfig,
    "noise": NoiseConfig,
    "grids": GridConfig,
    "thresholds": ThresholdConfig,
    "quadrature": QuadratureConfig,
}


def _coerce(cls, name: str, value: Any) -> Any:
    default = next(f for f in fields(cls) if f.name == name).default
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{cls.__name__}.{name} must be a list")
        return tuple(float(v) for v in value)
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int) and not isinstance(value, bool):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{cls.__name__}.{name} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{cls.__name__}.{name} must be a number, got {value!r}")
        return float(value)
    return value


def _block(cls, raw: dict[str, Any], base=None):
    base = base if base is not None else cls()
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} field(s): {', '.join(unknown)}")
    return replace(base, **{k: _coerce(cls, k, v) for k, v in raw.items()})


def apply_overrides(config: RunConfig, overrides: dict[str, dict[str, Any]]) -> RunConfig:
    """Merge ``{block: {field: value}}`` into ``config``; geometry is re-validated."""
    unknown = sorted(set(overrides) - set(BLOCKS) - {"geometry"})
    if unknown:
        raise ConfigError(f"unknown config block(s): {', '.join(unknown)}")
    changes: dict[str, Any] = {}
    if overrides.get("geometry"):
        params = config.geometry.to_dict()
        params.update(overrides["geometry"])
        try:
            changes["geometry"] = validate(params)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
    for name, cls in BLOCKS.items():
        if overrides.get(name):
            changes[name] = _block(cls, overrides[name], getattr(config, name))
    return replace(config, **changes)


def load_config(path: str | Path | None = None) -> RunConfig:
    config = RunConfig()
    if path is None:
        return config
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return apply_overrides(config, raw)


__all__ = [
    "ConfigError",
    "GeometryError",
    "RunConfig",
    "PumpConfig",
    "NoiseConfig",
    "GridConfig",
    "ThresholdConfig",
    "QuadratureConfig",
    "apply_overrides",
    "load_config",
]
