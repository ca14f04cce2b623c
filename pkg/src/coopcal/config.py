"""Run configuration: one YAML document holding every experiment knob.

Angles are radians unless written as a string with a ``deg`` suffix
(``sigma_theta: 10deg``). Any section or key may be omitted; missing values
take the defaults shown by ``coopcal --print-config``.
"""

from __future__ import annotations

import math
import re
import typing
from dataclasses import dataclass, field, fields
from typing import Any, Mapping, Optional

import yaml

from .estimator import RobustFitParams
from .fusion import FusionParams
from .matcher import MatchParams
from .pipeline import METHODS, ICPParams, MethodParams
from .sim import NoiseConfig, SuiteConfig

ANGLE_FIELDS = {"sigma1", "sigma_theta", "sigma_theta_L", "loc_dtheta"}
_DEG = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*deg\s*$")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted name of the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class Paths:
    frames: str = "frames.jsonl"
    results: str = "results.csv"


@dataclass(frozen=True)
class RunConfig:
    suite: SuiteConfig = field(default_factory=SuiteConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    match: MatchParams = field(default_factory=MatchParams)
    fit: RobustFitParams = field(default_factory=RobustFitParams)
    fusion: FusionParams = field(default_factory=FusionParams)
    icp: ICPParams = field(default_factory=ICPParams)
    methods: tuple[str, ...] = METHODS
    workers: int = 1
    record_runtime: bool = True
    paths: Paths = field(default_factory=Paths)

    def method_params(self) -> MethodParams:
        return MethodParams(match=self.match, fit=self.fit, fusion=self.fusion, icp=self.icp)


SECTIONS = {
    "suite": SuiteConfig,
    "noise": NoiseConfig,
    "match": MatchParams,
    "fit": RobustFitParams,
    "fusion": FusionParams,
    "icp": ICPParams,
    "paths": Paths,
}


def parse_angle(value, name: str = "angle") -> float:
    """Radians from a number or a ``"<x>deg"`` string."""
    if isinstance(value, str):
        m = _DEG.match(value)
        if not m:
            raise ConfigError(name, f"expected radians or '<number>deg', got {value!r}")
        return math.radians(float(m.group(1)))
    return _number(value, name)


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(name, "must be finite")
    return float(value)


def _integer(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(name, f"expected an integer, got {value!r}")
    return value


def _coerce(kind, value, name: str, fname: str):
    if fname in ANGLE_FIELDS:
        return parse_angle(value, name)
    if kind is float:
        return _number(value, name)
    if kind is int:
        return _integer(value, name)
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(name, f"expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(name, f"expected a string, got {value!r}")
        return value
    # tuple[float, ...]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(name, f"expected a list, got {value!r}")
    return tuple(_number(v, f"{name}[{k}]") for k, v in enumerate(value))


def _section(cls, data: Any, prefix: str):
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(prefix, "expected a mapping")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{prefix}.{key}", "unknown key")
    kw = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        kind = hints[f.name]
        if f.name == "area":
            v = data[f.name]
            if not isinstance(v, (list, tuple)) or len(v) != 2:
                raise ConfigError(f"{prefix}.area", "expected [width, height]")
            kw[f.name] = tuple(_number(x, f"{prefix}.area[{k}]") for k, x in enumerate(v))
            continue
        kw[f.name] = _coerce(kind, data[f.name], f"{prefix}.{f.name}", f.name)
    try:
        return cls(**kw)
    except ValueError as exc:
        # blame the first field that fails on its own; else the section
        for name, value in kw.items():
            try:
                cls(**{name: value})
            except ValueError:
                raise ConfigError(f"{prefix}.{name}", str(exc)) from None
        raise ConfigError(prefix, str(exc)) from None


def from_mapping(data: Optional[Mapping]) -> RunConfig:
    """Build a validated :class:`RunConfig`; the first violation raises."""
    data = data or {}
    if not isinstance(data, Mapping):
        raise ConfigError("<root>", "expected a mapping at the top level")
    allowed = set(SECTIONS) | {"methods", "workers", "record_runtime"}
    for key in data:
        if key not in allowed:
            raise ConfigError(str(key), "unknown key")
    kw: dict[str, Any] = {name: _section(cls, data.get(name), name) for name, cls in SECTIONS.items()}
    if "methods" in data:
        kw["methods"] = parse_methods(data["methods"])
    if "workers" in data:
        kw["workers"] = _integer(data["workers"], "workers")
        if kw["workers"] < 1:
            raise ConfigError("workers", "must be >= 1")
    if "record_runtime" in data:
        kw["record_runtime"] = _coerce(bool, data["record_runtime"], "record_runtime", "record_runtime")
    return RunConfig(**kw)


def parse_methods(value) -> tuple[str, ...]:
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",") if v.strip()]
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError("methods", "expected a non-empty list")
    for m in value:
        if m not in METHODS:
            raise ConfigError("methods", f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    return tuple(dict.fromkeys(value))


def load(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return from_mapping(data)


def to_mapping(cfg: RunConfig) -> dict:
    """Plain-data view of ``cfg`` (angles in radians) that :func:`from_mapping` accepts."""
    out: dict[str, Any] = {}
    for name in SECTIONS:
        sec = getattr(cfg, name)
        out[name] = {f.name: _plain(getattr(sec, f.name)) for f in fields(sec)}
    out["methods"] = list(cfg.methods)
    out["workers"] = cfg.workers
    out["record_runtime"] = cfg.record_runtime
    return out


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


def default_yaml() -> str:
    return yaml.safe_dump(to_mapping(RunConfig()), sort_keys=False)


def override(cfg: RunConfig, dotted: str, value) -> RunConfig:
    """Return ``cfg`` with one ``section.key`` (or top-level key) replaced and revalidated."""
    data = to_mapping(cfg)
    if "." in dotted:
        sec, key = dotted.split(".", 1)
        if sec not in SECTIONS:
            raise ConfigError(dotted, "unknown section")
        data[sec][key] = value
    else:
        data[dotted] = value
    return from_mapping(data)

