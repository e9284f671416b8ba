"""Experiment configuration: a dataclass filled from a key=value file and flags."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .linalg import StateVector
from .rational import RationalComplex, parse_rat


class ConfigError(ValueError):
    pass


def _is_dyadic(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


@dataclass(frozen=True)
class ExperimentConfig:
    stages: int = 12
    window: int = 8
    eps: Fraction = Fraction(1, 1 << 20)
    seed: int = 1
    draws: int = 1000
    checkpoint: Optional[str] = None
    state: Optional[str] = None
    format: str = "csv"
    machine: str = "vm"
    plants: str = ""
    jobs: int = 1

    def __post_init__(self):
        for name in ("stages", "window", "draws", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.eps <= 0 or not _is_dyadic(self.eps):
            raise ConfigError("eps must be a positive dyadic rational")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")

    def plant_list(self) -> tuple:
        """``plants = 2:complexity:complexity, 3:projective`` -> ((2, ...), (3, ...))."""
        out = []
        for item in filter(None, (p.strip() for p in self.plants.split(","))):
            l, _, name = item.partition(":")
            try:
                out.append((int(l), name))
            except ValueError:
                raise ConfigError(f"bad plant {item!r}; expected <index>:<name>")
        return tuple(out)

    def load_state(self) -> StateVector:
        if not self.state:
            raise ConfigError("a state vector is required (--state)")
        return parse_state(self.state)


def _coerce(name: str, text: str):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown config key {name!r}")
    kind = kinds[name]
    try:
        if kind == "int":
            return int(text)
        if kind == "Fraction":
            return parse_rat(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad value for {name}: {text!r}")
    return text


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def build_config(path: Optional[str] = None, **overrides) -> ExperimentConfig:
    """Defaults, then the config file, then non-None overrides."""
    values = {}
    if path:
        values.update(parse_config_text(Path(path).read_text()))
    for k, v in overrides.items():
        if v is not None:
            values[k] = _coerce(k, v) if isinstance(v, str) else v
    return ExperimentConfig(**values)


def parse_state(spec: str) -> StateVector:
    """``e<k>`` for a basis vector, a JSON file, or an inline JSON list."""
    spec = spec.strip()
    if spec.startswith("e") and spec[1:].isdigit():
        return StateVector.basis(int(spec[1:]))
    if spec.startswith("["):
        obj = json.loads(spec)
    else:
        obj = json.loads(Path(spec).read_text())
    if isinstance(obj, dict):
        obj = obj.get("coefficients")
    if not isinstance(obj, list) or not obj:
        raise ConfigError("state must be a non-empty list of coefficients")
    return StateVector(tuple(RationalComplex.from_json(c) for c in obj))
