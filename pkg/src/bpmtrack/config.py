"""Flat ``key = value`` configuration files.

Keys map one-to-one onto dataclass fields; unknown keys are errors and absent
keys keep their defaults. ``#`` starts a comment.
"""

from __future__ import annotations

import dataclasses
import typing
from typing import Any, Type, TypeVar

from .core import TrackerConfig
from .synthetic import SyntheticSpec

T = TypeVar("T")

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    pass


def parse_value(raw: str, hint) -> Any:
    origin = typing.get_origin(hint)
    if hint is bool:
        low = raw.strip().lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if hint is int:
        return int(raw)
    if hint is float:
        return float(raw)
    if origin is tuple:
        parts = [p for p in raw.replace("(", "").replace(")", "").split(",") if p.strip()]
        args = typing.get_args(hint)
        return tuple(parse_value(p, args[k] if k < len(args) else args[0]) for k, p in enumerate(parts))
    return raw.strip()


def parse_pairs(text: str, source: str = "<config>") -> dict[str, str]:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in body.split("=", 1))
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def from_pairs(cls: Type[T], pairs: dict[str, str], source: str = "<config>") -> T:
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(pairs) - set(fields))
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) {', '.join(unknown)}")
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for key, raw in pairs.items():
        try:
            kwargs[key] = parse_value(raw, hints[key])
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {key}: {exc}") from None
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_tracker_config(path) -> TrackerConfig:
    with open(path, encoding="utf-8") as fh:
        return from_pairs(TrackerConfig, parse_pairs(fh.read(), str(path)), str(path))


def load_synthetic_spec(path) -> SyntheticSpec:
    with open(path, encoding="utf-8") as fh:
        return from_pairs(SyntheticSpec, parse_pairs(fh.read(), str(path)), str(path))


def dump(obj) -> str:
    lines = []
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
