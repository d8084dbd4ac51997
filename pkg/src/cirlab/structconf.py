"""Strict dataclass <-> plain-dict conversion for configs and metadata.

Unknown keys are rejected with their full dotted path so a typo in an
ablation switch fails loudly instead of silently running the default.
"""

import dataclasses
import types
import typing
from typing import Any, TypeVar

from .errors import ConfigurationError

T = TypeVar("T")


def to_dict(obj: Any) -> dict:
    return dataclasses.asdict(obj, dict_factory=_dict_factory)


def _dict_factory(items):
    out = {}
    for key, value in items:
        if isinstance(value, (set, frozenset)):
            value = sorted(value)
        out[key] = value
    return out


def from_dict(cls: type[T], data: Any, path: str = "") -> T:
    """Build dataclass ``cls`` from ``data``, rejecting unknown keys."""
    if not dataclasses.is_dataclass(cls):
        raise TypeError(f"{cls!r} is not a dataclass")
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(
            f"{path or 'config'}: expected a mapping, got {type(data).__name__}"
        )
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigurationError(f"unknown config key: {_join(path, key)}")
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for name in fields:
        if name in data:
            kwargs[name] = _convert(hints[name], data[name], _join(path, name))
    return cls(**kwargs)


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _convert(annotation: Any, value: Any, path: str) -> Any:
    origin = typing.get_origin(annotation)
    if origin is typing.Union or origin is types.UnionType:
        args = [a for a in typing.get_args(annotation) if a is not type(None)]
        if value is None:
            return None
        return _convert(args[0], value, path)
    if dataclasses.is_dataclass(annotation):
        return from_dict(annotation, value, path)
    if origin in (set, frozenset):
        (item_type,) = typing.get_args(annotation)
        return origin(_convert(item_type, v, path) for v in _as_list(value, path))
    if origin is list:
        (item_type,) = typing.get_args(annotation)
        return [_convert(item_type, v, path) for v in _as_list(value, path)]
    if origin is dict:
        return dict(value)
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{path}: expected a boolean, got {value!r}")
        return value
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{path}: expected an integer, got {value!r}")
        return value
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{path}: expected a string, got {value!r}")
        return value
    return value


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, (list, tuple)):
        raise ConfigurationError(f"{path}: expected a list, got {value!r}")
    return list(value)
