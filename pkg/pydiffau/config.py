"""
The MIT License (MIT)

Copyright (c) 2025-present pydiffau developers

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import yaml

from .constants import CONFIG_ECHO_NAME, CONFIG_ENV_VAR
from .dataclass import (
    AmplitudeTransformParams,
    CSConfig,
    DatasetSpec,
    NoiseSchedule,
    PathsConfig,
    PCSamplerConfig,
    RunConfig,
    ScoreModelConfig,
    STFTConfig,
    TrainConfig,
)
from .errors import ConfigurationError
from .type import PathLike
from .utils import atomic_write

__all__ = (
    "resolve_config_path",
    "parse_override",
    "apply_overrides",
    "config_from_dict",
    "load_config",
    "echo_config",
)

_log = logging.getLogger(__name__)

_SECTIONS = {
    "stft": STFTConfig,
    "amplitude": AmplitudeTransformParams,
    "schedule": NoiseSchedule,
    "sampler": PCSamplerConfig,
    "dataset": DatasetSpec,
    "baseline": CSConfig,
    "paths": PathsConfig,
}
_PER_BLOCK = {"model": ScoreModelConfig, "training": TrainConfig}
_SCALARS = ("seed", "jobs")


def resolve_config_path(path: Optional[PathLike] = None) -> Optional[Path]:
    """The configuration file to read: ``path`` when given, else the one named by ``PYDIFFAU_CONFIG``, else none."""
    if path:
        return Path(path)
    env = os.environ.get(CONFIG_ENV_VAR)
    return Path(env) if env else None


def parse_override(text: str) -> tuple:
    """Split ``section.key=value`` into its key path and a YAML-parsed value.

    Raises
    --------
    :class:`ConfigurationError`
        When ``text`` has no ``=`` or an empty key.


    .. versionadded:: 0.1.0
    """
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigurationError(f"Override {text!r} is not of the form section.key=value")
    parts = []
    for part in key.strip().split("."):
        parts.append(int(part) if part.isdigit() else part)
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Cannot parse value of override {text!r}: {e}") from e
    return tuple(parts), value


def apply_overrides(data: Dict[Any, Any], overrides: Iterable[str]) -> Dict[Any, Any]:
    """Set every ``section.key=value`` of ``overrides`` in ``data`` (in place) and return it."""
    for text in overrides:
        keys, value = parse_override(text)
        node = data
        for key in keys[:-1]:
            child = node.get(key)
            if child is None:
                child = node[key] = {}
            elif not isinstance(child, dict):
                raise ConfigurationError(f"Override {text!r}: {key!r} is not a section")
            node = child
        node[keys[-1]] = value
    return data


def _blocks(name: str, raw: Any) -> Dict[int, Any]:
    cls = _PER_BLOCK[name]
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError("Expected a mapping of block order to settings", section=name)
    out = {}
    for block in (1, 2):
        values = dict(raw.get(block) or raw.get(str(block)) or {})
        values.setdefault("block_order", block)
        out[block] = cls.from_dict(values)
    unknown = {str(k) for k in raw} - {"1", "2"}
    if unknown:
        raise ConfigurationError(f"Unknown blocks: {', '.join(sorted(unknown))}", section=name)
    return out


def config_from_dict(data: Optional[Dict[Any, Any]]) -> RunConfig:
    """Build and validate a :class:`RunConfig`; missing sections take their defaults.

    Raises
    --------
    :class:`ConfigurationError`
        For unknown sections or keys and for values that violate a section's invariants.


    .. versionadded:: 0.1.0
    """
    data = dict(data or {})
    known = set(_SECTIONS) | set(_PER_BLOCK) | set(_SCALARS)
    unknown = {str(k) for k in data} - known
    if unknown:
        raise ConfigurationError(f"Unknown sections: {', '.join(sorted(unknown))}")
    kwargs: Dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        section = data.get(name) or {}
        if not isinstance(section, dict):
            raise ConfigurationError("Expected a mapping", section=name)
        kwargs[name] = cls.from_dict(section)
    for name in _PER_BLOCK:
        kwargs[name] = _blocks(name, data.get(name))
    for name in _SCALARS:
        if data.get(name) is not None:
            try:
                kwargs[name] = int(data[name])
            except (TypeError, ValueError) as e:
                raise ConfigurationError(f"{name} must be an integer, got {data[name]!r}") from e
    cfg = RunConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(path: Optional[PathLike] = None, overrides: Iterable[str] = ()) -> RunConfig:
    """Read the run configuration.

    The file is ``path``, or the one named by the ``PYDIFFAU_CONFIG`` environment variable, or none at all (every
    section at its defaults). ``overrides`` are applied on top, so they win over file values.

    Raises
    --------
    :class:`ConfigurationError`
        When the file is missing or malformed, or the resulting settings are invalid.


    .. versionadded:: 0.1.0
    """
    resolved = resolve_config_path(path)
    data: Dict[Any, Any] = {}
    if resolved is not None:
        try:
            with open(resolved, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as e:
            raise ConfigurationError(f"Cannot read configuration file {resolved}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Malformed configuration file {resolved}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"Configuration file {resolved} must hold a mapping")
        _log.debug("Loaded configuration from %s", resolved)
    return config_from_dict(apply_overrides(data, overrides))


def echo_config(cfg: RunConfig, out_dir: PathLike) -> Path:
    """Write the resolved configuration as ``config.yaml`` into ``out_dir``."""
    path = Path(out_dir) / CONFIG_ECHO_NAME
    with atomic_write(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)
    return path
