"""Flat ``key = value`` experiment files.

Lines starting with ``#`` are comments. ``experiment`` selects the preset
that the remaining keys override; list values are comma separated.
"""
from pathlib import Path
from typing import Dict, Union

from pydantic import ValidationError

from vano.exceptions import ConfigError
from vano.schemas import PRESETS, TrainConfig


def parse_config_text(text: str) -> Dict[str, str]:
    entries: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in TrainConfig.model_fields:
            raise ConfigError(f"line {number}: unknown key '{key}'")
        entries[key] = value
    return entries


def config_from_entries(entries: Dict[str, str]) -> TrainConfig:
    experiment = entries.get("experiment", "custom")
    if experiment not in PRESETS:
        raise ConfigError(f"unknown experiment '{experiment}', expected one of {sorted(PRESETS)}")
    try:
        return TrainConfig.from_preset(experiment, **entries)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def load_config(path: Union[str, Path]) -> TrainConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return config_from_entries(parse_config_text(path.read_text(encoding="utf-8")))


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config_text(config: TrainConfig) -> str:
    lines = ["# vano experiment configuration"]
    for key, value in config.model_dump().items():
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def dump_config(config: TrainConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_config_text(config), encoding="utf-8")
    return path
