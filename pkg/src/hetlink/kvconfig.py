"""Flat key=value config files used by the CLI and generators."""

from __future__ import annotations

import dataclasses

from .errors import ConfigError


def read_kv(path: str) -> dict[str, str]:
    """Parse a flat key=value file; '#' starts a comment line."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
            key, value = stripped.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_kv(path: str, mapping: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in mapping.items():
            fh.write(f"{key}={value}\n")


def coerce_dataclass(cls, overrides: dict[str, str]):
    """Build dataclass ``cls`` from string overrides of its defaults.

    Unknown keys and uncoercible values raise :class:`ConfigError`.
    """
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in overrides.items():
        field = fields.get(key)
        if field is None:
            raise ConfigError(f"unknown config key: {key!r}")
        try:
            if field.type in ("int", int):
                kwargs[key] = int(raw)
            elif field.type in ("float", float):
                kwargs[key] = float(raw)
            elif field.type in ("bool", bool):
                if raw.lower() not in ("true", "false", "0", "1"):
                    raise ValueError(raw)
                kwargs[key] = raw.lower() in ("true", "1")
            else:
                kwargs[key] = raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return cls(**kwargs)
