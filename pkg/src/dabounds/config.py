"""Flat ``key=value`` configuration files.

One key per line, ``#`` starts a comment, blank lines are ignored.  Typed
accessors raise :class:`ConfigurationError` naming the key; unknown keys
are rejected by :meth:`Config.check_keys`.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable

from .exceptions import ConfigurationError

__all__ = ["Config", "parse_config", "load_config"]


class Config:
    def __init__(self, values: dict[str, str], source: str = "<config>"):
        self._values = dict(values)
        self.source = source

    def __contains__(self, key: str) -> bool:
        return key in self._values

    def keys(self):
        return self._values.keys()

    def check_keys(self, allowed: Iterable[str]) -> None:
        allowed = set(allowed)
        for key in self._values:
            if key not in allowed:
                raise ConfigurationError(f"{self.source}: unknown key '{key}'")

    def _raw(self, key, default):
        if key in self._values:
            return self._values[key]
        if default is _REQUIRED:
            raise ConfigurationError(f"{self.source}: missing required key '{key}'")
        return default

    def get_str(self, key, default=None):
        return self._raw(key, default if default is not None else _REQUIRED)

    def get_float(self, key, default=None):
        raw = self._raw(key, _REQUIRED if default is None else default)
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise ConfigurationError(f"{self.source}: key '{key}' expects a number, got {raw!r}") from None

    def get_int(self, key, default=None):
        raw = self._raw(key, _REQUIRED if default is None else default)
        try:
            v = int(str(raw).strip())
        except ValueError:
            raise ConfigurationError(f"{self.source}: key '{key}' expects an integer, got {raw!r}") from None
        return v

    def get_bool(self, key, default=None):
        raw = self._raw(key, _REQUIRED if default is None else default)
        if isinstance(raw, bool):
            return raw
        s = str(raw).strip().lower()
        if s in ("true", "1", "yes"):
            return True
        if s in ("false", "0", "no"):
            return False
        raise ConfigurationError(f"{self.source}: key '{key}' expects true/false, got {raw!r}")

    def get_floats(self, key, default=None) -> list[float]:
        raw = self._raw(key, _REQUIRED if default is None else default)
        if isinstance(raw, (list, tuple)):
            return [float(v) for v in raw]
        try:
            return [float(v) for v in str(raw).split(",") if v.strip()]
        except ValueError:
            raise ConfigurationError(f"{self.source}: key '{key}' expects comma-separated numbers, got {raw!r}") from None

    def get_ints(self, key, default=None) -> list[int]:
        raw = self._raw(key, _REQUIRED if default is None else default)
        if isinstance(raw, (list, tuple)):
            return [int(v) for v in raw]
        try:
            return [int(v) for v in str(raw).split(",") if v.strip()]
        except ValueError:
            raise ConfigurationError(f"{self.source}: key '{key}' expects comma-separated integers, got {raw!r}") from None


_REQUIRED = object()


def parse_config(text: str, source: str = "<config>") -> Config:
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key '{key}'")
        values[key] = value
    return Config(values, source)


def load_config(path) -> Config:
    """Read and parse a UTF-8 config file (I/O errors propagate as OSError)."""
    return parse_config(Path(path).read_text(encoding="utf-8"), str(path))
