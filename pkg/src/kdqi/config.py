"""Flat key-value run configuration with typed parameters and a stable hash."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


PARSERS: dict[str, Callable[[str], Any]] = {
    "int": int, "float": float, "str": str, "bool": _bool, "floats": _floats, "ints": _ints,
}


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    default: Any
    help: str = ""

    def parse(self, text: str) -> Any:
        try:
            return PARSERS[self.kind](text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {self.name}: {exc}") from None


def read_config_file(path: str | Path) -> dict[str, str]:
    """``key = value`` per line; ``#`` starts a comment; dashes in keys read as underscores."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def resolve(params: list[Param], file_values: dict[str, str], overrides: dict[str, Any]) -> dict[str, Any]:
    """Defaults, then the config file, then explicit flag values."""
    known = {p.name: p for p in params}
    unknown = sorted(set(file_values) - set(known) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    out = {p.name: p.default for p in params}
    for k, v in file_values.items():
        if k in known:
            out[k] = known[k].parse(v)
    for k, v in overrides.items():
        if v is not None:
            out[k] = v
    return out


def config_hash(command: str, values: dict[str, Any], seed: int) -> str:
    blob = json.dumps({"command": command, "seed": seed, "params": values}, sort_keys=True, default=list)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
