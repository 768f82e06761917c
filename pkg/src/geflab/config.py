"""Run configuration: a plain-text `key = value` file.

Grammar, one statement per line:

    # comment            (blank lines and lines starting with '#' are ignored)
    key = value          (whitespace around '=' is optional)

Scalars are written as Python literals would be (`7`, `0.25`, `inf`,
`continuous`); list-valued keys take comma-separated items (`0.3, 0.5`).
Strings are unquoted. Unknown keys, repeated keys and unparseable values
are errors that report the line number and key. `seed` is mandatory.
"""
from __future__ import annotations

import hashlib
import math
import typing
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class RunConfig:
    seed: int
    experiment: str = "run"
    out: str = "geflab-out"
    threads: int = 1
    # GEF corpus
    samples: int = 100
    R_max: float = 6.0
    # counting estimators
    rho: float = 1.0
    radii: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    pairs: tuple[str, ...] = ("zz", "cc", "c+c+", "zc+")
    placement: str = "continuous"
    # Kac-Rice Monte Carlo
    draws: int = 1_000_000
    nodes: int = 64
    kinds: tuple[str, ...] = ("c", "c+", "c-")
    r_values: tuple[float, ...] = (0.01, 0.02, 0.05, 0.1, 0.2)
    # spectrogram
    area: float = 400.0
    realizations: int = 4
    dt: float = 0.02
    delta: float = 0.1
    # fit
    profile: str = ""
    fit_lo: float = 0.0
    fit_hi: float = math.inf

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            text = ", ".join(_scalar_text(x) for x in v) if isinstance(v, tuple) else _scalar_text(v)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]


def _scalar_text(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


_HINTS = typing.get_type_hints(RunConfig)


def _convert(kind, text: str, line: int, key: str):
    try:
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"cannot read {text!r} as {kind.__name__}", line, key) from None


def _parse_value(key: str, raw: str, line: int):
    hint = _HINTS[key]
    if typing.get_origin(hint) is tuple:
        item = typing.get_args(hint)[0]
        parts = [p.strip() for p in raw.split(",")]
        if any(p == "" for p in parts):
            raise ConfigError("empty list item", line, key)
        return tuple(_convert(item, p, line, key) for p in parts)
    if raw == "" and hint is not str:
        raise ConfigError("missing value", line, key)
    return _convert(hint, raw, line, key)


def loads(text: str) -> RunConfig:
    names = {f.name for f in fields(RunConfig)}
    values: dict = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ConfigError("expected 'key = value'", no)
        key, _, val = s.partition("=")
        key, val = key.strip(), val.strip()
        if key not in names:
            raise ConfigError("unknown key", no, key)
        if key in values:
            raise ConfigError("key given twice", no, key)
        values[key] = _parse_value(key, val, no)
    if "seed" not in values:
        raise ConfigError("a master seed is required", field="seed")
    return RunConfig(**values)


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return loads(text)
