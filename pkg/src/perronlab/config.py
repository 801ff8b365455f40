"""Flat ``key = value`` run configuration.

Strings are double-quoted with JSON escapes, ``auto`` selects a derived
default, ``#`` starts a comment.  Example::

    domain = "annulus(0.05,1)"
    data = "annulus_indicator"
    K = 9
    k_range = 2..9
    n_walks = 100000
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .domain import builtin_data, builtin_domain

MAX_K = 12


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class RunConfig:
    domain: str = "disc(1)"
    data: str = "fourier_mode(4)"
    K: int = 8
    k_range: tuple[int, int] | None = None  # None: 2..K
    tol: float = 1e-10
    epsilon: float | None = None  # None: 1e-4 * bbox diagonal
    n_walks: int = 100_000
    max_steps: int = 10_000
    seed: int = 42
    out: str = "out"
    emit_svg: bool = False

    @property
    def levels(self) -> range:
        lo, hi = self.k_range if self.k_range is not None else (min(2, self.K), self.K)
        return range(lo, hi + 1)


def _parse_str(raw: str) -> str:
    # JSON string syntax: double quotes, backslash escapes.
    if len(raw) >= 2 and raw[0] == raw[-1] == '"':
        try:
            value = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad string {raw}: {exc.msg}") from None
        if isinstance(value, str):
            return value
    raise ValueError(f"expected a double-quoted string, got {raw}")


def _parse_int(raw: str) -> int:
    return int(raw.replace("_", ""))


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_optional_float(raw: str) -> float | None:
    return None if raw == "auto" else float(raw)


def _parse_range(raw: str) -> tuple[int, int] | None:
    if raw == "auto":
        return None
    lo, sep, hi = raw.partition("..")
    if not sep:
        raise ValueError(f"expected lo..hi, got {raw}")
    return int(lo), int(hi)


def _parse_bool(raw: str) -> bool:
    if raw in ("true", "false"):
        return raw == "true"
    raise ValueError(f"expected true or false, got {raw}")


_PARSERS = {
    "domain": _parse_str,
    "data": _parse_str,
    "K": _parse_int,
    "k_range": _parse_range,
    "tol": _parse_float,
    "epsilon": _parse_optional_float,
    "n_walks": _parse_int,
    "max_steps": _parse_int,
    "seed": _parse_int,
    "out": _parse_str,
    "emit_svg": _parse_bool,
}


def validate(cfg: RunConfig) -> list[tuple[str, str]]:
    """``(key, message)`` for every range or consistency problem."""
    errors = []
    if not 2 <= cfg.K <= MAX_K:
        errors.append(("K", f"K must be >= 2 and <= {MAX_K}, got {cfg.K}"))
    if cfg.k_range is not None:
        lo, hi = cfg.k_range
        if not 1 <= lo <= hi <= cfg.K:
            errors.append(("k_range", f"k_range must satisfy 1 <= lo <= hi <= K={cfg.K}, got {lo}..{hi}"))
    if not 0 < cfg.tol < 1:
        errors.append(("tol", f"tol must lie in (0, 1), got {cfg.tol}"))
    if cfg.epsilon is not None and not cfg.epsilon > 0:
        errors.append(("epsilon", f"epsilon must be positive, got {cfg.epsilon}"))
    if cfg.n_walks < 1:
        errors.append(("n_walks", f"n_walks must be >= 1, got {cfg.n_walks}"))
    if cfg.max_steps < 1:
        errors.append(("max_steps", f"max_steps must be >= 1, got {cfg.max_steps}"))
    if not 0 <= cfg.seed < 2**64:
        errors.append(("seed", f"seed must be a 64-bit unsigned integer, got {cfg.seed}"))
    try:
        domain = builtin_domain(cfg.domain)
    except ValueError as exc:
        errors.append(("domain", str(exc)))
    else:
        try:
            builtin_data(cfg.data, domain)
        except ValueError as exc:
            errors.append(("data", str(exc)))
    return errors


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem."""
    values: dict = {}
    where: dict[str, int] = {}
    errors: list[str] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = _strip_comment(line)
        if not stripped:
            continue
        key, sep, raw = stripped.partition("=")
        key, raw = key.strip(" \t"), raw.strip(" \t")
        if not sep or not key:
            errors.append(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
            continue
        if key not in _PARSERS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            errors.append(f"line {lineno}: duplicate key {key!r} (first set on line {where[key]})")
            continue
        try:
            values[key] = _PARSERS[key](raw)
            where[key] = lineno
        except ValueError as exc:
            errors.append(f"line {lineno}: malformed value for {key}: {exc}")
    cfg = RunConfig(**values)
    errors += [f"line {where[key]}: {msg}" if key in where else msg for key, msg in validate(cfg)]
    if errors:
        raise ConfigError(errors)
    return cfg


def _strip_comment(line: str) -> str:
    in_str = escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif ch == "\\" and in_str:
            escaped = True
        elif ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return line[:i].strip(" \t\r")
    return line.strip(" \t\r")


def render_config(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            text = "auto"
        elif isinstance(v, bool):
            text = "true" if v else "false"
        elif isinstance(v, str):
            text = json.dumps(v)
        elif isinstance(v, tuple):
            text = f"{v[0]}..{v[1]}"
        elif isinstance(v, float):
            text = repr(v)
        else:
            text = str(v)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def load_config(path: str | None) -> RunConfig:
    """``None`` or ``"default"`` gives the defaults; otherwise read the file."""
    if path is None or path == "default":
        return RunConfig()
    with open(path) as fh:
        return parse_config(fh.read())
