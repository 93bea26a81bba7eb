"""Flat ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment. Lists are
comma-separated. Angles may be written as multiples of pi (``pi/2``,
``-0.25*pi``). Unknown keys are rejected and every constraint violation is
reported at once.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace
from typing import Tuple

from ._validation import POTENTIAL_KINDS, SCHEMES

__all__ = ["RunConfig", "ConfigError", "parse_config", "dump_config", "PRESETS", "preset"]


class ConfigError(ValueError):
    """Parse or validation failure; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class RunConfig:
    mu: float = 1.0
    hbar: float = 1.0
    l: float = 1.0
    gamma: float = math.pi / 2
    potential: str = "harmonic"
    strength: float = 1.0
    coeffs: Tuple[float, ...] = ()
    goursat_grid: int = 200
    nystrom_n: int = 64
    scheme: str = "split"
    export_count: int = 12
    interp_points: int = 512
    dynamics_n: int = 512
    dt_divisor: float = 200.0
    run_length: float = 2.0
    snapshot_stride: int = 20
    indices: Tuple[int, ...] = (5, 6)
    ccr_nodes: int = 64
    ccr_tol: float = 1e-3
    out_dir: str = "ctoa-out"

    def replace(self, **changes) -> "RunConfig":
        return validate(replace(self, **changes))


_FLOATS = ("mu", "hbar", "l", "gamma", "strength", "dt_divisor", "run_length", "ccr_tol")
_INTS = ("goursat_grid", "nystrom_n", "export_count", "interp_points", "dynamics_n", "snapshot_stride", "ccr_nodes")
_STRS = ("potential", "scheme", "out_dir")
_PI = re.compile(r"^([+-]?)\s*(\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?$")


def _float(text):
    m = _PI.match(text)
    if m:
        sign, mult, div = m.groups()
        val = math.pi * (float(mult) if mult else 1.0) / (float(div) if div else 1.0)
        return -val if sign == "-" else val
    return float(text)


def _convert(key, text):
    if key in _FLOATS:
        return _float(text)
    if key in _INTS:
        return int(text)
    if key in _STRS:
        return text
    if key == "coeffs":
        return tuple(float(t) for t in text.split(",") if t.strip()) if text else ()
    if key == "indices":
        return tuple(int(t) for t in text.split(",") if t.strip()) if text else ()
    raise KeyError(key)


def _problems(cfg: RunConfig):
    out = []
    for name in ("mu", "hbar", "l", "dt_divisor", "run_length", "ccr_tol"):
        v = getattr(cfg, name)
        if not (math.isfinite(v) and v > 0):
            out.append(f"{name} must be positive (got {v!r})")
    for name in ("goursat_grid", "nystrom_n", "export_count", "interp_points", "dynamics_n", "snapshot_stride", "ccr_nodes"):
        if getattr(cfg, name) <= 0:
            out.append(f"{name} must be positive (got {getattr(cfg, name)!r})")
    if not (math.isfinite(cfg.gamma) and -math.pi < cfg.gamma < math.pi):
        out.append(f"gamma must satisfy |gamma| < pi (got {cfg.gamma!r})")
    if cfg.potential not in POTENTIAL_KINDS:
        out.append(f"potential must be one of {', '.join(POTENTIAL_KINDS)} (got {cfg.potential!r})")
    elif cfg.potential == "polynomial" and not cfg.coeffs:
        out.append("potential = polynomial needs coeffs")
    if not all(math.isfinite(c) for c in cfg.coeffs):
        out.append("coeffs must be finite")
    if cfg.scheme not in SCHEMES:
        out.append(f"scheme must be one of {', '.join(SCHEMES)} (got {cfg.scheme!r})")
    if any(i < 1 for i in cfg.indices):
        out.append("indices count positive eigenvalues from 1")
    if cfg.interp_points < 64:
        out.append("interp_points must be at least 64")
    if cfg.dynamics_n < 16:
        out.append("dynamics_n must be at least 16")
    if not cfg.out_dir:
        out.append("out_dir must not be empty")
    return out


def validate(cfg: RunConfig) -> RunConfig:
    problems = _problems(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def parse_config(text: str, base: RunConfig = None) -> RunConfig:
    """Parse the key-value format on top of ``base`` (defaults if omitted)."""
    known = {f.name for f in fields(RunConfig)}
    values, problems, seen = {}, [], {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in known:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            problems.append(f"line {lineno}: key {key!r} already set on line {seen[key]}")
            continue
        seen[key] = lineno
        try:
            values[key] = _convert(key, val)
        except ValueError:
            problems.append(f"line {lineno}: bad value {val!r} for key {key!r}")
    cfg = replace(base or RunConfig(), **values)
    problems += _problems(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def _render(v):
    if isinstance(v, tuple):
        return ", ".join(_render(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    """Every key with its value; ``parse_config(dump_config(c)) == c``."""
    return "".join(f"{f.name} = {_render(getattr(cfg, f.name))}\n" for f in fields(RunConfig))


PRESETS = {
    "fig1-harmonic": "potential = harmonic\nstrength = 1.0\nmu = 1.0\nhbar = 1.0\nl = 1.0\ngamma = pi/2\nindices = 5, 6\n",
    "linear-lambda1": "potential = linear\nstrength = 1.0\ngamma = pi/2\nindices = 5, 6\n",
    "free-box": "potential = free\nstrength = 0.0\ngamma = pi/2\nindices = 1, 2\n",
}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}"])
    return parse_config(PRESETS[name])
