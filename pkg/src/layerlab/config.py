"""Run configuration: a flat ``section.key = value`` text format.

Every key has a default, so an empty file is a valid configuration. Unknown
keys, malformed values and constraint violations raise :class:`ConfigError`
with the offending line number. :func:`dump_config` writes the fully resolved
configuration in the same format, and re-parsing it gives back an equal object.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from pathlib import Path

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_text", "dump_config", "SCHEMA"]


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


DEFAULT_EPS = tuple(2.0 ** -k for k in range(6, 15))

# (section, key) -> (default, type, doc)
SCHEMA = {
    ("model", "epsilon_list"): (DEFAULT_EPS, "floats", "diffusivities, strictly decreasing"),
    ("model", "v_star"): (1.0, "float", "wall value of v, >= 0"),
    ("model", "T"): (0.25, "float", "horizon, > 0"),
    ("model", "preset"): ("paper_poly8", "str", "paper_poly8 or tabulated"),
    ("model", "u0_path"): ("", "str", "two-column table for u0 (preset = tabulated)"),
    ("model", "v0_path"): ("", "str", "two-column table for v0 (preset = tabulated)"),
    ("grid", "n"): (0, "int", "fixed cell count; 0 uses the per-eps rule"),
    ("grid", "cells_per_width"): (8.0, "float", "dx <= sqrt(eps) / cells_per_width"),
    ("grid", "n_cap"): (32768, "int", "largest admissible cell count"),
    ("grid", "grading"): ("uniform", "str", "uniform or tanh"),
    ("grid", "stretch"): (1.0, "float", "tanh grading stretch, >= 1"),
    ("grid", "z_max"): (32.0, "float", "half-line truncation, exp(-z_max) < 1e-12"),
    ("grid", "m"): (2048, "int", "half-line cells, >= 64"),
    ("time", "n_out"): (20, "int", "output intervals on [0, T]"),
    ("time", "dt"): (0.0, "float", "fixed step; 0 uses the default rule"),
    ("time", "safety"): (0.4, "float", "dt <= safety * dx^2"),
    ("time", "min_steps"): (2000, "int", "dt <= T / min_steps"),
    ("layer", "order"): (2, "int", "highest layer order to compute: 0, 1 or 2"),
    ("analysis", "threshold"): (0.1, "float", "thickness threshold fraction"),
    ("analysis", "delta"): (0.25, "float", "interior margin for the interior check"),
    ("analysis", "strict_resolution"): (False, "bool", "turn the dx <= sqrt(eps)/8 warning into an error"),
    ("analysis", "slope_v_min"): (0.45, "float", "acceptance floor, slope of E_v"),
    ("analysis", "slope_u_min"): (0.20, "float", "acceptance floor, slope of E_u"),
    ("analysis", "slope_boundary_min"): (0.20, "float", "acceptance floor, boundary-value residual"),
    ("analysis", "thickness_lo"): (0.4, "float", "acceptance band for the thickness exponent"),
    ("analysis", "thickness_hi"): (0.6, "float", "acceptance band for the thickness exponent"),
    ("analysis", "r2_min"): (0.95, "float", "acceptance floor for the rate-fit R^2"),
    ("output", "dir"): ("layerlab_out", "str", "output directory"),
    ("output", "trajectories"): (False, "bool", "write per-eps full trajectories"),
    ("output", "profiles"): (True, "bool", "write outer and layer profiles"),
}


@dataclass(frozen=True)
class RunConfig:
    epsilon_list: tuple = DEFAULT_EPS
    v_star: float = 1.0
    T: float = 0.25
    preset: str = "paper_poly8"
    u0_path: str = ""
    v0_path: str = ""
    n: int = 0
    cells_per_width: float = 8.0
    n_cap: int = 32768
    grading: str = "uniform"
    stretch: float = 1.0
    z_max: float = 32.0
    m: int = 2048
    n_out: int = 20
    dt: float = 0.0
    safety: float = 0.4
    min_steps: int = 2000
    order: int = 2
    threshold: float = 0.1
    delta: float = 0.25
    strict_resolution: bool = False
    slope_v_min: float = 0.45
    slope_u_min: float = 0.20
    slope_boundary_min: float = 0.20
    thickness_lo: float = 0.4
    thickness_hi: float = 0.6
    r2_min: float = 0.95
    dir: str = "layerlab_out"
    trajectories: bool = False
    profiles: bool = True

    def with_epsilons(self, eps) -> "RunConfig":
        cfg = replace(self, epsilon_list=tuple(float(e) for e in eps))
        _validate(cfg, {})
        return cfg

    @property
    def data_paths(self):
        return (self.u0_path, self.v0_path) if self.preset == "tabulated" else None


_KEY_OF = {key: (sec, key) for sec, key in SCHEMA}
_POWER = re.compile(r"^\s*([0-9.eE+-]+)\s*(?:\^|\*\*)\s*([0-9.eE+-]+)\s*$")


def _to_float(text):
    m = _POWER.match(text)
    if m:
        return float(m.group(1)) ** float(m.group(2))
    return float(text)


def _convert(raw, kind):
    if kind == "float":
        return _to_float(raw)
    if kind == "int":
        val = _to_float(raw)
        if val != int(val):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(val)
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "floats":
        items = [s for s in raw.replace(";", ",").split(",") if s.strip()]
        if not items:
            raise ValueError("expected a comma-separated list of numbers")
        return tuple(_to_float(s) for s in items)
    return raw.strip().strip('"').strip("'")


def _validate(cfg: RunConfig, lines: dict):
    def fail(key, msg):
        raise ConfigError(f"{'.'.join(_KEY_OF[key])}: {msg}", lines.get(key))

    eps = cfg.epsilon_list
    if any(e < 0 for e in eps):
        fail("epsilon_list", "epsilon must be >= 0")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        fail("epsilon_list", "epsilons must be strictly decreasing")
    if cfg.v_star < 0:
        fail("v_star", "v_star must be >= 0")
    if cfg.T <= 0:
        fail("T", "T must be > 0")
    if cfg.preset not in ("paper_poly8", "tabulated"):
        fail("preset", f"unknown preset {cfg.preset!r}")
    if cfg.preset == "tabulated" and not (cfg.u0_path and cfg.v0_path):
        fail("preset", "tabulated data needs model.u0_path and model.v0_path")
    if cfg.n != 0 and cfg.n < 16:
        fail("n", "n must be 0 (rule) or >= 16")
    if cfg.cells_per_width <= 0:
        fail("cells_per_width", "must be > 0")
    if cfg.n_cap < 16:
        fail("n_cap", "must be >= 16")
    if cfg.grading not in ("uniform", "tanh"):
        fail("grading", "grading must be uniform or tanh")
    if cfg.stretch < 1:
        fail("stretch", "stretch must be >= 1")
    if cfg.z_max < 28:
        fail("z_max", "z_max must be >= 28 (decay budget exp(-z_max) < 1e-12)")
    if cfg.m < 64:
        fail("m", "m must be >= 64")
    if cfg.n_out < 1:
        fail("n_out", "n_out must be >= 1")
    if cfg.dt < 0:
        fail("dt", "dt must be >= 0")
    if cfg.safety <= 0:
        fail("safety", "safety must be > 0")
    if cfg.min_steps < 1:
        fail("min_steps", "min_steps must be >= 1")
    if cfg.order not in (0, 1, 2):
        fail("order", "layer order must be 0, 1 or 2")
    if not 0 < cfg.threshold < 1:
        fail("threshold", "threshold must lie in (0, 1)")
    if not 0 < cfg.delta < 0.5:
        fail("delta", "delta must lie in (0, 1/2)")
    if cfg.thickness_lo > cfg.thickness_hi:
        fail("thickness_lo", "thickness band is empty")


def parse_config_text(text: str) -> RunConfig:
    values = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'section.key = value', got {body!r}", lineno)
        lhs, rhs = (s.strip() for s in body.split("=", 1))
        if lhs.count(".") != 1:
            raise ConfigError(f"key {lhs!r} must look like section.key", lineno)
        sec, key = lhs.split(".")
        if (sec, key) not in SCHEMA:
            raise ConfigError(f"unknown key {lhs!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {lhs!r}", lineno)
        kind = SCHEMA[(sec, key)][1]
        try:
            values[key] = _convert(rhs, kind)
        except ValueError as exc:
            raise ConfigError(f"{lhs}: expected {kind}, {exc}", lineno) from None
        lines[key] = lineno
    cfg = RunConfig(**values)
    _validate(cfg, lines)
    return cfg


def parse_config(path=None) -> RunConfig:
    """Read a configuration file; ``None`` gives the defaults."""
    if path is None:
        return parse_config_text("")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} not found")
    return parse_config_text(p.read_text())


def _render(value, kind):
    if kind == "floats":
        return ", ".join(format(v, ".17g") for v in value)
    if kind == "float":
        return format(value, ".17g")
    if kind == "bool":
        return "true" if value else "false"
    return str(value)


def dump_config(cfg: RunConfig) -> str:
    """Fully resolved configuration in the input format (round-trips through the parser)."""
    out = []
    section = None
    names = {f.name for f in fields(cfg)}
    for (sec, key), (_, kind, doc) in SCHEMA.items():
        assert key in names
        if sec != section:
            if section is not None:
                out.append("")
            section = sec
        out.append(f"# {doc}")
        out.append(f"{sec}.{key} = {_render(getattr(cfg, key), kind)}")
    return "\n".join(out) + "\n"
