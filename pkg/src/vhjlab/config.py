"""Scenario files: one TOML file describes one run.

Schema (keys in brackets are optional)::

    q = 1.8
    [N] = 1
    horizon = 100.0

    [datum]
    family = "gaussian"            # gaussian | smooth_bump
    amplitude = 1.0
    [width] = 1.0                  # gaussian
    [support_radius] = 1.0         # smooth_bump
    [sign] = "nonnegative"         # defaults from the amplitude sign

    [grid]
    spacing = 0.1
    radius = 80.0                  # or node_count = 800

    [schedule]                     # optional
    [t0] = 0.01
    [ratio] = 1.3335214321633240   # 10^(1/8)

    [scheme]                       # optional, SchemeConfig fields
    [diagnostics]                  # optional
    [list] = ["heat_error", "vss_error", "z_error", "monitors"]
    [output]                       # optional
    [dir] = "out"
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .grid import InitialDatum, RadialGrid
from .solver import ProblemSpec, SchemeConfig, geometric_times

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DIAGNOSTICS = ("heat_error", "vss_error", "z_error", "monitors")
DEFAULT_RATIO = 10 ** (1 / 8)


class ConfigError(ValueError):
    """The scenario file does not match the schema."""


@dataclass(frozen=True)
class ScenarioConfig:
    q: float
    N: int
    datum: InitialDatum
    grid: RadialGrid
    horizon: float
    t0: float = 0.01
    ratio: float = DEFAULT_RATIO
    scheme: SchemeConfig = SchemeConfig()
    diagnostics: tuple = ()
    output_dir: Optional[str] = None

    def problem(self) -> ProblemSpec:
        return ProblemSpec(self.q, self.grid, self.datum, self.horizon)

    def output_times(self) -> np.ndarray:
        return geometric_times(self.t0, self.horizon, self.ratio)


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return table[key]


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    return float(value)


def _datum(table: dict) -> InitialDatum:
    family = _require(table, "family", "[datum]")
    amplitude = _number(_require(table, "amplitude", "[datum]"), "datum.amplitude")
    sign = table.get("sign")
    if family == "gaussian":
        return InitialDatum.gaussian(amplitude, _number(table.get("width", 1.0), "datum.width"),
                                     sign=sign)
    if family == "smooth_bump":
        radius = _number(table.get("support_radius", 1.0), "datum.support_radius")
        return InitialDatum.smooth_bump(amplitude, radius, sign=sign)
    raise ConfigError(f"datum.family must be 'gaussian' or 'smooth_bump', got {family!r}")


def _grid(table: dict, N: int) -> RadialGrid:
    h = _number(_require(table, "spacing", "[grid]"), "grid.spacing")
    if "node_count" in table:
        M = table["node_count"]
        if not isinstance(M, int):
            raise ConfigError("grid.node_count must be an integer")
        return RadialGrid(N, M, h)
    return RadialGrid.from_radius(_number(_require(table, "radius", "[grid]"), "grid.radius"),
                                  h, N)


def _scheme(table: dict) -> SchemeConfig:
    names = {f.name for f in dataclasses.fields(SchemeConfig)}
    unknown = set(table) - names
    if unknown:
        raise ConfigError(f"unknown [scheme] keys: {sorted(unknown)}")
    return SchemeConfig(**table)


def parse_config(data: dict) -> ScenarioConfig:
    """Validate a parsed TOML document; raises ``ConfigError`` with a schema message."""
    try:
        q = _number(_require(data, "q", "the top level"), "q")
        N = data.get("N", 1)
        if not isinstance(N, int):
            raise ConfigError("N must be an integer")
        horizon = _number(_require(data, "horizon", "the top level"), "horizon")
        datum = _datum(_require(data, "datum", "the top level"))
        grid = _grid(_require(data, "grid", "the top level"), N)
        sched = data.get("schedule", {})
        t0 = _number(sched.get("t0", 0.01), "schedule.t0")
        ratio = _number(sched.get("ratio", DEFAULT_RATIO), "schedule.ratio")
        scheme = _scheme(data.get("scheme", {}))
        diags = tuple(data.get("diagnostics", {}).get("list", ()))
        bad = [d for d in diags if d not in DIAGNOSTICS]
        if bad:
            raise ConfigError(f"unknown diagnostics {bad}; choose from {list(DIAGNOSTICS)}")
        out = data.get("output", {}).get("dir")
        cfg = ScenarioConfig(q, N, datum, grid, horizon, t0, ratio, scheme, diags, out)
        cfg.problem().initial_field()
        if not 0 < t0 < horizon:
            raise ConfigError("schedule.t0 must lie in (0, horizon)")
        if "vss_error" in diags and not 1 < q < (N + 2) / (N + 1):
            raise ConfigError("vss_error needs 1 < q < q_c(N)")
        if "z_error" in diags and not 1 < q < 2:
            raise ConfigError("z_error needs 1 < q < 2")
        return cfg
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)


__all__ = ["ScenarioConfig", "ConfigError", "parse_config", "load_config", "DIAGNOSTICS"]
