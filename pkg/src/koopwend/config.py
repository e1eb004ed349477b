"""Experiment configuration files for single kEDMD runs.

The format is flat INI-style key/value text with one section per concern.
Parsing is strict: unknown sections or keys are rejected, and validation
reports every violation found rather than stopping at the first.

Example::

    [kernel]
    d = 2
    k = 1

    [system]
    id = duffing

    [domain]
    x_lo = -2 -2
    x_hi = 2 2
    y_lo = -3 -3
    y_hi = 3 3

    [grids]
    h = 0.2 0.1

    [prediction]
    variants = A-samples Y-centers
    observables = 0 1

    [output]
    dir = out
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from typing import Optional

from koopwend.domain import BoxDomain
from koopwend.errors import ConfigError, KernelConfigError
from koopwend.wendland import build_wendland

VARIANTS = ("A-samples", "Y-centers", "X-self")
SYSTEMS = ("duffing", "lorenz", "identity", "linear", "csv")
Y_MODES = ("grid", "same-as-x", "a-of-x")
VALIDATION_MODES = ("from-finest", "per-train")
GRID_MODES = ("spacing", "fill")

_SCHEMA = {
    "kernel": {"d", "k", "scale"},
    "system": {"id", "dt", "substeps", "sigma", "rho", "beta", "matrix", "x_csv", "ax_csv"},
    "domain": {"x_lo", "x_hi", "y_lo", "y_hi"},
    "grids": {"h", "mode", "max_points"},
    "prediction": {"variants", "y_mode", "y_h", "observables", "steps"},
    "validation": {"mode"},
    "output": {"dir", "seed", "memory_budget_gb"},
}

_REQUIRED = {
    "kernel": {"d", "k"},
    "system": {"id"},
    "output": {"dir"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated settings for one kEDMD prediction run."""

    kernel_d: int
    kernel_k: int
    kernel_scale: float
    system_id: str
    system_params: dict
    x_csv: Optional[str]
    ax_csv: Optional[str]
    dt: float
    substeps: int
    domain_x: Optional[BoxDomain]
    domain_y: Optional[BoxDomain]
    hs: tuple[float, ...]
    grid_mode: str
    max_points: int
    variants: tuple[str, ...]
    y_mode: str
    y_h: Optional[float]
    observables: tuple[int, ...]
    steps: int
    validation: str
    out_dir: str
    seed: int
    memory_budget_gb: float
    warnings: tuple[str, ...] = field(default_factory=tuple)


class _Collector:
    """Accumulates violations while pulling typed values out of the parser."""

    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser
        self.violations: list[str] = []

    def complain(self, msg: str):
        self.violations.append(msg)

    def get(self, section, key, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return default

    def typed(self, section, key, cast, default=None, check=None, describe=""):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            val = cast(raw)
        except (ValueError, TypeError):
            self.complain(f"[{section}] {key} = {raw!r}: not a valid {describe or cast.__name__}")
            return default
        if check is not None and not check(val):
            self.complain(f"[{section}] {key} = {raw!r}: out of range")
            return default
        return val


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(v) for v in raw.replace(",", " ").split())


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(v) for v in raw.replace(",", " ").split())


def _words(raw: str) -> tuple[str, ...]:
    return tuple(raw.replace(",", " ").split())


def load_config(path) -> ExperimentConfig:
    """Parse and validate a run configuration, reporting all violations."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, "r") as fh:
            parser.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"])
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"])

    col = _Collector(parser)
    for section in parser.sections():
        if section not in _SCHEMA:
            col.complain(f"unknown section [{section}]")
            continue
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                col.complain(f"unknown key {key!r} in section [{section}]")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if not parser.has_option(section, key):
                col.complain(f"missing required key {key!r} in section [{section}]")

    d = col.typed("kernel", "d", int, default=0)
    k = col.typed("kernel", "k", int, default=-1)
    scale = col.typed("kernel", "scale", float, default=1.0)
    if d and k >= 0:
        try:
            build_wendland(d, k, scale if scale and scale > 0 else 1.0)
        except KernelConfigError as exc:
            col.complain(f"[kernel]: {exc}")
    if scale is not None and not scale > 0:
        col.complain(f"[kernel] scale = {scale}: must be positive")

    system_id = col.get("system", "id", "")
    if system_id not in SYSTEMS:
        col.complain(f"[system] id = {system_id!r}: expected one of {', '.join(SYSTEMS)}")
    dt = col.typed("system", "dt", float, default=0.02, check=lambda v: v > 0)
    substeps = col.typed("system", "substeps", int, default=4, check=lambda v: v >= 1)
    params = {}
    if system_id == "lorenz":
        for name, default in (("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)):
            params[name] = col.typed("system", name, float, default=default)
    if system_id == "linear":
        raw = col.get("system", "matrix")
        if raw is None:
            col.complain("[system] linear dynamics need a 'matrix' key (rows separated by ';')")
        else:
            try:
                rows = [[float(v) for v in row.split()] for row in raw.split(";")]
                params["matrix"] = tuple(tuple(r) for r in rows)
            except ValueError:
                col.complain(f"[system] matrix = {raw!r}: not a numeric matrix")
    x_csv = col.get("system", "x_csv")
    ax_csv = col.get("system", "ax_csv")
    if system_id == "csv":
        for label, p in (("x_csv", x_csv), ("ax_csv", ax_csv)):
            if p is None:
                col.complain(f"[system] id = csv requires {label}")
            elif not os.path.isfile(p):
                col.complain(f"[system] {label} = {p!r}: file does not exist")

    domain_x = domain_y = None
    x_lo = col.typed("domain", "x_lo", _floats, describe="float list")
    x_hi = col.typed("domain", "x_hi", _floats, describe="float list")
    if system_id != "csv" and (x_lo is None or x_hi is None):
        col.complain("[domain] x_lo and x_hi are required unless the system is csv-based")
    if x_lo is not None and x_hi is not None:
        try:
            domain_x = BoxDomain(x_lo, x_hi)
        except ValueError as exc:
            col.complain(f"[domain] x box: {exc}")
    y_lo = col.typed("domain", "y_lo", _floats, describe="float list")
    y_hi = col.typed("domain", "y_hi", _floats, describe="float list")
    if (y_lo is None) != (y_hi is None):
        col.complain("[domain] y_lo and y_hi must be given together")
    elif y_lo is not None:
        try:
            domain_y = BoxDomain(y_lo, y_hi)
        except ValueError as exc:
            col.complain(f"[domain] y box: {exc}")

    hs = col.typed("grids", "h", _floats, default=(), describe="float list")
    if system_id != "csv" and not hs:
        col.complain("[grids] h: at least one grid resolution is required")
    if any(v <= 0 for v in hs):
        col.complain(f"[grids] h = {hs}: resolutions must be positive")
    if len(set(hs)) != len(hs):
        col.complain(f"[grids] h = {hs}: duplicate resolutions")
    grid_mode = col.get("grids", "mode", "spacing")
    if grid_mode not in GRID_MODES:
        col.complain(f"[grids] mode = {grid_mode!r}: expected one of {', '.join(GRID_MODES)}")
    max_points = col.typed("grids", "max_points", int, default=200_000, check=lambda v: v > 0)

    variants = col.typed("prediction", "variants", _words, default=("A-samples",))
    for v in variants:
        if v not in VARIANTS:
            col.complain(f"[prediction] variants: {v!r} not one of {', '.join(VARIANTS)}")
    y_mode = col.get("prediction", "y_mode", "grid")
    if y_mode not in Y_MODES:
        col.complain(f"[prediction] y_mode = {y_mode!r}: expected one of {', '.join(Y_MODES)}")
    y_h = col.typed("prediction", "y_h", float, check=lambda v: v > 0)
    observables = col.typed("prediction", "observables", _ints, default=(), describe="int list")
    if not observables:
        col.complain("[prediction] observables: at least one coordinate index is required")
    sys_dim = {"duffing": 2, "lorenz": 3}.get(system_id)
    if sys_dim is None and domain_x is not None:
        sys_dim = domain_x.dim
    if sys_dim is not None:
        bad = [i for i in observables if not 0 <= i < sys_dim]
        if bad:
            col.complain(f"[prediction] observables {bad} outside coordinate range [0, {sys_dim})")
        if d and d != sys_dim:
            col.complain(f"[kernel] d = {d} does not match the system dimension {sys_dim}")
    steps = col.typed("prediction", "steps", int, default=1, check=lambda v: v >= 1)
    if steps is not None and steps > 1:
        if y_mode != "same-as-x":
            col.complain("[prediction] steps > 1 requires y_mode = same-as-x (shared domain)")
        if any(v == "Y-centers" for v in variants):
            col.complain("[prediction] steps > 1 supports variants A-samples and X-self only")

    validation = col.get("validation", "mode", "per-train")
    if validation not in VALIDATION_MODES:
        col.complain(
            f"[validation] mode = {validation!r}: expected one of {', '.join(VALIDATION_MODES)}"
        )

    out_dir = col.get("output", "dir", "")
    seed = col.typed("output", "seed", int, default=0)
    budget = col.typed("output", "memory_budget_gb", float, default=6.5, check=lambda v: v > 0)

    if col.violations:
        raise ConfigError(col.violations)
    return ExperimentConfig(
        kernel_d=d,
        kernel_k=k,
        kernel_scale=scale,
        system_id=system_id,
        system_params=params,
        x_csv=x_csv,
        ax_csv=ax_csv,
        dt=dt,
        substeps=substeps,
        domain_x=domain_x,
        domain_y=domain_y,
        hs=tuple(hs),
        grid_mode=grid_mode,
        max_points=max_points,
        variants=tuple(variants),
        y_mode=y_mode,
        y_h=y_h,
        observables=tuple(observables),
        steps=steps,
        validation=validation,
        out_dir=out_dir,
        seed=seed,
        memory_budget_gb=budget,
    )
