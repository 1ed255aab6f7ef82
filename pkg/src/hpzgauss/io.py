"""Run configuration (TOML) and versioned CSV tables.

CSV layout::

    # hpzgauss <kind> v<version>
    # {"bath": {...}, ...}          <- one-line JSON header
    col1,col2,...
    ...

Floats are written with ``repr`` so a re-read reproduces them bit for bit;
``None`` is written as an empty field.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .analysis import ScanGrid
from .bath import BathSpec, KernelEvalConfig
from .errors import ConfigError, HPZError
from .propagator import EvolutionConfig

__all__ = ["CSV_VERSION", "RunConfig", "load_config", "parse_config", "write_table", "read_table"]

CSV_VERSION = 1


# ----------------------------------------------------------------- tables

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float) or hasattr(v, "dtype"):
        try:
            f = float(v)
        except (TypeError, ValueError):
            return str(v)
        return repr(f) if math.isfinite(f) else str(f)
    if hasattr(v, "value"):
        return str(v.value)
    return str(v)


def write_table(dest, kind: str, meta: dict, columns, rows) -> None:
    """Write a versioned CSV to a path or text stream."""
    buf = _io.StringIO()
    buf.write(f"# hpzgauss {kind} v{CSV_VERSION}\n")
    buf.write("# " + json.dumps(meta, sort_keys=True, default=_json_default) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


def read_table(src):
    """Read a table written by :func:`write_table`.

    Returns ``(kind, version, meta, columns, rows)`` with rows as lists of
    strings.
    """
    text = src.read() if hasattr(src, "read") else Path(src).read_text()
    lines = text.splitlines()
    if len(lines) < 3 or not lines[0].startswith("# hpzgauss "):
        raise ConfigError("not an hpzgauss table")
    _, _, kind, ver = lines[0].split()
    meta = json.loads(lines[1][2:])
    reader = csv.reader(lines[2:])
    columns = next(reader)
    return kind, int(ver.lstrip("v")), meta, columns, list(reader)


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    if hasattr(o, "value"):
        return o.value
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


# ----------------------------------------------------------------- config

@dataclass
class RunConfig:
    """Parsed run configuration. All sections are optional."""

    bath: Optional[BathSpec] = None
    initial_state: dict = field(default_factory=lambda: {"kind": "ground"})
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    t_end: Optional[float] = None
    kernel: KernelEvalConfig = field(default_factory=KernelEvalConfig)
    grid: Optional[ScanGrid] = None
    workers: int = 0
    coeffs: dict = field(default_factory=lambda: {"t_end": 10.0, "dt": 0.01})


_SECTIONS = {"bath", "initial_state", "evolution", "kernel", "grid", "scan", "coeffs"}


def _build(cls, section: dict, name: str, **extra):
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    try:
        return cls(**section, **extra)
    except (TypeError, ValueError, HPZError) as exc:
        raise ConfigError(f"invalid [{name}] section: {exc}") from None


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded TOML document."""
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    rc = RunConfig()
    if "bath" in data:
        rc.bath = _build(BathSpec, dict(data["bath"]), "bath")
    if "initial_state" in data:
        st = dict(data["initial_state"])
        st.setdefault("kind", "ground")
        rc.initial_state = st
    if "evolution" in data:
        ev = dict(data["evolution"])
        t_end = ev.pop("t_end", None)
        rc.t_end = None if t_end is None else float(t_end)
        rc.evolution = _build(EvolutionConfig, ev, "evolution")
    if "kernel" in data:
        rc.kernel = _build(KernelEvalConfig, dict(data["kernel"]), "kernel")
    if "grid" in data:
        gd = dict(data["grid"])
        try:
            axes = {k: gd.pop(k) for k in ("gamma", "cutoff", "temperature")}
        except KeyError as exc:
            raise ConfigError(f"[grid] needs gamma, cutoff and temperature: missing {exc}") from None
        states = gd.pop("initial_states", None)
        kw = {"mode": gd.pop("mode", "stationary_only")}
        if states is not None:
            kw["initial_states"] = tuple(states)
        if gd:
            raise ConfigError(f"unknown keys in [grid]: {sorted(gd)}")
        try:
            rc.grid = ScanGrid.from_axes(axes["gamma"], axes["cutoff"], axes["temperature"], **kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid [grid]: {exc}") from None
    if "scan" in data:
        sc = dict(data["scan"])
        rc.workers = int(sc.pop("workers", 0))
        if sc:
            raise ConfigError(f"unknown keys in [scan]: {sorted(sc)}")
    if "coeffs" in data:
        co = dict(data["coeffs"])
        unknown = set(co) - {"t_end", "dt"}
        if unknown:
            raise ConfigError(f"unknown keys in [coeffs]: {sorted(unknown)}")
        rc.coeffs.update({k: float(v) for k, v in co.items()})
    return rc


def load_config(path) -> RunConfig:
    """Read and validate a TOML run configuration."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path}: {exc}") from None
    return parse_config(data)
