"""Parameter scans, Markovian vs non-Markovian comparison and witness search.

Anomaly classes
---------------
``positivity_violation``
    ``A < C`` with ``C > 0`` at some time: a negative eigenvalue.
``normalizability_loss``
    ``C -> 0`` (``c1`` runs off or changes sign).  The formal trace
    ``exp(-c6)`` is conserved by the equations, so a "diverging trace" can only
    show up as this runaway of the quadratic exponents.  It dominates
    ``positivity_violation`` when both occur.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .bath import DEFAULT_CONFIG, BathSpec, KernelEvalConfig
from .coefficients import is_low_temperature, markovian_coefficients
from .errors import ConfigError, HPZError
from .gaussian import GaussianKD, Verdict, make_initial_state
from .propagator import (
    EvolutionConfig,
    Trajectory,
    evolve,
    from_internal,
    markovian_trajectory,
    stationary_state,
)

__all__ = [
    "Anomaly",
    "ScanGrid",
    "PointReport",
    "default_horizon",
    "classify_anomaly",
    "scan_stationary",
    "scan",
    "compare_dynamics",
    "WitnessReport",
    "find_witnesses",
    "rerun_witness",
    "save_witnesses",
    "load_witnesses",
    "DEFAULT_WITNESS_STATES",
]


class Anomaly(str, enum.Enum):
    NONE = "none"
    POSITIVITY_VIOLATION = "positivity_violation"
    NORMALIZABILITY_LOSS = "normalizability_loss"


def default_horizon(bath: BathSpec) -> float:
    """``max(20 / lambda_M, 50 / omega0)`` in physical time; ``50/omega0`` when ``gamma = 0``."""
    lam = markovian_coefficients(bath).lam
    base = 50.0 / bath.omega0
    return max(20.0 / lam, base) if lam > 0 else base


def classify_anomaly(traj: Trajectory) -> Anomaly:
    """Strongest anomaly seen in the stored samples and located events."""
    seen = {v.value if isinstance(v, Verdict) else str(v) for v in traj.verdict}
    for _, a, b in traj.events:
        seen.update((a, b))
    if traj.status == "non_normalizable" or Verdict.NON_NORMALIZABLE.value in seen:
        return Anomaly.NORMALIZABILITY_LOSS
    if Verdict.VIOLATED.value in seen:
        return Anomaly.POSITIVITY_VIOLATION
    return Anomaly.NONE


def _first_event(traj: Trajectory, target: str) -> Optional[float]:
    for t, _, b in traj.events:
        if b == target:
            return t
    return None


# ----------------------------------------------------------------- grid

def _axis(spec) -> np.ndarray:
    """An axis from a list or ``{start, stop, num, spacing}``."""
    if isinstance(spec, dict):
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"axis needs start, stop and num: missing {exc}") from None
        spacing = spec.get("spacing", "log")
        if spacing == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("log-spaced axes need positive bounds")
            return np.geomspace(start, stop, num)
        if spacing == "linear":
            return np.linspace(start, stop, num)
        raise ConfigError(f"unknown spacing {spacing!r}")
    return np.atleast_1d(np.asarray(spec, dtype=float))


@dataclass(frozen=True)
class ScanGrid:
    """Axes over ``gamma/omega0``, ``Omega/omega0`` and ``kB T/(hbar omega0)``.

    ``initial_states`` is a tuple of initial-state specifications
    (dicts accepted by :func:`~hpzgauss.gaussian.make_initial_state`).
    """

    gammas: tuple
    cutoffs: tuple
    temperatures: tuple
    mode: str = "stationary_only"
    initial_states: tuple = ({"kind": "ground"},)

    def __post_init__(self):
        for name in ("gammas", "cutoffs", "temperatures"):
            ax = tuple(float(v) for v in getattr(self, name))
            if not ax:
                raise ConfigError(f"axis {name} is empty")
            if any(not (v > 0 and math.isfinite(v)) for v in ax):
                raise ConfigError(f"axis {name} must hold positive finite values")
            object.__setattr__(self, name, ax)
        if self.mode not in ("stationary_only", "dynamic"):
            raise ConfigError(f"mode must be stationary_only or dynamic, got {self.mode!r}")
        object.__setattr__(self, "initial_states", tuple(dict(s) for s in self.initial_states))

    @classmethod
    def from_axes(cls, gamma, cutoff, temperature, **kw) -> "ScanGrid":
        """Build from axis specs (lists or ``{start, stop, num, spacing}`` dicts)."""
        return cls(tuple(_axis(gamma)), tuple(_axis(cutoff)), tuple(_axis(temperature)), **kw)

    def points(self):
        """Grid points in deterministic (gamma, cutoff, T) lexicographic order."""
        return list(itertools.product(self.gammas, self.cutoffs, self.temperatures))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PointReport:
    """Outcome at one grid point (and one initial state in dynamic mode).

    Times are physical; ``None`` means no violation within the horizon.
    """

    gamma: float
    cutoff: float
    temperature: float
    stationary_verdict: Optional[str] = None
    stationary_purity: Optional[float] = None
    stationary_a_over_c: Optional[float] = None
    state_index: Optional[int] = None
    horizon: Optional[float] = None
    nm_first_violation: Optional[float] = None
    nm_normalizability_loss: Optional[float] = None
    nm_anomaly: Optional[str] = None
    m_first_violation: Optional[float] = None
    m_normalizability_loss: Optional[float] = None
    m_anomaly: Optional[str] = None
    low_temperature: bool = False
    error: Optional[str] = None

    COLUMNS = (
        "gamma", "cutoff", "temperature", "stationary_verdict", "stationary_purity",
        "stationary_a_over_c", "state_index", "horizon", "nm_first_violation",
        "nm_normalizability_loss", "nm_anomaly", "m_first_violation", "m_normalizability_loss",
        "m_anomaly", "low_temperature", "error",
    )

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in self.COLUMNS)

    def to_dict(self) -> dict:
        return asdict(self)


# -------------------------------------------------------------- stationary

def _stationary_fields(bath, kernel_cfg, tol):
    st = stationary_state(bath, kernel_cfg, tol)
    if st.xy is not None:
        ratio = st.xy.A / st.xy.C
    else:
        ratio = math.nan
    return {
        "stationary_verdict": st.verdict.value,
        "stationary_purity": float(st.purity),
        "stationary_a_over_c": float(ratio),
    }


def _bath_at(template: BathSpec, g, W, T) -> BathSpec:
    """Bath with dimensionless controls ``(g, W, T)`` and the template's units."""
    w0 = template.omega0
    return replace(template, gamma=g * w0, cutoff=W * w0,
                   temperature=T * template.hbar * w0 / template.kB)


def _stationary_point(args):
    (g, W, T), template, kernel_cfg, tol = args
    rep = PointReport(g, W, T, low_temperature=T < 0.2)
    try:
        bath = _bath_at(template, g, W, T)
        rep.low_temperature = is_low_temperature(bath)
        for k, v in _stationary_fields(bath, kernel_cfg, tol).items():
            setattr(rep, k, v)
    except HPZError as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    return rep


def _run(fn, tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [fn(t) for t in tasks]


def scan_stationary(grid: ScanGrid, bath_template: BathSpec = BathSpec(0.0, 1.0, 1.0),
                    kernel_cfg: KernelEvalConfig = DEFAULT_CONFIG, tol: float = 1e-9,
                    workers: int = 0) -> list:
    """Stationary verdict and purity at every grid point, in grid order.

    Failures at a point are stored in its ``error`` field.
    """
    tasks = [(p, bath_template, kernel_cfg, tol) for p in grid.points()]
    return _run(_stationary_point, tasks, workers)


# ----------------------------------------------------------------- dynamics

def compare_dynamics(
    bath: BathSpec,
    initial_state: GaussianKD,
    cfg: EvolutionConfig = EvolutionConfig(),
    kernel_cfg: KernelEvalConfig = DEFAULT_CONFIG,
    horizon: Optional[float] = None,
    return_trajectories: bool = False,
):
    """Run both branches from the same state over the same horizon.

    ``initial_state`` is in the bath's physical units.  Returns a
    :class:`PointReport` (and the two trajectories when requested).
    """
    rep = PointReport(bath.g, bath.W, bath.theta, low_temperature=is_low_temperature(bath))
    horizon = default_horizon(bath) if horizon is None else float(horizon)
    rep.horizon = horizon
    try:
        for k, v in _stationary_fields(bath, kernel_cfg, cfg.positivity_tol).items():
            setattr(rep, k, v)
    except HPZError as exc:
        rep.stationary_verdict = None
        rep.error = f"stationary: {type(exc).__name__}: {exc}"
    nm = m = None
    try:
        nm = evolve(initial_state, bath, (0.0, horizon), cfg, kernel_cfg)
        rep.nm_first_violation = nm.first_violation
        rep.nm_normalizability_loss = _first_event(nm, Verdict.NON_NORMALIZABLE.value)
        rep.nm_anomaly = classify_anomaly(nm).value
    except HPZError as exc:
        rep.error = _join(rep.error, f"non-Markovian: {type(exc).__name__}: {exc}")
    try:
        m = markovian_trajectory(initial_state, bath, horizon, cfg, kernel_cfg)
        rep.m_first_violation = m.first_violation
        rep.m_normalizability_loss = _first_event(m, Verdict.NON_NORMALIZABLE.value)
        rep.m_anomaly = classify_anomaly(m).value
    except HPZError as exc:
        rep.error = _join(rep.error, f"Markovian: {type(exc).__name__}: {exc}")
    return (rep, nm, m) if return_trajectories else rep


def _join(a, b):
    return b if not a else f"{a}; {b}"


def _dynamic_point(args):
    (g, W, T), idx, spec, template, cfg, kernel_cfg = args
    bath = _bath_at(template, g, W, T)
    state = from_internal(make_initial_state(**spec), bath)
    rep = compare_dynamics(bath, state, cfg, kernel_cfg)
    rep.gamma, rep.cutoff, rep.temperature, rep.state_index = g, W, T, idx
    return rep


def scan(grid: ScanGrid, bath_template: BathSpec = BathSpec(0.0, 1.0, 1.0),
         cfg: EvolutionConfig = EvolutionConfig(), kernel_cfg: KernelEvalConfig = DEFAULT_CONFIG,
         workers: int = 0) -> list:
    """Stationary or dynamic scan according to ``grid.mode``.

    Dynamic mode yields one report per (point, initial state), ordered by
    point then state index; the result does not depend on ``workers``.
    """
    if grid.mode == "stationary_only":
        return scan_stationary(grid, bath_template, kernel_cfg, cfg.positivity_tol, workers)
    tasks = [
        (p, i, spec, bath_template, cfg, kernel_cfg)
        for p in grid.points() for i, spec in enumerate(grid.initial_states)
    ]
    return _run(_dynamic_point, tasks, workers)


# ------------------------------------------------------------------ witnesses

DEFAULT_WITNESS_STATES = (
    {"kind": "squeezed", "s": 10.0, "angle": 0.0},
    {"kind": "squeezed", "s": 10.0, "angle": math.pi / 2},
)

DEFAULT_WITNESS_GRID = ScanGrid(
    gammas=(0.05, 0.15, 0.5),
    cutoffs=(5.0, 15.0, 50.0),
    temperatures=(0.1, 1.0, 10.0),
    mode="dynamic",
    initial_states=DEFAULT_WITNESS_STATES,
)


@dataclass
class WitnessReport:
    """Classified outcome of a witness search.

    ``markovian_only``: stationary state physical, Markovian branch violates,
    non-Markovian branch physical over the horizon.
    ``unphysical_stationary``: stationary state not physical and the
    non-Markovian branch violates.
    ``nm_violation_with_physical_stationary``: counterexamples to the claim
    that non-Markovian violations need an unphysical stationary state.
    """

    markovian_only: list = field(default_factory=list)
    unphysical_stationary: list = field(default_factory=list)
    nm_violation_with_physical_stationary: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    grid: Optional[dict] = None
    config: Optional[dict] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _witness_record(rep, spec, template, cfg, kernel_cfg):
    return {
        "bath": _bath_at(template, rep.gamma, rep.cutoff, rep.temperature).to_dict(),
        "initial_state": dict(spec),
        "horizon": rep.horizon,
        "evolution": cfg.to_dict(),
        "kernel": asdict(kernel_cfg),
        "stationary_verdict": rep.stationary_verdict,
        "nm_first_violation": rep.nm_first_violation,
        "m_first_violation": rep.m_first_violation,
        "nm_anomaly": rep.nm_anomaly,
        "m_anomaly": rep.m_anomaly,
    }


def find_witnesses(grid: ScanGrid = DEFAULT_WITNESS_GRID,
                   bath_template: BathSpec = BathSpec(0.0, 1.0, 1.0),
                   cfg: EvolutionConfig = EvolutionConfig(),
                   kernel_cfg: KernelEvalConfig = DEFAULT_CONFIG,
                   workers: int = 0) -> WitnessReport:
    """Search a dynamic grid for points that witness the two qualitative claims."""
    if grid.mode != "dynamic":
        grid = replace(grid, mode="dynamic")
    reports = scan(grid, bath_template, cfg, kernel_cfg, workers)
    out = WitnessReport(grid=grid.to_dict(), config={"evolution": cfg.to_dict(), "kernel": asdict(kernel_cfg)})
    phys = Verdict.PHYSICAL.value
    for rep in reports:
        out.reports.append(rep.to_dict())
        if rep.error or rep.nm_anomaly is None or rep.m_anomaly is None:
            continue
        spec = grid.initial_states[rep.state_index]
        rec = _witness_record(rep, spec, bath_template, cfg, kernel_cfg)
        nm_bad = rep.nm_anomaly != Anomaly.NONE.value
        m_bad = rep.m_anomaly != Anomaly.NONE.value
        if rep.stationary_verdict == phys:
            if m_bad and not nm_bad:
                out.markovian_only.append(rec)
            if nm_bad:
                out.nm_violation_with_physical_stationary.append(rec)
        elif nm_bad:
            out.unphysical_stationary.append(rec)
    return out


def rerun_witness(record: dict) -> dict:
    """Re-run one persisted witness; returns fresh onset times and anomalies."""
    bath = BathSpec.from_dict(record["bath"])
    cfg = EvolutionConfig(**record["evolution"])
    kernel_cfg = KernelEvalConfig(**record["kernel"])
    state = from_internal(make_initial_state(**record["initial_state"]), bath)
    rep = compare_dynamics(bath, state, cfg, kernel_cfg, horizon=record["horizon"])
    return {
        "nm_first_violation": rep.nm_first_violation,
        "m_first_violation": rep.m_first_violation,
        "nm_anomaly": rep.nm_anomaly,
        "m_anomaly": rep.m_anomaly,
        "stationary_verdict": rep.stationary_verdict,
    }


def save_witnesses(report: WitnessReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, default=_json_default))


def load_witnesses(path) -> dict:
    return json.loads(Path(path).read_text())


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, enum.Enum):
        return o.value
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def reports_to_rows(reports: Iterable[PointReport]) -> Sequence[tuple]:
    return [r.row() for r in reports]
