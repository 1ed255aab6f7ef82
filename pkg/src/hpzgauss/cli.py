"""Command-line interface.

Exit codes: 0 success, 1 witness re-run mismatch, 2 configuration or usage
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_WITNESS_GRID,
    PointReport,
    ScanGrid,
    compare_dynamics,
    default_horizon,
    find_witnesses,
    load_witnesses,
    reports_to_rows,
    rerun_witness,
    save_witnesses,
    scan,
)
from .bath import BathSpec
from .coefficients import coefficient_table, is_low_temperature, markovian_coefficients
from .errors import ConfigError, HPZError
from .gaussian import load_state, make_initial_state
from .io import RunConfig, _json_default, load_config, write_table
from .propagator import evolve, from_internal, markovian_trajectory, stationary_state

log = logging.getLogger("hpzgauss")

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

TRAJECTORY_COLUMNS = ("t", "c1", "c2", "c3", "c4", "c5", "c6", "A", "B", "C", "purity", "verdict")
COEFF_COLUMNS = ("t", "omega_p2", "lambda", "D_px", "D_pp")


# ------------------------------------------------------------------ helpers

def _load(args) -> RunConfig:
    rc = load_config(args.config) if args.config else RunConfig()
    if args.backend:
        rc.kernel = replace(rc.kernel, backend=args.backend)
    return rc


def _bath(args, rc: RunConfig) -> BathSpec:
    over = {k: getattr(args, k) for k in ("gamma", "cutoff", "temperature")
            if getattr(args, k, None) is not None}
    if rc.bath is None:
        missing = {"gamma", "cutoff", "temperature"} - set(over)
        if missing:
            raise ConfigError(f"no [bath] section; pass --{' --'.join(sorted(missing))}")
        try:
            return BathSpec(**over)
        except HPZError as exc:
            raise ConfigError(f"invalid bath: {exc}") from None
    try:
        return replace(rc.bath, **over)
    except HPZError as exc:
        raise ConfigError(f"invalid bath: {exc}") from None


def _emit_json(obj, path=None):
    text = json.dumps(obj, indent=2, default=_json_default)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _nan_none(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else v


# ---------------------------------------------------------------- commands

def cmd_coeffs(args) -> int:
    rc = _load(args)
    bath = _bath(args, rc)
    t_end = args.t_end if args.t_end is not None else rc.coeffs["t_end"]
    dt = args.dt if args.dt is not None else rc.coeffs["dt"]
    if not (t_end > 0 and dt > 0):
        raise ConfigError("t_end and dt must be positive")
    ts = np.arange(0.0, t_end + 0.5 * dt, dt)
    table = coefficient_table(bath, ts, rc.kernel)
    m = markovian_coefficients(bath, rc.kernel)
    meta = {
        "bath": bath.to_dict(),
        "markovian": {"omega_p2": m.omega_p2, "lambda": m.lam, "D_px": m.d_px, "D_pp": m.d_pp},
        "low_temperature": is_low_temperature(bath),
    }
    write_table(args.output or sys.stdout, "coefficients", meta, COEFF_COLUMNS, table.tolist())
    return EXIT_OK


def _initial_state(args, rc, bath):
    if args.state:
        c = load_state(args.state)
        if not hasattr(c, "c1"):
            raise ConfigError("--state must hold a kd-representation state")
    else:
        try:
            c = make_initial_state(**rc.initial_state)
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigError(f"invalid [initial_state]: {exc}") from None
    return from_internal(c, bath)


def cmd_evolve(args) -> int:
    rc = _load(args)
    bath = _bath(args, rc)
    c0 = _initial_state(args, rc, bath)
    t_end = args.t_end or rc.t_end or default_horizon(bath)
    nm = evolve(c0, bath, (0.0, t_end), rc.evolution, rc.kernel)
    m = markovian_trajectory(c0, bath, t_end, rc.evolution, rc.kernel)
    traj = m if args.branch == "markovian" else nm
    meta = {"bath": bath.to_dict(), "branch": args.branch, "t_end": t_end,
            "initial_state": asdict(c0), "evolution": rc.evolution.to_dict()}
    out = args.output or sys.stdout
    write_table(out, "trajectory", meta, TRAJECTORY_COLUMNS, traj.as_rows())

    try:
        st = stationary_state(bath, rc.kernel, rc.evolution.positivity_tol)
        fin = nm.final.as_array()[:3]
        stat = {"verdict": st.verdict.value, "purity": _nan_none(st.purity),
                "distance_final": float(np.max(np.abs(fin - st.c.as_array()[:3])))}
    except HPZError as exc:
        stat = {"error": f"{type(exc).__name__}: {exc}"}
    summary = {
        "t_end": t_end,
        "non_markovian": {"first_violation": nm.first_violation, "status": nm.status,
                          "final_verdict": nm.final_verdict.value, "events": list(nm.events)},
        "markovian": {"first_violation": m.first_violation, "status": m.status,
                      "final_verdict": m.final_verdict.value, "events": list(m.events)},
        "stationary": stat,
        "low_temperature": is_low_temperature(bath),
    }
    if args.summary:
        _emit_json(summary, args.summary)
    elif args.output:
        _emit_json(summary)
    else:
        print(json.dumps(summary, default=_json_default), file=sys.stderr)
    return EXIT_OK


def cmd_stationary(args) -> int:
    rc = _load(args)
    bath = _bath(args, rc)
    st = stationary_state(bath, rc.kernel, rc.evolution.positivity_tol)
    m = markovian_coefficients(bath, rc.kernel)
    _emit_json({
        "bath": bath.to_dict(),
        "markovian_coefficients": {"omega_p2": m.omega_p2, "lambda": m.lam,
                                   "D_px": m.d_px, "D_pp": m.d_pp},
        "c": asdict(st.c),
        "xy": asdict(st.xy) if st.xy is not None else None,
        "purity": _nan_none(st.purity),
        "verdict": st.verdict.value,
        "residual": st.residual,
        "low_temperature": is_low_temperature(bath),
    }, args.output)
    return EXIT_OK


def _grid(args, rc) -> ScanGrid:
    grid = rc.grid
    if grid is None:
        raise ConfigError("scan needs a [grid] section")
    if args.mode:
        grid = replace(grid, mode=args.mode)
    return grid


def _template(rc) -> BathSpec:
    return rc.bath if rc.bath is not None else BathSpec(0.0, 1.0, 1.0)


def cmd_scan(args) -> int:
    rc = _load(args)
    grid = _grid(args, rc)
    workers = args.workers if args.workers is not None else rc.workers
    reports = scan(grid, _template(rc), rc.evolution, rc.kernel, workers)
    meta = {"grid": grid.to_dict(), "evolution": rc.evolution.to_dict(), "kernel": asdict(rc.kernel)}
    write_table(args.output or sys.stdout, "scan", meta, PointReport.COLUMNS, reports_to_rows(reports))
    failed = sum(1 for r in reports if r.error)
    if failed:
        log.warning("%d of %d points failed; see the error column", failed, len(reports))
    return EXIT_OK


def _rerun(path, tol) -> int:
    rec = load_witnesses(path)
    bad = 0
    for cls in ("markovian_only", "unphysical_stationary", "nm_violation_with_physical_stationary"):
        for w in rec.get(cls, []):
            new = rerun_witness(w)
            ok = new["nm_anomaly"] == w["nm_anomaly"] and new["m_anomaly"] == w["m_anomaly"]
            for key in ("nm_first_violation", "m_first_violation"):
                a, b = w[key], new[key]
                if (a is None) != (b is None) or (a is not None and abs(a - b) > tol):
                    ok = False
            bad += not ok
            b = w["bath"]
            print(f"{'ok  ' if ok else 'FAIL'} {cls:<40s} gamma={b['gamma']:g} cutoff={b['cutoff']:g} "
                  f"T={b['temperature']:g} nm={new['nm_first_violation']} m={new['m_first_violation']}")
    return EXIT_OK if bad == 0 else EXIT_MISMATCH


def cmd_witness(args) -> int:
    if args.rerun:
        return _rerun(args.rerun, args.tol)
    rc = _load(args)
    grid = rc.grid if rc.grid is not None else DEFAULT_WITNESS_GRID
    workers = args.workers if args.workers is not None else rc.workers
    rep = find_witnesses(grid, _template(rc), rc.evolution, rc.kernel, workers)
    if args.output:
        save_witnesses(rep, args.output)
    print(f"markovian_only: {len(rep.markovian_only)}")
    print(f"unphysical_stationary: {len(rep.unphysical_stationary)}")
    print(f"nm_violation_with_physical_stationary: {len(rep.nm_violation_with_physical_stationary)}")
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _add_bath_args(p):
    g = p.add_argument_group("bath overrides (physical units)")
    g.add_argument("--gamma", type=float)
    g.add_argument("--cutoff", type=float)
    g.add_argument("--temperature", type=float)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="TOML run configuration")
    common.add_argument("--backend", choices=("compiled", "python"), help="kernel backend")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hpzgauss", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("coeffs", parents=[common], help="tabulate the time-dependent coefficients")
    _add_bath_args(s)
    s.add_argument("--t-end", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_coeffs)

    s = sub.add_parser("evolve", parents=[common], help="evolve one initial state")
    _add_bath_args(s)
    s.add_argument("--t-end", type=float, help="default: max(20/lambda, 50/omega0)")
    s.add_argument("--state", help="initial state JSON (kd representation, internal units)")
    s.add_argument("--branch", choices=("non-markovian", "markovian"), default="non-markovian",
                   help="trajectory written to the CSV")
    s.add_argument("-o", "--output", help="trajectory CSV (default stdout)")
    s.add_argument("--summary", help="summary JSON path")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("stationary", parents=[common], help="Markovian stationary state")
    _add_bath_args(s)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_stationary)

    s = sub.add_parser("scan", parents=[common], help="scan a parameter grid")
    s.add_argument("--mode", choices=("stationary_only", "dynamic"))
    s.add_argument("--workers", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("witness", parents=[common], help="search for or re-run witnesses")
    s.add_argument("--workers", type=int)
    s.add_argument("-o", "--output", help="witness JSON")
    s.add_argument("--rerun", metavar="FILE", help="re-run the witnesses stored in FILE")
    s.add_argument("--tol", type=float, default=1e-6, help="onset-time tolerance for --rerun")
    s.set_defaults(func=cmd_witness)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"hpzgauss: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HPZError as exc:
        print(f"hpzgauss: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
