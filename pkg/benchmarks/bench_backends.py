"""Compare the compiled and pure-Python kernel backends.

Usage::

    python benchmarks/bench_backends.py [--repeat 5]

Prints the best-of-``repeat`` wall time for each kernel on both backends
and the speed-up.  Results agree to rounding, which is checked as well.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from hpzgauss import _backend
from hpzgauss.bath import BathSpec, KernelEvalConfig
from hpzgauss.coefficients import core_params
from hpzgauss.gaussian import squeezed_state
from hpzgauss.propagator import _to_internal_array

BATH = BathSpec(gamma=0.05, cutoff=15.0, temperature=0.1)
TIMES = np.linspace(0.01, 20.0, 200)


def _cases(core):
    params = core_params(BATH, KernelEvalConfig())
    y0 = _to_internal_array(squeezed_state(10.0).as_array(), 1.0)
    return {
        "bracket x200": lambda: [core.bracket(0, t, 15.0, 0.1, 1.0, 1e-16, 200000) for t in TIMES],
        "coefficients x200": lambda: [core.coefficients(t, params) for t in TIMES],
        "integrate t=0..50": lambda: core.integrate(
            y0, 0.0, 50.0, params, 1e-12, 1e-14, 1e-4, 0.5, False, 0.0, True, 2_000_000),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if "compiled" not in _backend.BACKENDS:
        print("compiled backend not built; only timing the pure-Python one")
    results = {}
    for name, core in sorted(_backend.BACKENDS.items()):
        for case, fn in _cases(core).items():
            number = 1
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat))
            results[(name, case)] = (best, fn())
    print(f"{'kernel':<22s}{'python [s]':>12s}{'compiled [s]':>14s}{'speed-up':>10s}")
    for case in _cases(_backend.BACKENDS["python"]):
        tp, rp = results[("python", case)]
        if ("compiled", case) in results:
            tc, rc = results[("compiled", case)]
            _check(case, rp, rc)
            print(f"{case:<22s}{tp:12.4f}{tc:14.4f}{tp / tc:10.1f}")
        else:
            print(f"{case:<22s}{tp:12.4f}{'-':>14s}{'-':>10s}")


def _check(case, a, b):
    if isinstance(a, tuple) and len(a) == 4 and isinstance(a[0], np.ndarray):
        a, b = a[1][-1], b[1][-1]
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    err = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))
    if err > 1e-10:
        print(f"warning: {case}: backends differ by {err:.2e}")


if __name__ == "__main__":
    main()
