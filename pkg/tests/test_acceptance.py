"""Acceptance suite: nine end-to-end criteria at their stated tolerances.

Each test records one PASS/FAIL line (with the measured figure and wall
time against its budget); the lines are printed in the pytest terminal
summary and also when this file is run as a script.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from hpzgauss.analysis import find_witnesses, load_witnesses, rerun_witness, save_witnesses
from hpzgauss.bath import BathSpec, dissipation_kernel, noise_kernel, noise_kernel_quadrature
from hpzgauss.coefficients import (
    d_pp,
    d_pp_quadrature,
    d_px,
    d_px_quadrature,
    lambda_coeff,
    lambda_quadrature,
    markovian_coefficients,
    markovian_discrepancy,
    omega_p_squared,
    omega_p_squared_quadrature,
)
from hpzgauss.gaussian import GaussianKD, GaussianXY, Verdict, is_physical, kd_to_xy, spectrum, squeezed_state
from hpzgauss.propagator import EvolutionConfig, evolve, evolve_markovian, stationary_state, to_internal

RESULTS = []


def record(num, title, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed <= budget
    line = f"{'PASS' if ok else 'FAIL'}  criterion {num}: {title} | {detail} | {elapsed:.2f} s (budget {budget:g} s)"
    RESULTS.append(line)
    print(line)
    return ok


def random_physical(rng, pure_fraction=0.25):
    """Squeezed, rotated, displaced and mixed: purity 1/k with k >= 1."""
    s = math.exp(rng.uniform(math.log(0.1), math.log(10.0)))
    c = squeezed_state(s, rng.uniform(0, math.pi))
    k = 1.0 if rng.uniform() < pure_fraction else math.exp(rng.uniform(0, math.log(20.0)))
    x0, p0 = rng.normal(0, 1, 2)
    return GaussianKD(k * c.c1, k * c.c2, k * c.c3, -x0, -p0, 0.0)


def rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.abs(b)))


# ---------------------------------------------------------------------- 1

def test_1_coefficient_limits():
    t0 = time.perf_counter()
    hi = markovian_discrepancy(BathSpec(0.1, 100.0, 100.0 * 100.0))
    lo = markovian_discrepancy(BathSpec(0.1, 100.0, 1.0))
    errs = {
        "lambda": abs(hi["lambda"]),
        "D_pp(high T)": abs(hi["d_pp_high_t"]),
        "D_px(high T)": abs(hi["d_px_high_t"]),
        "D_pp(kT = hbar w0)": abs(lo["d_pp_low_t"]),
    }
    tols = {"lambda": 1e-3, "D_pp(high T)": 1e-2, "D_px(high T)": 1e-2, "D_pp(kT = hbar w0)": 1e-2}
    ok = all(errs[k] <= tols[k] for k in errs)
    detail = ", ".join(f"{k} off by {v:.1e} (tol {tols[k]:g})" for k, v in errs.items())
    assert record(1, "Markovian coefficient limits", ok, detail, time.perf_counter() - t0, 1.0)


# ---------------------------------------------------------------------- 2

def test_2_kernel_oracles():
    t0 = time.perf_counter()
    worst = {}
    for T in (0.1, 1.0, 100.0):
        b = BathSpec(0.1, 10.0, T)
        s = np.geomspace(1e-3, 10.0, 13) / b.cutoff
        d_cf = noise_kernel(b, np.append(s, 0.7 / b.cutoff))
        d_q = [noise_kernel_quadrature(b, v) for v in np.append(s, 0.7 / b.cutoff)]
        worst["D"] = max(worst.get("D", 0), rel(d_q, d_cf))
        worst["D1"] = max(worst.get("D1", 0), rel(dissipation_kernel(b, s, method="quadrature"),
                                                  dissipation_kernel(b, s)))
        for name, fn, oracle in (("omega_p2", omega_p_squared, omega_p_squared_quadrature),
                                 ("lambda", lambda_coeff, lambda_quadrature),
                                 ("D_px", d_px, d_px_quadrature), ("D_pp", d_pp, d_pp_quadrature)):
            for t in (0.1, 1.0, 10.0):
                worst[name] = max(worst.get(name, 0), rel(oracle(b, t), fn(b, t)))
    ok = all(v <= 1e-6 for v in worst.values())
    detail = "max rel. deviation " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (tol 1e-6)"
    assert record(2, "closed form vs quadrature oracles", ok, detail, time.perf_counter() - t0, 30.0)


# ---------------------------------------------------------------------- 3

def test_3_integrator_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    b = BathSpec(0.1, 10.0, 1.0)
    errs = []
    for _ in range(20):
        c0 = random_physical(rng)
        num = evolve(c0, b, (0, 5.0), frozen=True).final.as_array()[:5]
        ref = evolve_markovian(c0, b, 5.0).as_array()[:5]
        errs.append(float(np.linalg.norm(num - ref) / np.linalg.norm(ref)))
    # convergence order on uniform steps over two decades of h
    c0 = GaussianKD(0.3, 0.1, 1.2, 0.4, -0.3)
    ref = evolve_markovian(c0, b, 5.0).as_array()[:5]
    hs = 5.0 / np.array([5, 10, 20, 40, 80, 160, 320, 500])
    herr = np.array([np.linalg.norm(evolve(c0, b, (0, 5.0), frozen=True, fixed_step=h).final.as_array()[:5] - ref)
                     / np.linalg.norm(ref) for h in hs])
    use = herr > 1e-13
    order = float(np.polyfit(np.log(hs[use]), np.log(herr[use]), 1)[0])
    span = float(hs[use].max() / hs[use].min())
    ok = max(errs) <= 1e-8 and order >= 4 and span >= 100
    detail = f"max rel. error {max(errs):.1e} (tol 1e-8), observed order {order:.2f} over h ratio {span:.0f}"
    assert record(3, "frozen evolve vs matrix exponential", ok, detail, time.perf_counter() - t0, 10.0)


# ---------------------------------------------------------------------- 4

def test_4_stationary():
    t0 = time.perf_counter()
    baths = [BathSpec(0.1, 10.0, 1.0), BathSpec(0.1, 10.0, 100.0), BathSpec(0.5, 50.0, 0.1),
             BathSpec(2.0, 5.0, 0.3)]
    res = max(stationary_state(b).residual for b in baths)
    rng = np.random.default_rng(4)
    b = baths[0]
    cs = stationary_state(b).c.as_array()[:5]
    t_end = 20.0 / markovian_coefficients(b).lam
    dist = 0.0
    for _ in range(20):
        fin = evolve(random_physical(rng), b, (0, t_end), EvolutionConfig(sample_dt=1.0)).final.as_array()[:5]
        dist = max(dist, float(np.max(np.abs(fin - cs)) / np.max(np.abs(cs))))
    ok = res <= 1e-12 and dist <= 1e-6
    detail = f"residual {res:.1e} (tol 1e-12), distance at t = 20/lambda {dist:.1e} (tol 1e-6)"
    assert record(4, "stationary state", ok, detail, time.perf_counter() - t0, 30.0)


# ---------------------------------------------------------------------- 5

def test_5_small_time_positivity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    regimes = [BathSpec(0.1, 10.0, 1.0), BathSpec(0.5, 50.0, 0.1), BathSpec(0.05, 5.0, 10.0)]
    cfg = EvolutionConfig(sample_dt=1e-4, positivity_tol=1e-9)
    violations, runs = 0, 0
    for b in regimes:
        for _ in range(1000):
            tr = evolve(random_physical(rng), b, (0, 0.01), cfg)
            runs += 1
            if tr.first_violation is not None or any(v is not Verdict.PHYSICAL for v in tr.verdict):
                violations += 1
    ok = violations == 0
    detail = f"{violations} violations in {runs} runs up to t = 0.01/w0 (3 regimes)"
    assert record(5, "small-time positivity", ok, detail, time.perf_counter() - t0, 120.0)


# ---------------------------------------------------------------------- 6

def test_6_spectrum_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    n = 10_000
    C = 10.0 ** rng.uniform(-3, 3, n)
    A = C * 10.0 ** rng.uniform(0, 4, n)
    worst_sum, worst_sq = -np.inf, 0.0
    n_sq = np.arange(4000)
    for a, c in zip(A, C):
        sp = spectrum(a, c)
        worst_sum = max(worst_sum, abs(sp.eigenvalues(64).sum() - 1.0) - sp.tail_bound(64))
        # squared eigenvalues summed term by term, far past the 1e-17 level
        sq = float(np.sum((sp.lambda0 * sp.ratio ** n_sq) ** 2))
        worst_sq = max(worst_sq, abs(sq - math.sqrt(c / a)))
    # mixed signs of A - C: verdict against the eigenvalue signs
    Am = C * 10.0 ** rng.uniform(-4, 4, n)
    mismatch = 0
    for a, c in zip(Am, C):
        ev = spectrum(a, c).eigenvalues(8)
        ladder_ok = bool(np.all((ev >= 0) & (ev <= 1)))
        mismatch += ladder_ok != (is_physical(GaussianXY(a, 0, c, 0, 0, 0), tol=0.0) is Verdict.PHYSICAL)
    ok = worst_sum <= 1e-13 and worst_sq <= 1e-10 and mismatch == 0
    detail = (f"trace excess over tail bound {worst_sum:.1e}, |sum l^2 - sqrt(C/A)| {worst_sq:.1e} (tol 1e-10), "
              f"{mismatch} verdict/sign mismatches")
    assert record(6, "spectrum and purity identities", ok, detail, time.perf_counter() - t0, 10.0)


# ---------------------------------------------------------------------- 7

def test_7_unitary_limit():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    b = BathSpec(0.0, 10.0, 1.0)
    drift = 0.0
    for _ in range(5):
        tr = evolve(random_physical(rng), b, (0, 50.0))
        drift = max(drift, float(np.max(np.abs(tr.purity / tr.purity[0] - 1.0))))
    ok = drift <= 1e-9
    assert record(7, "purity conserved at gamma = 0", ok, f"max rel. purity drift {drift:.1e} (tol 1e-9)",
                  time.perf_counter() - t0, 5.0)


# ---------------------------------------------------------------------- 8

def test_8_witnesses(tmp_path):
    t0 = time.perf_counter()
    rep = find_witnesses()
    path = tmp_path / "witnesses.json"
    save_witnesses(rep, path)
    stored = load_witnesses(path)
    worst = 0.0
    anomaly_ok = True
    recs = stored["markovian_only"] + stored["unphysical_stationary"]
    for rec in recs:
        new = rerun_witness(rec)
        anomaly_ok &= new["nm_anomaly"] == rec["nm_anomaly"] and new["m_anomaly"] == rec["m_anomaly"]
        for key in ("nm_first_violation", "m_first_violation"):
            if (rec[key] is None) != (new[key] is None):
                worst = math.inf
            elif rec[key] is not None:
                worst = max(worst, abs(new[key] - rec[key]) / abs(rec[key]))
    n_m, n_u = len(stored["markovian_only"]), len(stored["unphysical_stationary"])
    n_x = len(stored["nm_violation_with_physical_stationary"])
    ok = n_m >= 1 and n_u >= 1 and n_x == 0 and anomaly_ok and worst <= 1e-6
    detail = (f"{n_m} Markovian-only, {n_u} with unphysical stationary state, {n_x} counterexamples; "
              f"re-run onset deviation {worst:.1e} (tol 1e-6)")
    assert record(8, "qualitative witnesses", ok, detail, time.perf_counter() - t0, 600.0)


# ---------------------------------------------------------------------- 9

def test_9_trace_conservation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    cases = [(BathSpec(0.1, 10.0, 1.0), None), (BathSpec(0.05, 15.0, 1.0), squeezed_state(10.0)),
             (BathSpec(0.5, 50.0, 0.1), squeezed_state(10.0)), (BathSpec(0.05, 5.0, 0.1), None)]
    c6_drift, worst, checked = 0.0, 0.0, 0
    for b, c0 in cases:
        c0 = c0 if c0 is not None else random_physical(rng)
        c0u = GaussianKD(c0.c1, c0.c2, c0.c3, c0.c4, c0.c5, 0.4)
        c6_drift = max(c6_drift, float(np.max(np.abs(evolve(c0u, b, (0, 5.0)).c[:, 5] - 0.4))))
        tr = evolve(c0, b, (0, 30.0), EvolutionConfig(sample_dt=0.5))
        for row, C in zip(tr.c, tr.C):
            if not C > 1e-6:
                continue
            g = kd_to_xy(GaussianKD.from_array(row))
            mu, sd = -g.E / (4 * g.C), 1 / math.sqrt(8 * g.C)
            f = lambda x: float(np.real(g.density(x, x)))  # noqa: E731
            tr_num = integrate.quad(f, mu - 40 * sd, mu + 40 * sd, epsabs=0, epsrel=1e-12, limit=200)[0]
            worst = max(worst, abs(tr_num - 1.0))
            checked += 1
    ok = c6_drift == 0.0 and worst <= 1e-6
    detail = f"c6 drift {c6_drift:g}, max |trace - 1| {worst:.1e} over {checked} states (tol 1e-6)"
    assert record(9, "trace conservation", ok, detail, time.perf_counter() - t0, 10.0)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
