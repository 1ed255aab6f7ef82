import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg, optimize

from hpzgauss.bath import BathSpec, KernelEvalConfig
from hpzgauss.coefficients import markovian_coefficients
from hpzgauss.errors import DomainError, IntegrationError, NonNormalizableError, NoStationaryStateError
from hpzgauss.gaussian import GaussianKD, Verdict, ground_state, kd_to_xy, squeezed_state
from hpzgauss.propagator import (
    EvolutionConfig,
    _indicator,
    evolve,
    evolve_markovian,
    from_internal,
    generator_at,
    markovian_trajectory,
    stationary_state,
    to_internal,
)

from conftest import rel

STATE = GaussianKD(0.3, 0.1, 1.2, 0.4, -0.3, 0.0)


def expm_oracle(c0, bath, t):
    """Affine solution by an augmented 4x4 matrix exponential (scipy)."""
    g = generator_at(bath, "asymptotic")
    aug = np.zeros((4, 4))
    aug[:3, :3], aug[:3, 3] = g.M, g.v
    q = linalg.expm(aug * t) @ np.append(c0.as_array()[:3], 1.0)
    m = linalg.expm(g.first_moment * t) @ c0.as_array()[3:5]
    return np.concatenate([q[:3], m])


class TestGenerator:
    def test_at_zero(self, bath):
        g = generator_at(bath, 0.0)
        assert np.all(g.v == 0) and g.lam == 0
        assert g.omega_p2 == pytest.approx(bath.omega_b_squared)

    @pytest.mark.parametrize("t", [0.0, 0.3, 4.0, "asymptotic"])
    def test_trace(self, bath, t):
        g = generator_at(bath, t)
        assert g.trace == pytest.approx(-6 * g.lam, abs=1e-14)

    @pytest.mark.parametrize("t", [0.05, 0.3, 4.0, "asymptotic"])
    @pytest.mark.parametrize("bath", [BathSpec(0.1, 10.0, 1.0), BathSpec(2.5, 5.0, 0.3)])
    def test_eigenvalues(self, bath, t):
        g = generator_at(bath, t)
        num, cf = g.eigenvalues(), g.eigenvalues_closed_form()
        err = min(np.max(np.abs(num[list(p)] - cf)) for p in itertools.permutations(range(3)))
        assert err <= 1e-10 * max(1.0, np.max(np.abs(cf)))
        assert np.max(num.real) < 0

    def test_physical_units_consistent(self):
        b = BathSpec(0.2, 20.0, 2.0, mass=3.0, omega0=2.0, hbar=0.5, kB=0.5)
        g = generator_at(b, 0.7)
        assert g.trace == pytest.approx(-6 * g.lam)


class TestMarkovian:
    def test_identity_at_zero(self, bath):
        assert evolve_markovian(STATE, bath, 0.0).as_array() == pytest.approx(STATE.as_array(), rel=1e-15)

    @pytest.mark.parametrize("bath", [BathSpec(0.1, 10.0, 1.0), BathSpec(3.0, 5.0, 0.5), BathSpec(0.01, 50.0, 10.0)])
    @pytest.mark.parametrize("t", [1e-5, 0.3, 5.0, 40.0])
    def test_matches_expm(self, bath, t):
        out = evolve_markovian(STATE, bath, t).as_array()[:5]
        ref = expm_oracle(STATE, bath, t)
        assert np.max(np.abs(out - ref)) <= 1e-11 * max(1.0, np.max(np.abs(ref)))

    def test_degenerate_point(self):
        # choose gamma so that lambda^2 = omega_p^2 for the asymptotic constants
        W = 10.0

        def gap(g):
            m = markovian_coefficients(BathSpec(g, W, 1.0))
            return m.lam**2 - m.omega_p2

        g = optimize.brentq(gap, 0.5, 5.0, xtol=1e-15)
        b = BathSpec(g, W, 1.0)
        m = markovian_coefficients(b)
        assert abs(m.lam**2 - m.omega_p2) < 1e-12
        for t in (1e-3, 0.7, 6.0):
            out = evolve_markovian(STATE, b, t).as_array()[:5]
            assert np.max(np.abs(out - expm_oracle(STATE, b, t))) < 1e-11

    def test_relaxes_to_stationary(self, bath):
        st_ = stationary_state(bath)
        lam = markovian_coefficients(bath).lam
        out = evolve_markovian(STATE, bath, 400 / lam).as_array()
        assert np.max(np.abs(out[:5] - st_.c.as_array()[:5])) < 1e-10

    def test_trajectory_events(self):
        b = BathSpec(0.05, 15.0, 1.0)
        c0 = squeezed_state(10.0)
        tr = markovian_trajectory(c0, b, 20.0)
        assert tr.first_violation is not None
        for t, a, _ in tr.events:
            c = evolve_markovian(c0, b, t)
            y = to_internal(c, b).as_array()
            assert abs(_indicator(y, 1e-9)) < 1e-7


class TestStationary:
    def test_residual(self, bath):
        st_ = stationary_state(bath)
        assert st_.residual <= 1e-12
        assert st_.c.c4 == 0 and st_.c.c5 == 0

    def test_high_temperature_thermal(self):
        st_ = stationary_state(BathSpec(0.1, 10.0, 100.0))
        assert st_.verdict is Verdict.PHYSICAL and st_.purity < 0.05

    def test_weak_coupling_is_thermal(self):
        st_ = stationary_state(BathSpec(1e-6, 10.0, 1.0))
        assert st_.purity == pytest.approx(math.tanh(0.5), rel=1e-4)

    def test_decoupled(self):
        with pytest.raises(NoStationaryStateError):
            stationary_state(BathSpec(0.0, 10.0, 1.0))


class TestEvolve:
    def test_frozen_matches_closed_form(self, bath):
        tr = evolve(STATE, bath, (0, 5.0), frozen=True)
        ref = evolve_markovian(STATE, bath, 5.0).as_array()
        assert rel(tr.final.as_array()[:5], ref[:5]) < 1e-8

    def test_unitary_limit(self):
        b = BathSpec(0.0, 10.0, 1.0)
        tr = evolve(squeezed_state(4.0, 0.3), b, (0, 50.0))
        assert np.max(np.abs(tr.purity - 1.0)) < 1e-9
        assert all(v is Verdict.PHYSICAL for v in tr.verdict)

    def test_trajectory_invariants(self, bath):
        c0 = GaussianKD(0.3, 0.1, 1.2, 0.4, -0.3, 0.25)
        tr = evolve(c0, bath, (0, 3.0), EvolutionConfig(sample_dt=0.1))
        assert np.all(np.diff(tr.t) > 0) and tr.t[-1] == pytest.approx(3.0)
        assert np.all(tr.c[:, 5] == 0.25)
        for i in (0, 7, len(tr.t) - 1):
            g = kd_to_xy(GaussianKD.from_array(tr.c[i]))
            assert (tr.A[i], tr.B[i], tr.C[i]) == pytest.approx((g.A, g.B, g.C), rel=1e-13)
        rows = list(tr.as_rows())
        assert len(rows) == len(tr.t) and rows[0][-1] == "physical"

    def test_linearity_on_differences(self, bath):
        a, b = STATE, GaussianKD(0.5, -0.2, 0.8, -0.1, 0.6)
        alpha = 0.3
        mix = GaussianKD.from_array(alpha * a.as_array() + (1 - alpha) * b.as_array())
        span = (0, 4.0)
        ya, yb, ym = (evolve(c, bath, span).final.as_array() for c in (a, b, mix))
        assert np.max(np.abs(ym - (alpha * ya + (1 - alpha) * yb))) < 1e-10

    def test_first_moment_decoupling(self, bath):
        a = evolve(STATE, bath, (0, 4.0)).c[:, :3]
        b = evolve(GaussianKD(STATE.c1, STATE.c2, STATE.c3, 5.0, -7.0), bath, (0, 4.0)).c[:, :3]
        assert np.max(np.abs(a - b)) < 1e-10

    def test_small_time_physical(self, bath, rng):
        for _ in range(20):
            s = math.exp(rng.uniform(-2, 2))
            tr = evolve(squeezed_state(s, rng.uniform(0, math.pi)), bath, (0, 0.01),
                        EvolutionConfig(sample_dt=1e-4))
            assert tr.first_violation is None

    def test_events_are_bisected(self):
        b = BathSpec(0.05, 5.0, 0.1)
        tr = evolve(ground_state(), b, (0, 30.0))
        assert tr.events and tr.events[0][1:] == ("physical", "violated")
        for t, _, _ in tr.events:
            c = evolve(ground_state(), b, (0, t)).final
            assert abs(_indicator(to_internal(c, b).as_array(), 1e-9)) < 1e-6

    def test_truncates_on_normalizability_loss(self):
        b = BathSpec(0.5, 50.0, 0.1)
        tr = evolve(squeezed_state(10.0), b, (0, 50.0))
        assert tr.status == "non_normalizable"
        assert tr.events[-1][2] == Verdict.NON_NORMALIZABLE.value
        assert tr.t[-1] == pytest.approx(tr.events[-1][0])

    def test_units_round_trip(self):
        b = BathSpec(0.2, 20.0, 2.0, mass=3.0, omega0=2.0, hbar=0.5, kB=0.5)
        assert from_internal(to_internal(STATE, b), b).as_array() == pytest.approx(STATE.as_array())

    def test_physical_units_scaling(self):
        b1 = BathSpec(0.1, 10.0, 1.0)
        b2 = BathSpec(0.2, 20.0, 2.0, mass=3.0, omega0=2.0, hbar=0.5, kB=0.5)
        c_int = to_internal(STATE, b1)
        r1 = to_internal(evolve(STATE, b1, (0, 2.0)).final, b1)
        r2 = to_internal(evolve(from_internal(c_int, b2), b2, (0, 1.0)).final, b2)
        assert np.max(np.abs(r1.as_array() - r2.as_array())) < 1e-10

    @pytest.mark.parametrize("span", [(0.5, 2.0), (0.0, -1.0)])
    def test_bad_span(self, bath, span):
        with pytest.raises(DomainError):
            evolve(STATE, bath, span)

    def test_non_normalizable_start(self, bath):
        with pytest.raises(NonNormalizableError):
            evolve(GaussianKD(0.0, 0, 1), bath, (0, 1.0))

    def test_step_budget(self, bath):
        with pytest.raises(IntegrationError) as exc:
            evolve(STATE, bath, (0, 10.0), EvolutionConfig(max_steps=5))
        assert 0 < exc.value.t < 10 and exc.value.state.c1 > 0

    @pytest.mark.parametrize("kw", [{"rtol": 0}, {"sample_dt": -1}, {"refine": 0}])
    def test_config_validation(self, kw):
        with pytest.raises(DomainError):
            EvolutionConfig(**kw)
