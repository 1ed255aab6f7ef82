import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpzgauss.bath import BathSpec, KernelEvalConfig
from hpzgauss.coefficients import (
    ASYMPTOTIC,
    coefficient_table,
    coefficients_at,
    d_pp,
    d_pp_quadrature,
    d_px,
    d_px_quadrature,
    is_low_temperature,
    lambda_coeff,
    lambda_quadrature,
    markovian_coefficients,
    markovian_discrepancy,
    omega_p_squared,
    omega_p_squared_quadrature,
)
from hpzgauss.errors import DomainError, SeriesTruncationError

from conftest import rel

ORACLES = [
    (omega_p_squared, omega_p_squared_quadrature),
    (lambda_coeff, lambda_quadrature),
    (d_px, d_px_quadrature),
    (d_pp, d_pp_quadrature),
]


def test_values_at_zero(bath):
    c = coefficients_at(bath, 0.0)
    assert (c.lam, c.d_px, c.d_pp) == (0.0, 0.0, 0.0)
    assert c.omega_p2 == pytest.approx(1.0 + 2 * bath.gamma * bath.cutoff)


def test_markovian_closed_forms(bath):
    m = markovian_coefficients(bath)
    W, g = bath.cutoff, bath.gamma
    assert m.t == ASYMPTOTIC
    assert m.lam == pytest.approx(g * W**2 / (W**2 + 1))
    assert m.omega_p2 == pytest.approx(1 + 2 * g * W / (W**2 + 1))


def test_decoupled():
    b = BathSpec(0.0, 10.0, 1.0)
    for t in (0.0, 0.5, 7.0):
        c = coefficients_at(b, t)
        assert c.omega_p2 == 1.0
        assert (c.lam, c.d_px, c.d_pp) == (0.0, 0.0, 0.0)
    m = markovian_coefficients(b)
    assert (m.lam, m.d_px, m.d_pp) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("T", [0.1, 1.0, 100.0])
@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("fn,oracle", ORACLES, ids=["omega_p2", "lambda", "d_px", "d_pp"])
def test_closed_form_vs_quadrature(fn, oracle, t, T):
    b = BathSpec(0.1, 10.0, T)
    assert rel(fn(b, t), oracle(b, t)) < 1e-8


@pytest.mark.parametrize("T", [0.1, 1.0, 100.0])
def test_large_time_limit(T):
    b = BathSpec(0.1, 10.0, T)
    t = 50.0 / min(b.gamma, b.cutoff, b.omega0)
    c, m = coefficients_at(b, t), markovian_coefficients(b)
    for name in ("omega_p2", "lam", "d_px", "d_pp"):
        assert rel(getattr(c, name), getattr(m, name)) < 1e-6, name


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 2.0), st.floats(0.5, 100.0), st.floats(0.05, 100.0), st.floats(1e-4, 50.0))
def test_lambda_positive(g, W, T, t):
    assert lambda_coeff(BathSpec(g, W, T), t) > 0


def test_continuity(bath):
    dt = 1e-3 / bath.cutoff
    ts = np.arange(0, 2.0, dt)
    tab = coefficient_table(bath, ts)[:, 1:]
    scale = np.max(np.abs(tab), axis=0)
    jumps = np.max(np.abs(np.diff(tab, axis=0)), axis=0) / scale
    # a jump of a few dt times the fastest rate Omega
    assert np.all(jumps < 20 * dt * bath.cutoff)


def test_envelope_relaxes(bath):
    m = markovian_coefficients(bath)
    ts = np.array([10.0, 20.0, 40.0]) / bath.cutoff
    dev = [abs(d_pp(bath, t) - m.d_pp) for t in ts]
    assert dev[2] < dev[0]


def test_vector_matches_scalar(bath):
    ts = np.array([0.0, 0.3, 2.5])
    vec = d_px(bath, ts)
    assert isinstance(vec, np.ndarray)
    assert np.array_equal(vec, [d_px(bath, t) for t in ts])
    assert isinstance(d_px(bath, 0.3), float)


def test_table_columns(bath):
    tab = coefficient_table(bath, [0.0, 1.0])
    assert tab.shape == (2, 5)
    c = coefficients_at(bath, 1.0)
    assert np.array_equal(tab[1], [1.0, c.omega_p2, c.lam, c.d_px, c.d_pp])


def test_physical_units():
    b1 = BathSpec(0.1, 10.0, 1.0)
    b2 = BathSpec(0.2, 20.0, 2.0, mass=3.0, omega0=2.0, hbar=0.5, kB=0.5)
    c1, c2 = coefficients_at(b1, 1.0), coefficients_at(b2, 0.5)
    assert c2.omega_p2 == pytest.approx(4 * c1.omega_p2, rel=1e-12)
    assert c2.lam == pytest.approx(2 * c1.lam, rel=1e-12)
    assert c2.d_px == pytest.approx(2 * c1.d_px, rel=1e-12)
    assert c2.d_pp == pytest.approx(0.5 * 3.0 * 4.0 * c1.d_pp, rel=1e-12)
    assert c2.internal(b2) == pytest.approx(c1.internal(b1), rel=1e-12)


def test_low_temperature_flag():
    b = BathSpec(0.1, 10.0, 0.1)
    assert is_low_temperature(b)
    assert "low_temperature" in coefficients_at(b, 1.0).flags
    assert not coefficients_at(BathSpec(0.1, 10.0, 1.0), 1.0).flags


def test_negative_time(bath):
    with pytest.raises(DomainError):
        d_pp(bath, -1.0)


def test_truncation_error_carries_context():
    b = BathSpec(0.1, 10.0, 1e-4)
    with pytest.raises(SeriesTruncationError, match="t=0.5"):
        d_pp(b, 0.5, KernelEvalConfig(max_terms=10))


def test_discrepancy_high_temperature():
    # kT = 100 hbar Omega, Omega = 100 omega0
    d = markovian_discrepancy(BathSpec(0.1, 100.0, 1e4))
    assert abs(d["lambda"]) < 1e-3
    assert abs(d["d_pp_high_t"]) < 1e-2
    assert abs(d["d_px_high_t"]) < 1e-2
