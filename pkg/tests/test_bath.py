import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpzgauss.bath import (
    BathSpec,
    KernelEvalConfig,
    dissipation_kernel,
    noise_kernel,
    noise_kernel_quadrature,
    spectral_density,
)
from hpzgauss.errors import DomainError, SeriesTruncationError

from conftest import rel

pos = st.floats(1e-2, 1e2)


class TestBathSpec:
    def test_dimensionless_units(self):
        b = BathSpec(gamma=0.2, cutoff=30.0, temperature=4.0, mass=2.0, omega0=3.0, hbar=0.5, kB=2.0)
        assert b.g == pytest.approx(0.2 / 3.0)
        assert b.W == pytest.approx(10.0)
        assert b.theta == pytest.approx(2.0 * 4.0 / (0.5 * 3.0))
        assert b.length_unit == pytest.approx(math.sqrt(0.5 / (2.0 * 3.0)))

    @pytest.mark.parametrize("kw", [
        {"gamma": -1.0}, {"cutoff": 0.0}, {"temperature": -2.0}, {"mass": 0.0}, {"gamma": math.nan},
    ])
    def test_rejects_bad_values(self, kw):
        base = {"gamma": 0.1, "cutoff": 1.0, "temperature": 1.0}
        with pytest.raises(DomainError):
            BathSpec(**{**base, **kw})

    def test_dict_round_trip(self):
        b = BathSpec(0.1, 5.0, 0.3, mass=2.0)
        assert BathSpec.from_dict(b.to_dict()) == b

    def test_omega_b(self):
        b = BathSpec(0.1, 5.0, 1.0)
        assert b.omega_b_squared == pytest.approx(1.0 + 2 * 0.1 * 5.0)

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            KernelEvalConfig(backend="fortran").core


class TestSpectralDensity:
    def test_examples(self, bath):
        W = bath.cutoff
        assert spectral_density(bath, 0.0) == 0.0
        assert spectral_density(bath, W) == pytest.approx(bath.gamma * W / math.pi)

    @given(pos, pos)
    def test_nonnegative_peak_at_cutoff(self, W, w):
        b = BathSpec(0.3, W, 1.0)
        assert spectral_density(b, w) >= 0
        assert spectral_density(b, w) <= spectral_density(b, W) * (1 + 1e-14)

    def test_negative_frequency(self, bath):
        with pytest.raises(DomainError):
            spectral_density(bath, -1.0)


class TestNoiseKernel:
    def test_value_at_zero(self, bath):
        assert noise_kernel(bath, 0.0) == pytest.approx(bath.gamma * bath.cutoff**2)

    @given(st.floats(0, 5), pos)
    def test_shift_by_inverse_cutoff(self, u, W):
        b = BathSpec(0.1, W, 1.0)
        s = u / W
        assert noise_kernel(b, s + 1 / W) / noise_kernel(b, s) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_positive_decreasing(self, bath):
        s = np.linspace(0, 3, 50)
        d = noise_kernel(bath, s)
        assert np.all(d > 0) and np.all(np.diff(d) < 0)

    @pytest.mark.parametrize("s", [0.01, 0.07, 0.3])
    def test_quadrature_oracle(self, bath, s):
        assert rel(noise_kernel_quadrature(bath, s), noise_kernel(bath, s)) < 1e-9

    def test_quadrature_oracle_absolute_in_tail(self, bath):
        # the oracle's tolerance is absolute, scaled by D(0)
        err = abs(noise_kernel_quadrature(bath, 2.0) - noise_kernel(bath, 2.0))
        assert err < 1e-10 * noise_kernel(bath, 0.0)

    def test_quadrature_needs_positive_s(self, bath):
        with pytest.raises(DomainError):
            noise_kernel_quadrature(bath, 0.0)


class TestDissipationKernel:
    @pytest.mark.parametrize("T", [0.1, 1.0, 100.0])
    def test_closed_form_vs_quadrature(self, T):
        b = BathSpec(0.1, 10.0, T)
        s = np.geomspace(1e-3, 10, 9) / b.cutoff
        cf = dissipation_kernel(b, s)
        qd = dissipation_kernel(b, s, method="quadrature")
        assert rel(cf, qd) < 1e-8

    def test_example_at_inverse_cutoff(self):
        b = BathSpec(0.1, 10.0, 1.0)
        s = 1 / b.cutoff
        assert rel(dissipation_kernel(b, s), dissipation_kernel(b, s, method="quadrature")) < 1e-8

    def test_high_temperature_classical_limit(self):
        # kT = 100 hbar Omega; D1 -> 2 m gamma Omega kT/hbar near s = 0
        b = BathSpec(0.1, 10.0, 1000.0)
        s = 1e-3 / b.cutoff
        ref = 2 * b.gamma * b.cutoff * b.temperature * math.exp(-b.cutoff * s)
        assert rel(dissipation_kernel(b, s), ref) < 1e-2

    def test_diverges_at_zero(self, bath):
        assert dissipation_kernel(bath, 0.0) == math.inf

    def test_decays(self, bath):
        s = np.array([1.0, 10.0, 100.0])
        vals = np.abs(dissipation_kernel(bath, s))
        assert vals[-1] < 1e-6 * vals[0]

    def test_zero_coupling(self):
        assert dissipation_kernel(BathSpec(0.0, 10.0, 1.0), 0.5) == 0.0

    def test_truncation_error(self, kernel_cfg):
        b = BathSpec(0.1, 10.0, 1e-4)
        cfg = KernelEvalConfig(max_terms=10, backend=kernel_cfg.backend)
        with pytest.raises(SeriesTruncationError) as exc:
            dissipation_kernel(b, 0.1, cfg)
        assert exc.value.bound > 0

    def test_physical_units(self):
        # m, omega0 rescaling: D1 scales as m omega0^3 at fixed dimensionless controls
        b1 = BathSpec(0.1, 10.0, 1.0)
        b2 = BathSpec(0.2, 20.0, 2.0, mass=3.0, omega0=2.0)
        assert dissipation_kernel(b2, 0.05) == pytest.approx(3.0 * 8.0 * dissipation_kernel(b1, 0.1), rel=1e-12)
