"""Ohmic Lorentz-Drude bath: parameters, spectral density and correlation kernels.

Internally every quantity is expressed in units with ``hbar = m = omega0 =
kB = 1``.  :class:`BathSpec` stores the physical inputs and carries the
conversion factors; public functions accept and return physical units.

The two kernels are::

    D(s)  = int_0^inf J(w) sin(w s) dw              = m gamma Omega^2 exp(-Omega s)
    D1(s) = int_0^inf J(w) coth(hbar w / 2kT) cos(w s) dw

with ``J(w) = (2 m gamma / pi) w Omega^2 / (Omega^2 + w^2)``.  ``D1`` is
evaluated either from its Matsubara series or by oscillatory quadrature.
``D1`` is even in ``s``; only ``s >= 0`` is accepted.  ``D1(0)`` diverges
logarithmically (the Lorentz-Drude tail gives ``J coth ~ 1/w``), so both
methods return ``inf`` there.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np
from scipy import integrate

from . import _backend
from .errors import DomainError

__all__ = [
    "BathSpec",
    "KernelEvalConfig",
    "spectral_density",
    "noise_kernel",
    "noise_kernel_quadrature",
    "dissipation_kernel",
]


@dataclass(frozen=True)
class BathSpec:
    """Oscillator plus Ohmic bath.

    Parameters
    ----------
    gamma : float
        Damping rate (rad/time), ``>= 0``.
    cutoff : float
        Lorentz-Drude cutoff ``Omega`` (rad/time), ``> 0``.
    temperature : float
        Temperature ``T``; ``kB * T`` is an energy. ``> 0``.
    mass, omega0, hbar, kB : float
        Oscillator mass, bare frequency and the two constants. All default
        to one, in which case the other fields are already the dimensionless
        controls ``gamma/omega0``, ``Omega/omega0`` and ``kB T/(hbar omega0)``.
    """

    gamma: float
    cutoff: float
    temperature: float
    mass: float = 1.0
    omega0: float = 1.0
    hbar: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        for name in ("cutoff", "temperature", "mass", "omega0", "hbar", "kB"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise DomainError(f"gamma must be >= 0 and finite, got {self.gamma!r}")

    @classmethod
    def dimensionless(cls, gamma: float, cutoff: float, temperature: float) -> "BathSpec":
        """Bath given directly by ``gamma/omega0``, ``Omega/omega0``, ``kB T/(hbar omega0)``."""
        return cls(gamma=gamma, cutoff=cutoff, temperature=temperature)

    # dimensionless controls
    @property
    def g(self) -> float:
        return self.gamma / self.omega0

    @property
    def W(self) -> float:
        return self.cutoff / self.omega0

    @property
    def theta(self) -> float:
        return self.kB * self.temperature / (self.hbar * self.omega0)

    # unit scales: physical = internal * scale
    @property
    def time_unit(self) -> float:
        return 1.0 / self.omega0

    @property
    def length_unit(self) -> float:
        return math.sqrt(self.hbar / (self.mass * self.omega0))

    @property
    def momentum_unit(self) -> float:
        return math.sqrt(self.hbar * self.mass * self.omega0)

    @property
    def omega_b_squared(self) -> float:
        """Shifted frequency squared ``omega0^2 + 2 gamma Omega``."""
        return self.omega0**2 + 2.0 * self.gamma * self.cutoff

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BathSpec":
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class KernelEvalConfig:
    """Numerical controls for the kernel and coefficient evaluators.

    Attributes
    ----------
    quad_rtol : float
        Relative tolerance of the quadrature oracles.
    cutoff_multiplier : float
        The finite quadrature panel is ``[0, K * Omega]``; beyond it an
        oscillatory Fourier-integral routine takes over.
    series_tol : float
        Matsubara truncation tolerance (geometric remainder bound).
    max_terms : int
        Largest direct Matsubara sum allowed before
        :class:`~hpzgauss.errors.SeriesTruncationError` is raised.
    backend : str or None
        ``"python"``, ``"compiled"`` or ``None`` for the import-time default.
    """

    quad_rtol: float = 1e-10
    cutoff_multiplier: float = 50.0
    series_tol: float = 1e-16
    max_terms: int = 200_000
    backend: str | None = None

    def __post_init__(self):
        for name in ("quad_rtol", "series_tol"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise DomainError(f"{name} must lie in (0, 1), got {v!r}")
        if self.cutoff_multiplier <= 0:
            raise DomainError("cutoff_multiplier must be positive")
        if int(self.max_terms) < 1:
            raise DomainError("max_terms must be >= 1")

    @property
    def core(self):
        return _backend.get(self.backend)


DEFAULT_CONFIG = KernelEvalConfig()


def _quad(*args, **kw):
    """``scipy.integrate.quad`` value with roundoff warnings silenced."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(*args, **kw)[0]


def _nonneg(name, v):
    a = np.asarray(v, dtype=float)
    if np.any(a < 0) or np.any(np.isnan(a)):
        raise DomainError(f"{name} must be >= 0")
    return a


def _scalar_or_array(a, out):
    return float(out) if np.ndim(a) == 0 else out


def spectral_density(bath: BathSpec, omega):
    """Ohmic Lorentz-Drude spectral density ``J(omega)`` (mass/time^2)."""
    w = _nonneg("omega", omega)
    W = bath.cutoff
    out = 2.0 * bath.mass * bath.gamma / math.pi * w * W * W / (W * W + w * w)
    return _scalar_or_array(w, out)


def noise_kernel(bath: BathSpec, s):
    """``D(s) = m gamma Omega^2 exp(-Omega s)`` for ``s >= 0``."""
    sa = _nonneg("s", s)
    out = bath.mass * bath.gamma * bath.cutoff**2 * np.exp(-bath.cutoff * sa)
    return _scalar_or_array(sa, out)


def noise_kernel_quadrature(bath: BathSpec, s: float, cfg: KernelEvalConfig = DEFAULT_CONFIG) -> float:
    """Oracle: ``int_0^inf J(w) sin(w s) dw`` by Fourier quadrature."""
    s = float(_nonneg("s", s))
    if s == 0.0:
        # the sine transform vanishes at s = 0 but D(0+) does not
        raise DomainError("the quadrature oracle needs s > 0")
    x = s * bath.omega0
    W, g = bath.W, bath.g
    f = lambda w: 2.0 * g / math.pi * w * W * W / (W * W + w * w)  # noqa: E731
    val = _quad(f, 0, np.inf, weight="sin", wvar=x, limlst=500, epsabs=1e-13 * g * W * W)
    return val * bath.mass * bath.omega0**3


def _dissipation_internal(x, W, T, g, cfg):
    if g == 0.0:
        return 0.0
    return g * W * W * cfg.core.bracket(0, x, W, T, 1.0, cfg.series_tol, int(cfg.max_terms))


def _j_coth(w, g, W, T):
    """``J(w) coth(w / 2T)`` in internal units, with its w -> 0 limit."""
    w = np.asarray(w, dtype=float)
    x = w / (2.0 * T)
    small = x < 1e-8
    xs = np.where(small, 1.0, x)
    xcoth = np.where(small, 1.0 + x * x / 3.0, xs / np.tanh(xs))
    return 2.0 * g / math.pi * W * W / (W * W + w * w) * 2.0 * T * xcoth


def _dissipation_quad(x, W, T, g, cfg):
    if g == 0.0:
        return 0.0
    if x == 0.0:
        return math.inf
    f = lambda w: float(_j_coth(w, g, W, T))  # noqa: E731
    B = cfg.cutoff_multiplier * W
    head = _quad(f, 0.0, B, weight="cos", wvar=x, epsabs=0.0, epsrel=cfg.quad_rtol, limit=10_000)
    tail = _quad(f, B, np.inf, weight="cos", wvar=x, limlst=500, epsabs=1e-13 * g * max(1.0, 2.0 * T))
    return head + tail


def dissipation_kernel(
    bath: BathSpec,
    s,
    cfg: KernelEvalConfig = DEFAULT_CONFIG,
    method: Literal["closed_form", "quadrature"] = "closed_form",
):
    """Thermal kernel ``D1(s)`` (mass/time^3) for ``s >= 0``.

    Parameters
    ----------
    method : {"closed_form", "quadrature"}
        ``closed_form`` sums the Matsubara series with an Euler-Maclaurin
        tail; ``quadrature`` integrates ``J coth cos`` numerically.

    Raises
    ------
    SeriesTruncationError
        If the series needs more than ``cfg.max_terms`` direct terms.
    """
    sa = _nonneg("s", s)
    if method == "closed_form":
        fn = _dissipation_internal
    elif method == "quadrature":
        fn = _dissipation_quad
    else:
        raise ValueError(f"unknown method {method!r}")
    scale = bath.mass * bath.omega0**3
    args = (bath.W, bath.theta, bath.g, cfg)
    if sa.ndim == 0:
        return scale * fn(float(sa) * bath.omega0, *args)
    out = np.array([fn(v * bath.omega0, *args) for v in sa.ravel()]).reshape(sa.shape)
    return scale * out
