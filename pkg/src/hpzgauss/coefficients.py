"""Time-dependent master-equation coefficients and their Markovian limits.

In internal units (``hbar = m = omega0 = kB = 1``, ``g = gamma``,
``W = Omega``, ``r = W^2/(W^2 + 1)``)::

    omega_p^2(t) = 1 + 2 g W - 2 int_0^t D(s) cos(s) ds
    lambda(t)    =             int_0^t D(s) sin(s) ds
    D_pp(t)      =             int_0^t D1(s) cos(s) ds
    D_px(t)      =       1/2   int_0^t D1(s) sin(s) ds

The first two are elementary.  The last two are written as their
``t -> inf`` values minus a Matsubara bracket of the truncated transforms
(see ``_pycore``).  The Markovian limits are closed expressions::

    omega_p^2(inf) = 1 + 2 g W / (W^2 + 1)
    lambda(inf)    = g r
    D_pp(inf)      = g r coth(1 / 2T)
    D_px(inf)      = (g r / pi) [Re psi(1 + i/(2 pi T)) - psi(W/(2 pi T)) - pi T / W]

Every closed form has an independent quadrature oracle in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from . import _pycore
from .bath import DEFAULT_CONFIG, BathSpec, KernelEvalConfig, _quad, noise_kernel
from .errors import DomainError, HPZError, SeriesTruncationError

__all__ = [
    "CoefficientSet",
    "LOW_T_THRESHOLD",
    "is_low_temperature",
    "omega_p_squared",
    "lambda_coeff",
    "d_px",
    "d_pp",
    "coefficients_at",
    "coefficient_table",
    "markovian_coefficients",
    "quoted_limits",
    "markovian_discrepancy",
    "omega_p_squared_quadrature",
    "lambda_quadrature",
    "d_pp_quadrature",
    "d_px_quadrature",
]

# kB T / (hbar omega0) below which results are flagged as low temperature
LOW_T_THRESHOLD = 0.2

ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class CoefficientSet:
    """The four coefficients at one time, in physical units.

    ``t`` is the evaluation time or the string ``"asymptotic"`` for the
    Markovian values.
    """

    omega_p2: float
    lam: float
    d_px: float
    d_pp: float
    t: Union[float, str]
    flags: tuple = field(default=())

    def internal(self, bath: BathSpec) -> tuple:
        """``(omega_p2, lam, d_px, d_pp)`` in internal units."""
        s = _scales(bath)
        return (self.omega_p2 / s[0], self.lam / s[1], self.d_px / s[2], self.d_pp / s[3])


def _scales(bath):
    w0 = bath.omega0
    return (w0 * w0, w0, w0, bath.hbar * bath.mass * w0 * w0)


def is_low_temperature(bath: BathSpec) -> bool:
    """True when ``kB T / (hbar omega0)`` is below :data:`LOW_T_THRESHOLD`."""
    return bath.theta < LOW_T_THRESHOLD


def _flags(bath):
    return ("low_temperature",) if is_low_temperature(bath) else ()


def core_params(bath: BathSpec, cfg: KernelEvalConfig = DEFAULT_CONFIG) -> tuple:
    """Parameter tuple consumed by the numerical core."""
    g, W, T = bath.g, bath.W, bath.theta
    return (g, W, T, *_pycore.markovian_constants(g, W, T), cfg.series_tol, int(cfg.max_terms))


def _internal_times(bath, t):
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0) or np.any(np.isnan(ta)):
        raise DomainError("t must be >= 0")
    return ta * bath.omega0


def _eval(bath, t, cfg):
    """Internal coefficients for each internal time; shape ``t.shape + (4,)``."""
    core = cfg.core
    params = core_params(bath, cfg)
    flat = np.ravel(t)
    out = np.empty((flat.size, 4))
    for i, ti in enumerate(flat):
        try:
            out[i] = core.coefficients(float(ti), params)
        except SeriesTruncationError as exc:
            raise SeriesTruncationError(
                f"{exc} while evaluating coefficients at t={float(ti) / bath.omega0!r} for {bath}",
                bound=exc.bound,
            ) from exc
        lam = out[i, 1]
        if ti > 0 and bath.g > 0 and not lam > 0 and params[0] * params[1] ** 2 * ti * ti > 1e-290:
            raise HPZError(f"lambda(t) = {lam!r} is not positive at t = {ti!r}")
    return out.reshape(np.shape(t) + (4,))


def _component(bath, t, cfg, j):
    ti = _internal_times(bath, t)
    val = _eval(bath, ti, cfg)[..., j] * _scales(bath)[j]
    return float(val) if np.ndim(val) == 0 else val


def omega_p_squared(bath: BathSpec, t, cfg: KernelEvalConfig = DEFAULT_CONFIG):
    """Renormalised frequency squared ``omega_p^2(t)``; equals ``omega_b^2`` at ``t = 0``."""
    return _component(bath, t, cfg, 0)


def lambda_coeff(bath: BathSpec, t, cfg: KernelEvalConfig = DEFAULT_CONFIG):
    """Damping coefficient ``lambda(t)``; zero at ``t = 0``, positive afterwards."""
    return _component(bath, t, cfg, 1)


def d_px(bath: BathSpec, t, cfg: KernelEvalConfig = DEFAULT_CONFIG):
    """Anomalous diffusion coefficient ``D_px(t)`` (enters the moment ODE as ``2 D_px``)."""
    return _component(bath, t, cfg, 2)


def d_pp(bath: BathSpec, t, cfg: KernelEvalConfig = DEFAULT_CONFIG):
    """Normal diffusion coefficient ``D_pp(t)``."""
    return _component(bath, t, cfg, 3)


def coefficients_at(bath: BathSpec, t: float, cfg: KernelEvalConfig = DEFAULT_CONFIG) -> CoefficientSet:
    """All four coefficients at one time."""
    ti = float(_internal_times(bath, t))
    vals = _eval(bath, np.array(ti), cfg)
    s = _scales(bath)
    return CoefficientSet(*(float(v * sc) for v, sc in zip(vals, s)), t=float(t), flags=_flags(bath))


def coefficient_table(bath: BathSpec, ts, cfg: KernelEvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Array of shape ``(len(ts), 5)`` with columns ``t, omega_p2, lambda, D_px, D_pp``."""
    ts = np.asarray(ts, dtype=float)
    vals = _eval(bath, _internal_times(bath, ts), cfg) * np.asarray(_scales(bath))
    return np.column_stack([ts, vals])


def markovian_coefficients(bath: BathSpec, cfg: KernelEvalConfig = DEFAULT_CONFIG) -> CoefficientSet:
    """Analytic ``t -> inf`` limits of the four coefficients."""
    vals = _pycore.markovian_constants(bath.g, bath.W, bath.theta)
    s = _scales(bath)
    return CoefficientSet(*(float(v * sc) for v, sc in zip(vals, s)), t=ASYMPTOTIC, flags=_flags(bath))


def quoted_limits(bath: BathSpec) -> dict:
    """Textbook approximations to the Markovian values.

    ``lambda`` (``Omega >> omega0``), high-temperature ``D_pp`` and ``D_px``
    (``kT >> hbar Omega >> hbar omega0``) and the moderate-temperature ``D_pp``
    (``Omega >> omega0`` only).
    """
    m, g, W, kT, hb, w0 = bath.mass, bath.gamma, bath.cutoff, bath.kB * bath.temperature, bath.hbar, bath.omega0
    return {
        "lambda": g,
        "d_pp_high_t": 2.0 * m * g * kT,
        "d_px_high_t": g * kT / (hb * W),
        "d_pp_low_t": m * g * hb * w0 / math.tanh(hb * w0 / (2.0 * kT)),
    }


def markovian_discrepancy(bath: BathSpec) -> dict:
    """Relative deviation of the exact Markovian values from :func:`quoted_limits`.

    Each quoted form holds only in its own regime; large entries outside
    that regime are expected and are reported rather than corrected.
    """
    mk = markovian_coefficients(bath)
    q = quoted_limits(bath)
    exact = {"lambda": mk.lam, "d_pp_high_t": mk.d_pp, "d_px_high_t": mk.d_px, "d_pp_low_t": mk.d_pp}
    return {k: exact[k] / q[k] - 1.0 if q[k] != 0 else math.nan for k in q}


# ------------------------------------------------------------------ oracles

def omega_p_squared_quadrature(bath: BathSpec, t: float, cfg: KernelEvalConfig = DEFAULT_CONFIG) -> float:
    """Oracle: ``omega_b^2 - (2/m) int_0^t D(s) cos(omega0 s) ds`` by quadrature."""
    if t < 0:
        raise DomainError("t must be >= 0")
    f = lambda s: noise_kernel(bath, s)  # noqa: E731
    val = _quad(f, 0.0, t, weight="cos", wvar=bath.omega0, epsabs=0.0, epsrel=cfg.quad_rtol, limit=1000)
    return bath.omega_b_squared - 2.0 * val / bath.mass


def lambda_quadrature(bath: BathSpec, t: float, cfg: KernelEvalConfig = DEFAULT_CONFIG) -> float:
    """Oracle: ``(1/(m omega0)) int_0^t D(s) sin(omega0 s) ds`` by quadrature."""
    if t < 0:
        raise DomainError("t must be >= 0")
    f = lambda s: noise_kernel(bath, s)  # noqa: E731
    val = _quad(f, 0.0, t, weight="sin", wvar=bath.omega0, epsabs=0.0, epsrel=cfg.quad_rtol, limit=1000)
    return val / (bath.mass * bath.omega0)


def _f_spec(w, g, W, T):
    # J(w) coth(w/2T), internal units, finite at w = 0
    x = w / (2.0 * T)
    xcoth = 1.0 + x * x / 3.0 if x < 1e-8 else x / math.tanh(x)
    return 2.0 * g / math.pi * W * W / (W * W + w * w) * 2.0 * T * xcoth


_SPLIT = 7.0  # internal frequency beyond which Fourier-weighted quadrature is used
_TAIL_EPS = 1e-13  # absolute tolerance of the Fourier tails, relative to g max(1, 2T)


def _d_pp_internal_quad(t, g, W, T, rtol):
    # Fubini: int_0^inf f(w) int_0^t cos(w s) cos(s) ds dw
    f = lambda w: _f_spec(w, g, W, T)  # noqa: E731
    eps = _TAIL_EPS * g * max(1.0, 2.0 * T)

    def kern(w):
        return 0.5 * t * (np.sinc((w - 1.0) * t / np.pi) + np.sinc((w + 1.0) * t / np.pi))

    head = _quad(lambda w: f(w) * kern(w), 0.0, _SPLIT, epsabs=0.0, epsrel=rtol, limit=5000,
                 points=[1.0])
    ct, st = math.cos(t), math.sin(t)
    fs = lambda w: f(w) * 0.5 * ct * (1.0 / (w - 1.0) + 1.0 / (w + 1.0))  # noqa: E731
    fc = lambda w: f(w) * 0.5 * st * (1.0 / (w + 1.0) - 1.0 / (w - 1.0))  # noqa: E731
    tail = (_quad(fs, _SPLIT, np.inf, weight="sin", wvar=t, limlst=500, epsabs=eps)
            + _quad(fc, _SPLIT, np.inf, weight="cos", wvar=t, limlst=500, epsabs=eps))
    return head + tail


def _d_px_internal_quad(t, g, W, T, rtol):
    # Fubini: (1/2) int_0^inf f(w) int_0^t cos(w s) sin(s) ds dw
    f = lambda w: _f_spec(w, g, W, T)  # noqa: E731
    eps = _TAIL_EPS * g * max(1.0, 2.0 * T)

    def kern(w):
        sp, dm = w + 1.0, 1.0 - w
        k1 = 2.0 * math.sin(0.5 * sp * t) ** 2 / sp
        k2 = 2.0 * math.sin(0.5 * dm * t) ** 2 / dm if dm != 0.0 else 0.0
        return 0.5 * (k1 + k2)

    head = _quad(lambda w: f(w) * kern(w), 0.0, _SPLIT, epsabs=0.0, epsrel=rtol, limit=5000,
                 points=[1.0])
    ct, st = math.cos(t), math.sin(t)
    f0 = lambda w: f(w) * 0.5 * (1.0 / (1.0 + w) + 1.0 / (1.0 - w))  # noqa: E731
    fc = lambda w: -f(w) * 0.5 * ct * (1.0 / (1.0 + w) + 1.0 / (1.0 - w))  # noqa: E731
    fs = lambda w: f(w) * 0.5 * st * (1.0 / (1.0 + w) - 1.0 / (1.0 - w))  # noqa: E731
    tail = (_quad(f0, _SPLIT, np.inf, epsabs=0.0, epsrel=rtol, limit=2000)
            + _quad(fc, _SPLIT, np.inf, weight="cos", wvar=t, limlst=500, epsabs=eps)
            + _quad(fs, _SPLIT, np.inf, weight="sin", wvar=t, limlst=500, epsabs=eps))
    return 0.5 * (head + tail)


def d_pp_quadrature(bath: BathSpec, t: float, cfg: KernelEvalConfig = DEFAULT_CONFIG) -> float:
    """Oracle for :func:`d_pp`: spectral integral of the finite-time cosine transform."""
    if t < 0:
        raise DomainError("t must be >= 0")
    x = t * bath.omega0
    if x == 0.0 or bath.g == 0.0:
        return 0.0
    return _d_pp_internal_quad(x, bath.g, bath.W, bath.theta, cfg.quad_rtol) * _scales(bath)[3]


def d_px_quadrature(bath: BathSpec, t: float, cfg: KernelEvalConfig = DEFAULT_CONFIG) -> float:
    """Oracle for :func:`d_px`: spectral integral of the finite-time sine transform."""
    if t < 0:
        raise DomainError("t must be >= 0")
    x = t * bath.omega0
    if x == 0.0 or bath.g == 0.0:
        return 0.0
    return _d_px_internal_quad(x, bath.g, bath.W, bath.theta, cfg.quad_rtol) * _scales(bath)[2]
