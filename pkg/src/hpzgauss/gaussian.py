"""Gaussian density operators in the position and the (k, Delta) representation.

Position representation::

    rho(x, y) = exp[-A (x-y)^2 - i B (x^2-y^2) - C (x+y)^2 - i D (x-y) - E (x+y) - N]

Phase-space (characteristic) representation, obtained by Fourier
transforming in the centre coordinate ``X = (x+y)/2`` at fixed
``Delta = x - y``::

    rho(k, Delta) = int dX exp(i k X) rho(X + Delta/2, X - Delta/2)
                  = exp[-c1 k^2 - c2 k Delta - c3 Delta^2 - i c4 k - i c5 Delta - c6]

so that ``Tr rho = exp(-c6)``, ``<x> = -c4``, ``<p> = -c5``,
``Var x = 2 c1``, ``Var p = 2 c3`` and ``Cov(x, p) = c2`` (``hbar = 1``).

The operator is positive iff ``A >= C > 0``; its spectrum is the geometric
ladder ``lambda_0 lambda^n``.  All states here are in internal units
(``hbar = m = omega0 = 1``).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import DomainError, NonNormalizableError, SpectrumUndefinedError

__all__ = [
    "GaussianXY",
    "GaussianKD",
    "SpectrumDescriptor",
    "Verdict",
    "EPS_C",
    "DEFAULT_TOL",
    "xy_to_kd",
    "kd_to_xy",
    "spectrum",
    "purity",
    "is_physical",
    "verdict_from_kd",
    "normalize",
    "ground_state",
    "thermal_state",
    "squeezed_state",
    "displaced",
    "make_initial_state",
    "save_state",
    "load_state",
]

# C below this counts as non-normalizable (1/(16 c1) overflow guard)
EPS_C = 1e-30
# relative slack on A >= C so that pure states are not flagged by roundoff
DEFAULT_TOL = 1e-9


class Verdict(str, enum.Enum):
    PHYSICAL = "physical"
    VIOLATED = "violated"
    NON_NORMALIZABLE = "non_normalizable"


@dataclass(frozen=True)
class GaussianXY:
    """Position-representation exponents ``A, B, C, D, E, N`` (all real)."""

    A: float
    B: float
    C: float
    D: float = 0.0
    E: float = 0.0
    N: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C, self.D, self.E, self.N])

    def density(self, x, y):
        """Evaluate ``rho(x, y)`` (complex)."""
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        dm, sm = x - y, x + y
        return np.exp(
            -self.A * dm**2 - 1j * self.B * (x * x - y * y) - self.C * sm**2
            - 1j * self.D * dm - self.E * sm - self.N
        )


@dataclass(frozen=True)
class GaussianKD:
    """Characteristic-function exponents ``c1 ... c6``; the ODE state vector."""

    c1: float
    c2: float
    c3: float
    c4: float = 0.0
    c5: float = 0.0
    c6: float = 0.0

    @classmethod
    def from_array(cls, a) -> "GaussianKD":
        a = [float(v) for v in a]
        if len(a) == 5:
            a.append(0.0)
        return cls(*a)

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3, self.c4, self.c5, self.c6])

    @property
    def trace(self) -> float:
        return math.exp(-self.c6)

    @property
    def mean_x(self) -> float:
        return -self.c4

    @property
    def mean_p(self) -> float:
        return -self.c5

    @property
    def var_x(self) -> float:
        return 2.0 * self.c1

    @property
    def var_p(self) -> float:
        return 2.0 * self.c3

    @property
    def cov_xp(self) -> float:
        """Symmetrised covariance ``<{x - <x>, p - <p>}>/2``."""
        return self.c2

    def characteristic(self, k, delta):
        """Evaluate ``rho(k, Delta)`` (complex)."""
        k, d = np.asarray(k, dtype=float), np.asarray(delta, dtype=float)
        return np.exp(-self.c1 * k * k - self.c2 * k * d - self.c3 * d * d
                      - 1j * self.c4 * k - 1j * self.c5 * d - self.c6)


@dataclass(frozen=True)
class SpectrumDescriptor:
    """Eigenvalues ``lambda_n = lambda0 * ratio**n``, ``n >= 0``."""

    lambda0: float
    ratio: float

    def eigenvalues(self, n_max: int) -> np.ndarray:
        """First ``n_max + 1`` eigenvalues."""
        return self.lambda0 * self.ratio ** np.arange(n_max + 1)

    def tail_bound(self, n_max: int) -> float:
        """Bound ``|ratio|^(n_max+1) / (1 - |ratio|)`` on the omitted eigenvalue mass."""
        r = abs(self.ratio)
        return r ** (n_max + 1) / (1.0 - r)

    @property
    def sum_squares(self) -> float:
        """``sum_n lambda_n^2`` in closed form (the purity)."""
        return self.lambda0**2 / (1.0 - self.ratio**2)


def xy_to_kd(g: GaussianXY) -> GaussianKD:
    """Fourier transform in the centre coordinate; needs ``C > 0``."""
    if not g.C > 0:
        raise NonNormalizableError(f"x-integral diverges for C = {g.C!r} <= 0")
    fc = 4.0 * g.C
    return GaussianKD(
        c1=1.0 / (4.0 * fc),
        c2=-g.B / fc,
        c3=g.A + g.B * g.B / fc,
        c4=g.E / fc,
        c5=g.D - 2.0 * g.B * g.E / fc,
        c6=g.N - g.E * g.E / fc - 0.5 * math.log(math.pi / fc),
    )


def kd_to_xy(c: GaussianKD) -> GaussianXY:
    """Inverse of :func:`xy_to_kd`; needs ``c1 > 0``."""
    if not c.c1 > 0:
        raise NonNormalizableError(f"representation breaks down for c1 = {c.c1!r} <= 0")
    q = 4.0 * c.c1
    return GaussianXY(
        A=c.c3 - c.c2 * c.c2 / q,
        B=-c.c2 / q,
        C=1.0 / (4.0 * q),
        D=c.c5 - 2.0 * c.c2 * c.c4 / q,
        E=c.c4 / q,
        N=c.c6 + c.c4 * c.c4 / q + 0.5 * math.log(math.pi * q),
    )


def _check_ac(A, C):
    if not A > 0:
        raise SpectrumUndefinedError(f"spectrum undefined for A = {A!r} <= 0")
    if not C > 0:
        raise SpectrumUndefinedError(f"spectrum undefined for C = {C!r} <= 0")


def spectrum(A: float, C: float) -> SpectrumDescriptor:
    """Geometric eigenvalue ladder of a trace-one Gaussian with exponents ``A, C``."""
    _check_ac(A, C)
    sa, sc = math.sqrt(A), math.sqrt(C)
    # (A - C) / (sa + sc)^2 avoids cancelling the square roots near A = C
    return SpectrumDescriptor(lambda0=2.0 * sc / (sa + sc), ratio=(A - C) / (sa + sc) ** 2)


def purity(A: float, C: float) -> float:
    """``Tr rho^2 = sqrt(C/A)``; above one signals a negative eigenvalue."""
    _check_ac(A, C)
    return math.sqrt(C / A)


def is_physical(g: GaussianXY, tol: float = DEFAULT_TOL) -> Verdict:
    """Positivity verdict: physical iff ``A >= C (1 - tol)`` and ``C > EPS_C``."""
    if not g.C > EPS_C:
        return Verdict.NON_NORMALIZABLE
    return Verdict.PHYSICAL if g.A >= g.C * (1.0 - tol) else Verdict.VIOLATED


def verdict_from_kd(c1, c2, c3, tol: float = DEFAULT_TOL):
    """Vectorised verdict straight from ``c1, c2, c3``.

    Uses ``16 c1 (A - C(1 - tol)) = 16 c1 c3 - 4 c2^2 - (1 - tol)``, which avoids
    forming ``C = 1/(16 c1)``.  Returns an array of :class:`Verdict` values
    (or one value for scalar input).
    """
    c1, c2, c3 = (np.asarray(v, dtype=float) for v in (c1, c2, c3))
    normal = (c1 > 0) & (c1 < 1.0 / (16.0 * EPS_C))
    ok = 16.0 * c1 * c3 - 4.0 * c2 * c2 - (1.0 - tol) >= 0
    out = np.where(~normal, Verdict.NON_NORMALIZABLE.value,
                   np.where(ok, Verdict.PHYSICAL.value, Verdict.VIOLATED.value))
    if out.ndim == 0:
        return Verdict(str(out))
    return np.array([Verdict(v) for v in out], dtype=object)


def normalize(c: GaussianKD) -> GaussianKD:
    """Trace-one version of ``c`` (sets ``c6 = 0``)."""
    if not c.c1 > 0:
        raise NonNormalizableError(f"cannot normalize with c1 = {c.c1!r} <= 0")
    return replace(c, c6=0.0)


# ------------------------------------------------------------ initial states

def ground_state() -> GaussianKD:
    """Oscillator ground state: ``A = C = 1/4``."""
    return GaussianKD(0.25, 0.0, 0.25)


def thermal_state(theta: float) -> GaussianKD:
    """Gibbs state of the bare oscillator at ``kB T / (hbar omega0) = theta``."""
    if not theta > 0:
        raise DomainError("theta must be positive")
    q = 0.25 / math.tanh(0.5 / theta)
    return GaussianKD(q, 0.0, q)


def squeezed_state(s: float, angle: float = 0.0) -> GaussianKD:
    """Pure squeezed vacuum with ``Var x = 1/(2s)``, ``Var p = s/2`` at ``angle = 0``.

    ``angle`` rotates the squeezing ellipse in phase space.  ``s = 1`` is the
    ground state.
    """
    if not s > 0:
        raise DomainError("squeeze factor must be positive")
    vx, vp = 0.5 / s, 0.5 * s
    ca, sa = math.cos(angle), math.sin(angle)
    sxx = ca * ca * vx + sa * sa * vp
    spp = sa * sa * vx + ca * ca * vp
    sxp = ca * sa * (vp - vx)
    return GaussianKD(0.5 * sxx, sxp, 0.5 * spp)


def displaced(c: GaussianKD, x0: float = 0.0, p0: float = 0.0) -> GaussianKD:
    """Shift the means to ``<x> = x0``, ``<p> = p0``."""
    return replace(c, c4=-x0, c5=-p0)


def make_initial_state(kind: str = "ground", **params) -> GaussianKD:
    """Initial-state menu.

    ``kind`` is one of ``ground``, ``thermal`` (``theta``), ``squeezed``
    (``s``, optional ``angle``) or ``kd`` (explicit ``c1 ... c6``).  Optional
    ``x0`` and ``p0`` displace any of them.
    """
    x0, p0 = float(params.pop("x0", 0.0)), float(params.pop("p0", 0.0))
    if kind == "ground":
        c = ground_state()
    elif kind == "thermal":
        c = thermal_state(float(params.pop("theta")))
    elif kind == "squeezed":
        c = squeezed_state(float(params.pop("s")), float(params.pop("angle", 0.0)))
    elif kind == "kd":
        c = GaussianKD(**{k: float(params.pop(k)) for k in ("c1", "c2", "c3", "c4", "c5", "c6") if k in params})
        return c if not (x0 or p0) else displaced(c, x0, p0)
    else:
        raise DomainError(f"unknown initial state kind {kind!r}")
    if params:
        raise DomainError(f"unexpected parameters for {kind!r}: {sorted(params)}")
    return displaced(c, x0, p0) if (x0 or p0) else c


# ---------------------------------------------------------------- state files

_UNITS = "internal: hbar = m = omega0 = 1"


def save_state(state, path) -> None:
    """Write a :class:`GaussianXY` or :class:`GaussianKD` as a JSON record."""
    if isinstance(state, GaussianXY):
        rep = "xy"
    elif isinstance(state, GaussianKD):
        rep = "kd"
    else:
        raise TypeError(f"not a Gaussian state: {state!r}")
    rec = {"representation": rep, "units": _UNITS, **asdict(state)}
    Path(path).write_text(json.dumps(rec, indent=2))


def load_state(path):
    """Read a state written by :func:`save_state`."""
    rec = json.loads(Path(path).read_text())
    return state_from_dict(rec)


def state_from_dict(rec: dict):
    rep = rec.get("representation")
    cls = {"xy": GaussianXY, "kd": GaussianKD}.get(rep)
    if cls is None:
        raise DomainError(f"unknown representation {rep!r}")
    names = [f.name for f in fields(cls)]
    return cls(**{n: float(rec[n]) for n in names if n in rec})
