"""Time evolution of the Gaussian exponents.

The quadratic block ``(c1, c2, c3)`` obeys the affine system ``c' = M(t) c + v(t)``
with (internal units)::

    M = [[0,       1,     0   ],      v = (0, 2 D_px, D_pp)
         [-2 wp2, -2 lam, 2   ],
         [0,      -wp2,  -4 lam]]

and the first moments ``(c4, c5)`` obey ``c4' = c5``, ``c5' = -wp2 c4 - 2 lam c5``.
``c6`` (minus the log trace) is constant.

:func:`evolve` integrates the time-dependent system with an adaptive
Dormand-Prince 5(4) pair, with coefficients evaluated exactly at every
stage.  :func:`evolve_markovian` propagates the frozen asymptotic system in
closed form.  ``N = M + 2 lam I`` satisfies ``N^3 = sigma^2 N`` with
``sigma^2 = 4 (lam^2 - wp2)``, so::

    exp(M t) = exp(-2 lam t) [I + sinh(sigma t)/sigma N + (cosh(sigma t) - 1)/sigma^2 N^2]

which stays exact through the degenerate point ``sigma = 0`` (series
branch) and the underdamped regime (``sigma`` imaginary).

Public functions take physical times and physical-unit states; conversion
to internal units happens at this boundary.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import optimize

from . import _pycore
from .bath import DEFAULT_CONFIG, BathSpec, KernelEvalConfig
from .coefficients import core_params, is_low_temperature
from .errors import DomainError, IntegrationError, NonNormalizableError, NoStationaryStateError
from .gaussian import (
    DEFAULT_TOL,
    GaussianKD,
    GaussianXY,
    Verdict,
    is_physical,
    kd_to_xy,
    purity,
    verdict_from_kd,
)

__all__ = [
    "GeneratorMatrix",
    "EvolutionConfig",
    "Trajectory",
    "StationaryState",
    "generator_at",
    "evolve",
    "evolve_markovian",
    "markovian_trajectory",
    "stationary_state",
    "to_internal",
    "from_internal",
]

ASYMPTOTIC = "asymptotic"


# ------------------------------------------------------------------ units

def to_internal(c: GaussianKD, bath: BathSpec) -> GaussianKD:
    """Express ``c`` in units of the oscillator length ``sqrt(hbar/(m omega0))``."""
    L = bath.length_unit
    return GaussianKD(c.c1 / L**2, c.c2, c.c3 * L**2, c.c4 / L, c.c5 * L, c.c6)


def from_internal(c: GaussianKD, bath: BathSpec) -> GaussianKD:
    """Inverse of :func:`to_internal`."""
    L = bath.length_unit
    return GaussianKD(c.c1 * L**2, c.c2, c.c3 / L**2, c.c4 * L, c.c5 / L, c.c6)


def _to_internal_array(c, L):
    return np.array([c[0] / L**2, c[1], c[2] * L**2, c[3] / L, c[4] * L])


def _from_internal_array(y, L):
    y = np.array(y, dtype=float, copy=True)
    y[..., 0] *= L**2
    y[..., 2] /= L**2
    y[..., 3] *= L
    y[..., 4] /= L
    return y


# -------------------------------------------------------------- generator

@dataclass(frozen=True)
class GeneratorMatrix:
    """``M``, ``v`` and the first-moment block at one time, in physical units."""

    M: np.ndarray
    v: np.ndarray
    first_moment: np.ndarray
    omega_p2: float
    lam: float
    t: Union[float, str]

    @property
    def trace(self) -> float:
        return float(np.trace(self.M))

    def eigenvalues(self) -> np.ndarray:
        """Numerical eigenvalues of ``M``."""
        return np.linalg.eigvals(self.M)

    def eigenvalues_closed_form(self) -> np.ndarray:
        """``-2 lam`` and ``-2 (lam +- sqrt(lam^2 - wp2))`` (complex)."""
        root = np.sqrt(complex(self.lam**2 - self.omega_p2))
        return np.array([-2.0 * self.lam, -2.0 * (self.lam + root), -2.0 * (self.lam - root)])


def _matrices(wp2, lam, dpx, dpp):
    M = np.array([[0.0, 1.0, 0.0], [-2.0 * wp2, -2.0 * lam, 2.0], [0.0, -wp2, -4.0 * lam]])
    v = np.array([0.0, 2.0 * dpx, dpp])
    F = np.array([[0.0, 1.0], [-wp2, -2.0 * lam]])
    return M, v, F


def _coeffs_internal(bath, t, cfg):
    params = core_params(bath, cfg)
    if t == ASYMPTOTIC:
        return params[3:7]
    if t < 0:
        raise DomainError("t must be >= 0")
    return cfg.core.coefficients(float(t) * bath.omega0, params)


def generator_at(bath: BathSpec, t, cfg: KernelEvalConfig = DEFAULT_CONFIG) -> GeneratorMatrix:
    """Generator of the moment equations at time ``t`` (or ``"asymptotic"``)."""
    wp2, lam, dpx, dpp = _coeffs_internal(bath, t, cfg)
    M, v, F = _matrices(wp2, lam, dpx, dpp)
    # physical units: time 1/omega0, c1 ~ L^2, c3 ~ 1/L^2
    w0, L = bath.omega0, bath.length_unit
    S = np.diag([L**2, 1.0, L**-2])
    Sf = np.diag([L, 1.0 / L])
    return GeneratorMatrix(
        M=w0 * S @ M @ np.linalg.inv(S),
        v=w0 * S @ v,
        first_moment=w0 * Sf @ F @ np.linalg.inv(Sf),
        omega_p2=wp2 * w0**2,
        lam=lam * w0,
        t=t if t == ASYMPTOTIC else float(t),
    )


# ------------------------------------------------------ Markovian closed form

def _ch_coefficients(lam, s2, t):
    """``(a0, a1, a2)`` with ``exp(M t) = a0 I + a1 N + a2 N^2``."""
    e = math.exp(-2.0 * lam * t)
    z = s2 * t * t
    if abs(z) < 1.0:
        f1 = f2 = 0.0
        term1, term2 = t, 0.5 * t * t
        for k in range(1, 40):
            f1 += term1
            f2 += term2
            term1 *= z / ((2 * k) * (2 * k + 1))
            term2 *= z / ((2 * k + 1) * (2 * k + 2))
        return e, e * f1, e * f2
    if s2 > 0:
        s = math.sqrt(s2)
        ep, em = math.exp((s - 2.0 * lam) * t), math.exp(-(s + 2.0 * lam) * t)
        return e, 0.5 * (ep - em) / s, (0.5 * (ep + em) - e) / s2
    w = math.sqrt(-s2)
    return e, e * math.sin(w * t) / w, e * 2.0 * math.sin(0.5 * w * t) ** 2 / (w * w)


def _expm_quadratic(wp2, lam, t):
    """``exp(M t)`` for the frozen 3x3 generator."""
    M, _, _ = _matrices(wp2, lam, 0.0, 0.0)
    Nm = M + 2.0 * lam * np.eye(3)
    a0, a1, a2 = _ch_coefficients(lam, 4.0 * (lam * lam - wp2), t)
    return a0 * np.eye(3) + a1 * Nm + a2 * (Nm @ Nm)


def _expm_first(wp2, lam, t):
    """``exp(F t)`` for the frozen 2x2 first-moment block."""
    F = np.array([[0.0, 1.0], [-wp2, -2.0 * lam]])
    Nf = F + lam * np.eye(2)
    s2 = lam * lam - wp2
    z = s2 * t * t
    if abs(z) < 1.0:
        ch, sh = 0.0, 0.0
        tc, ts = 1.0, t
        for k in range(1, 40):
            ch += tc
            sh += ts
            tc *= z / ((2 * k - 1) * (2 * k))
            ts *= z / ((2 * k) * (2 * k + 1))
        return math.exp(-lam * t) * (ch * np.eye(2) + sh * Nf)
    if s2 > 0:
        s = math.sqrt(s2)
        a, b = math.exp((s - lam) * t), math.exp(-(s + lam) * t)
        return 0.5 * (a + b) * np.eye(2) + 0.5 * (a - b) / s * Nf
    w = math.sqrt(-s2)
    e = math.exp(-lam * t)
    return e * (math.cos(w * t) * np.eye(2) + math.sin(w * t) / w * Nf)


def _stationary_internal(wp2, lam, dpx, dpp):
    M, v, _ = _matrices(wp2, lam, dpx, dpp)
    return np.linalg.solve(M, -v), M, v


def evolve_markovian(c0: GaussianKD, bath: BathSpec, t: float,
                     cfg: KernelEvalConfig = DEFAULT_CONFIG) -> GaussianKD:
    """Exact solution of the frozen-coefficient (Markovian) system at time ``t``."""
    if t < 0:
        raise DomainError("t must be >= 0")
    if not c0.c1 > 0:
        raise NonNormalizableError("initial state must have c1 > 0")
    L = bath.length_unit
    y0 = _to_internal_array(c0.as_array(), L)
    out = _markov_internal(y0, core_params(bath, cfg)[3:7], t * bath.omega0)
    return GaussianKD.from_array([*_from_internal_array(out, L), c0.c6])


def _markov_internal(y0, consts, t):
    wp2, lam, dpx, dpp = consts
    q0 = np.asarray(y0[:3], dtype=float)
    if lam > 0:
        cs, _, _ = _stationary_internal(wp2, lam, dpx, dpp)
        q = _expm_quadratic(wp2, lam, t) @ (q0 - cs) + cs
    else:
        # lam = 0 only for a decoupled oscillator, where the drive vanishes too
        q = _expm_quadratic(wp2, lam, t) @ q0
    m = _expm_first(wp2, lam, t) @ np.asarray(y0[3:5], dtype=float)
    return np.concatenate([q, m])


def _ch_coefficients_vec(lam, s2, t):
    """Vectorised ``_ch_coefficients`` over an array of times."""
    t = np.asarray(t, dtype=float)
    e = np.exp(-2.0 * lam * t)
    z = s2 * t * t
    small = np.abs(z) < 1.0
    zs = np.where(small, z, 0.0)
    f1 = np.zeros_like(t)
    f2 = np.zeros_like(t)
    term1, term2 = t.copy(), 0.5 * t * t
    for k in range(1, 40):
        f1 += term1
        f2 += term2
        term1 = term1 * zs / ((2 * k) * (2 * k + 1))
        term2 = term2 * zs / ((2 * k + 1) * (2 * k + 2))
    a1, a2 = e * f1, e * f2
    if s2 > 0:
        sq = math.sqrt(s2)
        ep, em = np.exp((sq - 2.0 * lam) * t), np.exp(-(sq + 2.0 * lam) * t)
        a1 = np.where(small, a1, 0.5 * (ep - em) / sq)
        a2 = np.where(small, a2, (0.5 * (ep + em) - e) / s2)
    elif s2 < 0:
        w = math.sqrt(-s2)
        a1 = np.where(small, a1, e * np.sin(w * t) / w)
        a2 = np.where(small, a2, e * 2.0 * np.sin(0.5 * w * t) ** 2 / (w * w))
    return e, a1, a2


def _expm_first_vec(wp2, lam, t):
    """``exp(F t)`` stacked over times, shape ``(n, 2, 2)``."""
    t = np.asarray(t, dtype=float)
    F = np.array([[0.0, 1.0], [-wp2, -2.0 * lam]])
    Nf = F + lam * np.eye(2)
    s2 = lam * lam - wp2
    z = s2 * t * t
    small = np.abs(z) < 1.0
    zs = np.where(small, z, 0.0)
    ch, sh = np.zeros_like(t), np.zeros_like(t)
    tc, ts = np.ones_like(t), t.copy()
    for k in range(1, 40):
        ch += tc
        sh += ts
        tc = tc * zs / ((2 * k - 1) * (2 * k))
        ts = ts * zs / ((2 * k) * (2 * k + 1))
    e = np.exp(-lam * t)
    ch, sh = e * ch, e * sh
    if s2 > 0:
        sq = math.sqrt(s2)
        a, b = np.exp((sq - lam) * t), np.exp(-(sq + lam) * t)
        ch = np.where(small, ch, 0.5 * (a + b))
        sh = np.where(small, sh, 0.5 * (a - b) / sq)
    elif s2 < 0:
        w = math.sqrt(-s2)
        ch = np.where(small, ch, e * np.cos(w * t))
        sh = np.where(small, sh, e * np.sin(w * t) / w)
    return ch[:, None, None] * np.eye(2) + sh[:, None, None] * Nf


def _markov_internal_many(y0, consts, ts):
    """Closed-form Markovian states at internal times ``ts``; shape ``(n, 5)``."""
    wp2, lam, dpx, dpp = consts
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    M, _, _ = _matrices(wp2, lam, 0.0, 0.0)
    Nm = M + 2.0 * lam * np.eye(3)
    a0, a1, a2 = _ch_coefficients_vec(lam, 4.0 * (lam * lam - wp2), ts)
    q0 = np.asarray(y0[:3], dtype=float)
    cs = _stationary_internal(wp2, lam, dpx, dpp)[0] if lam > 0 else np.zeros(3)
    d = q0 - cs
    q = a0[:, None] * d + a1[:, None] * (Nm @ d) + a2[:, None] * (Nm @ (Nm @ d)) + cs
    m = _expm_first_vec(wp2, lam, ts) @ np.asarray(y0[3:5], dtype=float)
    return np.column_stack([q, m])


def markovian_trajectory(
    c0: GaussianKD,
    bath: BathSpec,
    t_end: float,
    cfg: "EvolutionConfig" = None,
    kernel_cfg: KernelEvalConfig = DEFAULT_CONFIG,
) -> "Trajectory":
    """Sampled closed-form Markovian evolution with located verdict changes.

    Verdict changes are bracketed on a grid that is uniform with spacing
    ``sample_dt / refine`` and additionally log-spaced near ``t = 0`` (where
    Markovian violations typically start), then bisected on the exact
    closed form.
    """
    cfg = cfg or EvolutionConfig()
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    if not c0.c1 > 0:
        raise NonNormalizableError("initial state must have c1 > 0")
    w0, L = bath.omega0, bath.length_unit
    T_int = float(t_end) * w0
    y0 = _to_internal_array(c0.as_array(), L)
    consts = core_params(bath, kernel_cfg)[3:7]
    step = cfg.sample_dt / cfg.refine
    fine = np.union1d(
        np.linspace(0.0, T_int, int(math.ceil(T_int / step)) + 1),
        np.geomspace(1e-7, min(1.0, T_int), 400),
    )
    yf = _markov_internal_many(y0, consts, fine)
    tol = cfg.positivity_tol
    verd = np.where(yf[:, 0] <= 0, 2, np.where(_indicator(yf, tol) >= 0, 0, 1))
    names = [Verdict.PHYSICAL.value, Verdict.VIOLATED.value, Verdict.NON_NORMALIZABLE.value]
    events = []
    stop = T_int
    for j in np.nonzero(verd[1:] != verd[:-1])[0]:
        va, vb = verd[j], verd[j + 1]
        if 2 in (va, vb):
            fn = lambda s: float(_markov_internal_many(y0, consts, [s])[0, 0])  # noqa: E731
        else:
            fn = lambda s: float(_indicator(_markov_internal_many(y0, consts, [s])[0], tol))  # noqa: E731
        a, b = fine[j], fine[j + 1]
        fa, fb = fn(a), fn(b)
        if fa == 0.0:
            root = a
        elif fa * fb > 0:
            root = b
        else:
            root = optimize.brentq(fn, a, b, xtol=cfg.event_tol, rtol=4 * np.finfo(float).eps)
        events.append((float(root), names[va], names[vb]))
        if vb == 2:
            stop = root
            break
    n = int(math.floor(stop / cfg.sample_dt + 1e-9))
    grid = cfg.sample_dt * np.arange(n + 1)
    if grid[-1] < stop:
        grid = np.append(grid, stop)
    y = _markov_internal_many(y0, consts, grid)
    return _build_trajectory(grid, y, c0, bath, events, stop < T_int, cfg, kernel_cfg, True)


# ------------------------------------------------------------- stationary

@dataclass(frozen=True)
class StationaryState:
    """Fixed point of the Markovian dynamics and its diagnostics."""

    c: GaussianKD
    xy: Optional[GaussianXY]
    purity: float
    verdict: Verdict
    residual: float


def stationary_state(bath: BathSpec, cfg: KernelEvalConfig = DEFAULT_CONFIG,
                     tol: float = DEFAULT_TOL) -> StationaryState:
    """Solve ``M c + v = 0`` with the asymptotic coefficients.

    ``residual`` is ``|M c + v| / |v|`` in internal units.  The first moments
    relax to zero.
    """
    wp2, lam, dpx, dpp = core_params(bath, cfg)[3:7]
    if not lam > 0:
        raise NoStationaryStateError("singular Markovian generator (gamma = 0)")
    cs, M, v = _stationary_internal(wp2, lam, dpx, dpp)
    residual = float(np.linalg.norm(M @ cs + v) / np.linalg.norm(v))
    c = GaussianKD.from_array(_from_internal_array(np.concatenate([cs, [0.0, 0.0]]), bath.length_unit))
    v_ = verdict_from_kd(cs[0], cs[1], cs[2], tol)
    if cs[0] > 0:
        xy = kd_to_xy(c)
        pur = float(_purity_kd(cs[0], cs[1], cs[2]))
    else:
        xy, pur = None, math.nan
    return StationaryState(c=c, xy=xy, purity=pur, verdict=v_, residual=residual)


def _purity_kd(c1, c2, c3):
    d = 16.0 * np.asarray(c1) * c3 - 4.0 * np.asarray(c2) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where((np.asarray(c1) > 0) & (d > 0), 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), np.nan)


# -------------------------------------------------------------- evolution

@dataclass(frozen=True)
class EvolutionConfig:
    """Integrator controls. Times are in units of ``1/omega0``.

    Attributes
    ----------
    rtol, atol : float
        Local error tolerances of the embedded pair.
    h0, hmax : float
        Initial and maximal step.
    sample_dt : float
        Spacing of the dense-output samples stored in the trajectory.
    event_tol : float
        Bisection tolerance for verdict-change times.
    positivity_tol : float
        Relative slack on ``A >= C``.
    max_steps : int
        Step budget.
    refine : int
        Sub-samples per step used to bracket verdict changes.
    """

    rtol: float = 1e-12
    atol: float = 1e-14
    h0: float = 1e-4
    hmax: float = 0.5
    sample_dt: float = 0.05
    event_tol: float = 1e-9
    positivity_tol: float = DEFAULT_TOL
    max_steps: int = 2_000_000
    refine: int = 8

    def __post_init__(self):
        for name in ("rtol", "atol", "h0", "hmax", "sample_dt", "event_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.positivity_tol < 0:
            raise DomainError("positivity_tol must be >= 0")
        if self.max_steps < 1 or self.refine < 1:
            raise DomainError("max_steps and refine must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Trajectory:
    """Dense-output samples with positivity diagnostics.

    ``c`` has columns ``c1 ... c6``; ``A, B, C`` follow from ``c`` at every
    sample.  ``events`` lists ``(t, from_verdict, to_verdict)`` for every
    located verdict change.  ``status`` is ``"complete"`` or
    ``"non_normalizable"`` (truncated where ``c1`` reached zero).
    """

    t: np.ndarray
    c: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    purity: np.ndarray
    verdict: np.ndarray
    events: tuple
    status: str
    metadata: dict = field(default_factory=dict)

    @property
    def first_violation(self) -> Optional[float]:
        """Earliest time at which the verdict leaves ``physical``."""
        for t, a, b in self.events:
            if a == Verdict.PHYSICAL.value and b != Verdict.PHYSICAL.value:
                return t
        if len(self.verdict) and self.verdict[0] != Verdict.PHYSICAL:
            return float(self.t[0])
        return None

    @property
    def final(self) -> GaussianKD:
        return GaussianKD.from_array(self.c[-1])

    @property
    def final_verdict(self) -> Verdict:
        return self.verdict[-1]

    def as_rows(self):
        """Rows ``t, c1..c6, A, B, C, purity, verdict`` for tabular output."""
        for i in range(len(self.t)):
            yield (self.t[i], *self.c[i], self.A[i], self.B[i], self.C[i], self.purity[i],
                   self.verdict[i].value)


def _dense_eval(ts, dense, tq):
    """Evaluate the continuous extension at times ``tq`` (vectorised)."""
    tq = np.asarray(tq, dtype=float)
    i = np.clip(np.searchsorted(ts, tq, side="right") - 1, 0, len(ts) - 2)
    h = ts[i + 1] - ts[i]
    th = ((tq - ts[i]) / h)[:, None]
    th1 = 1.0 - th
    r = dense[i]
    return r[:, 0] + th * (r[:, 1] + th1 * (r[:, 2] + th * (r[:, 3] + th1 * r[:, 4])))


def _indicator(y, tol):
    # 16 c1 (A - C (1 - tol)); same sign as A - C(1 - tol) while c1 > 0
    return 16.0 * y[..., 0] * y[..., 2] - 4.0 * y[..., 1] ** 2 - (1.0 - tol)


def _locate_events(ts, dense, t_end, tol, event_tol, refine):
    """Verdict changes on a refined grid, bisected on the continuous indicators."""
    n = len(ts) - 1
    if n < 1:
        return []
    frac = np.arange(refine) / refine
    grid = (ts[:-1, None] + (ts[1:] - ts[:-1])[:, None] * frac[None, :]).ravel()
    grid = np.append(grid, ts[-1])
    y = _dense_eval(ts, dense, grid)
    c1 = y[:, 0]
    ind = _indicator(y, tol)
    verd = np.where(c1 <= 0, 2, np.where(ind >= 0, 0, 1))
    names = [Verdict.PHYSICAL.value, Verdict.VIOLATED.value, Verdict.NON_NORMALIZABLE.value]
    events = []
    for j in np.nonzero(verd[1:] != verd[:-1])[0]:
        a, b = grid[j], grid[j + 1]
        va, vb = verd[j], verd[j + 1]
        if 2 in (va, vb):
            fn = lambda s: float(_dense_eval(ts, dense, [s])[0, 0])  # noqa: E731
        else:
            fn = lambda s: float(_indicator(_dense_eval(ts, dense, [s])[0], tol))  # noqa: E731
        fa, fb = fn(a), fn(b)
        if fa == 0.0:
            root = a
        elif fa * fb > 0:
            root = b
        else:
            root = optimize.brentq(fn, a, b, xtol=event_tol, rtol=4 * np.finfo(float).eps)
        events.append((float(root), names[va], names[vb]))
    return events


def evolve(
    c0: GaussianKD,
    bath: BathSpec,
    t_span,
    cfg: EvolutionConfig = EvolutionConfig(),
    kernel_cfg: KernelEvalConfig = DEFAULT_CONFIG,
    frozen: bool = False,
    fixed_step: Optional[float] = None,
) -> Trajectory:
    """Integrate the moment equations from ``t_span[0] = 0`` to ``t_span[1]``.

    Parameters
    ----------
    c0 : GaussianKD
        Initial state in the bath's physical units; needs ``c1 > 0``.
    t_span : (float, float)
        Start (must be 0, the time at which the bath is switched on) and end.
    frozen : bool
        Use the asymptotic (Markovian) coefficients throughout.
    fixed_step : float, optional
        Take uniform steps of this size (internal units) without error
        control; used for convergence-order studies.

    Raises
    ------
    IntegrationError
        On step-size underflow or an exhausted step budget; carries the last
        accepted time and state.
    """
    t0, t_end = (float(v) for v in t_span)
    if t0 != 0.0:
        raise DomainError("evolution starts at t = 0, when the coupling is switched on")
    if not t_end > 0:
        raise DomainError("t_span end must be positive")
    if not c0.c1 > 0:
        raise NonNormalizableError("initial state must have c1 > 0")
    w0, L = bath.omega0, bath.length_unit
    T_int = t_end * w0
    y0 = _to_internal_array(c0.as_array(), L)
    params = core_params(bath, kernel_cfg)
    core = kernel_cfg.core
    if fixed_step is not None:
        h0 = hmax = float(fixed_step)
    else:
        h0, hmax = cfg.h0, cfg.hmax
    ts, ys, dense, status = core.integrate(
        y0, 0.0, T_int, params, cfg.rtol, cfg.atol, h0, hmax, bool(frozen),
        fixed_step is not None, True, int(cfg.max_steps),
    )
    if status in (_pycore.STATUS_UNDERFLOW, _pycore.STATUS_MAX_STEPS):
        try:
            _pycore.raise_for_status(status, ts, ys)
        except IntegrationError as exc:
            raise IntegrationError(
                str(exc), t=exc.t / w0, state=GaussianKD.from_array([*_from_internal_array(exc.state, L), c0.c6])
            ) from None
    events = _locate_events(ts, dense, ts[-1], cfg.positivity_tol, cfg.event_tol * 1.0, cfg.refine) \
        if len(ts) > 1 else []
    truncated = status == _pycore.STATUS_NONNORMALIZABLE
    t_stop = ts[-1]
    if truncated:
        hits = [e[0] for e in events if e[2] == Verdict.NON_NORMALIZABLE.value]
        if hits:
            t_stop = hits[0]
            events = [e for e in events if e[0] <= t_stop]
    n = int(math.floor(t_stop / cfg.sample_dt + 1e-9))
    grid = cfg.sample_dt * np.arange(n + 1)
    if grid[-1] < t_stop:
        grid = np.append(grid, t_stop)
    y = _dense_eval(ts, dense, grid) if len(ts) > 1 else ys.copy()
    y[0] = y0
    return _build_trajectory(grid, y, c0, bath, events, truncated, cfg, kernel_cfg, frozen)


def _build_trajectory(grid_int, y_int, c0, bath, events_int, truncated, cfg, kernel_cfg, frozen):
    w0, L = bath.omega0, bath.length_unit
    tol = cfg.positivity_tol
    c1, c2, c3 = y_int[:, 0], y_int[:, 1], y_int[:, 2]
    verd = verdict_from_kd(c1, c2, c3, tol)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = 4.0 * c1
        A = np.where(c1 > 0, c3 - c2 * c2 / q, np.nan)
        B = np.where(c1 > 0, -c2 / q, np.nan)
        C = np.where(c1 > 0, 1.0 / (4.0 * q), np.nan)
    pur = _purity_kd(c1, c2, c3)
    y_phys = _from_internal_array(y_int, L)
    c = np.column_stack([y_phys, np.full(len(grid_int), c0.c6)])
    meta = {
        "bath": bath.to_dict(),
        "config": cfg.to_dict(),
        "frozen": bool(frozen),
        "backend": "compiled" if kernel_cfg.core is not _pycore else "python",
        "low_temperature": is_low_temperature(bath),
    }
    return Trajectory(
        t=grid_int / w0,
        c=c,
        A=A / L**2,
        B=B / L**2,
        C=C / L**2,
        purity=pur,
        verdict=verd,
        events=tuple((t / w0, a, b) for t, a, b in events_int),
        status="non_normalizable" if truncated else "complete",
        metadata=meta,
    )


def check_state(c: GaussianKD, tol: float = DEFAULT_TOL) -> Verdict:
    """Verdict of a single state (convenience wrapper)."""
    if not c.c1 > 0:
        return Verdict.NON_NORMALIZABLE
    return is_physical(kd_to_xy(c), tol)


def state_purity(c: GaussianKD) -> float:
    xy = kd_to_xy(c)
    return purity(xy.A, xy.C)
