"""Pure-Python numerical core.

Everything here works in internal units (hbar = m = omega0 = kB = 1) and
mirrors ``_core.pyx`` function for function.  The compiled module is
preferred at import time (see ``_backend``); this one is the fallback and
the reference the compiled kernels are tested against.

Matsubara bracket
-----------------
All thermal quantities are linear functionals of the kernel ``exp(-kappa s)``
evaluated at ``kappa = Omega`` and at the Matsubara frequencies
``nu_n = 2 pi n T``::

    S[L] = cot(Omega / 2T) L(Omega) + 4T sum_n nu_n L(nu_n) / (nu_n^2 - Omega^2)

with ``L`` one of (``kind``)

    0   exp(-kappa x)                                   -> D1(x) / (gamma Omega^2)
    1   int_x^inf exp(-kappa s) cos(w s) ds             -> tail of D_pp
    2   int_x^inf exp(-kappa s) sin(w s) ds             -> tail of D_px

The pole of ``cot`` at ``Omega = nu_k`` cancels against the k-th term; that
pair is always evaluated in regularised form.  Terms beyond the direct sum
are added with a midpoint Euler-Maclaurin tail whose integral is split into
an exponential-integral leading part and a Gauss-Legendre remainder.
"""

import math

import numpy as np
from scipy import special

from .errors import IntegrationError, SeriesTruncationError

# direct sum runs at least until nu_N >= RATIO * max(Omega, w)
RATIO = 10.0
N_MIN = 64
N_CAP = 4096

_x, _w = np.polynomial.legendre.leggauss(32)
GL_NODES = 0.5 * (_x + 1.0)
GL_WEIGHTS = 0.5 * _w
del _x, _w

STATUS_OK = 0
STATUS_NONNORMALIZABLE = 1
STATUS_UNDERFLOW = 2
STATUS_MAX_STEPS = 3


def _L(kind, k, x, w, cw, sw):
    e = np.exp(-k * x)
    if kind == 0:
        return e
    if kind == 1:
        return e * (k * cw - w * sw) / (k * k + w * w)
    return e * (k * sw + w * cw) / (k * k + w * w)


def _dkL(kind, k, x, w, cw, sw):
    """d/dkappa [kappa L(kappa)]."""
    e = math.exp(-k * x)
    if kind == 0:
        return (1.0 - k * x) * e
    d = k * k + w * w
    if kind == 1:
        p, dp = k * cw - w * sw, cw
    else:
        p, dp = k * sw + w * cw, sw
    q = k * p / d
    dq = ((p + k * dp) * d - 2.0 * k * k * p) / (d * d)
    return e * (dq - x * q)


def _phi(kind, nu, x, w, W, cw, sw):
    return nu * _L(kind, nu, x, w, cw, sw) / (nu * nu - W * W)


def _dphi(kind, nu, x, w, W, cw, sw):
    """d/dnu of ``_phi``."""
    den = nu * nu - W * W
    return (_dkL(kind, nu, x, w, cw, sw) / den
            - 2.0 * nu * nu * _L(kind, nu, x, w, cw, sw) / (den * den))


def _em_correction(kind, a, c, x, w, W, cw, sw):
    """Midpoint Euler-Maclaurin terms f'(a)/24 - 7 f'''(a)/5760 in the index n."""
    h = 0.5
    d0 = c * _dphi(kind, c * a, x, w, W, cw, sw)
    dp = c * _dphi(kind, c * (a + h), x, w, W, cw, sw)
    dm = c * _dphi(kind, c * (a - h), x, w, W, cw, sw)
    return d0 / 24.0 - 7.0 * (dp - 2.0 * d0 + dm) / (h * h) / 5760.0


def _lead(kind, nu, x, w, W, cw, sw):
    """Asymptotic part of ``_phi`` removed before Gauss-Legendre."""
    e = np.exp(-nu * x)
    if kind == 0:
        return e * (1.0 / nu + W * W / nu**3)
    if kind == 1:
        return e * (cw / nu**2 - w * sw / nu**3)
    return e * (sw / nu**2 + w * cw / nu**3)


def _lead_integral(kind, b, x, w, W, cw, sw):
    """Integral of ``_lead`` over ``[b, inf)``."""
    bx = b * x
    if kind == 0:
        return special.exp1(bx) + W * W * special.expn(3, bx) / (b * b)
    e2 = special.expn(2, bx) / b
    e3 = special.expn(3, bx) / (b * b)
    if kind == 1:
        return cw * e2 - w * sw * e3
    return sw * e2 + w * cw * e3


def cot_minus_inv(u):
    """cot(u) - 1/u, accurate near u = 0."""
    if abs(u) < 1e-2:
        u2 = u * u
        return -u * (1.0 / 3 + u2 * (1.0 / 45 + u2 * (2.0 / 945 + u2 / 4725.0)))
    return 1.0 / math.tan(u) - 1.0 / u


def n_direct(W, T, w):
    """Smallest direct-sum length after which the Euler-Maclaurin tail is valid."""
    c = 2.0 * math.pi * T
    return max(N_MIN, int(math.ceil(RATIO * max(W, w) / c)), int(round(W / c)) + 1)


def bracket(kind, x, W, T, w, tol, max_terms):
    """Matsubara bracket ``S[L]`` (see module docstring)."""
    if kind == 0 and x <= 0.0:
        return math.inf
    cw, sw = math.cos(w * x), math.sin(w * x)
    c = 2.0 * math.pi * T
    z = W / (2.0 * T)
    k = int(round(W / c))
    LO = _L(kind, W, x, w, cw, sw)
    if k >= 1:
        nk = c * k
        res = (cot_minus_inv(z - k * math.pi) - 1.0 / (z + k * math.pi)) * LO
        d = W - nk
        if abs(d) <= 1e-5 * W:
            dd = _dkL(kind, 0.5 * (W + nk), x, w, cw, sw)
        else:
            dd = (W * LO - nk * _L(kind, nk, x, w, cw, sw)) / d
        res += 4.0 * T * dd / (W + nk)
    else:
        res = LO / math.tan(z)

    n_dir = n_direct(W, T, w)
    if n_dir > max_terms:
        b = c * (max_terms + 0.5)
        bound = abs(4.0 * T * _lead_integral(kind, b, x, w, W, cw, sw) / c)
        raise SeriesTruncationError(
            f"Matsubara series needs {n_dir} direct terms (> max_terms={max_terms})",
            bound=bound / max(abs(res), 1e-300),
        )
    cx = c * x
    n_geo = 1 << 62
    if cx > 0.0:
        # geometric remainder bound exp(-cx N)/(1 - exp(-cx)) < tol
        n_geo = int(math.ceil((-math.log(tol) - math.log(-math.expm1(-cx))) / cx)) + 1
    if n_geo <= N_CAP:
        N, use_tail = n_geo, False
    else:
        # cx < log(1/tol)/N_CAP: summand varies slowly enough for Euler-Maclaurin
        N, use_tail = n_dir, True

    nu = c * np.arange(1, N + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        # the resonant term (nu_k = Omega) is replaced below
        terms = _phi(kind, nu, x, w, W, cw, sw)
    if 1 <= k <= N:
        terms[k - 1] = 0.0
    total = float(np.sum(terms))
    if use_tail:
        a = N + 0.5
        b = c * a
        nq = b / GL_NODES
        rem = (_phi(kind, nq, x, w, W, cw, sw) - _lead(kind, nq, x, w, W, cw, sw)) \
            * b / GL_NODES**2
        integral = (_lead_integral(kind, b, x, w, W, cw, sw) + float(GL_WEIGHTS @ rem)) / c
        total += integral + _em_correction(kind, a, c, x, w, W, cw, sw)
    return float(res + 4.0 * T * total)


def markovian_constants(g, W, T):
    """Closed-form t -> inf limits (omega_p^2, lambda, D_px, D_pp), internal units."""
    r = W * W / (W * W + 1.0)
    wp2 = 1.0 + 2.0 * g * W / (W * W + 1.0)
    lam = g * r
    dpp = g * r / math.tanh(1.0 / (2.0 * T))
    dpx = g * r / math.pi * float(
        special.psi(1.0 + 1j / (2.0 * math.pi * T)).real
        - special.psi(W / (2.0 * math.pi * T))
        - math.pi * T / W
    )
    return wp2, lam, dpx, dpp


def osc_integral(W, t):
    """Real and imaginary parts of int_0^t exp((i - W) s) ds, free of cancellation."""
    zr, zi = -W * t, t
    if zr * zr + zi * zi < 1e-2:
        # series t * sum z^n / (n+1)!
        pr, pi_ = 1.0, 0.0
        sr, si = 1.0, 0.0
        for n in range(1, 18):
            pr, pi_ = (pr * zr - pi_ * zi) / (n + 1), (pr * zi + pi_ * zr) / (n + 1)
            sr += pr
            si += pi_
        return t * sr, t * si
    a = math.expm1(zr) * math.cos(t) - 2.0 * math.sin(0.5 * t) ** 2
    b = math.exp(zr) * math.sin(t)
    d = W * W + 1.0
    return (b - a * W) / d, -(a + b * W) / d


def coefficients(t, params):
    """(omega_p^2, lambda, D_px, D_pp) at internal time ``t``.

    ``params`` is ``(g, W, T, wp2M, lamM, dpxM, dppM, tol, max_terms)``.
    """
    g, W, T, _, _, dpxM, dppM, tol, max_terms = params
    if t <= 0.0:
        return 1.0 + 2.0 * g * W, 0.0, 0.0, 0.0
    gW2 = g * W * W
    ic, is_ = osc_integral(W, t)
    wp2 = 1.0 + 2.0 * g * W - 2.0 * gW2 * ic
    lam = gW2 * is_
    if g == 0.0:
        return wp2, lam, 0.0, 0.0
    dpp = dppM - gW2 * bracket(1, t, W, T, 1.0, tol, max_terms)
    dpx = dpxM - 0.5 * gW2 * bracket(2, t, W, T, 1.0, tol, max_terms)
    return wp2, lam, dpx, dpp


# ---------------------------------------------------------------- DOPRI5

_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_A71, _A73, _A74, _A75, _A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)
_D1, _D3, _D4, _D5, _D6, _D7 = (
    -12715105075 / 11282082432,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)


def _rhs(t, y, params, frozen):
    if frozen:
        wp2, lam, dpx, dpp = params[3], params[4], params[5], params[6]
    else:
        wp2, lam, dpx, dpp = coefficients(t, params)
    return (
        y[1],
        2.0 * dpx + 2.0 * y[2] - 2.0 * wp2 * y[0] - 2.0 * lam * y[1],
        dpp - wp2 * y[1] - 4.0 * lam * y[2],
        y[4],
        -wp2 * y[3] - 2.0 * lam * y[4],
    )


def _comb(y, h, ks, cs):
    return tuple(
        y[i] + h * sum(cf * k[i] for cf, k in zip(cs, ks)) for i in range(5)
    )


def integrate(y0, t0, t1, params, rtol, atol, h0, hmax, frozen, fixed_step,
              stop_nonnormalizable, max_steps):
    """Dormand-Prince 5(4) with Hairer's continuous extension.

    Returns ``(ts, ys, dense, status)`` where ``dense[i]`` holds the five
    interpolation vectors of step ``i`` (shape ``(n_steps, 5, 5)``).
    """
    t = float(t0)
    y = tuple(float(v) for v in y0)
    span = t1 - t0
    h = min(h0, hmax, span)
    ts, ys, dense = [t], [y], []
    k1 = _rhs(t, y, params, frozen)
    status = STATUS_OK
    n_steps = 0
    while t < t1:
        if n_steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        last = t + h >= t1 - 1e-14 * abs(span)
        if last:
            h = t1 - t
        if h < 1e-14 * max(abs(t), 1.0) and not last:
            status = STATUS_UNDERFLOW
            break
        k2 = _rhs(t + _C2 * h, _comb(y, h, (k1,), (_A21,)), params, frozen)
        k3 = _rhs(t + _C3 * h, _comb(y, h, (k1, k2), (_A31, _A32)), params, frozen)
        k4 = _rhs(t + _C4 * h, _comb(y, h, (k1, k2, k3), (_A41, _A42, _A43)), params, frozen)
        k5 = _rhs(t + _C5 * h, _comb(y, h, (k1, k2, k3, k4), (_A51, _A52, _A53, _A54)),
                  params, frozen)
        k6 = _rhs(t + h, _comb(y, h, (k1, k2, k3, k4, k5), (_A61, _A62, _A63, _A64, _A65)),
                  params, frozen)
        ynew = _comb(y, h, (k1, k3, k4, k5, k6), (_A71, _A73, _A74, _A75, _A76))
        k7 = _rhs(t + h, ynew, params, frozen)
        n_steps += 1
        if fixed_step:
            err = 0.0
        else:
            acc = 0.0
            for i in range(5):
                e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                         + _E6 * k6[i] + _E7 * k7[i])
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                acc += (e / sc) ** 2
            err = math.sqrt(acc / 5.0)
        if err <= 1.0:
            r2 = tuple(ynew[i] - y[i] for i in range(5))
            r3 = tuple(h * k1[i] - r2[i] for i in range(5))
            r4 = tuple(r2[i] - h * k7[i] - r3[i] for i in range(5))
            r5 = tuple(
                h * (_D1 * k1[i] + _D3 * k3[i] + _D4 * k4[i] + _D5 * k5[i]
                     + _D6 * k6[i] + _D7 * k7[i])
                for i in range(5)
            )
            dense.append((y, r2, r3, r4, r5))
            t = t1 if last else t + h
            y = ynew
            k1 = k7
            ts.append(t)
            ys.append(y)
            if stop_nonnormalizable and y[0] <= 0.0:
                status = STATUS_NONNORMALIZABLE
                break
            if not fixed_step:
                fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
                h = min(h * fac, hmax)
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    return (
        np.asarray(ts),
        np.asarray(ys).reshape(-1, 5),
        np.asarray(dense, dtype=float).reshape(-1, 5, 5),
        status,
    )


def raise_for_status(status, ts, ys):
    if status == STATUS_UNDERFLOW:
        raise IntegrationError("step size underflow", t=float(ts[-1]), state=ys[-1].copy())
    if status == STATUS_MAX_STEPS:
        raise IntegrationError("step budget exhausted", t=float(ts[-1]), state=ys[-1].copy())
