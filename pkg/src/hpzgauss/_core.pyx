# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical core; see ``_pycore`` for the algorithm description.

Function names and signatures match ``_pycore`` so ``_backend`` can swap
the two freely.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, log, cos, sin, tan, fabs, ceil, sqrt, round as cround
from libc.stdlib cimport malloc, realloc, free
from scipy.special.cython_special cimport exp1, expn

from .errors import SeriesTruncationError

cnp.import_array()

cdef double PI = 3.141592653589793
cdef double RATIO = 10.0
cdef long N_MIN = 64
cdef long N_CAP = 4096
cdef long BIG = 1099511627776

_x, _w = np.polynomial.legendre.leggauss(32)
cdef double GL_NODES[32]
cdef double GL_WEIGHTS[32]
for _i in range(32):
    GL_NODES[_i] = 0.5 * (_x[_i] + 1.0)
    GL_WEIGHTS[_i] = 0.5 * _w[_i]

STATUS_OK = 0
STATUS_NONNORMALIZABLE = 1
STATUS_UNDERFLOW = 2
STATUS_MAX_STEPS = 3


cdef inline double _L(int kind, double k, double x, double w, double c, double s) noexcept nogil:
    cdef double e = exp(-k * x)
    if kind == 0:
        return e
    if kind == 1:
        return e * (k * c - w * s) / (k * k + w * w)
    return e * (k * s + w * c) / (k * k + w * w)


cdef inline double _dkL(int kind, double k, double x, double w, double c, double s) noexcept nogil:
    cdef double e = exp(-k * x)
    if kind == 0:
        return (1.0 - k * x) * e
    cdef double d = k * k + w * w
    cdef double p, dp
    if kind == 1:
        p = k * c - w * s
        dp = c
    else:
        p = k * s + w * c
        dp = s
    cdef double q = k * p / d
    cdef double dq = ((p + k * dp) * d - 2.0 * k * k * p) / (d * d)
    return e * (dq - x * q)


cdef inline double _phi(int kind, double nu, double x, double w, double W, double c,
                        double s) noexcept nogil:
    return nu * _L(kind, nu, x, w, c, s) / (nu * nu - W * W)


cdef inline double _dphi(int kind, double nu, double x, double w, double W, double c,
                         double s) noexcept nogil:
    cdef double den = nu * nu - W * W
    return (_dkL(kind, nu, x, w, c, s) / den
            - 2.0 * nu * nu * _L(kind, nu, x, w, c, s) / (den * den))


cdef inline double _em_correction(int kind, double a, double c, double x, double w, double W,
                                  double cw, double sw) noexcept nogil:
    # midpoint Euler-Maclaurin: f'(a)/24 - 7 f'''(a)/5760
    cdef double h = 0.5
    cdef double d0 = c * _dphi(kind, c * a, x, w, W, cw, sw)
    cdef double dp = c * _dphi(kind, c * (a + h), x, w, W, cw, sw)
    cdef double dm = c * _dphi(kind, c * (a - h), x, w, W, cw, sw)
    return d0 / 24.0 - 7.0 * (dp - 2.0 * d0 + dm) / (h * h) / 5760.0


cdef inline double _lead(int kind, double nu, double x, double w, double W, double c,
                         double s) noexcept nogil:
    cdef double e = exp(-nu * x)
    if kind == 0:
        return e * (1.0 / nu + W * W / (nu * nu * nu))
    if kind == 1:
        return e * (c / (nu * nu) - w * s / (nu * nu * nu))
    return e * (s / (nu * nu) + w * c / (nu * nu * nu))


cdef inline double _lead_integral(int kind, double b, double x, double w, double W, double c,
                                  double s) noexcept nogil:
    cdef double bx = b * x
    if kind == 0:
        return exp1(bx) + W * W * expn(3, bx) / (b * b)
    cdef double e2 = expn(2, bx) / b
    cdef double e3 = expn(3, bx) / (b * b)
    if kind == 1:
        return c * e2 - w * s * e3
    return s * e2 + w * c * e3


cdef inline double _cot_minus_inv(double u) noexcept nogil:
    cdef double u2
    if fabs(u) < 1e-2:
        u2 = u * u
        return -u * (1.0 / 3 + u2 * (1.0 / 45 + u2 * (2.0 / 945 + u2 / 4725.0)))
    return 1.0 / tan(u) - 1.0 / u


cdef inline long _n_direct(double W, double T, double w) noexcept nogil:
    cdef double c = 2.0 * PI * T
    cdef long k = <long>cround(W / c)
    cdef long n = <long>ceil(RATIO * (W if W > w else w) / c)
    if n < N_MIN:
        n = N_MIN
    if n < k + 1:
        n = k + 1
    return n


def cot_minus_inv(double u):
    return _cot_minus_inv(u)


cdef double _bracket(int kind, double x, double W, double T, double w, double tol) noexcept nogil:
    if kind == 0 and x <= 0.0:
        return 1.0 / 0.0
    cdef double cw = cos(w * x), sw = sin(w * x)
    cdef double c = 2.0 * PI * T
    cdef double z = W / (2.0 * T)
    cdef long k = <long>cround(W / c)
    cdef double LO = _L(kind, W, x, w, cw, sw)
    cdef double res, nk, d, dd
    if k >= 1:
        nk = c * k
        res = (_cot_minus_inv(z - k * PI) - 1.0 / (z + k * PI)) * LO
        d = W - nk
        if fabs(d) <= 1e-5 * W:
            dd = _dkL(kind, 0.5 * (W + nk), x, w, cw, sw)
        else:
            dd = (W * LO - nk * _L(kind, nk, x, w, cw, sw)) / d
        res += 4.0 * T * dd / (W + nk)
    else:
        res = LO / tan(z)

    cdef long n_dir = _n_direct(W, T, w)
    cdef double cx = c * x
    cdef long n_geo = BIG
    cdef double ng
    if cx > 0.0:
        ng = ceil((-log(tol) - log(-expm1(-cx))) / cx) + 1.0
        if ng < BIG:
            n_geo = <long>ng
    cdef long N
    cdef bint use_tail = n_geo > N_CAP
    if use_tail:
        # cx < log(1/tol)/N_CAP: summand varies slowly enough for Euler-Maclaurin
        N = n_dir
    else:
        N = n_geo

    cdef double total = 0.0, comp = 0.0, term, yk, tk
    cdef long n
    for n in range(1, N + 1):
        if n == k:
            continue
        term = _phi(kind, c * n, x, w, W, cw, sw)
        # Kahan summation keeps long sums at rounding level
        yk = term - comp
        tk = total + yk
        comp = (tk - total) - yk
        total = tk

    cdef double a, b, nq, rem, integral
    cdef int i
    if use_tail:
        a = N + 0.5
        b = c * a
        rem = 0.0
        for i in range(32):
            nq = b / GL_NODES[i]
            rem += GL_WEIGHTS[i] * (_phi(kind, nq, x, w, W, cw, sw) - _lead(kind, nq, x, w, W, cw, sw)) \
                * b / (GL_NODES[i] * GL_NODES[i])
        integral = (_lead_integral(kind, b, x, w, W, cw, sw) + rem) / c
        total += integral + _em_correction(kind, a, c, x, w, W, cw, sw)
    return res + 4.0 * T * total


cdef inline void _check_terms(double W, double T, double w, long max_terms, int kind, double x) except *:
    cdef long n_dir = _n_direct(W, T, w)
    cdef double c, b
    if n_dir > max_terms:
        c = 2.0 * PI * T
        b = c * (max_terms + 0.5)
        raise SeriesTruncationError(
            f"Matsubara series needs {n_dir} direct terms (> max_terms={max_terms})",
            bound=abs(4.0 * T * _lead_integral(kind, b, x, w, W, cos(w * x), sin(w * x)) / c),
        )


def bracket(int kind, double x, double W, double T, double w, double tol, long max_terms):
    _check_terms(W, T, w, max_terms, kind, x)
    return _bracket(kind, x, W, T, w, tol)


cdef struct Params:
    double g, W, T, wp2M, lamM, dpxM, dppM, tol


cdef inline void _osc_integral(double W, double t, double* out) noexcept nogil:
    # int_0^t exp((i - W) s) ds, see _pycore.osc_integral
    cdef double zr = -W * t, zi = t
    cdef double pr = 1.0, pi_ = 1.0, sr = 1.0, si = 0.0, tmp, a, b, d
    cdef int n
    if zr * zr + zi * zi < 1e-2:
        pi_ = 0.0
        for n in range(1, 18):
            tmp = (pr * zr - pi_ * zi) / (n + 1)
            pi_ = (pr * zi + pi_ * zr) / (n + 1)
            pr = tmp
            sr += pr
            si += pi_
        out[0] = t * sr
        out[1] = t * si
        return
    a = expm1(zr) * cos(t) - 2.0 * sin(0.5 * t) * sin(0.5 * t)
    b = exp(zr) * sin(t)
    d = W * W + 1.0
    out[0] = (b - a * W) / d
    out[1] = -(a + b * W) / d


def osc_integral(double W, double t):
    cdef double out[2]
    _osc_integral(W, t, out)
    return out[0], out[1]


cdef inline void _coefficients(double t, Params* p, double* out) noexcept nogil:
    cdef double g = p.g, W = p.W
    cdef double gW2 = g * W * W
    cdef double oi[2]
    if t <= 0.0:
        out[0] = 1.0 + 2.0 * g * W
        out[1] = 0.0
        out[2] = 0.0
        out[3] = 0.0
        return
    _osc_integral(W, t, oi)
    out[0] = 1.0 + 2.0 * g * W - 2.0 * gW2 * oi[0]
    out[1] = gW2 * oi[1]
    if g == 0.0:
        out[2] = 0.0
        out[3] = 0.0
        return
    out[3] = p.dppM - gW2 * _bracket(1, t, W, p.T, 1.0, p.tol)
    out[2] = p.dpxM - 0.5 * gW2 * _bracket(2, t, W, p.T, 1.0, p.tol)


cdef Params _unpack(params, long* max_terms):
    cdef Params p
    p.g, p.W, p.T, p.wp2M, p.lamM, p.dpxM, p.dppM, p.tol = [float(v) for v in params[:8]]
    max_terms[0] = int(params[8])
    return p


def coefficients(double t, params):
    cdef long max_terms
    cdef Params p = _unpack(params, &max_terms)
    cdef double out[4]
    if p.g != 0.0:
        _check_terms(p.W, p.T, 1.0, max_terms, 1, t)
    _coefficients(t, &p, out)
    return out[0], out[1], out[2], out[3]


# ---------------------------------------------------------------- DOPRI5

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176
cdef double A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784
cdef double A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40
cdef double D1 = -12715105075.0 / 11282082432, D3 = 87487479700.0 / 32700410799
cdef double D4 = -10690763975.0 / 1880347072, D5 = 701980252875.0 / 199316789632
cdef double D6 = -1453857185.0 / 822651844, D7 = 69997945.0 / 29380423


cdef inline void _rhs(double t, double* y, Params* p, bint frozen, double* out) noexcept nogil:
    cdef double cf[4]
    if frozen:
        cf[0] = p.wp2M
        cf[1] = p.lamM
        cf[2] = p.dpxM
        cf[3] = p.dppM
    else:
        _coefficients(t, p, cf)
    out[0] = y[1]
    out[1] = 2.0 * cf[2] + 2.0 * y[2] - 2.0 * cf[0] * y[0] - 2.0 * cf[1] * y[1]
    out[2] = cf[3] - cf[0] * y[1] - 4.0 * cf[1] * y[2]
    out[3] = y[4]
    out[4] = -cf[0] * y[3] - 2.0 * cf[1] * y[4]


def integrate(y0, double t0, double t1, params, double rtol, double atol, double h0,
              double hmax, bint frozen, bint fixed_step, bint stop_nonnormalizable,
              long max_steps):
    cdef long max_terms
    cdef Params p = _unpack(params, &max_terms)
    if not frozen and p.g != 0.0:
        _check_terms(p.W, p.T, 1.0, max_terms, 1, 0.0)

    cdef long cap = 256, n = 0, n_steps = 0
    cdef double* ts = <double*>malloc(cap * sizeof(double))
    cdef double* ys = <double*>malloc(cap * 5 * sizeof(double))
    cdef double* dn = <double*>malloc(cap * 25 * sizeof(double))
    cdef double y[5]
    cdef double yn[5]
    cdef double tmp[5]
    cdef double k1[5]
    cdef double k2[5]
    cdef double k3[5]
    cdef double k4[5]
    cdef double k5[5]
    cdef double k6[5]
    cdef double k7[5]
    cdef int i
    cdef double t = t0, span = t1 - t0, h, err, acc, e, sc, fac, r2
    cdef bint last
    cdef int status = 0
    for i in range(5):
        y[i] = float(y0[i])
    h = h0
    if h > hmax:
        h = hmax
    if h > span:
        h = span
    ts[0] = t
    for i in range(5):
        ys[i] = y[i]
    _rhs(t, y, &p, frozen, k1)

    while t < t1:
        if n_steps >= max_steps:
            status = 3
            break
        last = t + h >= t1 - 1e-14 * fabs(span)
        if last:
            h = t1 - t
        if h < 1e-14 * (fabs(t) if fabs(t) > 1.0 else 1.0) and not last:
            status = 2
            break
        for i in range(5):
            tmp[i] = y[i] + h * A21 * k1[i]
        _rhs(t + C2 * h, tmp, &p, frozen, k2)
        for i in range(5):
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        _rhs(t + C3 * h, tmp, &p, frozen, k3)
        for i in range(5):
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        _rhs(t + C4 * h, tmp, &p, frozen, k4)
        for i in range(5):
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        _rhs(t + C5 * h, tmp, &p, frozen, k5)
        for i in range(5):
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i]
                                 + A65 * k5[i])
        _rhs(t + h, tmp, &p, frozen, k6)
        for i in range(5):
            yn[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i]
                                + A76 * k6[i])
        _rhs(t + h, yn, &p, frozen, k7)
        n_steps += 1
        if fixed_step:
            err = 0.0
        else:
            acc = 0.0
            for i in range(5):
                e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                         + E7 * k7[i])
                sc = atol + rtol * (fabs(y[i]) if fabs(y[i]) > fabs(yn[i]) else fabs(yn[i]))
                acc += (e / sc) * (e / sc)
            err = sqrt(acc / 5.0)
        if err <= 1.0:
            if n + 1 >= cap:
                cap *= 2
                ts = <double*>realloc(ts, cap * sizeof(double))
                ys = <double*>realloc(ys, cap * 5 * sizeof(double))
                dn = <double*>realloc(dn, cap * 25 * sizeof(double))
            for i in range(5):
                r2 = yn[i] - y[i]
                dn[n * 25 + i] = y[i]
                dn[n * 25 + 5 + i] = r2
                dn[n * 25 + 10 + i] = h * k1[i] - r2
                dn[n * 25 + 15 + i] = r2 - h * k7[i] - (h * k1[i] - r2)
                dn[n * 25 + 20 + i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i]
                                           + D6 * k6[i] + D7 * k7[i])
            t = t1 if last else t + h
            n += 1
            ts[n] = t
            for i in range(5):
                y[i] = yn[i]
                k1[i] = k7[i]
                ys[n * 5 + i] = y[i]
            if stop_nonnormalizable and y[0] <= 0.0:
                status = 1
                break
            if not fixed_step:
                if err == 0.0:
                    fac = 10.0
                else:
                    fac = 0.9 * err ** -0.2
                    if fac > 10.0:
                        fac = 10.0
                    if fac < 0.2:
                        fac = 0.2
                h = h * fac
                if h > hmax:
                    h = hmax
        else:
            fac = 0.9 * err ** -0.2
            if fac < 0.2:
                fac = 0.2
            h *= fac

    out_t = np.empty(n + 1)
    out_y = np.empty((n + 1, 5))
    out_d = np.empty((n, 5, 5))
    cdef double[::1] vt = out_t
    cdef double[:, ::1] vy = out_y
    cdef double[:, :, ::1] vd = out_d
    cdef long j, m
    for j in range(n + 1):
        vt[j] = ts[j]
        for i in range(5):
            vy[j, i] = ys[j * 5 + i]
    for j in range(n):
        for m in range(5):
            for i in range(5):
                vd[j, m, i] = dn[j * 25 + m * 5 + i]
    free(ts)
    free(ys)
    free(dn)
    return out_t, out_y, out_d, status
