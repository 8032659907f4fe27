"""Compiled scalar kernels: exit-law series, quantile inversion, RNG, walk loop.

Brownian exit laws from [-1, 1] come in two series families each: a
reflection (method-of-images) form that converges fast for small times and
an eigenfunction form for large times.  CDFs are term-wise analytic
integrals of the densities (complementary error functions for the image
family, plain exponentials for the eigenfunction family), so Newton
inversion never needs quadrature.

Everything is scalar, allocation-free and nopython so the batch walk can
run hundreds of millions of steps per second-scale budgets on one core.
The array-facing API lives in exit_laws.py / engine.py.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

# series / inversion parameters
CROSSOVER = 0.5          # image family below, eigenfunction family above
ABS_TOL = 1e-12          # series truncation: stop once a term bound is below
MAX_TERMS = 200
NEWTON_TOL = 5e-11       # |cdf(q) - target| at exit (spec allows 1e-10)
NEWTON_MAX = 200
SURV_CUT = 40.0          # survival(t) < 6e-22 beyond: zero in double arithmetic

_PI = math.pi
_PI2_8 = _PI * _PI / 8.0
_PIH = 0.5 * _PI
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * _PI)

_TABLE_N = 4096          # central quantile table resolution


@njit(cache=True, inline="always")
def _phi(z):
    """Standard normal CDF."""
    return 0.5 * math.erfc(-z / _SQRT2)


# ---------------------------------------------------------------------------
# exit-time law G(t, x) = P_x[exit of (-1,1) before t]


@njit(cache=True)
def g_cdf_image(t, x):
    rt = math.sqrt(2.0 * t)
    total = 0.0
    for m in range(MAX_TERMS):
        ring = 0.0
        if m == 0:
            ring += math.erfc((1.0 + x) / rt)
            ring += math.erfc((1.0 - x) / rt)
        else:
            for k in (m, -m):
                a = 1.0 + x + 4.0 * k
                g = 1.0 - x + 4.0 * k
                ring += math.copysign(math.erfc(abs(a) / rt), a)
                ring += math.copysign(math.erfc(abs(g) / rt), g)
        total += ring
        if m >= 1 and abs(ring) < ABS_TOL:
            break
    return total


@njit(cache=True)
def g_pdf_image(t, x):
    c = 1.0 / (math.sqrt(2.0 * _PI) * t * math.sqrt(t))
    i2t = 0.5 / t
    total = 0.0
    for m in range(MAX_TERMS):
        ring = 0.0
        if m == 0:
            a = 1.0 + x
            g = 1.0 - x
            ring += a * math.exp(-a * a * i2t) + g * math.exp(-g * g * i2t)
        else:
            for k in (m, -m):
                a = 1.0 + x + 4.0 * k
                g = 1.0 - x + 4.0 * k
                ring += a * math.exp(-a * a * i2t) + g * math.exp(-g * g * i2t)
        total += ring
        if m >= 1 and abs(ring) * c < ABS_TOL:
            break
    return total * c


@njit(cache=True)
def g_cdf_spectral(t, x):
    acc = 0.0
    sign = 1.0
    for j in range(MAX_TERMS):
        n = 2 * j + 1
        bound = (4.0 / (n * _PI)) * math.exp(-n * n * _PI2_8 * t)
        acc += sign * bound * math.cos(n * _PIH * x)
        if bound < ABS_TOL:
            break
        sign = -sign
    return 1.0 - acc


@njit(cache=True)
def g_pdf_spectral(t, x):
    acc = 0.0
    sign = 1.0
    for j in range(MAX_TERMS):
        n = 2 * j + 1
        bound = 0.5 * _PI * n * math.exp(-n * n * _PI2_8 * t)
        acc += sign * bound * math.cos(n * _PIH * x)
        if bound < ABS_TOL:
            break
        sign = -sign
    return acc


@njit(cache=True)
def g_cdf(t, x):
    if t <= 0.0:
        return 0.0
    if abs(x) >= 1.0:
        return 1.0
    if t <= CROSSOVER:
        return g_cdf_image(t, x)
    return g_cdf_spectral(t, x)


@njit(cache=True)
def g_pdf(t, x):
    if t <= 0.0 or abs(x) >= 1.0:
        return 0.0
    if t <= CROSSOVER:
        return g_pdf_image(t, x)
    return g_pdf_spectral(t, x)


@njit(cache=True)
def g_cdf_pdf(t, x):
    """(G, dG/dt) sharing the per-term exponentials where possible."""
    if t <= 0.0:
        return 0.0, 0.0
    if abs(x) >= 1.0:
        return 1.0, 0.0
    if t <= CROSSOVER:
        return g_cdf_image(t, x), g_pdf_image(t, x)
    cacc = 0.0
    pacc = 0.0
    sign = 1.0
    for j in range(MAX_TERMS):
        n = 2 * j + 1
        e = math.exp(-n * n * _PI2_8 * t)
        cs = math.cos(n * _PIH * x)
        cacc += sign * (4.0 / (n * _PI)) * e * cs
        pacc += sign * 0.5 * _PI * n * e * cs
        if 0.5 * _PI * n * e < ABS_TOL and (4.0 / (n * _PI)) * e < ABS_TOL:
            break
        sign = -sign
    return 1.0 - cacc, pacc


# central (x = 0) specializations: both image families coincide


@njit(cache=True)
def g_cdf_center(t):
    if t <= 0.0:
        return 0.0
    if t <= CROSSOVER:
        rt = math.sqrt(2.0 * t)
        total = 0.0
        sign = 1.0
        for j in range(MAX_TERMS):
            term = 2.0 * math.erfc((2 * j + 1) / rt)
            total += sign * term
            if term < ABS_TOL:
                break
            sign = -sign
        return total
    acc = 0.0
    sign = 1.0
    for j in range(MAX_TERMS):
        n = 2 * j + 1
        term = (4.0 / (n * _PI)) * math.exp(-n * n * _PI2_8 * t)
        acc += sign * term
        if term < ABS_TOL:
            break
        sign = -sign
    return 1.0 - acc


@njit(cache=True)
def g_cdf_pdf_center(t):
    if t <= 0.0:
        return 0.0, 0.0
    if t <= CROSSOVER:
        rt = math.sqrt(2.0 * t)
        cp = 1.0 / (math.sqrt(2.0 * _PI) * t * math.sqrt(t))
        i2t = 0.5 / t
        cacc = 0.0
        pacc = 0.0
        sign = 1.0
        for j in range(MAX_TERMS):
            n = 2 * j + 1
            ct = 2.0 * math.erfc(n / rt)
            pt = 2.0 * n * math.exp(-n * n * i2t)
            cacc += sign * ct
            pacc += sign * pt
            if ct < ABS_TOL and pt * cp < ABS_TOL:
                break
            sign = -sign
        return cacc, pacc * cp
    cacc = 0.0
    pacc = 0.0
    sign = 1.0
    for j in range(MAX_TERMS):
        n = 2 * j + 1
        e = math.exp(-n * n * _PI2_8 * t)
        cacc += sign * (4.0 / (n * _PI)) * e
        pacc += sign * 0.5 * _PI * n * e
        if 0.5 * _PI * n * e < ABS_TOL:
            break
        sign = -sign
    return 1.0 - cacc, pacc


# ---------------------------------------------------------------------------
# side-conditioned exit time H(t, x) = P_x[tau < t | exit at +1]


@njit(cache=True)
def h_cdf_image(t, x):
    rt = math.sqrt(2.0 * t)
    total = 0.0
    for m in range(MAX_TERMS):
        ring = 0.0
        if m == 0:
            ring += math.erfc((1.0 - x) / rt)
        else:
            for k in (m, -m):
                g = 1.0 - x + 4.0 * k
                ring += math.copysign(math.erfc(abs(g) / rt), g)
        total += ring
        if m >= 1 and abs(ring) < ABS_TOL:
            break
    return 2.0 * total / (1.0 + x)


@njit(cache=True)
def h_pdf_image(t, x):
    c = 2.0 / ((1.0 + x) * math.sqrt(2.0 * _PI) * t * math.sqrt(t))
    i2t = 0.5 / t
    total = 0.0
    for m in range(MAX_TERMS):
        ring = 0.0
        if m == 0:
            g = 1.0 - x
            ring += g * math.exp(-g * g * i2t)
        else:
            for k in (m, -m):
                g = 1.0 - x + 4.0 * k
                ring += g * math.exp(-g * g * i2t)
        total += ring
        if m >= 1 and abs(ring) * abs(c) < ABS_TOL:
            break
    return total * c


@njit(cache=True)
def h_cdf_spectral(t, x):
    acc = 0.0
    sign = -1.0  # (-1)^k starting at k = 1
    pref = 4.0 / (_PI * (1.0 + x))
    for k in range(1, MAX_TERMS + 1):
        e = math.exp(-k * k * _PI2_8 * t)
        acc += sign / k * e * math.sin(k * _PIH * (x + 1.0))
        if abs(pref) / k * e < ABS_TOL:
            break
        sign = -sign
    return 1.0 + pref * acc


@njit(cache=True)
def h_pdf_spectral(t, x):
    acc = 0.0
    sign = -1.0
    pref = -_PIH / (1.0 + x)
    for k in range(1, MAX_TERMS + 1):
        e = math.exp(-k * k * _PI2_8 * t)
        acc += sign * k * e * math.sin(k * _PIH * (x + 1.0))
        if abs(pref) * k * e < ABS_TOL:
            break
        sign = -sign
    return pref * acc


@njit(cache=True)
def h_cdf(t, x):
    if t <= 0.0:
        return 0.0
    if t <= CROSSOVER:
        return h_cdf_image(t, x)
    return h_cdf_spectral(t, x)


@njit(cache=True)
def h_cdf_pdf(t, x):
    if t <= 0.0:
        return 0.0, 0.0
    if t <= CROSSOVER:
        return h_cdf_image(t, x), h_pdf_image(t, x)
    cacc = 0.0
    pacc = 0.0
    sign = -1.0
    for k in range(1, MAX_TERMS + 1):
        e = math.exp(-k * k * _PI2_8 * t)
        sn = math.sin(k * _PIH * (x + 1.0))
        cacc += sign / k * e * sn
        pacc += sign * k * e * sn
        if k * e < ABS_TOL:
            break
        sign = -sign
    return 1.0 + (4.0 / (_PI * (1.0 + x))) * cacc, (-_PIH / (1.0 + x)) * pacc


# ---------------------------------------------------------------------------
# killed position law F(t, x, y) = P_x[B_t < y; no exit before t]


@njit(cache=True)
def f_cdf_image(t, x, y):
    rt = math.sqrt(t)
    total = 0.0
    for m in range(MAX_TERMS):
        ring = 0.0
        if m == 0:
            ring += _phi((y - x) / rt) - _phi((-1.0 - x) / rt)
            ring -= _phi((x + y + 2.0) / rt) - _phi((x + 1.0) / rt)
        else:
            for k in (m, -m):
                f = 4.0 * k
                ring += _phi((y - x + f) / rt) - _phi((-1.0 - x + f) / rt)
                ring -= _phi((x + y + 2.0 + f) / rt) - _phi((x + 1.0 + f) / rt)
        total += ring
        if m >= 1 and abs(ring) < ABS_TOL:
            break
    return total


@njit(cache=True)
def f_pdf_image(t, x, y):
    c = 1.0 / math.sqrt(2.0 * _PI * t)
    i2t = 0.5 / t
    total = 0.0
    for m in range(MAX_TERMS):
        ring = 0.0
        if m == 0:
            d = x - y
            s = x + y + 2.0
            ring += math.exp(-d * d * i2t) - math.exp(-s * s * i2t)
        else:
            for k in (m, -m):
                d = x - y - 4.0 * k
                s = x + y + 2.0 + 4.0 * k
                ring += math.exp(-d * d * i2t) - math.exp(-s * s * i2t)
        total += ring
        if m >= 1 and abs(ring) * c < ABS_TOL:
            break
    return total * c


@njit(cache=True)
def f_cdf_spectral(t, x, y):
    # term-wise integral of the eigenfunction density; unit prefactor
    # (cross-checked against the image family near the crossover)
    acc = 0.0
    for k in range(1, MAX_TERMS + 1):
        e = math.exp(-k * k * _PI2_8 * t)
        bound = (2.0 / (k * _PI)) * e * 2.0
        acc += (2.0 / (k * _PI)) * e * math.sin(k * _PIH * (x + 1.0)) * \
            (1.0 - math.cos(k * _PIH * (y + 1.0)))
        if bound < ABS_TOL:
            break
    return acc


@njit(cache=True)
def f_pdf_spectral(t, x, y):
    acc = 0.0
    for k in range(1, MAX_TERMS + 1):
        e = math.exp(-k * k * _PI2_8 * t)
        acc += e * math.sin(k * _PIH * (x + 1.0)) * math.sin(k * _PIH * (y + 1.0))
        if e < ABS_TOL:
            break
    return acc


@njit(cache=True)
def f_cdf(t, x, y):
    if y <= -1.0:
        return 0.0
    if y > 1.0:
        y = 1.0
    if t <= 0.0:
        return 1.0 if y > x else 0.0
    if t <= CROSSOVER:
        return f_cdf_image(t, x, y)
    return f_cdf_spectral(t, x, y)


@njit(cache=True)
def f_pdf(t, x, y):
    if t <= 0.0 or abs(y) >= 1.0 or abs(x) > 1.0:
        return 0.0
    if t <= CROSSOVER:
        return f_pdf_image(t, x, y)
    return f_pdf_spectral(t, x, y)


# folded (reflected) position law from the center: mass(r) = P[|B_t| <= r; alive]


@njit(cache=True)
def fold_mass_center(t, r):
    if r <= 0.0:
        return 0.0
    if t <= CROSSOVER:
        rt = math.sqrt(t)
        total = 0.0
        for m in range(MAX_TERMS):
            ring = 0.0
            if m == 0:
                ring += _phi(r / rt) - _phi(-r / rt)
                ring -= _phi((r + 2.0) / rt) - _phi((-r + 2.0) / rt)
            else:
                for k in (m, -m):
                    f = 4.0 * k
                    ring += _phi((r + f) / rt) - _phi((-r + f) / rt)
                    ring -= _phi((r + 2.0 + f) / rt) - _phi((-r + 2.0 + f) / rt)
            total += ring
            if m >= 1 and abs(ring) < ABS_TOL:
                break
        return total
    acc = 0.0
    for j in range(MAX_TERMS):
        n = 2 * j + 1
        term = (4.0 / (n * _PI)) * math.exp(-n * n * _PI2_8 * t)
        acc += term * math.sin(n * _PIH * r)
        if term < ABS_TOL:
            break
    return acc


@njit(cache=True)
def fold_mass_pdf_center(t, r):
    if t <= CROSSOVER:
        c = 2.0 / math.sqrt(2.0 * _PI * t)
        i2t = 0.5 / t
        total = 0.0
        for m in range(MAX_TERMS):
            ring = 0.0
            if m == 0:
                ring += math.exp(-r * r * i2t)
                s = r + 2.0
                ring -= math.exp(-s * s * i2t)
            else:
                for k in (m, -m):
                    d = r + 4.0 * k
                    s = r + 2.0 + 4.0 * k
                    ring += math.exp(-d * d * i2t) - math.exp(-s * s * i2t)
            total += ring
            if m >= 1 and abs(ring) * c < ABS_TOL:
                break
        return total * c
    acc = 0.0
    for j in range(MAX_TERMS):
        n = 2 * j + 1
        e = math.exp(-n * n * _PI2_8 * t)
        acc += 2.0 * e * math.cos(n * _PIH * r)
        if 2.0 * e < ABS_TOL:
            break
    return acc


# ---------------------------------------------------------------------------
# safeguarded Newton inverters


@njit(cache=True)
def invert_exit_center_raw(target):
    """Solve G(t, 0) = target without a table (build/fallback path)."""
    lo = 0.0
    hi = 1.0
    for _ in range(80):
        if g_cdf_center(hi) >= target:
            break
        lo = hi
        hi *= 2.0
    t = 0.5 * (lo + hi)
    for _ in range(NEWTON_MAX):
        c, p = g_cdf_pdf_center(t)
        f = c - target
        if abs(f) <= NEWTON_TOL:
            return t
        if f > 0.0:
            hi = t
        else:
            lo = t
        tn = t - f / p if p > 0.0 else 0.5 * (lo + hi)
        if tn <= lo or tn >= hi:
            tn = 0.5 * (lo + hi)
        t = tn
    return -1.0


@njit(cache=True)
def invert_exit_center(target, qtab, dtab):
    """Solve G(t, 0) = target with a Hermite-interpolated first guess."""
    z = target * _TABLE_N
    i = int(z)
    if i < 1 or i >= _TABLE_N - 1:
        return invert_exit_center_raw(target)
    s = z - i
    du = 1.0 / _TABLE_N
    q0 = qtab[i]
    q1 = qtab[i + 1]
    m0 = dtab[i] * du
    m1 = dtab[i + 1] * du
    s2 = s * s
    s3 = s2 * s
    t = ((2.0 * s3 - 3.0 * s2 + 1.0) * q0 + (s3 - 2.0 * s2 + s) * m0
         + (-2.0 * s3 + 3.0 * s2) * q1 + (s3 - s2) * m1)
    lo = q0
    hi = q1
    for _ in range(NEWTON_MAX):
        c, p = g_cdf_pdf_center(t)
        f = c - target
        if abs(f) <= NEWTON_TOL:
            return t
        if f > 0.0:
            hi = t
        else:
            lo = t
        tn = t - f / p if p > 0.0 else 0.5 * (lo + hi)
        if tn <= lo or tn >= hi:
            tn = 0.5 * (lo + hi)
        t = tn
    return -1.0


@njit(cache=True)
def build_center_table():
    qtab = np.empty(_TABLE_N + 1)
    dtab = np.empty(_TABLE_N + 1)
    qtab[0] = 0.0
    dtab[0] = 0.0
    for i in range(1, _TABLE_N):
        u = i / _TABLE_N
        q = invert_exit_center_raw(u)
        qtab[i] = q
        c, p = g_cdf_pdf_center(q)
        dtab[i] = 1.0 / p
    qtab[_TABLE_N] = qtab[_TABLE_N - 1]
    dtab[_TABLE_N] = dtab[_TABLE_N - 1]
    return qtab, dtab


@njit(cache=True)
def invert_exit_general(x, target):
    """Solve G(t, x) = target for general x."""
    lo = 0.0
    hi = 1.0
    for _ in range(80):
        if g_cdf(hi, x) >= target:
            break
        lo = hi
        hi *= 2.0
    t = 0.5 * (lo + hi)
    for _ in range(NEWTON_MAX):
        c, p = g_cdf_pdf(t, x)
        f = c - target
        if abs(f) <= NEWTON_TOL:
            return t
        if f > 0.0:
            hi = t
        else:
            lo = t
        tn = t - f / p if p > 0.0 else 0.5 * (lo + hi)
        if tn <= lo or tn >= hi:
            tn = 0.5 * (lo + hi)
        t = tn
    return -1.0


@njit(cache=True)
def invert_cond_exit(x, target):
    """Solve H(t, x) = target (exit-at-+1 conditioned time)."""
    lo = 0.0
    hi = 1.0
    for _ in range(80):
        if h_cdf(hi, x) >= target:
            break
        lo = hi
        hi *= 2.0
    t = 0.5 * (lo + hi)
    for _ in range(NEWTON_MAX):
        c, p = h_cdf_pdf(t, x)
        f = c - target
        if abs(f) <= NEWTON_TOL:
            return t
        if f > 0.0:
            hi = t
        else:
            lo = t
        tn = t - f / p if p > 0.0 else 0.5 * (lo + hi)
        if tn <= lo or tn >= hi:
            tn = 0.5 * (lo + hi)
        t = tn
    return -1.0


@njit(cache=True)
def invert_killed_position(t, x, target):
    """Solve F(t, x, y) = target for y in (-1, 1); target in (0, mass)."""
    lo = -1.0
    hi = 1.0
    y = x  # start at the mode's rough location
    if y <= -0.99 or y >= 0.99:
        y = 0.0
    for _ in range(NEWTON_MAX):
        c = f_cdf(t, x, y)
        f = c - target
        if abs(f) <= NEWTON_TOL:
            return y
        if f > 0.0:
            hi = y
        else:
            lo = y
        p = f_pdf(t, x, y)
        yn = y - f / p if p > 0.0 else 0.5 * (lo + hi)
        if yn <= lo or yn >= hi:
            yn = 0.5 * (lo + hi)
        y = yn
    return -2.0


@njit(cache=True)
def invert_fold_center(t, target):
    """Solve P[|B_t| <= r; alive] = target for r in (0, 1)."""
    lo = 0.0
    hi = 1.0
    r = 0.5
    for _ in range(NEWTON_MAX):
        c = fold_mass_center(t, r)
        f = c - target
        if abs(f) <= NEWTON_TOL:
            return r
        if f > 0.0:
            hi = r
        else:
            lo = r
        p = fold_mass_pdf_center(t, r)
        rn = r - f / p if p > 0.0 else 0.5 * (lo + hi)
        if rn <= lo or rn >= hi:
            rn = 0.5 * (lo + hi)
        r = rn
    return -2.0


# ---------------------------------------------------------------------------
# RNG: xoshiro256** with per-particle splitmix64 seeding


@njit(cache=True, inline="always")
def _sm_mix(z):
    z = (z + np.uint64(0x9E3779B97F4A7C15))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def stream_init(seed, index):
    """Independent 256-bit stream state for (seed, particle index)."""
    s = np.empty(4, dtype=np.uint64)
    base = _sm_mix(np.uint64(seed)) ^ (np.uint64(index + 1) * np.uint64(0xD1B54A32D192ED03))
    z = base
    for i in range(4):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        s[i] = _sm_mix(z)
    # avoid the (measure-zero) all-zero state
    if s[0] == 0 and s[1] == 0 and s[2] == 0 and s[3] == 0:
        s[0] = np.uint64(0x9E3779B97F4A7C15)
    return s


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True, inline="always")
def next_u01(s):
    """Uniform draw in the open interval (0, 1); advances the state."""
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return ((result >> np.uint64(11)) + np.float64(0.5)) * (1.0 / 9007199254740992.0)


# ---------------------------------------------------------------------------
# one exact transition (used by the stepper API and inlined in the walk)


@njit(cache=True)
def step_center(theta, h, remaining, u_branch, u_time, u_side, qtab, dtab):
    """Transition from the midpoint of [-h, h] with right-excursion
    probability theta.

    Returns (exited, elapsed, position); position is relative to the
    midpoint (+-h when exited).  ``remaining`` may be inf (pure exit mode).
    """
    h2 = h * h
    if remaining <= 1e-14 * h2:
        return False, remaining, 0.0
    if math.isinf(remaining):
        g_bound = 1.0
        gamma = 0.0
    else:
        st = remaining / h2
        if st > SURV_CUT:
            gamma = 0.0
            g_bound = 1.0
        else:
            g_bound = g_cdf_center(st)
            gamma = 1.0 - g_bound
    if u_branch < gamma:
        st = remaining / h2
        r = invert_fold_center(st, u_time * gamma)
        sign = 1.0 if u_side < theta else -1.0
        return False, remaining, sign * r * h
    q = invert_exit_center(u_time * g_bound, qtab, dtab)
    if not math.isinf(remaining):
        st = remaining / h2
        if q >= st:
            q = st * (1.0 - 1e-12)
    side = 1.0 if u_side < theta else -1.0
    return True, q * h2, side * h


@njit(cache=True)
def step_offcenter(x, z_lo, z_hi, remaining, u_branch, u_side, u_time, qtab, dtab):
    """Transition from x strictly inside (z_lo, z_hi), plain Brownian cell.

    Returns (exited, elapsed, position) in absolute coordinates.  The side
    is drawn first (Bayes), then the exit time conditioned on that side.
    """
    half = 0.5 * (z_hi - z_lo)
    kappa = half * half
    if remaining <= 1e-14 * kappa:
        return False, remaining, x
    u0 = (2.0 * x - z_lo - z_hi) / (z_hi - z_lo)
    if u0 == 0.0:
        ex, dt, pos = step_center(0.5, half, remaining, u_branch, u_time, u_side, qtab, dtab)
        if ex:
            return True, dt, z_hi if pos > 0.0 else z_lo
        return False, dt, x + pos
    if math.isinf(remaining):
        g_bound = 1.0
        surv = 0.0
        st = math.inf
    else:
        st = remaining / kappa
        if st > SURV_CUT:
            g_bound = 1.0
            surv = 0.0
        else:
            g_bound = g_cdf(st, u0)
            surv = 1.0 - g_bound
    if u_branch < surv:
        mass = f_cdf(st, u0, 1.0)
        yu = invert_killed_position(st, u0, u_time * mass)
        return False, remaining, 0.5 * ((z_hi - z_lo) * yu + z_lo + z_hi)
    if surv > 0.0:
        p_right = h_cdf(st, u0) * 0.5 * (1.0 + u0) / g_bound
    else:
        p_right = 0.5 * (1.0 + u0)
    go_right = u_side < p_right
    xc = u0 if go_right else -u0
    hb = h_cdf(st, xc) if surv > 0.0 else 1.0
    q = invert_cond_exit(xc, u_time * hb)
    if not math.isinf(remaining) and q >= st:
        q = st * (1.0 - 1e-12)
    return True, q * kappa, z_hi if go_right else z_lo


# ---------------------------------------------------------------------------
# the walk


# step codes per grid point
CODE_CENTRAL = 0   # knot or centered satellite: symmetric interval, theta
CODE_GENERAL = 1   # off-center satellite: plain Brownian cell
CODE_DIRICHLET = 2
CODE_BARRIER = 3


@njit(cache=True)
def walk_one(y0, horizon, exit_mode, pts, code, theta, half, qtab, dtab, state, max_steps):
    """Run one particle; returns (t, y, exited, barrier, steps).

    steps == -1 signals the per-particle step cap was hit (exit mode only).
    """
    t = 0.0
    n = len(pts)
    # locate the start
    idx = -1
    j = np.searchsorted(pts, y0)
    if j < n and pts[j] == y0:
        idx = j
    elif j > 0 and pts[j - 1] == y0:
        idx = j - 1
    steps = 0
    if idx < 0:
        # off-grid start: one general step between the nearest grid points
        if y0 <= pts[0] or y0 >= pts[n - 1]:
            return 0.0, y0, False, False, 0
        steps += 1
        remaining = math.inf if exit_mode else horizon - t
        ub = next_u01(state)
        us = next_u01(state)
        ut = next_u01(state)
        ex, dt, pos = step_offcenter(y0, pts[j - 1], pts[j], remaining, ub, us, ut, qtab, dtab)
        if not ex:
            return horizon, pos, False, False, steps
        t += dt
        idx = j if pos == pts[j] else j - 1

    while True:
        c = code[idx]
        if c == CODE_DIRICHLET or c == CODE_BARRIER:
            return t, pts[idx], True, c == CODE_BARRIER, steps
        if steps >= max_steps:
            return t, pts[idx], False, False, -1
        steps += 1
        remaining = math.inf if exit_mode else horizon - t
        ub = next_u01(state)
        ut = next_u01(state)
        us = next_u01(state)
        if c == CODE_CENTRAL:
            ex, dt, pos = step_center(theta[idx], half[idx], remaining, ub, ut, us, qtab, dtab)
            if not ex:
                return horizon, pts[idx] + pos, False, False, steps
            t += dt
            idx = idx + 1 if pos > 0.0 else idx - 1
        else:
            ex, dt, pos = step_offcenter(pts[idx], pts[idx - 1], pts[idx + 1],
                                         remaining, ub, us, ut, qtab, dtab)
            if not ex:
                return horizon, pos, False, False, steps
            t += dt
            idx = idx + 1 if pos == pts[idx + 1] else idx - 1


@njit(cache=True, parallel=True)
def walk_batch(y0s, horizon, exit_mode, pts, code, theta, half, qtab, dtab,
               seed, max_steps, out_t, out_y, out_exited, out_barrier, out_steps):
    n = len(y0s)
    for i in prange(n):
        state = stream_init(seed, i)
        t, y, ex, bar, steps = walk_one(y0s[i], horizon, exit_mode, pts, code,
                                        theta, half, qtab, dtab, state, max_steps)
        out_t[i] = t
        out_y[i] = y
        out_exited[i] = ex
        out_barrier[i] = bar
        out_steps[i] = steps


# ---------------------------------------------------------------------------
# batch samplers (public API back end; uniforms supplied by the caller)


@njit(cache=True)
def sample_exit_times(x, us, bound, side, qtab, dtab, out, resid):
    """Inverse-CDF exit times from x, optionally conditioned.

    side: 0 none, +1/-1 exit side; bound: time bound (inf for none).
    Fills `out` (times) and `resid` (|cdf - target| at the returned point).
    """
    center = x == 0.0
    for i in range(len(us)):
        if side == 0:
            cb = 1.0 if math.isinf(bound) else g_cdf(bound, x)
            target = us[i] * cb
            q = invert_exit_center(target, qtab, dtab) if center else invert_exit_general(x, target)
            got = g_cdf(q, x)
        else:
            xc = x if side > 0 else -x
            cb = 1.0 if math.isinf(bound) else h_cdf(bound, xc)
            target = us[i] * cb
            if center:
                q = invert_exit_center(target, qtab, dtab)
            else:
                q = invert_cond_exit(xc, target)
            got = h_cdf(q, xc) if not center else g_cdf_center(q)
        if q > 0.0 and not math.isinf(bound) and q >= bound:
            q = bound * (1.0 - 1e-12)
        out[i] = q
        resid[i] = abs(got - target)


@njit(cache=True)
def sample_survived_positions(t, x, us, out, resid):
    """Positions of the unexited path at time t, drawn by inverting F."""
    mass = f_cdf(t, x, 1.0)
    for i in range(len(us)):
        target = us[i] * mass
        y = invert_killed_position(t, x, target)
        out[i] = y
        resid[i] = abs(f_cdf(t, x, y) - target)


@njit(cache=True)
def g_cdf_many(ts, xs, out):
    for i in range(len(ts)):
        out[i] = g_cdf(ts[i], xs[i])


@njit(cache=True)
def h_cdf_many(ts, xs, out):
    for i in range(len(ts)):
        out[i] = h_cdf(ts[i], xs[i])


@njit(cache=True)
def f_cdf_many(ts, xs, ys, out):
    for i in range(len(ts)):
        out[i] = f_cdf(ts[i], xs[i], ys[i])


@njit(cache=True)
def g_pdf_many(ts, xs, out):
    for i in range(len(ts)):
        out[i] = g_pdf(ts[i], xs[i])


@njit(cache=True)
def fold_mass_many(ts, rs, out):
    for i in range(len(ts)):
        out[i] = fold_mass_center(ts[i], rs[i])


@njit(cache=True)
def sample_interface_batch(beta, h, remaining, us, out_ex, out_dt, out_pos, qtab, dtab):
    theta = 0.5 * (beta + 1.0)
    n = us.shape[0]
    for i in range(n):
        ex, dt, pos = step_center(theta, h, remaining, us[i, 0], us[i, 1], us[i, 2], qtab, dtab)
        out_ex[i] = ex
        out_dt[i] = dt
        out_pos[i] = pos


@njit(cache=True)
def sample_interior_batch(x, z_lo, z_hi, remaining, us, out_ex, out_dt, out_pos, qtab, dtab):
    n = us.shape[0]
    for i in range(n):
        ex, dt, pos = step_offcenter(x, z_lo, z_hi, remaining,
                                     us[i, 0], us[i, 1], us[i, 2], qtab, dtab)
        out_ex[i] = ex
        out_dt[i] = dt
        out_pos[i] = pos
