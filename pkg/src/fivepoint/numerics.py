"""Gamma, digamma and the Gauss hypergeometric function on the real line.

``hyp2f1`` is restricted to real parameters and real ``z`` in ``[0, 1]``:
a power series for ``z <= 1/2`` and the ``z -> 1 - z`` connection formula
otherwise (with the logarithmic variants when ``c - a - b`` is an integer).
All functions accept numpy arrays for the variable argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError

# Lanczos approximation, g = 7, nine terms.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.91893853320467274178

# B_{2k} / (2k) for the digamma asymptotic series
_DIGAMMA_ASYM = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


@dataclass(frozen=True)
class Precision:
    rel_tol: float = 1e-15
    max_terms: int = 100_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


DEFAULT_PRECISION = Precision()


def _is_nonpositive_integer(x) -> bool:
    return x <= 0 and float(x) == math.floor(x)


def _scalar_or_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _lanczos_sum(x):
    # x is the shifted argument (Gamma(x + 1) form)
    acc = np.full_like(x, _LANCZOS[0])
    for k in range(1, len(_LANCZOS)):
        acc = acc + _LANCZOS[k] / (x + k)
    return acc


def _lgamma_pos(x):
    """log Gamma(x) for x >= 1/2."""
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (xm + 0.5) * np.log(t) - t + np.log(_lanczos_sum(xm))


def gamma(x):
    """Gamma function; raises :class:`DomainError` at 0, -1, -2, ..."""
    arr, scalar = _scalar_or_array(x)
    if np.any((arr <= 0) & (arr == np.floor(arr))):
        raise DomainError("gamma has poles at non-positive integers")
    out = np.empty_like(arr)
    pos = arr >= 0.5
    xp = arr[pos]
    xm = xp - 1.0
    t = xm + _LANCZOS_G + 0.5
    small = xp < 140.0
    val = np.empty_like(xp)
    # direct product below 140, log form above to avoid overflow in t**(x-1/2)
    val[small] = (math.sqrt(2.0 * math.pi) * t[small] ** (xm[small] + 0.5)
                  * np.exp(-t[small]) * _lanczos_sum(xm[small]))
    val[~small] = np.exp(_lgamma_pos(xp[~small]))
    out[pos] = val
    neg = ~pos
    if np.any(neg):
        xn = arr[neg]
        out[neg] = math.pi / (np.sin(math.pi * xn) * gamma(1.0 - xn))
    return float(out) if scalar else out


def lgamma(x):
    """log |Gamma(x)|."""
    arr, scalar = _scalar_or_array(x)
    if np.any((arr <= 0) & (arr == np.floor(arr))):
        raise DomainError("lgamma has poles at non-positive integers")
    out = np.empty_like(arr)
    pos = arr >= 0.5
    out[pos] = _lgamma_pos(arr[pos])
    neg = ~pos
    if np.any(neg):
        xn = arr[neg]
        out[neg] = (math.log(math.pi) - np.log(np.abs(np.sin(math.pi * xn)))
                    - lgamma(1.0 - xn))
    return float(out) if scalar else out


def rgamma(x: float) -> float:
    """1 / Gamma(x), equal to zero at the poles."""
    if _is_nonpositive_integer(x):
        return 0.0
    return 1.0 / gamma(x)


def digamma(x: float) -> float:
    if _is_nonpositive_integer(x):
        raise DomainError("digamma has poles at non-positive integers")
    if x < 0.5:
        return digamma(1.0 - x) - math.pi / math.tan(math.pi * x)
    acc = 0.0
    while x < 8.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = inv2
    for c in _DIGAMMA_ASYM:
        series += c * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x - series


def pochhammer(a: float, n: int) -> float:
    out = 1.0
    for k in range(n):
        out *= a + k
    return out


def hyp2f1_series(a: float, b: float, c: float, z, precision: Precision = DEFAULT_PRECISION):
    """Direct Gauss series; needs |z| < 1 (or a terminating series)."""
    if _is_nonpositive_integer(c):
        raise DomainError("c must not be a non-positive integer")
    zz, scalar = _scalar_or_array(z)
    terminating = _is_nonpositive_integer(a) or _is_nonpositive_integer(b)
    if not terminating and np.any(np.abs(zz) >= 1.0):
        raise DomainError("series diverges for |z| >= 1")
    total = np.ones_like(zz)
    term = np.ones_like(zz)
    quiet = 0
    for n in range(precision.max_terms):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * zz
        total = total + term
        if not np.any(term):
            break
        # two consecutive negligible terms guard against a stray small term
        if np.all(np.abs(term) <= precision.rel_tol * np.abs(total)):
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
    else:
        raise ConvergenceError(
            f"hyp2f1 series not converged after {precision.max_terms} terms")
    return float(total) if scalar else total


def hyp2f1_connection(a: float, b: float, c: float, z,
                      precision: Precision = DEFAULT_PRECISION):
    """Evaluate through the 1 - z connection formula (z in (0, 1])."""
    zz, scalar = _scalar_or_array(z)
    if np.any((zz < 0) | (zz > 1)):
        raise DomainError("z must lie in [0, 1]")
    s = 1.0 - zz
    m_real = c - a - b
    m = round(m_real)
    if np.any(s == 0.0) and not m_real > 0:
        raise DomainError("hyp2f1 diverges at z = 1 unless c - a - b > 0")
    if abs(m_real - m) > 1e-13:
        t1 = gamma(c) * gamma(m_real) * rgamma(c - a) * rgamma(c - b)
        t2 = gamma(c) * gamma(-m_real) * rgamma(a) * rgamma(b)
        out = t1 * hyp2f1_series(a, b, 1.0 - m_real, s, precision)
        if t2 != 0.0:
            with np.errstate(divide="ignore"):
                out = out + t2 * s ** m_real * hyp2f1_series(c - a, c - b, 1.0 + m_real, s, precision)
    elif m >= 0:
        out = _connection_integer_nonneg(a, b, int(m), s, precision)
    else:
        out = _connection_integer_neg(a, b, int(-m), s, precision)
    return float(out) if scalar else out


def _connection_integer_nonneg(a, b, m, s, precision):
    """c = a + b + m, m = 0, 1, 2, ... (logarithmic case)."""
    c = a + b + m
    finite = np.zeros_like(s)
    if m > 0:
        pref = gamma(float(m)) * gamma(c) * rgamma(a + m) * rgamma(b + m)
        for n in range(m):
            finite = finite + (pochhammer(a, n) * pochhammer(b, n)
                               / (math.factorial(n) * pochhammer(1.0 - m, n))) * s ** n
        finite = pref * finite
    lead = gamma(c) * rgamma(a) * rgamma(b)
    if lead == 0.0:
        return finite
    at_one = s == 0.0
    ss = np.where(at_one, 0.5, s)
    logs = np.log(ss)
    coef = 1.0 / math.factorial(m)
    acc = np.zeros_like(s)
    power = np.ones_like(s)
    quiet = 0
    for n in range(precision.max_terms):
        bracket = (logs - digamma(n + 1.0) - digamma(n + m + 1.0)
                   + digamma(a + n + m) + digamma(b + n + m))
        term = coef * power * bracket
        acc = acc + term
        if np.all(np.abs(term) <= precision.rel_tol * np.maximum(np.abs(acc), 1e-300)):
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
        coef *= (a + m + n) * (b + m + n) / ((n + 1.0) * (n + m + 1.0))
        power = power * ss
        if coef == 0.0:
            break
    else:
        raise ConvergenceError("logarithmic connection series not converged")
    tail = -((-1.0) ** m) * lead * ss ** m * acc
    return finite + np.where(at_one, 0.0, tail)


def _connection_integer_neg(a, b, m, s, precision):
    """c = a + b - m, m = 1, 2, ...; only for z < 1."""
    c = a + b - m
    lead_fin = gamma(float(m)) * gamma(c) * rgamma(a) * rgamma(b)
    finite = np.zeros_like(s)
    for n in range(m):
        finite = finite + (pochhammer(a - m, n) * pochhammer(b - m, n)
                           / (math.factorial(n) * pochhammer(1.0 - m, n))) * s ** n
    finite = lead_fin * s ** (-m) * finite
    lead = gamma(c) * rgamma(a - m) * rgamma(b - m)
    if lead == 0.0:
        return finite
    logs = np.log(s)
    coef = 1.0 / math.factorial(m)
    acc = np.zeros_like(s)
    power = np.ones_like(s)
    quiet = 0
    for n in range(precision.max_terms):
        bracket = (logs - digamma(n + 1.0) - digamma(n + m + 1.0)
                   + digamma(a + n) + digamma(b + n))
        term = coef * power * bracket
        acc = acc + term
        if np.all(np.abs(term) <= precision.rel_tol * np.maximum(np.abs(acc), 1e-300)):
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
        coef *= (a + n) * (b + n) / ((n + 1.0) * (n + m + 1.0))
        power = power * s
        if coef == 0.0:
            break
    else:
        raise ConvergenceError("logarithmic connection series not converged")
    return finite - ((-1.0) ** m) * lead * acc


def hyp2f1(a: float, b: float, c: float, z, precision: Precision = DEFAULT_PRECISION):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z in [0, 1].

    At z = 1 the value is the Gauss sum and requires c - a - b > 0.
    """
    if _is_nonpositive_integer(c):
        raise DomainError("c must not be a non-positive integer")
    zz, scalar = _scalar_or_array(z)
    if np.any((zz < 0) | (zz > 1)) or np.any(np.isnan(zz)):
        raise DomainError("z must lie in [0, 1]")
    if np.any(zz == 1.0) and not c - a - b > 0:
        raise DomainError("hyp2f1 diverges at z = 1 unless c - a - b > 0")
    if _is_nonpositive_integer(a) or _is_nonpositive_integer(b):
        out = hyp2f1_series(a, b, c, zz, precision)
        return float(out) if scalar else out
    out = np.empty_like(zz)
    low = zz <= 0.5
    if np.any(low):
        out[low] = hyp2f1_series(a, b, c, zz[low], precision)
    if np.any(~low):
        out[~low] = hyp2f1_connection(a, b, c, zz[~low], precision)
    return float(out) if scalar else out
