"""Exact connection probabilities of critical percolation in the half-plane.

Everything is in the half-plane normalization: boundary neighbourhoods are
intervals of half-length ``e^{-s}`` and bulk neighbourhoods are measured by
conformal radius.  Functions accept numpy arrays wherever the arguments are
plain coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cache

import numpy as np

from .conformal import BoundaryConfig, harmonic_measure, strip_coordinates
from .errors import DomainError
from .numerics import gamma, hyp2f1

THIRD = 1.0 / 3.0
BULK = 5.0 / 48.0
G_EXPONENT = 11.0 / 96.0


@dataclass(frozen=True)
class ExponentTable:
    boundary_one_arm: Fraction = Fraction(1, 3)
    bulk_one_arm: Fraction = Fraction(5, 48)
    C_decay_rate: Fraction = Fraction(1, 3)
    F_decay_rate: Fraction = Fraction(5, 48)

    def neighbourhood_powers(self) -> dict[str, Fraction]:
        """Power of epsilon carried by each epsilon-neighbourhood probability."""
        b, w = self.boundary_one_arm, self.bulk_one_arm
        return {"P2": 2 * b, "P3": b + w, "P4": 2 * b + w}

    def factorization_excess(self) -> Fraction:
        """epsilon power of P4^2 minus that of P3 * P3 * P2 (zero when they cancel)."""
        p = self.neighbourhood_powers()
        return 2 * p["P4"] - (2 * p["P3"] + p["P2"])


EXPONENTS = ExponentTable()


@dataclass(frozen=True)
class Constants:
    K3: float
    K4: float
    K5: float
    KF: float

    def formulas(self) -> dict[str, str]:
        return {
            "K3": "sqrt(pi) / (Gamma(1/3) Gamma(7/6))",
            "K4": "18 / (5 pi)",
            "K5": "K4 pi^(5/48) / (2^(5/48) 2F1(-1/2, -1/3; 7/6; 1))",
            "KF": "2^7 pi^5 / (3^(3/2) Gamma(1/3)^9)",
        }


def gauss_value() -> float:
    """2F1(-1/2, -1/3; 7/6; 1)."""
    return hyp2f1(-0.5, -THIRD, 7.0 / 6.0, 1.0)


@cache
def constants() -> Constants:
    K3 = math.sqrt(math.pi) / (gamma(THIRD) * gamma(7.0 / 6.0))
    K4 = 18.0 / (5.0 * math.pi)
    K5 = K4 * math.pi ** BULK / (2.0 ** BULK * gauss_value())
    KF = 2.0 ** 7 * math.pi ** 5 / (3.0 ** 1.5 * gamma(THIRD) ** 9)
    return Constants(K3, K4, K5, KF)


def kf_forms() -> dict[str, float]:
    """The three printed expressions for K_F, each evaluated independently."""
    k = constants()
    f21 = gauss_value()
    return {
        "chain": k.K5 ** 2 * k.K3 * 2.0 * 2.0 ** (5.0 / 24.0) / (k.K4 ** 2 * math.pi ** (5.0 / 24.0)),
        "hypergeometric": 2.0 * math.sqrt(math.pi) / (f21 ** 2 * gamma(THIRD) * gamma(7.0 / 6.0)),
        "gamma": 2.0 ** 7 * math.pi ** 5 / (3.0 ** 1.5 * gamma(THIRD) ** 9),
    }


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def cardy_eta(u1, u2, u3, u4):
    return (u2 - u1) * (u4 - u3) / ((u3 - u1) * (u4 - u2))


def cardy_crossing(u1, u2, u3, u4):
    """Probability of a crossing between boundary arcs ``(u1, u2)`` and ``(u3, u4)``."""
    u1, u2, u3, u4 = (np.asarray(v, dtype=float) for v in (u1, u2, u3, u4))
    if np.any(~((u1 < u2) & (u2 < u3) & (u3 < u4))):
        raise DomainError("cardy_crossing needs u1 < u2 < u3 < u4")
    return cardy_of_eta(cardy_eta(u1, u2, u3, u4))


def cardy_of_eta(eta):
    eta = np.asarray(eta, dtype=float)
    if np.any((eta < 0) | (eta > 1)):
        raise DomainError("cross-ratio must lie in [0, 1]")
    pref = 3.0 * gamma(2.0 / 3.0) / gamma(THIRD) ** 2
    return _out(pref * np.cbrt(eta) * hyp2f1(THIRD, 2.0 / 3.0, 4.0 / 3.0, eta))


def _ordered(*vals):
    for lo, hi in zip(vals, vals[1:]):
        if np.any(~(np.asarray(lo) < np.asarray(hi))):
            raise DomainError("boundary points must be strictly increasing")


def three_point_C(u1, u2, u3):
    """Limit density that ``(u1, u2)`` connects to a shrinking interval at ``u3``."""
    _ordered(u1, u2, u3)
    u1, u2, u3 = (np.asarray(v, dtype=float) for v in (u1, u2, u3))
    return _out(constants().K3 * np.cbrt((u2 - u1) / ((u3 - u2) * (u3 - u1))))


def three_point_C_finite(u1, u2, u3, s):
    """Pre-limit probability of reaching ``[u3 - e^-s, u3 + e^-s]``."""
    r = np.exp(-np.asarray(s, dtype=float))
    return cardy_crossing(u1, u2, u3 - r, u3 + r)


def four_point_F(u1, u2, w):
    """Limit density that ``(u1, u2)`` connects to a shrinking neighbourhood of ``w``."""
    _ordered(u1, u2)
    omega = harmonic_measure(w, u1, u2)
    return _out(constants().K4 * (2.0 * np.imag(w)) ** (-BULK)
                * np.sin(math.pi * np.asarray(omega) / 2.0) ** THIRD)


def G_strip(x, y, exponent: float = G_EXPONENT):
    """Strip profile of the five-point function at ``x + iy``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(~((x > 0) & (y > 0) & (y < 1))):
        raise DomainError("G_strip needs x > 0 and 0 < y < 1")
    q = np.exp(-2.0 * math.pi * x)
    # sinh(pi x)^(-1/3) e^(pi x / 3) written without overflow
    head = np.cbrt(2.0 / -np.expm1(-2.0 * math.pi * x))
    sh = np.sinh(math.pi * x)
    sn = np.sin(math.pi * y)
    with np.errstate(over="ignore"):
        ratio = sn ** 2 / (1.0 + (sn / sh) ** 2)
    return _out(head * hyp2f1(-0.5, -THIRD, 7.0 / 6.0, q) * ratio ** exponent)


def five_point_density(u1, u2, u3, w, g_exponent: float = G_EXPONENT):
    """Vectorized five-point function for coordinate arrays."""
    _ordered(u1, u2, u3)
    x, y, d = strip_coordinates(u1, u2, u3, w)
    return _out(constants().K5 * d ** BULK * G_strip(x, y, g_exponent))


def five_point_F(cfg: BoundaryConfig, g_exponent: float = G_EXPONENT) -> float:
    """Limit density that ``(u1, u2)``, a shrinking interval at ``u3`` and a
    shrinking neighbourhood of ``w`` lie in one cluster, given the ``u3`` event."""
    return five_point_density(cfg.u1, cfg.u2, cfg.u3, complex(cfg.w), g_exponent)


def four_point_limit(u1, u2, w):
    """Value of the five-point function as ``u3`` merges into ``u2``."""
    return four_point_F(u1, u2, w)


def triangle_angle(u1, u3, w):
    """Angle at ``w`` in the triangle ``(u1, u3, w)``."""
    w = np.asarray(w, dtype=complex)
    a = u1 - w
    b = u3 - w
    cross = np.real(a) * np.imag(b) - np.imag(a) * np.real(b)
    dot = np.real(a) * np.real(b) + np.imag(a) * np.imag(b)
    return _out(np.abs(np.arctan2(cross, dot)))


def merged_limit(u1, u3, w):
    """Value of the five-point function as ``u2`` merges into ``u1``."""
    k = constants()
    zeta = triangle_angle(u1, u3, w)
    return _out(k.K5 * 2.0 ** THIRD / math.pi ** BULK
                * np.sin(zeta) ** THIRD * np.imag(w) ** (-BULK))


def P2(u1, u3):
    u1 = np.asarray(u1, dtype=float)
    u3 = np.asarray(u3, dtype=float)
    if np.any(u1 == u3):
        raise DomainError("P2 needs distinct points")
    return _out(constants().K3 * 2.0 ** THIRD * np.abs(u1 - u3) ** (-2.0 / 3.0))


def P3(u1, w):
    if np.any(np.imag(w) <= 0):
        raise DomainError("P3 needs a bulk point in the upper half-plane")
    k = constants()
    return _out(k.K4 / 2.0 ** BULK * np.imag(w) ** (11.0 / 48.0)
                * np.abs(u1 - np.asarray(w)) ** (-2.0 / 3.0))


def P4(u1, u3, w):
    if np.any(np.imag(w) <= 0):
        raise DomainError("P4 needs a non-degenerate triangle (w off the real line)")
    _ordered(u1, u3)
    return _out(np.asarray(P2(u1, u3)) * merged_limit(u1, u3, w))


def factorization_sides(u1, u3, w) -> tuple:
    """``(P4^2, K_F P3(u1, w) P3(u3, w) P2(u1, u3))``."""
    lhs = np.asarray(P4(u1, u3, w)) ** 2
    rhs = constants().KF * np.asarray(P3(u1, w)) * np.asarray(P3(u3, w)) * np.asarray(P2(u1, u3))
    return _out(lhs), _out(rhs)
