"""Upper half-plane geometry: Moebius normalization, the map onto the strip,
harmonic measure and conformal radius.

The strip is ``S = {0 < Re z, 0 < Im z < 1}``; the map ``psi`` sends
``(H; u1, u2, u3)`` to ``(S; i, 0, infinity)``.  It factors as a Moebius map
sending ``u1, u2, u3`` to ``0, 1, infinity`` followed by the inverse of
``z -> (cosh(pi z) + 1) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class BoundaryConfig:
    """Marked boundary points ``u1 < u2 < u3`` and a bulk point ``w``.

    ``u3 = math.inf`` is allowed and means the third point sits at infinity.
    """

    u1: float
    u2: float
    u3: float
    w: complex

    def __post_init__(self):
        if not (self.u1 < self.u2 < self.u3):
            raise DomainError(f"need u1 < u2 < u3, got {self.u1}, {self.u2}, {self.u3}")
        if math.isinf(self.u1) or math.isinf(self.u2):
            raise DomainError("only u3 may be infinite")
        if not complex(self.w).imag > 0:
            raise DomainError(f"bulk point must lie in the upper half-plane, got {self.w}")

    @property
    def u3_at_infinity(self) -> bool:
        return math.isinf(self.u3)

    def scaled(self, lam: float) -> "BoundaryConfig":
        return BoundaryConfig(lam * self.u1, lam * self.u2, lam * self.u3, lam * complex(self.w))

    def translated(self, c: float) -> "BoundaryConfig":
        return BoundaryConfig(self.u1 + c, self.u2 + c, self.u3 + c, complex(self.w) + c)


@dataclass(frozen=True)
class MobiusMap:
    """``z -> (a z + b) / (c z + d)`` with real coefficients."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if self.det == 0:
            raise DomainError("degenerate Moebius map (ad - bc = 0)")

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def preserves_half_plane(self) -> bool:
        return self.det > 0

    def __call__(self, z):
        if np.isscalar(z) and math.isinf(abs(z)):
            return self.a / self.c if self.c != 0 else math.inf
        return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative(self, z):
        return self.det / (self.c * z + self.d) ** 2

    def normalized(self) -> "MobiusMap":
        s = math.sqrt(abs(self.det))
        return MobiusMap(self.a / s, self.b / s, self.c / s, self.d / s)

    def apply(self, cfg: BoundaryConfig) -> BoundaryConfig:
        """Image of a configuration; the map must keep ``u1 < u2 < u3`` ordered."""
        return BoundaryConfig(float(self(cfg.u1)), float(self(cfg.u2)),
                              float(self(cfg.u3)), complex(self(complex(cfg.w))))


@dataclass(frozen=True)
class StripPoint:
    x: float
    y: float
    deriv_mod: float

    def __post_init__(self):
        if not (self.x > 0 and 0 < self.y < 1 and self.deriv_mod > 0):
            raise DomainError(f"not a strip point: {self}")


def mobius_to_normalized(cfg: BoundaryConfig) -> MobiusMap:
    """The Moebius self-map of H sending ``u1, u2, u3`` to ``0, 1, infinity``."""
    u1, u2, u3 = cfg.u1, cfg.u2, cfg.u3
    if cfg.u3_at_infinity:
        m = MobiusMap(1.0, -u1, 0.0, u2 - u1)
    else:
        m = MobiusMap(u2 - u3, -u1 * (u2 - u3), u2 - u1, -u3 * (u2 - u1))
    return m.normalized()


def _check_upper(w):
    if np.any(np.imag(w) <= 0):
        raise DomainError("bulk point must lie in the upper half-plane")


def normalized_point(u1, u2, u3, w):
    """Image of ``w`` under the map sending ``u1, u2, u3`` to ``0, 1, infinity``
    and the modulus of that map's derivative at ``w``."""
    w = np.asarray(w, dtype=complex)
    u3 = np.asarray(u3, dtype=float)
    inf = np.isinf(u3)
    u3f = np.where(inf, 0.0, u3)
    with np.errstate(invalid="ignore", divide="ignore"):
        zeta_fin = (w - u1) * (u2 - u3f) / ((w - u3f) * (u2 - u1))
        d_fin = np.abs((u3f - u2) * (u3f - u1) / ((u2 - u1) * (w - u3f) ** 2))
    zeta = np.where(inf, (w - u1) / (u2 - u1), zeta_fin)
    dmod = np.where(inf, 1.0 / np.abs(np.asarray(u2 - u1, dtype=float)), d_fin)
    return zeta, dmod


def halfplane_to_strip(zeta):
    """Inverse of ``z -> (cosh(pi z) + 1) / 2`` from H onto the strip.

    Uses ``cosh(pi z / 2) = sqrt(zeta)`` and ``sinh(pi z / 2) = sqrt(zeta - 1)``;
    both principal roots lie in the first quadrant, so their sum never cancels.
    """
    zeta = np.asarray(zeta, dtype=complex)
    return (2.0 / math.pi) * np.log(np.sqrt(zeta) + np.sqrt(zeta - 1.0))


def strip_to_halfplane(z):
    return (np.cosh(math.pi * np.asarray(z, dtype=complex)) + 1.0) / 2.0


def halfplane_to_strip_derivative(zeta):
    zeta = np.asarray(zeta, dtype=complex)
    return 1.0 / (math.pi * np.sqrt(zeta) * np.sqrt(zeta - 1.0))


def strip_coordinates(u1, u2, u3, w):
    """Vectorized ``(x, y, |psi'(w)|)`` for configurations given as arrays."""
    _check_upper(w)
    zeta, d2 = normalized_point(u1, u2, u3, w)
    z = halfplane_to_strip(zeta)
    d1 = np.abs(halfplane_to_strip_derivative(zeta))
    return np.real(z), np.imag(z), d1 * d2


def strip_map(cfg: BoundaryConfig) -> StripPoint:
    x, y, d = strip_coordinates(cfg.u1, cfg.u2, cfg.u3, complex(cfg.w))
    return StripPoint(float(x), float(y), float(d))


def harmonic_measure(w, a, b):
    """Harmonic measure of the boundary interval ``(a, b)`` seen from ``w``."""
    _check_upper(w)
    if np.any(np.asarray(a) >= np.asarray(b)):
        raise DomainError("need a < b")
    w = np.asarray(w, dtype=complex)
    x, y = np.real(w), np.imag(w)
    out = (np.arctan2(y, x - b) - np.arctan2(y, x - a)) / math.pi
    return float(out) if out.ndim == 0 else out


def conformal_radius_halfplane(w):
    _check_upper(w)
    out = 2.0 * np.imag(w)
    return float(out) if np.ndim(out) == 0 else out


def disc_map_derivative(w):
    """``|phi'(w)|`` for a map of H onto the unit disc with ``phi(w) = 0``."""
    _check_upper(w)
    out = 1.0 / (2.0 * np.imag(w))
    return float(out) if np.ndim(out) == 0 else out
