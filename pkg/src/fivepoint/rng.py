"""Counter-based random numbers (Philox4x64-10).

Every draw is a pure function of ``(key, counter)``, so a Monte Carlo sample
or path can regenerate its own stream from ``(seed, index)`` without any
shared generator state.  The block function reproduces the output of
:class:`numpy.random.Philox` bit for bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_ROUNDS = 10

# stream tags keep the lattice and SLE engines from ever sharing counters
STREAM_LATTICE = 1
STREAM_SLE = 2

_TWO_M53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    lolo = a_lo * b_lo
    lohi = a_lo * b_hi
    hilo = a_hi * b_lo
    hihi = a_hi * b_hi
    cross = (lolo >> _S32) + (lohi & _LO32) + (hilo & _LO32)
    hi = hihi + (lohi >> _S32) + (hilo >> _S32) + (cross >> _S32)
    lo = a * b
    return hi, lo


@njit(cache=True, nogil=True)
def philox_block(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on one 256-bit counter; returns four uint64 words."""
    c0 = np.uint64(c0)
    c1 = np.uint64(c1)
    c2 = np.uint64(c2)
    c3 = np.uint64(c3)
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    for r in range(_ROUNDS):
        if r > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@njit(cache=True, nogil=True, inline="always")
def bits_to_unit(x):
    """Map 64 random bits to a double in the open interval (0, 1)."""
    return (np.float64(x >> _S11) + 0.5) * _TWO_M53


@njit(cache=True, nogil=True)
def normal_quad(c0, c1, c2, c3, k0, k1):
    """Four standard normals from one Philox block (Box-Muller on two pairs)."""
    x0, x1, x2, x3 = philox_block(c0, c1, c2, c3, k0, k1)
    r0 = np.sqrt(-2.0 * np.log(bits_to_unit(x0)))
    a0 = 2.0 * np.pi * bits_to_unit(x1)
    r1 = np.sqrt(-2.0 * np.log(bits_to_unit(x2)))
    a1 = 2.0 * np.pi * bits_to_unit(x3)
    return r0 * np.cos(a0), r0 * np.sin(a0), r1 * np.cos(a1), r1 * np.sin(a1)


def seed_key(seed: int) -> tuple[int, int]:
    """Split a non-negative integer seed (up to 128 bits) into the Philox key."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return seed & 0xFFFFFFFFFFFFFFFF, (seed >> 64) & 0xFFFFFFFFFFFFFFFF


def raw_words(seed: int, counter: tuple[int, int, int, int]) -> np.ndarray:
    """The four output words for ``counter`` under ``seed`` (python-level helper)."""
    k0, k1 = seed_key(seed)
    out = philox_block(np.uint64(counter[0]), np.uint64(counter[1]),
                       np.uint64(counter[2]), np.uint64(counter[3]),
                       np.uint64(k0), np.uint64(k1))
    return np.array(out, dtype=np.uint64)
