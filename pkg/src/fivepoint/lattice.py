"""Site percolation on the triangular lattice: sampling, cluster labelling,
connection events and the estimators built on them.

Sites carry planar positions with unit nearest-neighbour spacing.  Two
geometries are provided: a rhombus in axial coordinates (used for the
self-dual crossing) and a rectangle of offset rows whose bottom row plays the
role of the real axis.  Occupations come from Philox keyed by
``(seed, sample index, block of 256 sites)``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np
from numba import njit

from . import rng
from .errors import DomainError

RHOMBUS = "rhombus"
RECTANGLE = "rectangle"
_ROW_HEIGHT = math.sqrt(3.0) / 2.0

_MODE_HALF = 0
_MODE_THRESHOLD = 1
_MODE_ALL = 2
_MODE_NONE = 3


class LatticeRegion:
    """A finite piece of the triangular lattice.

    ``width`` is the number of sites per row and sets the length unit ``L``;
    ``height`` is the number of rows.
    """

    def __init__(self, width: int, height: int | None = None, geometry: str = RECTANGLE):
        if geometry not in (RHOMBUS, RECTANGLE):
            raise DomainError(f"unknown geometry {geometry!r}")
        height = width if height is None else height
        if width < 2 or height < 2:
            raise DomainError("width and height must be at least 2")
        self.width = int(width)
        self.height = int(height)
        self.geometry = geometry

    @classmethod
    def half_plane(cls, L: int, aspect: float = 0.6) -> "LatticeRegion":
        """Rectangle of width ``L`` whose height is ``aspect * L`` in length units."""
        return cls(L, int(round(aspect * L / _ROW_HEIGHT)) + 1, RECTANGLE)

    @classmethod
    def conformal_rectangle(cls, L: int, aspect: float) -> "LatticeRegion":
        """Rectangle of width ``L`` and physical width/height ratio ``aspect``."""
        return cls(L, int(round((L - 1) / aspect / _ROW_HEIGHT)) + 1, RECTANGLE)

    @property
    def L(self) -> int:
        return self.width

    @property
    def n_sites(self) -> int:
        return self.width * self.height

    def describe(self) -> dict:
        return {"geometry": self.geometry, "width": self.width, "height": self.height}

    def site(self, i: int, j: int) -> int:
        return j * self.width + i

    @cached_property
    def positions(self) -> np.ndarray:
        j, i = np.divmod(np.arange(self.n_sites), self.width)
        if self.geometry == RHOMBUS:
            x = i + 0.5 * j
        else:
            x = i + 0.5 * (j % 2)
        return np.column_stack([x.astype(float), j * _ROW_HEIGHT])

    @cached_property
    def edges(self) -> np.ndarray:
        """Each nearest-neighbour pair once, as an ``(E, 2)`` array of site indices."""
        W, H = self.width, self.height
        idx = np.arange(self.n_sites).reshape(H, W)
        pairs = [np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()])]
        if self.geometry == RHOMBUS:
            # axial neighbours (0, +1) and (-1, +1)
            pairs.append(np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()]))
            pairs.append(np.column_stack([idx[:-1, 1:].ravel(), idx[1:, :-1].ravel()]))
        else:
            for j in range(H - 1):
                row, up = idx[j], idx[j + 1]
                pairs.append(np.column_stack([row, up]))
                if j % 2 == 0:
                    pairs.append(np.column_stack([row[1:], up[:-1]]))
                else:
                    pairs.append(np.column_stack([row[:-1], up[1:]]))
        return np.ascontiguousarray(np.concatenate(pairs).astype(np.int64))

    def neighbour_counts(self) -> np.ndarray:
        e = self.edges
        return np.bincount(e.ravel(), minlength=self.n_sites)

    # -- site sets --------------------------------------------------------
    def side(self, name: str) -> np.ndarray:
        W, H = self.width, self.height
        idx = np.arange(self.n_sites).reshape(H, W)
        sides = {"bottom": idx[0], "top": idx[-1], "left": idx[:, 0], "right": idx[:, -1]}
        if name not in sides:
            raise DomainError(f"unknown side {name!r}")
        return np.ascontiguousarray(sides[name])

    def bottom_arc(self, x0: float, x1: float) -> np.ndarray:
        """Bottom-row sites with ``x0 <= x / L <= x1``."""
        row = self.side("bottom")
        x = self.positions[row, 0] / self.L
        out = row[(x >= x0) & (x <= x1)]
        if out.size == 0:
            raise DomainError("arc contains no sites")
        return out

    def ball(self, centre: complex, radius: float) -> np.ndarray:
        """Sites within ``radius * L`` of ``centre * L`` (both in units of L)."""
        c = complex(centre) * self.L
        d = np.hypot(self.positions[:, 0] - c.real, self.positions[:, 1] - c.imag)
        out = np.flatnonzero(d <= radius * self.L)
        if out.size == 0:
            raise DomainError(f"neighbourhood of {centre} with radius {radius} contains no sites")
        return out


# ---------------------------------------------------------------------------
# sampling and clusters

@njit(cache=True, nogil=True)
def _fill(open_, index, k0, k1, mode, thresh):
    n = open_.shape[0]
    if mode == _MODE_ALL:
        open_[:] = True
        return
    if mode == _MODE_NONE:
        open_[:] = False
        return
    if mode == _MODE_HALF:
        for b in range((n + 255) // 256):
            w = rng.philox_block(np.uint64(index), np.uint64(b), np.uint64(rng.STREAM_LATTICE),
                                 np.uint64(0), k0, k1)
            for q in range(4):
                word = w[q]
                base = b * 256 + q * 64
                for bit in range(64):
                    s = base + bit
                    if s >= n:
                        return
                    open_[s] = ((word >> np.uint64(bit)) & np.uint64(1)) == np.uint64(1)
    else:
        for b in range((n + 3) // 4):
            w = rng.philox_block(np.uint64(index), np.uint64(b), np.uint64(rng.STREAM_LATTICE),
                                 np.uint64(1), k0, k1)
            for q in range(4):
                s = b * 4 + q
                if s >= n:
                    return
                open_[s] = w[q] < thresh


@njit(cache=True, nogil=True, inline="always")
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True, nogil=True)
def _union_all(open_, edges, parent, size):
    for i in range(parent.shape[0]):
        parent[i] = i
        size[i] = 1
    for e in range(edges.shape[0]):
        a = edges[e, 0]
        b = edges[e, 1]
        if open_[a] and open_[b]:
            ra = _find(parent, a)
            rb = _find(parent, b)
            if ra != rb:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]


@njit(cache=True, nogil=True)
def _labels(open_, edges):
    n = open_.shape[0]
    parent = np.empty(n, dtype=np.int64)
    size = np.empty(n, dtype=np.int64)
    _union_all(open_, edges, parent, size)
    out = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if open_[i]:
            out[i] = _find(parent, i)
    return out


def _mode(p: float) -> tuple[int, np.uint64]:
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    if p == 0.5:
        return _MODE_HALF, np.uint64(0)
    if p == 1.0:
        return _MODE_ALL, np.uint64(0)
    if p == 0.0:
        return _MODE_NONE, np.uint64(0)
    return _MODE_THRESHOLD, np.uint64(int(p * 2.0 ** 64))


def sample_configuration(region: LatticeRegion, seed: int, index: int, p: float = 0.5) -> np.ndarray:
    """Boolean occupation of every site for sample ``index``."""
    mode, thresh = _mode(p)
    k0, k1 = rng.seed_key(seed)
    out = np.empty(region.n_sites, dtype=np.bool_)
    _fill(out, index, np.uint64(k0), np.uint64(k1), mode, thresh)
    return out


def clusters(occupancy: np.ndarray, region: LatticeRegion) -> np.ndarray:
    """Root site of each open site's cluster (``-1`` for closed sites)."""
    occ = np.ascontiguousarray(occupancy, dtype=np.bool_)
    if occ.shape != (region.n_sites,):
        raise DomainError("occupancy does not match the region")
    return _labels(occ, region.edges)


def n_clusters(labels: np.ndarray) -> int:
    return int(np.unique(labels[labels >= 0]).size)


# ---------------------------------------------------------------------------
# events

CROSSING = "crossing"
BOUNDARY_POINT = "boundary_point"
BULK_POINT = "bulk_point"
TWO_POINT = "two_point"
THREE_POINT = "three_point"
FOUR_POINT = "four_point"
KINDS = (CROSSING, BOUNDARY_POINT, BULK_POINT, TWO_POINT, THREE_POINT, FOUR_POINT)


@dataclass(frozen=True)
class EventSpec:
    """A connection event.  Coordinates are in units of ``L``; boundary
    points sit on the bottom row, ``w`` in the bulk."""

    kind: str
    epsilon: float = 0.0
    sides: tuple[str, str] | None = None
    arc: tuple[float, float] | None = None
    u1: float | None = None
    u3: float | None = None
    w: complex | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown event kind {self.kind!r}")
        need = {
            CROSSING: ("sides",),
            BOUNDARY_POINT: ("arc", "u3"),
            BULK_POINT: ("arc", "w"),
            TWO_POINT: ("u1", "u3"),
            THREE_POINT: ("u1", "w"),
            FOUR_POINT: ("u1", "u3", "w"),
        }[self.kind]
        for name in need:
            if getattr(self, name) is None:
                raise DomainError(f"{self.kind} needs {name}")
        if self.kind != CROSSING and not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.w is not None and not complex(self.w).imag > 0:
            raise DomainError("w must lie above the bottom row")

    @property
    def label(self) -> str:
        def c(z):
            z = complex(z)
            return f"{z.real:g}+{z.imag:g}i"
        parts = {
            CROSSING: lambda: f"{self.sides[0]}-{self.sides[1]}",
            BOUNDARY_POINT: lambda: f"arc={self.arc[0]:g}:{self.arc[1]:g},u3={self.u3:g}",
            BULK_POINT: lambda: f"arc={self.arc[0]:g}:{self.arc[1]:g},w={c(self.w)}",
            TWO_POINT: lambda: f"u1={self.u1:g},u3={self.u3:g}",
            THREE_POINT: lambda: f"u={self.u1:g},w={c(self.w)}",
            FOUR_POINT: lambda: f"u1={self.u1:g},u3={self.u3:g},w={c(self.w)}",
        }[self.kind]()
        return f"{self.kind}[{parts}]"

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.w is not None:
            d["w"] = [complex(self.w).real, complex(self.w).imag]
        return d

    def site_sets(self, region: LatticeRegion) -> list[np.ndarray]:
        eps = self.epsilon
        if self.kind == CROSSING:
            return [region.side(self.sides[0]), region.side(self.sides[1])]
        sets = []
        if self.arc is not None:
            sets.append(region.bottom_arc(*self.arc))
        if self.u1 is not None:
            sets.append(region.ball(complex(self.u1, 0.0), eps))
        if self.u3 is not None:
            sets.append(region.ball(complex(self.u3, 0.0), eps))
        if self.w is not None:
            sets.append(region.ball(complex(self.w), eps))
        return sets


@njit(cache=True, nogil=True)
def _run(start, stop, k0, k1, mode, thresh, n_sites, edges, set_ptr, set_idx, ev_ptr, ev_sets,
         outcomes):
    open_ = np.empty(n_sites, dtype=np.bool_)
    parent = np.empty(n_sites, dtype=np.int64)
    size = np.empty(n_sites, dtype=np.int64)
    epoch = np.full(n_sites, -1, dtype=np.int64)
    count = np.zeros(n_sites, dtype=np.int64)
    n_events = ev_ptr.shape[0] - 1
    stamp = 0
    for s in range(start, stop):
        _fill(open_, s, k0, k1, mode, thresh)
        _union_all(open_, edges, parent, size)
        for ev in range(n_events):
            stamp += 1
            nset = ev_ptr[ev + 1] - ev_ptr[ev]
            found = False
            for q in range(nset):
                st = ev_sets[ev_ptr[ev] + q]
                for a in range(set_ptr[st], set_ptr[st + 1]):
                    site = set_idx[a]
                    if not open_[site]:
                        continue
                    r = _find(parent, site)
                    if q == 0:
                        if epoch[r] != stamp:
                            epoch[r] = stamp
                            count[r] = 1
                            if nset == 1:
                                found = True
                    elif epoch[r] == stamp and count[r] == q:
                        count[r] = q + 1
                        if q == nset - 1:
                            found = True
                            break
            outcomes[s - start, ev] = found


@dataclass(frozen=True)
class Estimate:
    event: str
    hits: int
    n: int
    p_hat: float
    stderr: float
    seed: int
    L: int
    epsilon: float

    @classmethod
    def from_hits(cls, event: str, hits: int, n: int, seed: int, L: int, epsilon: float):
        if not 0 <= hits <= n:
            raise DomainError("need 0 <= hits <= n")
        p = hits / n
        return cls(event, int(hits), int(n), p, math.sqrt(p * (1.0 - p) / n), seed, L, epsilon)

    def as_row(self) -> dict:
        return asdict(self)


def event_outcomes(events: list[EventSpec], region: LatticeRegion, n_samples: int, seed: int,
                   p: float = 0.5, threads: int = 1, first_sample: int = 0) -> np.ndarray:
    """Per-sample indicator of every event, shape ``(n_samples, len(events))``.

    All events are evaluated on the same occupations (coupled samples).
    """
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    mode, thresh = _mode(p)
    k0, k1 = rng.seed_key(seed)
    all_sets: list[np.ndarray] = []
    ev_sets: list[int] = []
    ev_ptr = [0]
    for ev in events:
        for s in ev.site_sets(region):
            all_sets.append(s)
            ev_sets.append(len(all_sets) - 1)
        ev_ptr.append(len(ev_sets))
    set_ptr = np.concatenate([[0], np.cumsum([len(s) for s in all_sets])]).astype(np.int64)
    set_idx = np.concatenate(all_sets).astype(np.int64)
    ev_ptr_a = np.array(ev_ptr, dtype=np.int64)
    ev_sets_a = np.array(ev_sets, dtype=np.int64)
    out = np.zeros((n_samples, len(events)), dtype=np.bool_)
    edges = region.edges

    def run(lo, hi):
        _run(first_sample + lo, first_sample + hi, np.uint64(k0), np.uint64(k1), mode, thresh,
             region.n_sites, edges, set_ptr, set_idx, ev_ptr_a, ev_sets_a, out[lo:hi])

    if threads <= 1:
        run(0, n_samples)
    else:
        bounds = np.linspace(0, n_samples, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: run(*b), zip(bounds[:-1], bounds[1:])))
    return out


def measure_many(events: list[EventSpec], region: LatticeRegion, n_samples: int, seed: int,
                 p: float = 0.5, threads: int = 1) -> list[Estimate]:
    out = event_outcomes(events, region, n_samples, seed, p, threads)
    hits = out.sum(axis=0)
    return [Estimate.from_hits(ev.label, int(h), n_samples, seed, region.L, ev.epsilon)
            for ev, h in zip(events, hits)]


def measure(event: EventSpec, region: LatticeRegion, n_samples: int, seed: int,
            p: float = 0.5, threads: int = 1) -> Estimate:
    """Monte Carlo estimate of the probability of ``event``."""
    return measure_many([event], region, n_samples, seed, p, threads)[0]


# ---------------------------------------------------------------------------
# fits and ratios

def exponent_fit(estimates) -> tuple[float, float]:
    """Weighted least-squares slope of ``log p`` against ``log epsilon``.

    ``estimates`` holds ``(epsilon, p_hat, stderr)`` triples; the weight of a
    point is the inverse variance of ``log p_hat`` (delta method).  Points
    with ``p_hat <= 0`` are dropped with a warning.
    """
    pts = [(float(e), float(p), float(s)) for e, p, s in estimates]
    if len(pts) < 4:
        raise DomainError("exponent_fit needs at least four epsilon values")
    kept = [t for t in pts if t[1] > 0]
    if len(kept) < len(pts):
        warnings.warn(f"dropped {len(pts) - len(kept)} non-positive estimates", stacklevel=2)
    if len(kept) < 2:
        raise DomainError("fewer than two positive estimates")
    x = np.log([t[0] for t in kept])
    y = np.log([t[1] for t in kept])
    sig = np.array([t[2] / t[1] for t in kept])
    if np.all(sig == 0):
        wts = np.ones_like(x)
    else:
        floor = np.min(sig[sig > 0]) if np.any(sig > 0) else 1.0
        wts = 1.0 / np.maximum(sig, floor) ** 2
    sw = wts.sum()
    xm = (wts * x).sum() / sw
    ym = (wts * y).sum() / sw
    sxx = (wts * (x - xm) ** 2).sum()
    slope = (wts * (x - xm) * (y - ym)).sum() / sxx
    err = 0.0 if np.all(sig == 0) else math.sqrt(1.0 / sxx)
    return float(slope), float(err)


def boundary_family(eps_values, arc=(0.1, 0.3), u3=0.7) -> list[EventSpec]:
    return [EventSpec(BOUNDARY_POINT, e, arc=arc, u3=u3) for e in eps_values]


def bulk_family(eps_values, arc=(0.0, 1.0), w=complex(0.5, 0.3)) -> list[EventSpec]:
    return [EventSpec(BULK_POINT, e, arc=arc, w=w) for e in eps_values]


# Region aspect and (u1, u3, w) anchors used for the factorization check: a
# central bulk point and an off-centre one, both well inside the region.
FACTOR_ASPECT = 0.8
FACTOR_GEOMETRIES = ((0.25, 0.75, complex(0.5, 0.35)), (0.25, 0.75, complex(0.4, 0.3)))


@dataclass(frozen=True)
class FactorizationResult:
    ratio: float
    err: float
    censored: bool
    estimates: tuple  # (P4, P3(u1, w), P3(u3, w), P2)

    def as_dict(self) -> dict:
        return {"ratio": self.ratio, "err": self.err, "censored": self.censored,
                "estimates": [e.as_row() for e in self.estimates]}


def factorization_events(u1: float, u3: float, w: complex, eps: float) -> list[EventSpec]:
    return [EventSpec(FOUR_POINT, eps, u1=u1, u3=u3, w=w),
            EventSpec(THREE_POINT, eps, u1=u1, w=w),
            EventSpec(THREE_POINT, eps, u1=u3, w=w),
            EventSpec(TWO_POINT, eps, u1=u1, u3=u3)]


def ratio_from_estimates(est) -> FactorizationResult:
    p4, pa, pb, p2 = est
    if min(e.hits for e in est) == 0:
        return FactorizationResult(math.nan, math.nan, True, tuple(est))
    ratio = p4.p_hat ** 2 / (pa.p_hat * pb.p_hat * p2.p_hat)
    rel = math.sqrt(4 * (p4.stderr / p4.p_hat) ** 2 + (pa.stderr / pa.p_hat) ** 2
                    + (pb.stderr / pb.p_hat) ** 2 + (p2.stderr / p2.p_hat) ** 2)
    return FactorizationResult(ratio, ratio * rel, False, tuple(est))


def factorization_ratio(u1: float, u3: float, w: complex, eps: float, L: int, n_samples: int,
                        seed: int, region: LatticeRegion | None = None,
                        threads: int = 1) -> FactorizationResult:
    """``P4^2 / (P3(u1, w) P3(u3, w) P2(u1, u3))`` for epsilon-neighbourhood events.

    Errors are propagated from the four estimates as if independent (delta
    method); the four events share samples, which makes this conservative.
    """
    region = region or LatticeRegion.half_plane(L)
    est = measure_many(factorization_events(u1, u3, w, eps), region, n_samples, seed,
                       threads=threads)
    return ratio_from_estimates(est)


def factorization_ratios(geometries, eps: float, L: int, n_samples: int, seed: int,
                         region: LatticeRegion | None = None,
                         threads: int = 1) -> list[FactorizationResult]:
    """Ratios for several ``(u1, u3, w)`` anchors, all measured on the same samples."""
    region = region or LatticeRegion.half_plane(L, FACTOR_ASPECT)
    events, slots, index = [], [], {}
    for u1, u3, w in geometries:
        slot = []
        for ev in factorization_events(u1, u3, w, eps):
            key = ev
            if key not in index:
                index[key] = len(events)
                events.append(ev)
            slot.append(index[key])
        slots.append(slot)
    est = measure_many(events, region, n_samples, seed, threads=threads)
    return [ratio_from_estimates([est[i] for i in slot]) for slot in slots]


# ---------------------------------------------------------------------------
# conformal rectangles

def rectangle_aspect(eta: float) -> float:
    """Width/height of the rectangle whose left and right sides are the arcs
    ``(u1, u2)`` and ``(u3, u4)`` of a half-plane configuration with cross-ratio ``eta``."""
    from scipy.special import ellipk

    if not 0.0 < eta < 1.0:
        raise DomainError("cross-ratio must lie in (0, 1)")
    return float(ellipk(1.0 - eta) / ellipk(eta))
