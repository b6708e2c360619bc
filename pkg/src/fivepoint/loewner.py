"""Chordal Loewner evolution driven by SLE(kappa; rho) and the martingale
observables built on it.

The driving value ``u2`` follows

    du2 = sqrt(kappa) dB + sum_i rho_i / (u2 - x_i) dt,

every tracked point ``z`` follows ``dz = 2 dt / (z - u2)``, and
``log g'_t(z)`` accumulates ``-2 dt / (z - u2)^2``.  Paths are integrated by
Euler-Maruyama.  The step is the largest dyadic fraction ``noise_unit * 2^-k``
not exceeding ``min(dt_base, c * d^2 / kappa)``, where ``d`` is the distance
from ``u2`` to the nearest tracked point.  Each path draws its noise from its
own Philox stream keyed by ``(seed, path index)``, so results do not depend on
how paths are scheduled across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit
from scipy import integrate

from . import rng
from .conformal import BoundaryConfig, harmonic_measure
from .errors import DomainError
from .formulas import BULK, G_EXPONENT, THIRD, cardy_crossing, five_point_density, three_point_C

REASON_HORIZON = 0
REASON_BULK = 1
REASON_POINT = 2  # + index of the swallowed boundary point

_MAX_REJECTS = 60


@dataclass(frozen=True)
class SdeParams:
    kappa: float = 6.0
    rho1: float = 0.0
    rho3: float = 0.0
    dt_base: float = 1e-4
    dt_adapt_c: float = 0.01
    swallow_eps: float = 1e-5
    horizon: float = 1.0
    noise_unit: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError("kappa must be positive")
        if not (self.dt_base > 0 and self.dt_adapt_c > 0 and self.swallow_eps > 0):
            raise DomainError("dt_base, dt_adapt_c and swallow_eps must be positive")
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")
        if not (self.noise_unit > 0 and math.log2(self.noise_unit).is_integer()):
            raise DomainError("noise_unit must be a power of two")


SLE6 = SdeParams()
SLE6_CONDITIONED = SdeParams(rho1=2.0, rho3=-2.0)


@dataclass
class LoewnerState:
    t: float
    u1: float
    u2: float
    u3: float
    w: complex | None = None
    log_gw: float = 0.0
    log_gu3: float = 0.0
    alive_u1: bool = True
    alive_u3: bool = True
    alive_w: bool = True

    @classmethod
    def initial(cls, cfg: BoundaryConfig, track_w: bool = True) -> "LoewnerState":
        return cls(0.0, cfg.u1, cfg.u2, cfg.u3, complex(cfg.w) if track_w else None)


def drift(u1: float, u2: float, u3: float, params: SdeParams) -> float:
    """Force-point drift ``rho1 / (u2 - u1) + rho3 / (u2 - u3)``."""
    return params.rho1 / (u2 - u1) + params.rho3 / (u2 - u3)


def step(state: LoewnerState, params: SdeParams, noise: float, dt: float | None = None) -> LoewnerState:
    """One Euler-Maruyama step with a given standard-normal ``noise``.

    Raises :class:`DomainError` if a tracked point would cross the driving
    value; callers halve ``dt`` and retry.
    """
    u1, u2, u3, w = state.u1, state.u2, state.u3, state.w
    dists = [u2 - u1, u3 - u2] + ([abs(w - u2)] if w is not None else [])
    if min(dists) < params.swallow_eps:
        raise DomainError("a tracked point is already within swallow_eps of u2")
    if dt is None:
        dt = min(params.dt_base, params.dt_adapt_c * min(dists) ** 2 / params.kappa)
    u2n = u2 + drift(u1, u2, u3, params) * dt + math.sqrt(params.kappa * dt) * noise
    u1n = u1 + 2.0 * dt / (u1 - u2)
    u3n = u3 + 2.0 * dt / (u3 - u2)
    if not (u1n < u2n < u3n):
        raise DomainError("step would cross a force point")
    wn = None
    log_gw = state.log_gw
    if w is not None:
        wn = w + 2.0 * dt / (w - u2)
        if wn.imag <= 0:
            raise DomainError("step would push w across the real line")
        log_gw += (-2.0 / (w - u2) ** 2).real * dt
    return replace(state, t=state.t + dt, u1=u1n, u2=u2n, u3=u3n, w=wn, log_gw=log_gw,
                   log_gu3=state.log_gu3 - 2.0 * dt / (u3 - u2) ** 2)


# ---------------------------------------------------------------------------
# compiled engine
#
# The driving Brownian motion of each path is a dyadic Brownian tree: on every
# unit time interval the endpoint increment is drawn first and midpoints are
# filled in by Brownian-bridge refinement, each node's normal addressed by
# (path, interval, level, node index).  A step of size 2^-k therefore reads
# B(t + 2^-k) - B(t) from one fixed Brownian path, and halving the step size
# refines the same path instead of drawing a new one.
#
# record layout: [t, u2, Re w, Im w, log|g'(w)|, x_0 .. x_{m-1}, log g'(x_0) .. ]

_LEVELS = 62
_TICKS = 1 << _LEVELS
_DEEP_LEVEL = 255


@njit(cache=True, nogil=True)
def tree_normal(k0, k1, path, interval, level, index, blk, vals):
    """Normal for node ``index`` at ``level``; four consecutive nodes share one
    Philox block, cached per level in ``blk`` / ``vals``."""
    b = index >> 2
    if blk[level] != b:
        g0, g1, g2, g3 = rng.normal_quad(np.uint64(path), np.uint64(interval),
                                         np.uint64((rng.STREAM_SLE << 8) | level),
                                         np.uint64(b), k0, k1)
        vals[level, 0] = g0
        vals[level, 1] = g1
        vals[level, 2] = g2
        vals[level, 3] = g3
        blk[level] = b
    return vals[level, index & 3]


@njit(cache=True, nogil=True)
def _descend(k, p, i0, path, k0, k1, node, left, right, blk, vals, unit):
    """Fill levels 1..k of the cached tree path containing tick ``p``."""
    for lv in range(1, k + 1):
        j = p >> (_LEVELS - lv)
        if node[lv] == j:
            continue
        h_parent = unit * 2.0 ** (-(lv - 1))
        mid = (0.5 * (left[lv - 1] + right[lv - 1])
               + 0.5 * math.sqrt(h_parent) * tree_normal(k0, k1, path, i0, lv, j >> 1, blk, vals))
        if j & 1:
            left[lv] = mid
            right[lv] = right[lv - 1]
        else:
            left[lv] = left[lv - 1]
            right[lv] = mid
        node[lv] = j


@njit(cache=True, nogil=True)
def _reset_interval(i0, path, k0, k1, node, left, right, blk, vals, unit):
    node[:] = -1
    blk[:] = -1
    node[0] = 0
    left[0] = 0.0
    right[0] = math.sqrt(unit) * tree_normal(k0, k1, path, i0, 0, 0, blk, vals)


@njit(cache=True, nogil=True)
def _before(i0, p, ti, tp):
    return i0 < ti or (i0 == ti and p < tp)


@njit(cache=True, nogil=True)
def _integrate_path(xs0, rho, track_w, w0, kappa, unit, k_min, dt_c, eps, hor_i, hor_p,
                    cp_i, cp_p, k0, k1, path, rec_cp, rec_stop):
    m = xs0.shape[0]
    xs = xs0.copy()
    lg = np.zeros(m)
    u2 = rec_stop[1]
    w = w0
    lgw = 0.0
    i0 = 0
    p = 0
    extra = 0.0
    deep = 0
    ncp = cp_i.shape[0]
    cp = 0
    reason = REASON_HORIZON
    node = np.full(_LEVELS + 1, -1, dtype=np.int64)
    left = np.zeros(_LEVELS + 1)
    right = np.zeros(_LEVELS + 1)
    blk = np.full(_DEEP_LEVEL + 1, -1, dtype=np.int64)
    vals = np.zeros((_DEEP_LEVEL + 1, 4))
    _reset_interval(i0, path, k0, k1, node, left, right, blk, vals, unit)
    sq_k = math.sqrt(kappa)
    while True:
        t = (i0 + p / _TICKS) * unit + extra
        while cp < ncp and not _before(i0, p, cp_i[cp], cp_p[cp]):
            _write(rec_cp[cp], t, u2, w, lgw, xs, lg)
            cp += 1
        dmin = 1e300
        hit = -1
        for i in range(m):
            d = abs(xs[i] - u2)
            if d < eps and hit < 0:
                hit = i
            if d < dmin:
                dmin = d
        if hit >= 0:
            reason = REASON_POINT + hit
            break
        if track_w:
            dw = abs(w - u2)
            if w.imag < eps or dw < eps:
                reason = REASON_BULK
                break
            if dw < dmin:
                dmin = dw
        if not _before(i0, p, hor_i, hor_p):
            reason = REASON_HORIZON
            break
        # finest level needed by the adaptive rule, the grid alignment and the next target
        want = dt_c * dmin * dmin / kappa
        k = k_min
        if want < unit * 2.0 ** (-k):
            k = max(k, int(math.ceil(math.log2(unit / want))))
        if p > 0:
            # p & -p isolates the lowest set bit, an exact power of two
            k = max(k, _LEVELS - int(math.log2(p & -p)))
        ti, tp = hor_i, hor_p
        if cp < ncp and _before(cp_i[cp], cp_p[cp], ti, tp):
            ti, tp = cp_i[cp], cp_p[cp]
        if ti == i0:
            while k <= _LEVELS and p + (1 << (_LEVELS - k)) > tp:
                k += 1
        drift = 0.0
        for i in range(m):
            drift += rho[i] / (u2 - xs[i])
        accepted = False
        for _ in range(_MAX_REJECTS):
            dt = unit * 2.0 ** (-k)
            if k <= _LEVELS:
                _descend(k, p, i0, path, k0, k1, node, left, right, blk, vals, unit)
                db = right[k] - left[k]
            else:
                db = math.sqrt(dt) * tree_normal(k0, k1, path, i0, _DEEP_LEVEL, deep, blk, vals)
                deep += 1
            u2n = u2 + drift * dt + sq_k * db
            ok = True
            for i in range(m):
                xn = xs[i] + 2.0 * dt / (xs[i] - u2)
                if (xn - u2n) * (xs[i] - u2) <= 0.0:
                    ok = False
                    break
            if ok and track_w:
                wn = w + 2.0 * dt / (w - u2)
                if wn.imag <= 0.0:
                    ok = False
            if ok:
                accepted = True
                break
            k += 1
        if not accepted:
            reason = REASON_HORIZON
            break
        for i in range(m):
            d = xs[i] - u2
            lg[i] -= 2.0 * dt / (d * d)
            xs[i] += 2.0 * dt / d
        if track_w:
            dw = w - u2
            lgw += (-2.0 / (dw * dw)).real * dt
            w = w + 2.0 * dt / dw
        u2 = u2n
        if k <= _LEVELS:
            p += 1 << (_LEVELS - k)
            if p == _TICKS:
                i0 += 1
                p = 0
                _reset_interval(i0, path, k0, k1, node, left, right, blk, vals, unit)
        else:
            extra += dt
    t = (i0 + p / _TICKS) * unit + extra
    while cp < ncp:
        _write(rec_cp[cp], t, u2, w, lgw, xs, lg)
        cp += 1
    _write(rec_stop, t, u2, w, lgw, xs, lg)
    return reason


@njit(cache=True, nogil=True, inline="always")
def _write(rec, t, u2, w, lgw, xs, lg):
    m = xs.shape[0]
    rec[0] = t
    rec[1] = u2
    rec[2] = w.real
    rec[3] = w.imag
    rec[4] = lgw
    for i in range(m):
        rec[5 + i] = xs[i]
        rec[5 + m + i] = lg[i]


@njit(cache=True, nogil=True)
def _integrate_block(paths, xs0, u20, rho, track_w, w0, kappa, unit, k_min, dt_c, eps, hor_i,
                     hor_p, cp_i, cp_p, k0, k1, rec_cp, rec_stop, reasons):
    for j in range(paths.shape[0]):
        rec_stop[j, 1] = u20
        reasons[j] = _integrate_path(xs0, rho, track_w, w0, kappa, unit, k_min, dt_c, eps, hor_i,
                                     hor_p, cp_i, cp_p, k0, k1, paths[j], rec_cp[j],
                                     rec_stop[j])


def _to_ticks(t: float, unit: float) -> tuple[int, int]:
    """Split a time into (unit interval, tick); snaps to the nearest tick."""
    s = t / unit
    i0 = math.floor(s)
    p = round((s - i0) * _TICKS)
    if p >= _TICKS:
        i0, p = i0 + 1, 0
    return int(i0), int(p)


def base_level(dt_base: float, unit: float) -> int:
    """Coarsest tree level whose step ``unit * 2^-k`` does not exceed ``dt_base``."""
    return max(0, math.ceil(math.log2(unit / dt_base) - 1e-12))


# ---------------------------------------------------------------------------
# ensembles

@dataclass
class Snapshot:
    """Per-path state arrays at one time (stopped paths frozen at their stop)."""

    t: np.ndarray
    u2: np.ndarray
    w: np.ndarray
    log_gw: np.ndarray
    points: np.ndarray      # shape (n_paths, m)
    log_gpoints: np.ndarray

    @classmethod
    def from_records(cls, rec: np.ndarray, m: int) -> "Snapshot":
        return cls(rec[:, 0], rec[:, 1], rec[:, 2] + 1j * rec[:, 3], rec[:, 4],
                   rec[:, 5:5 + m], rec[:, 5 + m:5 + 2 * m])


@dataclass
class PathEnsemble:
    n_paths: int
    seed: int
    points0: np.ndarray
    checkpoints: np.ndarray
    reasons: np.ndarray
    stop: Snapshot
    snapshots: list[Snapshot] = field(default_factory=list)

    def stop_reason_names(self) -> np.ndarray:
        names = np.empty(self.n_paths, dtype=object)
        names[self.reasons == REASON_HORIZON] = "horizon"
        for i in range(len(self.points0)):
            names[self.reasons == REASON_POINT + i] = f"point{i}"
        names[self.reasons == REASON_BULK] = "bulk"
        return names

    def alive_at(self, k: int) -> np.ndarray:
        # a path stopped by the horizon is still alive at a checkpoint equal to it
        return (self.stop.t > self.checkpoints[k]) | (self.reasons == REASON_HORIZON)


def simulate(points, u2: float, rho, seed: int, n_paths: int, params: SdeParams,
             w: complex | None = None, checkpoints=(), threads: int = 1,
             first_path: int = 0) -> PathEnsemble:
    """Integrate ``n_paths`` independent paths with arbitrary force points."""
    xs0 = np.asarray(points, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if xs0.shape != rho.shape:
        raise DomainError("one rho per boundary point")
    if np.any(xs0 == u2):
        raise DomainError("boundary points must differ from u2")
    if w is not None and not complex(w).imag > 0:
        raise DomainError("bulk point must lie in the upper half-plane")
    if n_paths < 1:
        raise DomainError("n_paths must be at least 1")
    cps = np.sort(np.asarray(checkpoints, dtype=float))
    if np.any(cps > params.horizon):
        raise DomainError("checkpoints must not exceed the horizon")
    m = len(xs0)
    width = 5 + 2 * m
    rec_cp = np.zeros((n_paths, len(cps), width))
    rec_stop = np.zeros((n_paths, width))
    reasons = np.zeros(n_paths, dtype=np.int64)
    paths = np.arange(first_path, first_path + n_paths, dtype=np.int64)
    k0, k1 = rng.seed_key(seed)
    track_w = w is not None
    wc = complex(w) if track_w else 1j
    unit = params.noise_unit
    ticks = [_to_ticks(c, unit) for c in cps]
    cp_i = np.array([a for a, _ in ticks], dtype=np.int64)
    cp_p = np.array([b for _, b in ticks], dtype=np.int64)
    hor_i, hor_p = _to_ticks(params.horizon, unit)
    args = (xs0, float(u2), rho, track_w, wc, params.kappa, unit, base_level(params.dt_base, unit),
            params.dt_adapt_c, params.swallow_eps, hor_i, hor_p, cp_i, cp_p,
            np.uint64(k0), np.uint64(k1))

    def run(lo, hi):
        _integrate_block(paths[lo:hi], *args, rec_cp[lo:hi], rec_stop[lo:hi], reasons[lo:hi])

    bounds = np.linspace(0, n_paths, max(1, threads) + 1).astype(int)
    if threads <= 1:
        run(0, n_paths)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: run(*b), zip(bounds[:-1], bounds[1:])))
    snaps = [Snapshot.from_records(rec_cp[:, k, :], m) for k in range(len(cps))]
    return PathEnsemble(n_paths, seed, xs0, cps, reasons,
                        Snapshot.from_records(rec_stop, m), snaps)


@dataclass(frozen=True)
class PathRecord:
    stop_reason: str
    final_state: LoewnerState
    checkpoint_states: tuple


def _classify(ens: PathEnsemble, i: int, with_w: bool) -> str:
    r = ens.reasons[i]
    if r == REASON_HORIZON:
        return "horizon"
    if r == REASON_POINT + 1:
        return "hit_u3"
    if r == REASON_POINT:
        return "swallowed_u1"
    # w swallowed: label by the side of u2 from which the image of w closes in
    # (left: the hull wrapped around w counterclockwise).  Only a statistical label.
    snap = ens.stop
    w = complex(snap.w[i])
    if w.imag <= 0:
        return "swallowed_w_cw"
    omega = harmonic_measure(w, -math.inf, snap.u2[i])
    return "swallowed_w_ccw" if omega > 0.5 else "swallowed_w_cw"


def _state_from(snap: Snapshot, i: int, with_w: bool, reason: int = REASON_HORIZON) -> LoewnerState:
    return LoewnerState(float(snap.t[i]), float(snap.points[i, 0]), float(snap.u2[i]),
                        float(snap.points[i, 1]), complex(snap.w[i]) if with_w else None,
                        float(snap.log_gw[i]), float(snap.log_gpoints[i, 1]),
                        alive_u1=reason != REASON_POINT, alive_u3=reason != REASON_POINT + 1,
                        alive_w=with_w and reason != REASON_BULK)


def run_config(initial: BoundaryConfig, params: SdeParams, seed: int, n_paths: int,
               checkpoints=(), track_w: bool = True, threads: int = 1) -> PathEnsemble:
    if initial.u3_at_infinity:
        raise DomainError("simulation needs a finite u3")
    return simulate([initial.u1, initial.u3], initial.u2, [params.rho1, params.rho3], seed,
                    n_paths, params, complex(initial.w) if track_w else None, checkpoints, threads)


def run_path(initial: BoundaryConfig, params: SdeParams, seed: int, path_index: int = 0,
             checkpoints=(), track_w: bool = True) -> PathRecord:
    """Integrate one path until ``u3`` or ``w`` is swallowed (or the horizon)."""
    ens = simulate([initial.u1, initial.u3], initial.u2, [params.rho1, params.rho3], seed, 1,
                   params, complex(initial.w) if track_w else None, checkpoints,
                   first_path=path_index)
    return PathRecord(_classify(ens, 0, track_w),
                      _state_from(ens.stop, 0, track_w, int(ens.reasons[0])),
                      tuple(_state_from(s, 0, track_w) for s in ens.snapshots))


def stop_reasons(ens: PathEnsemble, with_w: bool = True) -> np.ndarray:
    return np.array([_classify(ens, i, with_w) for i in range(ens.n_paths)], dtype=object)


# ---------------------------------------------------------------------------
# martingale checks

@dataclass(frozen=True)
class MartingaleRow:
    check: str
    t: float
    n_alive: int
    mean: float
    stderr: float
    dt: float
    eps: float
    seed: int
    m0: float
    unreliable: bool

    @property
    def z_score(self) -> float:
        return (self.mean - self.m0) / self.stderr if self.stderr > 0 else 0.0

    def within(self, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - self.m0) <= n_sigma * self.stderr


def _rows(name, values_per_cp, m0, ens: PathEnsemble, params: SdeParams, seed):
    rows = []
    for k, vals in enumerate(values_per_cp):
        alive = int(np.count_nonzero(ens.alive_at(k)))
        mean = float(np.sum(vals) / len(vals))
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        rows.append(MartingaleRow(name, float(ens.checkpoints[k]), alive, mean,
                                  std / math.sqrt(len(vals)), params.dt_base,
                                  params.swallow_eps, seed, float(m0),
                                  alive < 0.5 * ens.n_paths))
    return rows


def martingale_check_C(initial: BoundaryConfig, params: SdeParams = SLE6, seed: int = 0,
                       checkpoints=(0.01, 0.05, 0.1), n_paths: int = 10_000,
                       exponent: float = THIRD, threads: int = 1) -> list[MartingaleRow]:
    """``E[|g_t'(u3)|^exponent C(u1(t), u2(t), u3(t))]`` at each checkpoint."""
    params = replace(params, horizon=max(checkpoints))
    ens = run_config(initial, params, seed, n_paths, checkpoints, track_w=False, threads=threads)
    m0 = three_point_C(initial.u1, initial.u2, initial.u3)
    vals = [np.exp(exponent * s.log_gpoints[:, 1])
            * three_point_C(s.points[:, 0], s.u2, s.points[:, 1]) for s in ens.snapshots]
    name = "martingale-c" if exponent == THIRD else f"martingale-c[exp={exponent:g}]"
    return _rows(name, vals, m0, ens, params, seed)


def martingale_check_H(initial: BoundaryConfig, params: SdeParams = SLE6_CONDITIONED,
                       seed: int = 0, checkpoints=(0.01, 0.05, 0.1), n_paths: int = 10_000,
                       g_exponent: float = G_EXPONENT, threads: int = 1) -> list[MartingaleRow]:
    """``E[|g_t'(w)|^(5/48) H(u1(t), u2(t), u3(t), w(t))]`` with H the five-point function."""
    params = replace(params, horizon=max(checkpoints))
    ens = run_config(initial, params, seed, n_paths, checkpoints, track_w=True, threads=threads)
    m0 = five_point_density(initial.u1, initial.u2, initial.u3, complex(initial.w), g_exponent)
    vals = [np.exp(BULK * s.log_gw)
            * five_point_density(s.points[:, 0], s.u2, s.points[:, 1], s.w, g_exponent)
            for s in ens.snapshots]
    name = "martingale-h" if g_exponent == G_EXPONENT else f"martingale-h[g={g_exponent:g}]"
    return _rows(name, vals, m0, ens, params, seed)


# ---------------------------------------------------------------------------
# hitting probability

@dataclass(frozen=True)
class HitEstimate:
    hits: int
    n: int
    p_hat: float
    stderr: float
    cardy: float
    unresolved: int
    seed: int

    def within(self, n_sigma: float = 3.0) -> bool:
        return abs(self.p_hat - self.cardy) <= n_sigma * self.stderr


# the step is governed by the adaptive rule alone; a large noise unit lets
# paths that wander far from every marked point take large steps
HIT_CARDY_PARAMS = SdeParams(kappa=6.0, dt_base=2.0 ** 20, dt_adapt_c=0.01, swallow_eps=1e-9,
                             horizon=1e9, noise_unit=2.0 ** 20)


def hit_cardy(u1: float, u2: float, a: float, b: float, n_paths: int = 10_000, seed: int = 0,
              params: SdeParams = HIT_CARDY_PARAMS, gap_ratio: float = 100.0,
              threads: int = 1) -> HitEstimate:
    """Probability that plain SLE(kappa) from ``u2`` touches ``[a, b]`` before swallowing ``u1``.

    A path stops when ``u1`` or ``a`` comes within ``swallow_eps`` of the
    driving value.  Stopping at ``a`` counts as touching the interval only if
    ``b`` is still far away (``g(b) - u2 > gap_ratio * (g(a) - u2)``); when the
    curve swallows the interval from beyond ``b`` both images collapse together.
    """
    if not u1 < u2 < a < b:
        raise DomainError("need u1 < u2 < a < b")
    ens = simulate([u1, a, b], u2, [0.0, 0.0, 0.0], seed, n_paths, params, threads=threads)
    s = ens.stop
    at_a = ens.reasons == REASON_POINT + 1
    gap_a = s.points[:, 1] - s.u2
    gap_b = s.points[:, 2] - s.u2
    hits = int(np.count_nonzero(at_a & (gap_b > gap_ratio * gap_a)))
    unresolved = int(np.count_nonzero(ens.reasons == REASON_HORIZON))
    p = hits / n_paths
    return HitEstimate(hits, n_paths, p, math.sqrt(max(p * (1 - p), 1e-300) / n_paths),
                       float(cardy_crossing(u1, u2, a, b)), unresolved, seed)


def force_point_hit_fraction(initial: BoundaryConfig, params: SdeParams, seed: int,
                             n_paths: int) -> float:
    """Fraction of SLE(kappa; rho1, rho3) paths (no bulk point) that end on ``u3``."""
    ens = run_config(initial, params, seed, n_paths, track_w=False)
    return float(np.count_nonzero(ens.reasons == REASON_POINT + 1) / n_paths)


# ---------------------------------------------------------------------------
# general kappa

def _G_kappa(x: float, kappa: float) -> float:
    a = -4.0 / kappa
    b = 2.0 * (6.0 - kappa) / kappa
    val, _ = integrate.quad(lambda th: (1.0 - th) ** b, 0.0, x, weight="alg", wvar=(a, 0.0),
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def general_kappa_drift(u1: float, u2: float, u3: float, kappa: float) -> float:
    """Drift of ``u2`` for SLE(kappa) conditioned to hit ``u3`` and then not to swallow ``u1``.

    ``G(x) = int_0^x t^(-4/kappa) (1 - t)^(2(6 - kappa)/kappa) dt`` is done by
    quadrature with the algebraic end-point weight; it is integrable only for
    ``4 < kappa < 8`` here.
    """
    if not 4.0 < kappa < 8.0:
        raise DomainError("kappa must lie in (4, 8)")
    if not u1 < u2 < u3:
        raise DomainError("need u1 < u2 < u3")
    x = (u2 - u1) / (u3 - u1)
    g_prime = x ** (-4.0 / kappa) * (1.0 - x) ** (2.0 * (6.0 - kappa) / kappa)
    return (kappa - 8.0) / (u2 - u3) + kappa * g_prime / ((u3 - u1) * _G_kappa(x, kappa))


def force_point_drift(u1: float, u2: float, u3: float, kappa: float) -> float:
    """Drift obtained by simply adding force points ``rho = kappa - 4`` at u1 and ``kappa - 8`` at u3."""
    return (kappa - 8.0) / (u2 - u3) + (kappa - 4.0) / (u2 - u1)
