"""Command-line front end.

    fivepoint eval {cardy,C3,F4,G,F5,P2,P3,P4,constants,factcheck} ...
    fivepoint verify [--checks ...] [--perturb 11/96->10/96] [--grid N --grid M]
    fivepoint sle {martingale-c,martingale-h,hit-cardy,drift-kappa} ...
    fivepoint perc {crossing,exponent,factorize} ...

Exit codes: 0 success, 1 usage or domain error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction

from . import formulas, lattice, loewner, pde_verify
from .conformal import BoundaryConfig, strip_coordinates
from .errors import ConvergenceError, DomainError
from .reports import csv_text, default_seed, emit, fmt, json_text

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2

ESTIMATE_COLUMNS = ["event", "L", "epsilon", "n", "hits", "p_hat", "stderr", "seed"]
MARTINGALE_COLUMNS = ["check", "t", "n_alive", "mean", "stderr", "dt", "eps", "seed"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


@dataclass
class RunConfig:
    command: str
    params: dict
    seed: int
    threads: int
    out: str | None
    tolerances: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"command": self.command, "params": self.params, "seed": self.seed,
                "threads": self.threads, "out": self.out, "tolerances": self.tolerances}


# ---------------------------------------------------------------------------
# argument types

def number(text: str) -> float:
    """A float, also accepting fractions such as ``1/32``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        try:
            return float(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def number_list(text: str) -> list[float]:
    return [number(t) for t in text.split(",") if t.strip()]


def point(text: str) -> complex:
    """A complex number written ``x+yi`` or ``x+yj``."""
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def perturbation(text: str) -> tuple[float, float]:
    for sep in ("->", "→", ":"):
        if sep in text:
            a, b = text.split(sep, 1)
            return number(a), number(b)
    raise argparse.ArgumentTypeError("expected OLD->NEW, e.g. 11/96->10/96")


def key_value(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected NAME=VALUE")
    k, v = text.split("=", 1)
    return k.strip(), number(v)


# ---------------------------------------------------------------------------
# eval

def _eval_rows(a) -> tuple[list[dict], list[str], bool]:
    what = a.what
    if what == "constants":
        k = formulas.constants()
        forms = k.formulas()
        rows = [{"name": n, "value": getattr(k, n), "formula": forms[n]} for n in ("K3", "K4", "K5", "KF")]
        kf = formulas.kf_forms()
        spread = (max(kf.values()) - min(kf.values())) / k.KF
        rows += [{"name": f"KF[{n}]", "value": v, "formula": f"relative spread {fmt(spread)}"}
                 for n, v in kf.items()]
        return rows, ["name", "value", "formula"], True
    if what == "cardy":
        if a.eta is not None:
            v = formulas.cardy_of_eta(a.eta)
        else:
            v = formulas.cardy_crossing(a.u1, a.u2, a.u3, a.u4)
        return [{"name": "cardy", "value": v}], ["name", "value"], True
    if what == "C3":
        return [{"name": "C3", "value": formulas.three_point_C(a.u1, a.u2, a.u3)}], ["name", "value"], True
    if what == "F4":
        return [{"name": "F4", "value": formulas.four_point_F(a.u1, a.u2, a.w)}], ["name", "value"], True
    if what == "G":
        return [{"name": "G", "value": formulas.G_strip(a.x, a.y, a.exponent)}], ["name", "value"], True
    if what == "F5":
        cfg = BoundaryConfig(a.u1, a.u2, a.u3, a.w)
        x, y, d = strip_coordinates(cfg.u1, cfg.u2, cfg.u3, complex(cfg.w))
        row = {"name": "F5", "value": formulas.five_point_F(cfg, a.exponent),
               "x": float(x), "y": float(y), "deriv_mod": float(d)}
        return [row], ["name", "value", "x", "y", "deriv_mod"], True
    if what == "P2":
        return [{"name": "P2", "value": formulas.P2(a.u1, a.u3)}], ["name", "value"], True
    if what == "P3":
        return [{"name": "P3", "value": formulas.P3(a.u1, a.w)}], ["name", "value"], True
    if what == "P4":
        return [{"name": "P4", "value": formulas.P4(a.u1, a.u3, a.w)}], ["name", "value"], True
    if what == "factcheck":
        lhs, rhs = formulas.factorization_sides(a.u1, a.u3, a.w)
        rel = abs(lhs - rhs) / abs(rhs)
        ok = rel < a.tolerances.get("factcheck", 1e-10)
        rows = [{"name": "P4^2", "value": lhs}, {"name": "KF*P3*P3*P2", "value": rhs},
                {"name": "relative_difference", "value": rel}]
        return rows, ["name", "value"], ok
    raise UsageError(f"unknown quantity {what!r}")


_EVAL_NEEDS = {
    "cardy": (), "C3": ("u1", "u2", "u3"), "F4": ("u1", "u2", "w"), "G": ("x", "y"),
    "F5": ("u1", "u2", "u3", "w"), "P2": ("u1", "u3"), "P3": ("u1", "w"),
    "P4": ("u1", "u3", "w"), "constants": (), "factcheck": ("u1", "u3", "w"),
}


def cmd_eval(a, cfg: RunConfig) -> int:
    missing = [n for n in _EVAL_NEEDS[a.what] if getattr(a, n) is None]
    if a.what == "cardy" and a.eta is None:
        missing = [n for n in ("u1", "u2", "u3", "u4") if getattr(a, n) is None]
    if missing:
        raise UsageError(f"eval {a.what} needs " + ", ".join("--" + m for m in missing))
    a.tolerances = cfg.tolerances
    rows, cols, ok = _eval_rows(a)
    emit(csv_text(rows, cols), cfg.out, "eval", cfg.as_dict())
    if not ok:
        sys.stderr.write("factcheck: relative difference above tolerance\n")
        return EXIT_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def cmd_verify(a, cfg: RunConfig) -> int:
    g = formulas.G_EXPONENT
    if a.perturb is not None:
        old, new = a.perturb
        if abs(old - formulas.G_EXPONENT) > 1e-12:
            raise UsageError("only the 11/96 exponent of the strip profile can be perturbed")
        g = new
    grids = a.grid or [400, 800]
    if len(grids) != 2:
        raise UsageError("give --grid exactly twice (coarse and fine)")
    checks = a.checks or list(pde_verify.CHECKS)
    stencil = pde_verify.StencilSpec(a.step, pde_verify.FOURTH if a.scheme == "fourth" else pde_verify.SECOND)
    reports = pde_verify.run_checks(checks, a.configs, cfg.seed, stencil, g, tuple(grids),
                                    cfg.tolerances)
    passed = all(r.passed for r in reports)
    doc = {"passed": passed, "reports": [r.to_dict() for r in reports]}
    emit(json_text(doc), cfg.out, "verify", cfg.as_dict())
    failed = [r.check_name for r in reports if not r.passed]
    if failed:
        sys.stderr.write("verification failed: " + ", ".join(failed) + "\n")
        return EXIT_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# sle

def cmd_sle(a, cfg: RunConfig) -> int:
    if a.what in ("martingale-c", "martingale-h"):
        init = BoundaryConfig(a.u1, a.u2, a.u3, a.w)
        base = loewner.SLE6 if a.what == "martingale-c" else loewner.SLE6_CONDITIONED
        params = replace(base, dt_base=a.dt, dt_adapt_c=a.c,
                         swallow_eps=a.eps if a.eps is not None else base.swallow_eps)
        if a.what == "martingale-c":
            rows = loewner.martingale_check_C(init, params, cfg.seed, tuple(a.t), a.n,
                                              exponent=a.exponent if a.exponent is not None else formulas.THIRD,
                                              threads=cfg.threads)
        else:
            rows = loewner.martingale_check_H(init, params, cfg.seed, tuple(a.t), a.n,
                                              g_exponent=a.g_exponent, threads=cfg.threads)
        table = [dict(r.__dict__, m0=r.m0, within_3sigma=r.within(3.0), unreliable=r.unreliable)
                 for r in rows]
        emit(csv_text(table, MARTINGALE_COLUMNS + ["m0", "within_3sigma", "unreliable"]),
             cfg.out, "sle", cfg.as_dict())
        return EXIT_OK if all(r.within(3.0) for r in rows) else EXIT_FAILED
    if a.what == "hit-cardy":
        params = replace(loewner.HIT_CARDY_PARAMS, swallow_eps=a.eps if a.eps is not None
                         else loewner.HIT_CARDY_PARAMS.swallow_eps, dt_adapt_c=a.c)
        h = loewner.hit_cardy(a.u1, a.u2, a.a, a.b, a.n, cfg.seed, params, threads=cfg.threads)
        row = dict(h.__dict__, within_3sigma=h.within(3.0), dt_adapt_c=params.dt_adapt_c,
                   eps=params.swallow_eps)
        cols = ["hits", "n", "p_hat", "stderr", "cardy", "unresolved", "seed", "dt_adapt_c",
                "eps", "within_3sigma"]
        emit(csv_text([row], cols), cfg.out, "sle", cfg.as_dict())
        return EXIT_OK if h.within(3.0) else EXIT_FAILED
    if a.what == "drift-kappa":
        v = loewner.general_kappa_drift(a.u1, a.u2, a.u3, a.kappa)
        fp = loewner.force_point_drift(a.u1, a.u2, a.u3, a.kappa)
        row = {"kappa": a.kappa, "drift": v, "force_point_form": fp, "difference": v - fp}
        emit(csv_text([row], ["kappa", "drift", "force_point_form", "difference"]),
             cfg.out, "sle", cfg.as_dict())
        if a.kappa == 6.0 and abs(v - fp) > 1e-8:
            return EXIT_FAILED
        return EXIT_OK
    raise UsageError(f"unknown sle command {a.what!r}")


# ---------------------------------------------------------------------------
# perc

BOUNDARY_TARGET = (1.0 / 3.0, 0.05)
BULK_TARGET = (5.0 / 48.0, 0.03)


def cmd_perc(a, cfg: RunConfig) -> int:
    rows: list[dict] = []
    ok = True
    if a.what == "crossing":
        if a.eta is None:
            region = lattice.LatticeRegion(a.L, a.L, lattice.RHOMBUS)
            target = 0.5
        else:
            region = lattice.LatticeRegion.conformal_rectangle(a.L, lattice.rectangle_aspect(a.eta))
            target = formulas.cardy_of_eta(a.eta)
        ev = lattice.EventSpec(lattice.CROSSING, sides=("left", "right"))
        est = lattice.measure(ev, region, a.n, cfg.seed, threads=cfg.threads)
        rows.append(est.as_row())
        allowance = max(3 * est.stderr, 0.005 if a.eta is None else 0.01)
        ok = abs(est.p_hat - target) <= allowance
        cfg.params.update(region=region.describe(), events=[ev.to_dict()])
        rows.append({"event": "target", "L": a.L, "p_hat": target})
    elif a.what == "exponent":
        eps = a.eps or [1 / 64, 1 / 32, 1 / 16, 1 / 8]
        region = lattice.LatticeRegion.half_plane(a.L)
        if a.family == "boundary":
            events, (target, tol) = lattice.boundary_family(eps), BOUNDARY_TARGET
        else:
            events, (target, tol) = lattice.bulk_family(eps), BULK_TARGET
        est = lattice.measure_many(events, region, a.n, cfg.seed, threads=cfg.threads)
        rows += [e.as_row() for e in est]
        cfg.params.update(region=region.describe(), events=[e.to_dict() for e in events])
        slope, err = lattice.exponent_fit([(e.epsilon, e.p_hat, e.stderr) for e in est])
        rows.append({"event": f"slope[{a.family}]", "L": a.L, "n": a.n, "p_hat": slope,
                     "stderr": err, "seed": cfg.seed})
        ok = abs(slope - target) <= tol
    elif a.what == "factorize":
        eps = (a.eps or [1 / 32])[0]
        region = lattice.LatticeRegion.half_plane(a.L, lattice.FACTOR_ASPECT)
        geoms = [(a.u1, a.u3, a.w)] + ([(a.u1, a.u3, a.w2)] if a.w2 is not None else [])
        kf = formulas.constants().KF
        cfg.params.update(region=region.describe(), events=[
            e.to_dict() for g in geoms for e in lattice.factorization_events(*g, eps)])
        results = lattice.factorization_ratios(geoms, eps, a.L, a.n, cfg.seed, region=region,
                                               threads=cfg.threads)
        seen = set()
        for (u1, u3, w), res in zip(geoms, results):
            for e in res.estimates:
                if e.event not in seen:
                    seen.add(e.event)
                    rows.append(e.as_row())
            rows.append({"event": f"ratio[u1={u1:g},u3={u3:g},w={w.real:g}+{w.imag:g}i]",
                         "L": a.L, "epsilon": eps, "n": a.n, "p_hat": res.ratio,
                         "stderr": res.err, "seed": cfg.seed})
            ok = ok and not res.censored and abs(res.ratio / kf - 1.0) <= 0.15
        rows.append({"event": "KF", "p_hat": kf})
    else:
        raise UsageError(f"unknown perc command {a.what!r}")
    emit(csv_text(rows, ESTIMATE_COLUMNS), cfg.out, "perc", cfg.as_dict())
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------------------
# parser

def _common(p):
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default: $FIVEPOINT_SEED or 20240917)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="also write output here, with run.json beside it")
    p.add_argument("--tol", type=key_value, action="append", default=None,
                   help="tolerance override NAME=VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fivepoint", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--config", default=None, help="flat key=value file of option defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate closed-form quantities")
    p.add_argument("what", choices=list(_EVAL_NEEDS))
    for n in ("u1", "u2", "u3", "u4", "x", "y", "eta"):
        p.add_argument(f"--{n}", type=number, default=None)
    p.add_argument("--w", type=point, default=None)
    p.add_argument("--exponent", type=number, default=formulas.G_EXPONENT)
    _common(p)

    p = sub.add_parser("verify", help="PDE residuals and the radial eigenvalue problem")
    p.add_argument("--checks", type=lambda s: [c.strip() for c in s.split(",") if c.strip()],
                   default=None, help="comma list from " + ",".join(pde_verify.CHECKS))
    p.add_argument("--perturb", type=perturbation, default=None)
    p.add_argument("--grid", type=int, action="append", default=None)
    p.add_argument("--configs", type=int, default=100)
    p.add_argument("--step", type=number, default=1e-3)
    p.add_argument("--scheme", choices=["second", "fourth"], default="fourth")
    _common(p)

    p = sub.add_parser("sle", help="Loewner-evolution Monte Carlo")
    p.add_argument("what", choices=["martingale-c", "martingale-h", "hit-cardy", "drift-kappa"])
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--t", type=number_list, default=[0.01, 0.05, 0.1])
    p.add_argument("--dt", type=number, default=1e-4)
    p.add_argument("--c", type=number, default=0.01, help="adaptivity constant")
    p.add_argument("--eps", type=number, default=None)
    p.add_argument("--u1", type=number, default=0.0)
    p.add_argument("--u2", type=number, default=1.0)
    p.add_argument("--u3", type=number, default=3.0)
    p.add_argument("--w", type=point, default=complex(2.0, 1.5))
    p.add_argument("--a", type=number, default=2.5)
    p.add_argument("--b", type=number, default=3.5)
    p.add_argument("--kappa", type=number, default=6.0)
    p.add_argument("--exponent", type=number, default=None)
    p.add_argument("--g-exponent", dest="g_exponent", type=number, default=formulas.G_EXPONENT)
    _common(p)

    p = sub.add_parser("perc", help="triangular-lattice percolation Monte Carlo")
    p.add_argument("what", choices=["crossing", "exponent", "factorize"])
    p.add_argument("--L", type=int, default=128)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--eps", type=number_list, default=None)
    p.add_argument("--eta", type=number, default=None, help="cross-ratio of a conformal rectangle")
    p.add_argument("--family", choices=["boundary", "bulk"], default="boundary")
    p.add_argument("--u1", type=number, default=lattice.FACTOR_GEOMETRIES[0][0])
    p.add_argument("--u3", type=number, default=lattice.FACTOR_GEOMETRIES[0][1])
    p.add_argument("--w", type=point, default=lattice.FACTOR_GEOMETRIES[0][2])
    p.add_argument("--w2", type=point, default=None, help="second bulk anchor for universality")
    _common(p)
    return parser


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {raw.rstrip()!r}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _parse(parser, argv):
    """Parsed namespace, or the exit code when argparse stops (help or usage error)."""
    try:
        return parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        a = _parse(parser, argv)
        if isinstance(a, int):
            return a
        if a.config:
            # config values fill options left at their defaults; flags still win
            conf = _read_config(a.config)
            sub_parser = parser._subparsers._group_actions[0].choices[a.command]
            known = {act.dest for act in sub_parser._actions}
            unknown = set(conf) - known
            if unknown:
                raise UsageError(f"unknown config keys: {sorted(unknown)}")
            sub_parser.set_defaults(**conf)
            a = _parse(parser, argv)
            if isinstance(a, int):
                return a
        seed = a.seed if a.seed is not None else default_seed()
        if seed < 0:
            raise UsageError("seed must be non-negative")
        if a.threads < 1:
            raise UsageError("threads must be at least 1")
        tolerances = dict(a.tol or [])
        params = {k: v for k, v in vars(a).items()
                  if k not in ("seed", "threads", "out", "tol", "config", "command")}
        cfg = RunConfig(a.command, params, seed, a.threads, a.out, tolerances)
        handler = {"eval": cmd_eval, "verify": cmd_verify, "sle": cmd_sle, "perc": cmd_perc}[a.command]
        return handler(a, cfg)
    except (UsageError, DomainError, ConvergenceError, ValueError, OSError) as exc:
        sys.stderr.write(f"fivepoint: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
