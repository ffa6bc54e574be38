"""Command-line front end.

Exit codes: 0 when every asserted inequality held, 1 on configuration
errors, 2 when a check failed (the offending report goes to stderr).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import extremizer, figures, groups, lab
from .constants import ExponentData, as_exponent, constants_rows
from .convexity import Power, parse_convex
from .errors import ConfigError, ConvIneqError
from .groups import MeasuredFunction

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2
SUBCOMMANDS = ("constants", "verify", "figures", "extremize", "demo-violation")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    carrier: dict = field(default_factory=dict)
    f: str = "suite"
    exponents: tuple = ()
    pairs: tuple = ()
    trials: int = 1000
    seed: int = 0
    tol: float = 1e-9
    output: str | None = None
    workers: int = 1
    figure_params: tuple = ()
    starts: int = 5
    iters: int = 500

    def validate(self) -> "RunConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.trials < 0:
            raise ConfigError(f"--trials must be >= 0, got {self.trials}")
        if self.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {self.workers}")
        if not self.tol > 0:
            raise ConfigError(f"--tol must be positive, got {self.tol}")
        if self.subcommand in ("verify", "demo-violation") and self.f != "suite":
            _parse_f(self.f)
        if self.subcommand in ("verify", "demo-violation", "extremize"):
            build_carrier(self.carrier)
        return self


def _parse_f(spec: str):
    try:
        return parse_convex(spec)
    except (ValueError, ConvIneqError) as exc:
        raise ConfigError(f"bad --f {spec!r}: {exc}") from exc


def _fraction(text: str, flag: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{flag} expects a rational like 2/3, got {text!r}") from exc


def build_carrier(spec: dict) -> groups.GroupCarrier:
    kind = spec.get("kind", "realline")
    params = {k: v for k, v in spec.items() if k != "kind" and v is not None}
    try:
        if kind == "table":
            return groups.load_table(params["path"], params.get("cell", 1.0))
        if kind in ("dihedral", "symmetric", "quaternion"):
            return groups.make_carrier("finite", preset=kind, **params)
        if kind in ("circle", "cyclic") and "n" not in params:
            raise ConfigError(f"--n is required for carrier {kind}")
        return groups.make_carrier(kind, **params)
    except ConfigError:
        raise
    except (ConvIneqError, KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"bad carrier {spec!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def _emit(rows, output):
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def run_constants(cfg: RunConfig) -> int:
    try:
        rows = constants_rows(cfg.exponents, cfg.pairs)
    except (ConvIneqError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from exc
    _emit(rows, cfg.output)
    return EXIT_OK


def _verify_chunk(args):
    carrier_spec, f_spec, seed, count = args
    carrier = build_carrier(carrier_spec)
    f = None if f_spec == "suite" else parse_convex(f_spec)
    return [r.to_dict() for r in lab.campaign(carrier, count, seed, f=f)]


def _chunks(seed, trials, workers):
    size = max(1, math.ceil(trials / workers))
    return [(seed + s, min(size, trials - s)) for s in range(0, trials, size)]


def run_verify(cfg: RunConfig) -> int:
    jobs = [(cfg.carrier, cfg.f, s, n) for s, n in _chunks(cfg.seed, cfg.trials, cfg.workers)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_verify_chunk, jobs))
    else:
        parts = [_verify_chunk(j) for j in jobs]
    rows = [r for part in parts for r in part]  # seed order, independent of completion order
    bad = [r for r in rows if r["hypothesis_ok"] and r["margin"] < -max(cfg.tol, r["error_bound"])]
    summary = {
        "summary": True,
        "trials": len(rows),
        "hypothesis_satisfied": sum(r["hypothesis_ok"] for r in rows),
        "violations": len(bad),
        "min_margin": min((r["margin"] for r in rows), default=None),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    _emit(rows + [summary], cfg.output)
    for r in bad:
        print("violation: " + json.dumps(r, sort_keys=True), file=sys.stderr)
    return EXIT_VIOLATION if bad else EXIT_OK


def run_figures(cfg: RunConfig) -> int:
    lam, y1, y2 = cfg.figure_params
    if not (0 <= lam <= 1 and 0 <= y1 <= y2):
        raise ConfigError("need 0 <= lambda <= 1 and 0 <= y1 <= y2")
    written = figures.write_figures(cfg.output or "figures", lam, y1, y2)
    for p in written:
        print(p)
    return EXIT_OK


def run_extremize(cfg: RunConfig) -> int:
    carrier = build_carrier(cfg.carrier)
    if len(cfg.exponents) != 2:
        raise ConfigError("--P needs two exponents, e.g. 4/3,4/3")
    try:
        data = ExponentData.of(cfg.exponents)
    except ConvIneqError as exc:
        raise ConfigError(str(exc)) from exc
    if data.regime == "mixed":
        raise ConfigError(f"exponents {cfg.exponents} mix the Young and reverse regimes")
    minimize = data.regime == "reverse"
    obj = extremizer.GridObjective(carrier, data)
    rng = np.random.default_rng(cfg.seed)
    a, b = extremizer.random_init(carrier, cfg.seed, "bumps")
    gerr = extremizer.gradient_check(obj, a, b, rng)
    if gerr > 1e-4:
        print(f"gradient check failed: relative error {gerr:.3g}", file=sys.stderr)
        return EXIT_VIOLATION
    best, states = extremizer.multistart(carrier, data, cfg.starts, cfg.seed, cfg.iters, cfg.tol,
                                         minimize=minimize, workers=cfg.workers)
    out = Path(cfg.output or "extremize")
    out.mkdir(parents=True, exist_ok=True)
    lines = ["start,iteration,ratio"]
    for k, s in enumerate(states):
        lines += [f"{k},{i},{r!r}" for i, r in enumerate(s.history)]
    (out / "convergence.csv").write_text("\n".join(lines) + "\n")
    for name, v in (("profile1", best.phi1), ("profile2", best.phi2)):
        (out / f"{name}.csv").write_text(_profile_csv(carrier, v))
    summary = {"carrier": carrier.name, "P": [str(p) for p in data.P], "C": data.C, "ratio": best.ratio,
               "ratio_over_C": best.ratio / data.C, "starts": len(states), "stalled": best.stalled,
               "gradient_check": gerr}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _profile_csv(carrier, v) -> str:
    if carrier.kind == groups.REAL_LINE:
        rows = MeasuredFunction(carrier, v).to_step().csv_rows()
    else:
        h = carrier.cell_measure
        rows = [(i * h, (i + 1) * h, float(x)) for i, x in enumerate(v)]
    return "x_left,x_right,value\n" + "".join(f"{a!r},{b!r},{c!r}\n" for a, b, c in rows)


def run_demo_violation(cfg: RunConfig) -> int:
    carrier = build_carrier(cfg.carrier)
    f = Power(2.0) if cfg.f == "suite" else _parse_f(cfg.f)
    if math.isinf(carrier.declared_m):
        raise ConfigError("demo-violation needs a carrier with finite m(G)")
    const = lab.check_main(carrier, *lab.constant_pair(carrier), f)
    found = lab.violation_search(carrier, f, cfg.trials, cfg.seed)
    rows = [dict(const.to_dict(), kind="constant_pair")] + [dict(r.to_dict(), kind="search") for r in found]
    expected = [r for r in rows if not r["hypothesis_ok"] and r["margin"] < 0]
    rows.append({"summary": True, "violations_found": len(expected), "trials": cfg.trials,
                 "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())})
    _emit(rows, cfg.output)
    if not expected:
        print("expected at least one violation with the hypothesis broken, found none", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


RUNNERS = {"constants": run_constants, "verify": run_verify, "figures": run_figures,
           "extremize": run_extremize, "demo-violation": run_demo_violation}


def run(cfg: RunConfig) -> int:
    return RUNNERS[cfg.validate().subcommand](cfg)


# ---------------------------------------------------------------------------
# argument parsing


def _add_carrier(p, default="realline"):
    p.add_argument("--carrier", default=default,
                   help="realline, circle, cyclic, dihedral, symmetric, quaternion or table")
    p.add_argument("--n", type=int, help="cells (circle, cyclic) or order parameter (dihedral, symmetric)")
    p.add_argument("--total", type=float, help="circle circumference")
    p.add_argument("--cell", type=float, help="cell measure for discrete groups")
    p.add_argument("--halfwidth", type=float, help="RealLineGrid half width")
    p.add_argument("--step", type=float, help="RealLineGrid cell width")
    p.add_argument("--table", help="Cayley table file for --carrier table")


def _carrier_spec(ns) -> dict:
    spec = {"kind": ns.carrier}
    for key in ("n", "total", "cell", "halfwidth", "step"):
        if getattr(ns, key, None) is not None:
            spec[key] = getattr(ns, key)
    if ns.carrier == "table":
        if not ns.table:
            raise ConfigError("--carrier table needs --table PATH")
        spec["path"] = ns.table
    return spec


def _exponent_list(text: str, flag: str):
    try:
        return tuple(as_exponent(v) for v in text.split(",") if v.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{flag} expects comma-separated rationals, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convineq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("constants", help="B(p), q(P) and C(P) tables")
    p.add_argument("--p", action="append", default=[], help="exponent for a B(p) row; repeatable")
    p.add_argument("--pairs", action="append", default=[], help="comma-separated exponents; repeatable")
    p.add_argument("--output")

    p = sub.add_parser("verify", help="seeded campaign of the main inequality")
    _add_carrier(p)
    p.add_argument("--f", default="suite", help="convex function spec (ft:t, pow:q, negpow:q, plin:..., step) or suite")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--output")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("figures", help="CSV and SVG data for the two-level counterexample plots")
    p.add_argument("--lambda", dest="lam", default="2/3")
    p.add_argument("--y1", default="1")
    p.add_argument("--y2", default="3")
    p.add_argument("--output", help="output directory")

    p = sub.add_parser("extremize", help="multistart search for extremal Young ratios")
    _add_carrier(p)
    p.add_argument("--P", dest="P", default="4/3,4/3")
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", help="output directory")

    p = sub.add_parser("demo-violation", help="show the support hypothesis is needed")
    _add_carrier(p, default="circle")
    p.add_argument("--f", default="pow:2")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    return parser


def config_from_args(ns) -> RunConfig:
    s = ns.subcommand
    if s == "constants":
        return RunConfig(s, exponents=tuple(as_exponent(p) for p in ns.p),
                         pairs=tuple(_exponent_list(t, "--pairs") for t in ns.pairs), output=ns.output)
    if s == "figures":
        params = (_fraction(ns.lam, "--lambda"), _fraction(ns.y1, "--y1"), _fraction(ns.y2, "--y2"))
        return RunConfig(s, figure_params=params, output=ns.output)
    spec = _carrier_spec(ns)
    if s == "demo-violation" and spec["kind"] == "circle":
        spec.setdefault("n", 64)
    if s == "extremize":
        return RunConfig(s, carrier=spec, exponents=_exponent_list(ns.P, "--P"), seed=ns.seed, tol=ns.tol,
                         output=ns.output, workers=ns.workers, starts=ns.starts, iters=ns.iters)
    if s == "verify":
        return RunConfig(s, carrier=spec, f=ns.f, trials=ns.trials, seed=ns.seed, tol=ns.tol,
                         output=ns.output, workers=ns.workers)
    return RunConfig(s, carrier=spec, f=ns.f, trials=ns.trials, seed=ns.seed, output=ns.output)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return run(config_from_args(ns))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
