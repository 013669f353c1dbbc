"""Command-line front end: ``cpsclp solve | sweep | profile``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from typing import Optional, Sequence

from . import mip, runner
from .instance import InstanceError, Mode, RobustConfig, generate, load

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TIME_LIMIT = 2
EXIT_USAGE = 64

LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "trace": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _configure_logging() -> None:
    level = os.environ.get("CPSCLP_LOG", "quiet").strip().lower()
    if level not in LOG_LEVELS:
        raise UsageError(f"CPSCLP_LOG must be one of {sorted(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], stream=sys.stderr,
                        format="%(asctime)s %(name)s %(message)s")


_GEN_KEYS = {"seed": int, "nf": int, "nc": int, "radius": float, "covfrac": float, "devfrac": float}


def parse_generate(text: str) -> dict:
    """``seed=1,nf=10,nc=50,radius=30,covfrac=0.5`` -> keyword dict."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise UsageError(f"bad --generate item {part!r}")
        k, v = (s.strip() for s in part.split("=", 1))
        if k not in _GEN_KEYS:
            raise UsageError(f"unknown --generate key {k!r}; known: {', '.join(_GEN_KEYS)}")
        try:
            out[k] = _GEN_KEYS[k](v)
        except ValueError:
            raise UsageError(f"bad value for {k}: {v!r}") from None
    missing = {"seed", "nf", "nc", "radius"} - set(out)
    if missing:
        raise UsageError(f"--generate is missing {', '.join(sorted(missing))}")
    return out


def _instance_from(args_instance: Optional[str], args_generate: Optional[str]):
    if args_instance:
        return load(args_instance)
    g = parse_generate(args_generate)
    return generate(g["seed"], g["nf"], g["nc"], g["radius"],
                    g.get("covfrac", 0.5), g.get("devfrac", 0.2))


def _params(args) -> mip.SolverParams:
    kw = {"time_limit": args.time_limit, "mip_gap": args.mip_gap}
    if args.eps is not None:
        kw["epsilon"] = args.eps
    return mip.SolverParams(**kw)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--time-limit", type=float, default=900.0, help="seconds per solve (default 900)")
    p.add_argument("--mip-gap", type=float, default=0.0, help="relative optimality gap")
    p.add_argument("--eps", type=float, default=None, help="perturbation size for eps variants")
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cpsclp", description="Robust congested partial set covering location solver")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one instance with one method")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", help="instance JSON file")
    src.add_argument("--generate", help="seed=..,nf=..,nc=..,radius=..[,covfrac=..][,devfrac=..]")
    s.add_argument("--method", choices=runner.METHODS, default="misocp")
    s.add_argument("--gamma", default="0", help="budget as an integer or a percentage like 50%%")
    s.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.BOTH.value)
    s.add_argument("--reference-obj", type=float, default=None,
                   help="reference optimum used for the gap of unsolved runs")
    _common(s)

    w = sub.add_parser("sweep", help="Gamma sensitivity sweep")
    w.add_argument("--instance", action="append", default=[], help="instance JSON (repeatable)")
    w.add_argument("--generate", action="append", default=[], help="generator settings (repeatable)")
    w.add_argument("--method", action="append", choices=runner.METHODS, default=None)
    w.add_argument("--mode", action="append", choices=[m.value for m in Mode], default=None)
    w.add_argument("--grid", default=None, help="comma-separated percentages of |J|")
    w.add_argument("--jobs", type=int, default=1)
    _common(w)

    pr = sub.add_parser("profile", help="solution profiles from metric CSVs")
    pr.add_argument("csv", nargs="*", help="metric CSV files")
    pr.add_argument("--out", default="profile.csv")
    return ap


def cmd_solve(args) -> int:
    inst = _instance_from(args.instance, args.generate)
    try:
        gamma = runner.parse_gamma(args.gamma, inst.n_customers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    config = RobustConfig(gamma, Mode(args.mode))
    res = runner.run_method(inst, config, args.method, _params(args), args.reference_obj)
    stem = f"{res.row.id}_{args.method}_{config.mode.value}_g{gamma}"
    runner.write_report(res, args.out, stem)
    print(",".join(runner.CSV_HEADER))
    print(res.row.to_csv_line())
    if res.report.status is mip.MipStatus.OPTIMAL:
        return EXIT_OK
    if res.report.status is mip.MipStatus.TIME_LIMIT:
        return EXIT_TIME_LIMIT
    return EXIT_ERROR


def cmd_sweep(args) -> int:
    insts = [load(p) for p in args.instance]
    insts += [_instance_from(None, g) for g in args.generate]
    if not insts:
        raise UsageError("sweep needs at least one --instance or --generate")
    grid = runner.GAMMA_GRID_PCT
    if args.grid:
        try:
            grid = tuple(float(t) for t in args.grid.split(","))
        except ValueError:
            raise UsageError(f"bad --grid {args.grid!r}") from None
    try:
        sweep = runner.SweepSpec(
            insts,
            modes=args.mode or [Mode.LOAD_ONLY, Mode.COVERAGE_ONLY, Mode.BOTH],
            methods=args.method or ["misocp"],
            grid_pct=grid,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = runner.run_sweep(sweep, _params(args), jobs=max(1, args.jobs))
    os.makedirs(args.out, exist_ok=True)
    runner.write_csv(rows, os.path.join(args.out, "sweep.csv"))
    with open(os.path.join(args.out, "sweep.json"), "w") as fh:
        json.dump([r.to_dict() for r in rows], fh, indent=1)
    ncust = {runner.instance_id(i): i.n_customers for i in insts}
    stars = runner.gamma_star(rows, ncust)
    with open(os.path.join(args.out, "gamma_star.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["id", "mode", "method", "gamma_star"])
        for (iid, mode, method), g in sorted(stars.items()):
            wr.writerow([iid, mode, method, "" if g is None else g])
    failed = sum(1 for r in rows if r.status.startswith("Error"))
    print(f"{len(rows)} rows written to {args.out} ({failed} failed)")
    return EXIT_OK if failed == 0 else EXIT_ERROR


def cmd_profile(args) -> int:
    if not args.csv:
        raise UsageError("profile needs at least one metric CSV")
    rows = [r for path in args.csv for r in runner.read_csv(path)]
    if not rows:
        raise UsageError("metric CSVs contain no rows")
    series = runner.profile(rows)
    with open(args.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["method", "time_s", "fraction_solved"])
        for method in sorted(series):
            for t, frac in series[method]:
                wr.writerow([method, f"{t:.6g}", f"{frac:.6g}"])
    print(f"profile for {len(series)} method(s) written to {args.out}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _configure_logging()
        handler = {"solve": cmd_solve, "sweep": cmd_sweep, "profile": cmd_profile}[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"cpsclp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceError, ValueError, OSError, RuntimeError) as exc:
        print(f"cpsclp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
