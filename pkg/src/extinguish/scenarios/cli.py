"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 a checked property failed,
3 numerical divergence or solver non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..cone import ConeParams, cone_contains, rotate
from ..diagnostics import fit_decay
from ..errors import ConfigError, ConvergenceError, DivergenceError, DomainError, InsufficientDataError
from .catalog import CATALOG, load_scenario, scenario_names
from .config import parse_config
from .runner import read_series_csv, run_scenario, run_sweep
from .verify import SUITES, verify_suite

EXIT_OK, EXIT_CONFIG, EXIT_ASSERT, EXIT_DIVERGED = 0, 1, 2, 3


def _parse_a(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected 're,im'")
    return complex(float(parts[0]), float(parts[1]))


def _load(args):
    if bool(args.config) == bool(args.scenario):
        raise ConfigError("give exactly one of --config or --scenario")
    if args.config:
        cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
    else:
        try:
            cfg = load_scenario(args.scenario)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
    if args.output:
        cfg = cfg.replace(output=args.output)
    return cfg


def cmd_check_cone(args) -> int:
    try:
        inside = cone_contains(args.m, args.a)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"m = {args.m}  a = {args.a}  admissible = {inside}")
    if not inside:
        return EXIT_ASSERT
    rot = rotate(ConeParams(args.m, args.a))
    ab = args.a * rot.b
    print(f"theta_b = {rot.theta_b:.15g}")
    print(f"b = {rot.b.real:.15g} {rot.b.imag:+.15g}i")
    print(f"a*b = {ab.real:.15g} {ab.imag:+.15g}i")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args)
    summary = run_scenario(cfg)
    print(summary.to_json())
    print(f"wrote {cfg.output}/series.csv and summary.json", file=sys.stderr)
    return EXIT_OK if summary.passed else EXIT_ASSERT


def cmd_sweep(args) -> int:
    cfg = _load(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    try:
        summaries = run_sweep(cfg, args.vary, values, threads=args.threads)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    rows = []
    for val, s in zip(values, summaries):
        rows.append({"value": val, "passed": s.passed, "t_extinction": s.t_extinction,
                     "flags": s.flags})
    passing = [r["value"] for r in rows if r["passed"]]
    report = {"vary": args.vary, "runs": rows,
              "largest_passing": max(passing, key=float) if passing and _numeric(passing) else None}
    print(json.dumps(report, indent=2))
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_ASSERT


def _numeric(vals) -> bool:
    try:
        [float(v) for v in vals]
    except ValueError:
        return False
    return True


def cmd_verify(args) -> int:
    report = verify_suite(args.suite, args.seed, args.trials)
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["passed"] else EXIT_ASSERT


def cmd_fit(args) -> int:
    series = read_series_csv(args.csv)
    kind = {"exp": "exponential", "power": "power"}[args.kind]
    window = None
    if args.start is not None or args.end is not None:
        window = (args.start if args.start is not None else float(series.times[0]),
                  args.end if args.end is not None else float(series.times[-1]))
    try:
        fit = fit_decay(series, kind, window)
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    print(json.dumps({"kind": kind, "rate_or_exponent": fit.rate_or_exponent, "r2": fit.r2,
                      "scale": fit.scale}, indent=2))
    return EXIT_OK


def cmd_list(args) -> int:
    for name in scenario_names():
        if args.show:
            print(f"# --- {name} ---{CATALOG[name]}")
        else:
            print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="extinguish", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check-cone", help="test cone membership and print the rotation")
    c.add_argument("--m", type=float, required=True)
    c.add_argument("--a", type=_parse_a, required=True, help="re,im")
    c.set_defaults(func=cmd_check_cone)

    for name, func, hlp in (("run", cmd_run, "run one scenario"),
                            ("sweep", cmd_sweep, "run a scenario over several values of one key")):
        r = sub.add_parser(name, help=hlp)
        r.add_argument("--config", help="path to a config file")
        r.add_argument("--scenario", help="name of a shipped scenario (see 'list')")
        r.add_argument("--output", help="override the output directory")
        if name == "sweep":
            r.add_argument("--vary", required=True, help="config key, e.g. eps_star or source.T0")
            r.add_argument("--values", required=True, help="comma-separated values")
            r.add_argument("--threads", type=int, default=None)
        r.set_defaults(func=func)

    v = sub.add_parser("verify", help="run a seeded property suite")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--trials", type=int, default=100)
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("fit", help="decay fit of a series.csv")
    f.add_argument("--csv", required=True)
    f.add_argument("--kind", choices=("exp", "power"), required=True)
    f.add_argument("--start", type=float)
    f.add_argument("--end", type=float)
    f.set_defaults(func=cmd_fit)

    ls = sub.add_parser("list", help="list shipped scenarios")
    ls.add_argument("--show", action="store_true", help="print each config text")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
