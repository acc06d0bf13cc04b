"""Command-line front end: ``fidsus sweep | chi-u0 | thermal | validate``.

Exit codes: 0 success, 1 partial failure (some rows or checks failed),
2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from . import thermal
from .config import ConfigError, SweepConfig, load_config, parse_pairs
from .freefermion import default_ladder
from .sweep import failed_rows, format_csv, run_sweep, write_csv
from .validate import FAULTS, format_report, validate

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _emit(cfg: SweepConfig, rows) -> int:
    if cfg.out:
        write_csv(rows, cfg.out)
    else:
        sys.stdout.write(format_csv(rows))
    bad = failed_rows(rows)
    for r in bad:
        print(f"row failed (lambda={r['lambda']}, route={r['route']}): {r['status']}", file=sys.stderr)
    return EXIT_PARTIAL if bad else EXIT_OK


def cmd_sweep(args) -> int:
    overrides = parse_pairs(kv.split("=", 1) for kv in args.set or [])
    if args.out is not None:
        overrides["out"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    cfg = load_config(args.config, overrides)
    return _emit(cfg, run_sweep(cfg))


def cmd_chi_u0(args) -> int:
    if args.L:
        ladder = tuple(args.L)
    elif args.step:
        ladder = tuple(range(args.L_min, args.L_max + 1, args.step))
    else:
        ladder = tuple(default_ladder(args.L_max, args.L_min))
    cfg = load_config(overrides={"model": "freefermion", "L": ladder, "t": args.t,
                                 "out": args.out, "workers": args.workers})
    rows = run_sweep(cfg)
    ok = [r for r in rows if r["status"] == "ok"]
    if len(ok) >= 2:
        a, b = float(ok[-2]["chi_F_per_L"]), float(ok[-1]["chi_F_per_L"])
        print(f"chi_F/L: L={ok[-2]['L']} -> {a:.8g}, L={ok[-1]['L']} -> {b:.8g}, "
              f"relative change {abs(b - a) / abs(b):.3e}", file=sys.stderr)
    return _emit(cfg, rows)


def cmd_thermal(args) -> int:
    routes = ["temperature", "temperature_fd"]
    if not args.wang_landau:
        routes += ["field", "field_fd"]
    cfg = load_config(overrides={
        "model": "ising2d", "Lx": args.lx, "Ly": args.ly, "J": args.J, "h": args.h,
        "grid_min": args.beta_min, "grid_max": args.beta_max, "grid_step": args.beta_step,
        "dlambda": (args.dbeta,), "routes": tuple(routes), "seed": args.seed,
        "dos": "wang_landau" if args.wang_landau else "exact", "out": args.out,
    })
    if args.dos_out:
        dos = (thermal.wang_landau(args.lx, args.ly, args.J, seed=args.seed) if args.wang_landau
               else thermal.enumerate_dos(args.lx, args.ly, args.J))
        thermal.write_dos(dos, args.dos_out)
    return _emit(cfg, run_sweep(cfg))


def cmd_validate(args) -> int:
    results = validate(fault=args.inject_fault, quick=args.quick)
    print(format_report(results, as_json=args.json))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fidsus", description="Fidelity susceptibility toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run a parameter sweep described by a config file")
    s.add_argument("--config", help="key = value config file")
    s.add_argument("--out", help="output CSV (default: stdout)")
    s.add_argument("--workers", type=int)
    s.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("chi-u0", help="free-fermion chi_F at U = 0 over a size ladder")
    c.add_argument("--L-max", type=int, default=1906)
    c.add_argument("--L-min", type=int, default=6)
    c.add_argument("--step", type=int, help="arithmetic ladder step (default: halving ladder)")
    c.add_argument("--L", type=int, nargs="+", help="explicit list of sizes")
    c.add_argument("--t", type=float, default=1.0)
    c.add_argument("--out")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_chi_u0)

    t = sub.add_parser("thermal", help="thermal fidelity of the 2D Ising model")
    t.add_argument("--lx", type=int, default=4)
    t.add_argument("--ly", type=int, default=4)
    t.add_argument("--J", type=float, default=1.0)
    t.add_argument("--h", type=float, default=0.0)
    t.add_argument("--beta-min", type=float, default=0.1)
    t.add_argument("--beta-max", type=float, default=1.0)
    t.add_argument("--beta-step", type=float, default=0.1)
    t.add_argument("--dbeta", type=float, default=1e-3)
    t.add_argument("--wang-landau", action="store_true", help="use a Wang-Landau dos")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--dos-out", help="also write the density of states to this file")
    t.add_argument("--out")
    t.set_defaults(func=cmd_thermal)

    v = sub.add_parser("validate", help="run the cross-route validation suite")
    v.add_argument("--json", action="store_true")
    v.add_argument("--quick", action="store_true", help="skip Wang-Landau and L=1906 checks")
    v.add_argument("--inject-fault", choices=FAULTS, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
