"""Command-line entry point ``ymlp``.

Subcommands::

    ymlp run <name|config.json> [--out DIR]
    ymlp convergence <name> [--levels K] [--jobs J]
    ymlp complexity [--method M ...] [--params key=value ...] [--against M] [--golden]
    ymlp export-lp <name|config.json> <path>
    ymlp ipm-check [--seed S] [--count N]
    ymlp list

Output goes below ``$YMLP_OUTPUT_ROOT`` (default ``./results``).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from . import complexity, experiments


def _parse_params(items):
    """``key=value`` pairs into :class:`CostParams` keyword arguments (plus family)."""
    kw, family = {}, None
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"--params expects key=value, got {item!r}")
        if key == "family":
            family = value
        elif key == "representation":
            kw[key] = value
        elif key == "random":
            kw[key] = value.lower() in ("1", "true", "yes")
        elif key in ("d", "n", "m"):
            kw[key] = int(value)
        elif key in ("N_t", "N_x", "N_xi", "N_omega", "epsilon", "delta", "kappa_newt"):
            kw[key] = float(value)
        else:
            raise SystemExit(f"unknown complexity parameter {key!r}")
    if family is not None:
        dim = kw.pop("d", complexity.d)
        return complexity.family_params(family, dim=dim, **kw)
    return complexity.CostParams(**kw)


def _write_rows(rows, fmt, stream):
    if not rows:
        return
    keys = list(rows[0])
    if fmt == "csv":
        wr = csv.DictWriter(stream, fieldnames=keys, lineterminator="\n")
        wr.writeheader()
        wr.writerows(rows)
    else:
        stream.write("| " + " | ".join(keys) + " |\n")
        stream.write("|" + "---|" * len(keys) + "\n")
        for row in rows:
            stream.write("| " + " | ".join(str(row[k]) for k in keys) + " |\n")


def cmd_run(args):
    config = experiments.load_config(args.config)
    result = experiments.run_experiment(config, out_dir=args.out, progress=True)
    out = args.out or experiments.output_root() / config.name
    tot = result.totals()
    print(f"{config.name}: {len(result.steps)} steps in {result.seconds:.1f} s, output in {out}")
    print(f"final total energy {tot['E_hat'][-1]:.6e}, defect {tot['defect'][-1]:.6e}")
    errs = result.errors(normalize=True)
    if errs is not None:
        for i, (L1, L2) in enumerate(errs):
            print(f"component {i}: mean L1 {L1:.4e}, mean L2 {L2:.4e}")
    return 0


def cmd_convergence(args):
    config = experiments.load_config(args.config)
    rows = experiments.run_convergence(config, levels=args.levels, jobs=args.jobs, out_dir=args.out)
    print(f"{'N_t':>5} {'N_x':>5} {'N_xi':>5} {'L1':>12} {'rate':>7} {'L2':>12} {'rate':>7}")
    for r in rows:
        rate1 = "" if r.L1_rate is None else f"{r.L1_rate:.3f}"
        rate2 = "" if r.L2_rate is None else f"{r.L2_rate:.3f}"
        print(f"{r.resolution[0]:>5} {r.resolution[1]:>5} {r.resolution[2]:>5} "
              f"{r.L1:12.4e} {rate1:>7} {r.L2:12.4e} {rate2:>7}")
    return 0


def cmd_complexity(args):
    if args.golden:
        bad = complexity.compare_to_golden()
        for line in bad:
            print("MISMATCH", line)
        print("golden tables reproduced" if not bad else f"{len(bad)} mismatches")
        return 0 if not bad else 1
    params = _parse_params(args.params)
    methods = args.method or [m for m in complexity.METHODS]
    if args.against:
        rows = [complexity.advantage(m, args.against, params).row() for m in methods]
    else:
        rows = complexity.comparison_rows(methods, params)
    _write_rows(rows, args.format, sys.stdout)
    return 0


def cmd_export_lp(args):
    config = experiments.load_config(args.config)
    step = experiments.export_lp(config, args.path)
    print(f"wrote {step.M.shape[0]} x {step.M.shape[1]} step LP ({step.M.nnz} nonzeros) to {args.path}")
    return 0


def cmd_ipm_check(args):
    from .lpcheck import oracle_check
    records = oracle_check(seed=args.seed, count=args.count)
    worst = max(r.error for r in records)
    violations = sum(r.positivity_violations for r in records)
    failed = [r for r in records if r.status != "optimal" or r.error > args.tol]
    for r in failed:
        print(f"LP {r.index} (r={r.r}, s={r.s}): {r.status}, |objective error| = {r.error:.3e}")
    print(f"{len(records)} random LPs, max |objective error| {worst:.3e}, "
          f"positivity violations {violations}")
    return 0 if not failed and violations == 0 else 1


def cmd_list(args):
    for name in experiments.EXPERIMENTS:
        cfg = experiments.get_experiment(name)
        print(f"{name:22s} {cfg.model:18s} T={cfg.T:<6g} resolution={cfg.resolution}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ymlp", description="Young-measure LP solver for PDEs")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", help="run a named experiment or a JSON config")
    s.add_argument("config")
    s.add_argument("--out", default=None, help="output directory")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("convergence", help="error table over a doubling sequence")
    s.add_argument("config")
    s.add_argument("--levels", type=int, default=5)
    s.add_argument("--jobs", type=int, default=1, help="parallel levels")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_convergence)

    s = sub.add_parser("complexity", help="cost models of the LP algorithms")
    s.add_argument("--method", nargs="+", choices=complexity.METHODS)
    s.add_argument("--params", nargs="*", metavar="KEY=VALUE",
                   help="d, n, m, family, representation, random, N_t, N_x, N_xi, "
                        "N_omega, epsilon, delta, kappa_newt")
    s.add_argument("--against", choices=complexity.METHODS,
                   help="report exponent advantage over this method")
    s.add_argument("--format", choices=("csv", "markdown"), default="csv")
    s.add_argument("--golden", action="store_true", help="check the emitted tables")
    s.set_defaults(func=cmd_complexity)

    s = sub.add_parser("export-lp", help="write the step LP as a triplet file")
    s.add_argument("config")
    s.add_argument("path")
    s.set_defaults(func=cmd_export_lp)

    s = sub.add_parser("ipm-check", help="random LPs against vertex enumeration")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_ipm_check)

    s = sub.add_parser("list", help="named experiments")
    s.set_defaults(func=cmd_list)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (experiments.ConfigError, experiments.LpInfeasibleError,
            complexity.ComplexityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
