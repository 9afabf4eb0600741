"""Command line entry point.

Exit codes: 0 success, 1 usage or parse error, 2 simulation error,
3 a ``suite --check`` expectation failed.
"""

import argparse
import os
import sys
from dataclasses import replace
from importlib import resources

from bankreg.engine import program_regulator
from bankreg.regulator import Regulator
from bankreg.harness import evaluate_checks, load_plan, parse_plan, profile, run_suite, sweep_plan
from bankreg.scenario import ScenarioError, format_scenario, validation_report

EXIT_OK, EXIT_USAGE, EXIT_SIM, EXIT_CHECK = 0, 1, 2, 3


def canned_suites():
    return sorted(
        p.name[:-4] for p in resources.files("bankreg.suites").iterdir() if p.name.endswith(".scn")
    )


def resolve(path):
    """A file path, or the name of a suite shipped with the package."""
    if os.path.exists(path):
        return path
    name = path[:-4] if path.endswith(".scn") else path
    if name in canned_suites():
        return str(resources.files("bankreg.suites") / f"{name}.scn")
    raise FileNotFoundError(f"no such scenario file or canned suite: {path}")


def _read(path):
    with open(resolve(path)) as f:
        return f.read()


def _emit(text, out):
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _base_plan(args):
    text = _read(args.file)
    plan = parse_plan(text, os.path.splitext(os.path.basename(args.file))[0])
    # `run` executes only the base scenario, never the variations
    plan = replace(plan, variations=[("base", {})], baseline="base", checks=[])
    return plan


def cmd_run(args):
    plan = _base_plan(args)
    if args.seed is not None:
        plan = replace(plan, variations=[("base", {"run.seed": (str(args.seed), None)})])
    _, scenario = next(plan.scenarios())
    if not args.quiet:
        print(validation_report(scenario), file=sys.stderr)
    suite = run_suite(plan)
    _emit(suite.csv(timestamp=not args.no_timestamp), args.out)
    return EXIT_OK if all(r.finished for r in suite.results.values()) else EXIT_SIM


def _finish_suite(suite, args):
    _emit(suite.csv(timestamp=not args.no_timestamp), args.out)
    unfinished = [name for name, r in suite.results.items() if not r.finished]
    for name in unfinished:
        print(f"warning: variation {name!r} hit max_cycles before the measured core finished",
              file=sys.stderr)
    if getattr(args, "check", False):
        outcomes = evaluate_checks(suite)
        for name, ok, detail in outcomes:
            print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=sys.stderr)
        if not all(ok for _, ok, _ in outcomes):
            return EXIT_CHECK
    return EXIT_OK


def cmd_suite(args):
    plan = load_plan(resolve(args.file))
    return _finish_suite(run_suite(plan, jobs=args.jobs), args)


def cmd_sweep(args):
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ScenarioError("--values needs at least one value")
    name = os.path.splitext(os.path.basename(args.file))[0]
    plan = sweep_plan(_read(args.file), args.param, values, name)
    return _finish_suite(run_suite(plan, jobs=args.jobs), args)


def cmd_profile(args):
    _, scenario = next(_base_plan(args).scenarios())
    if args.core not in {c.core_id for c in scenario.cores}:
        raise ScenarioError(f"core {args.core} is not declared in {args.file}")
    p = profile(scenario, args.core)
    total = p.accesses or 1
    print(f"core {p.core}: {p.accesses} accesses in {p.cycles} cycles")
    for b, n in enumerate(p.counts):
        print(f"  bank {b}: {n:>10d}  ({100.0 * n / total:5.1f}%)")
    print(f"  read  bandwidth: {p.read_bw / 1e6:.1f} MB/s")
    print(f"  write bandwidth: {p.write_bw / 1e6:.1f} MB/s")
    return EXIT_OK


def cmd_dump_registers(args):
    _, scenario = next(_base_plan(args).scenarios())
    reg = Regulator(scenario.regulator_config())
    program_regulator(reg, scenario)
    for offset, name in reg.register_map():
        print(f"{offset:#06x}  {name:<12s} {reg.register_read(offset)}")
    if args.effective:
        print()
        print(format_scenario(scenario), end="")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="bankreg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the base scenario of a file")
    r.add_argument("file")
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--no-timestamp", action="store_true")
    r.add_argument("--quiet", action="store_true", help="do not print the validation report")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("suite", help="run every variation of a plan file or canned suite")
    s.add_argument("file")
    s.add_argument("--out")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--check", action="store_true", help="evaluate the plan's [check] section")
    s.add_argument("--no-timestamp", action="store_true")
    s.set_defaults(func=cmd_suite)

    w = sub.add_parser("sweep", help="vary one section.key over a list of values")
    w.add_argument("file")
    w.add_argument("--param", required=True)
    w.add_argument("--values", required=True)
    w.add_argument("--out")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--no-timestamp", action="store_true")
    w.set_defaults(func=cmd_sweep)

    f = sub.add_parser("profile", help="per-bank access histogram of one core")
    f.add_argument("file")
    f.add_argument("--core", type=int, required=True)
    f.set_defaults(func=cmd_profile)

    d = sub.add_parser("dump-registers", help="show the register file after programming")
    d.add_argument("file")
    d.add_argument("--effective", action="store_true", help="also print the effective scenario")
    d.set_defaults(func=cmd_dump_registers)

    sub.add_parser("list", help="list canned suites").set_defaults(
        func=lambda a: print("\n".join(canned_suites())) or EXIT_OK)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001 - anything else is a simulation failure
        print(f"simulation error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
