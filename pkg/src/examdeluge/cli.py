"""Command-line surface: solve, batch, validate, generate, stats.

Exit codes are fixed for scripting: 0 success (validate: feasible),
1 infeasible solution, 2 missing file, 3 parse/usage-data error,
4 initial construction failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import driver
from .acceptance import (DEFAULT_BETA, DEFAULT_BMAX, DEFAULT_BMIN,
                         DEFAULT_DECAY_EXPONENT, DEFAULT_KF,
                         DEFAULT_REHEAT_LIFT)
from .instance import (GeneratorParams, TorontoFormatError, generate_instance,
                       instance_stats, parse_manifest, parse_toronto,
                       write_toronto)
from .solution import (SlotsExhausted, Timetable, check_feasibility,
                       evaluate_cost, parse_solution_text, solution_to_text)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_FILE_NOT_FOUND = 2
EXIT_PARSE_ERROR = 3
EXIT_CONSTRUCTION_FAILED = 4

VARIANT_CHOICES = ("gd", "egd", "fd", "nlgd")

logger = logging.getLogger(__name__)


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise CliError(EXIT_FILE_NOT_FOUND, f"file not found: {path}")
    return p.read_text()


def _parse_balance_cap(value: str):
    if value == driver.AUTO_BALANCE_CAP:
        return value
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected an integer, 0 to disable, or 'auto'; got {value!r}")
    return None if n == 0 else n


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def _add_instance_args(p: argparse.ArgumentParser):
    p.add_argument("--crs", required=True, help="exam/enrollment file")
    p.add_argument("--stu", required=True, help="per-student registration file")
    p.add_argument("-k", "--timeslots", type=_positive_int, required=True,
                   help="number of timeslots")
    p.add_argument("--slot-capacity", type=int, default=None,
                   help="optional per-timeslot seat capacity")


def _add_run_args(p: argparse.ArgumentParser):
    p.add_argument("--variant", choices=VARIANT_CHOICES, default="egd",
                   help="move acceptance variant")
    p.add_argument("--iterations", type=_positive_int, default=1000,
                   help="iteration budget per run")
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p.add_argument("--kf", type=float, default=DEFAULT_KF,
                   help="fd flexibility coefficient in [0, 1]")
    p.add_argument("--wait-pct", type=float, default=25.0,
                   help="egd stagnation wait, percent of the iteration budget")
    p.add_argument("--reheat-lift", type=float, default=DEFAULT_REHEAT_LIFT,
                   help="egd reheat: boundary = incumbent * (1 + lift)")
    p.add_argument("--beta", type=float, default=DEFAULT_BETA,
                   help="nlgd additive level term")
    p.add_argument("--bmin", type=float, default=DEFAULT_BMIN,
                   help="nlgd decay draw lower bound")
    p.add_argument("--bmax", type=float, default=DEFAULT_BMAX,
                   help="nlgd decay draw upper bound")
    p.add_argument("--delta", type=float, default=DEFAULT_DECAY_EXPONENT,
                   help="nlgd decay exponent coefficient")
    p.add_argument("--balance-cap", type=_parse_balance_cap,
                   default=driver.AUTO_BALANCE_CAP,
                   help="per-slot exam cap for construction: an integer, "
                        "0 to disable, or 'auto' (ceil(n/k)+1)")


def _config_from_args(args) -> driver.RunConfig:
    return driver.RunConfig(
        variant=args.variant,
        max_iterations=args.iterations,
        seed=args.seed,
        kf=args.kf,
        wait_fraction=args.wait_pct / 100.0,
        reheat_lift=args.reheat_lift,
        beta=args.beta,
        bmin=args.bmin,
        bmax=args.bmax,
        decay_exponent=args.delta,
        balance_cap=args.balance_cap,
        slot_capacity=args.slot_capacity,
    )


def _load_instance(args, name: str | None = None):
    crs = _read_text(args.crs)
    stu = _read_text(args.stu)
    try:
        return parse_toronto(crs, stu, args.timeslots,
                             name=name or Path(args.crs).stem,
                             slot_capacity=args.slot_capacity)
    except (TorontoFormatError, ValueError) as exc:
        raise CliError(EXIT_PARSE_ERROR, f"parse error: {exc}")


def cmd_solve(args) -> int:
    inst = _load_instance(args)
    cfg = _config_from_args(args)
    try:
        result = driver.run_hh(inst, cfg)
    except SlotsExhausted as exc:
        raise CliError(EXIT_CONSTRUCTION_FAILED, f"{inst.name}: {exc}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{inst.name}.{cfg.variant}.seed{cfg.seed}"
    sol_path = out_dir / f"{stem}.sol"
    log_path = out_dir / f"{stem}.log.csv"
    sol_path.write_text(solution_to_text(result.best_timetable, inst))
    log_path.write_text(driver.run_log_text(result))
    report = check_feasibility(result.best_timetable, inst)
    print(f"{inst.name} variant={cfg.variant} seed={cfg.seed} "
          f"initial={result.initial_cost:.6f} best={result.best_cost:.6f} "
          f"best_at={result.iteration_of_best} feasible={report.feasible} "
          f"time={result.wall_time:.2f}s -> {sol_path}")
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_batch(args) -> int:
    manifest_text = _read_text(args.manifest)
    try:
        entries = parse_manifest(manifest_text)
    except TorontoFormatError as exc:
        raise CliError(EXIT_PARSE_ERROR, f"manifest error: {exc}")
    if not entries:
        raise CliError(EXIT_PARSE_ERROR, f"manifest {args.manifest} lists no instances")
    base = Path(args.manifest).parent
    instances = []
    failures = []
    for entry in entries:
        try:
            crs = _read_text(str(base / entry.crs_path))
            stu = _read_text(str(base / entry.stu_path))
            instances.append(parse_toronto(
                crs, stu, entry.num_timeslots, name=entry.name,
                slot_capacity=entry.slot_capacity))
        except (CliError, TorontoFormatError, ValueError) as exc:
            logger.warning("skipping %s: %s", entry.name, exc)
            failures.append((entry.name, "load", str(exc)))
    variants = args.variants.split(",")
    for v in variants:
        if v not in VARIANT_CHOICES:
            raise CliError(EXIT_PARSE_ERROR, f"unknown variant {v!r}")
    cfg = _config_from_args(args)
    report = driver.run_batch(instances, variants, args.replicates, cfg,
                              jobs=args.jobs)
    report.failures[:0] = failures

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "raw_results.csv").write_text(driver.batch_raw_csv(report))
    (out_dir / "summary.json").write_text(
        json.dumps(driver.batch_summary(report), indent=2) + "\n")
    (out_dir / "comparison_lowest_best.csv").write_text(
        driver.comparison_table_csv(report, variants))
    for c in report.cells:
        print(f"{c.instance} {c.variant} lowest={c.lowest_best_cost:.6f} "
              f"mean={c.mean_best_cost:.6f} std={c.std_best_cost:.6f} "
              f"runs={c.replicates}")
    for name, stage, msg in report.failures:
        print(f"FAILED {name} [{stage}]: {msg}", file=sys.stderr)
    print(f"wrote {out_dir / 'raw_results.csv'}, {out_dir / 'summary.json'}, "
          f"{out_dir / 'comparison_lowest_best.csv'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = _load_instance(args)
    text = _read_text(args.solution)
    try:
        assignment, reported = parse_solution_text(text, inst)
    except ValueError as exc:
        raise CliError(EXIT_PARSE_ERROR, f"solution error: {exc}")
    tt = Timetable.from_assignment(inst, assignment)
    report = check_feasibility(tt, inst)
    print(f"hc1_conflicting_pairs={report.hc1_violations} "
          f"hc2_overfull_slots={report.hc2_violations} "
          f"hc3_ok={report.hc3_ok} hc4_unassigned={report.hc4_unassigned} "
          f"feasible={report.feasible}")
    if report.hc4_unassigned == 0:
        cost = evaluate_cost(tt, inst)
        print(f"cost={cost!r}")
        if reported is not None and reported != cost:
            print(f"note: file reports cost {reported!r}", file=sys.stderr)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_generate(args) -> int:
    params = GeneratorParams(
        num_exams=args.exams,
        num_students=args.students,
        exams_per_student=(args.min_exams, args.max_exams),
        num_timeslots=args.timeslots,
        seed=args.seed,
    )
    try:
        inst = generate_instance(params)
    except ValueError as exc:
        raise CliError(EXIT_PARSE_ERROR, f"invalid generator parameters: {exc}")
    crs_text, stu_text = write_toronto(inst)
    crs_path = Path(args.out_crs)
    stu_path = Path(args.out_stu)
    crs_path.parent.mkdir(parents=True, exist_ok=True)
    stu_path.parent.mkdir(parents=True, exist_ok=True)
    crs_path.write_text(crs_text)
    stu_path.write_text(stu_text)
    print(f"{inst.name}: wrote {crs_path} and {stu_path}")
    return EXIT_OK


def cmd_stats(args) -> int:
    inst = _load_instance(args)
    s = instance_stats(inst)
    print(json.dumps({
        "name": s.name,
        "num_exams": s.num_exams,
        "num_students": s.num_students,
        "num_timeslots": s.num_timeslots,
        "total_registrations": s.total_registrations,
        "conflict_density": s.conflict_density,
    }, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="examdeluge",
        description="Hyper-heuristic exam timetabling with Great Deluge "
                    "acceptance variants.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a single instance")
    _add_instance_args(p)
    _add_run_args(p)
    p.add_argument("--out-dir", default=".", help="where to write .sol/.log.csv")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("batch", help="run the replicated experiment protocol")
    p.add_argument("--manifest", required=True,
                   help="instance manifest: name crs stu timeslots [capacity]")
    p.add_argument("--variants", default="egd,fd,nlgd",
                   help="comma-separated acceptance variants")
    p.add_argument("--replicates", type=_positive_int, default=10,
                   help="independent seeded runs per (instance, variant)")
    p.add_argument("--jobs", type=_positive_int, default=1,
                   help="concurrent runs (results are post-sorted)")
    p.add_argument("--slot-capacity", type=int, default=None,
                   help="per-timeslot seat capacity override")
    _add_run_args(p)
    p.add_argument("--out-dir", default="batch_out", help="report directory")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("validate", help="check a solution file against an instance")
    _add_instance_args(p)
    p.add_argument("--solution", required=True, help="solution file to check")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="write a random instance to disk")
    p.add_argument("--exams", type=_positive_int, required=True)
    p.add_argument("--students", type=_positive_int, required=True)
    p.add_argument("--min-exams", type=_positive_int, default=2,
                   help="minimum exams per student")
    p.add_argument("--max-exams", type=_positive_int, default=6,
                   help="maximum exams per student")
    p.add_argument("--timeslots", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-crs", required=True)
    p.add_argument("--out-stu", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="print instance summary statistics")
    _add_instance_args(p)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
