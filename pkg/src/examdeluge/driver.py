"""The hyper-heuristic main loop and the batch experiment harness.

A single run constructs an initial conflict-free timetable, then repeats
for a fixed number of iterations: pick a heuristic by utility, propose a
move, price it exactly, ask the acceptance variant for a verdict, apply on
acceptance, adapt the utility, and track the best solution ever seen.
Every iteration is recorded so runs can be audited or replayed.

The batch layer runs (instance x variant x replicate) cells with
deterministic per-replicate seeds and aggregates lowest/mean best costs.
"""

from __future__ import annotations

import csv
import io
import random
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import acceptance as acc
from . import neighborhood as nbh
from . import selection as sel
from .instance import ProblemInstance
from .solution import (SlotsExhausted, Timetable, apply_move, check_feasibility,
                       construct_initial_LE, default_balance_cap, delta_numerator)

AUTO_BALANCE_CAP = "auto"


@dataclass(frozen=True)
class RunConfig:
    """Everything a single run needs besides the instance."""

    variant: str = "egd"
    max_iterations: int = 1000
    seed: int = 0
    utility_lower: float = sel.DEFAULT_LOWER_BOUND
    utility_upper: float = sel.DEFAULT_UPPER_BOUND
    utility_initial: float | None = None        # None -> 0.75 * upper
    kf: float = acc.DEFAULT_KF
    wait_fraction: float = acc.DEFAULT_WAIT_FRACTION
    reheat_lift: float = acc.DEFAULT_REHEAT_LIFT
    beta: float = acc.DEFAULT_BETA
    bmin: float = acc.DEFAULT_BMIN
    bmax: float = acc.DEFAULT_BMAX
    decay_exponent: float = acc.DEFAULT_DECAY_EXPONENT
    balance_cap: int | str | None = AUTO_BALANCE_CAP
    slot_capacity: int | None = None            # overrides the instance's cap
    # Compatibility switch: when set, the nlgd acceptance baseline follows
    # the candidate cost every iteration even on rejection, instead of the
    # incumbent's cost.  Off by default (standard incumbent semantics).
    nlgd_literal_baseline: bool = False
    collect_trace: bool = True

    def validate(self):
        acc.Variant(self.variant)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0.0 <= self.kf <= 1.0:
            raise ValueError("kf must lie in [0, 1]")
        if self.wait_fraction <= 0:
            raise ValueError("wait_fraction must be positive")
        if self.utility_lower > self.utility_upper:
            raise ValueError("utility bounds inverted")
        if isinstance(self.balance_cap, str) and self.balance_cap != AUTO_BALANCE_CAP:
            raise ValueError(f"balance_cap must be an int, None or {AUTO_BALANCE_CAP!r}")


class IterationRecord(NamedTuple):
    iteration: int
    current_cost: float
    best_cost: float
    boundary: float
    heuristic: int
    accepted: bool
    reheated: bool
    utilities: tuple[float, ...]    # as seen by selection this iteration
    nlgd_draw: float | None


@dataclass
class RunResult:
    instance_name: str
    variant: str
    seed: int
    best_timetable: Timetable
    best_cost_numerator: int
    initial_cost_numerator: int
    num_students: int
    iteration_of_best: int
    iterations: int
    trace: list[IterationRecord] = field(repr=False)
    wall_time: float = 0.0

    @property
    def best_cost(self) -> float:
        return self.best_cost_numerator / self.num_students

    @property
    def initial_cost(self) -> float:
        return self.initial_cost_numerator / self.num_students


def _resolve_balance_cap(cfg: RunConfig, inst: ProblemInstance) -> int | None:
    cap = cfg.balance_cap
    if cap == AUTO_BALANCE_CAP:
        return default_balance_cap(inst)
    if cap in (None, 0):
        return None
    return int(cap)


def _effective_instance(inst: ProblemInstance, cfg: RunConfig) -> ProblemInstance:
    if cfg.slot_capacity is not None and cfg.slot_capacity != inst.slot_capacity:
        return replace(inst, slot_capacity=cfg.slot_capacity)
    return inst


def run_hh(inst: ProblemInstance, cfg: RunConfig) -> RunResult:
    """Execute one seeded hyper-heuristic run and return the best solution
    found with its full per-iteration trace."""
    cfg.validate()
    inst = _effective_instance(inst, cfg)
    t0 = time.perf_counter()
    rng = random.Random(cfg.seed)
    variant = acc.Variant(cfg.variant)
    m = inst.num_students

    tt = construct_initial_LE(inst, _resolve_balance_cap(cfg, inst), rng)
    num = tt.cost_numerator
    initial_num = num
    state = acc.init_acceptance(
        variant, num / m,
        total_iterations=cfg.max_iterations,
        kf=cfg.kf, wait_fraction=cfg.wait_fraction, reheat_lift=cfg.reheat_lift,
        beta=cfg.beta, bmin=cfg.bmin, bmax=cfg.bmax,
        decay_exponent=cfg.decay_exponent)
    ut = sel.initial_utilities(nbh.NUM_HEURISTICS, cfg.utility_lower,
                               cfg.utility_upper, cfg.utility_initial)

    best_tt = tt.copy()
    best_num = num
    iteration_of_best = 0
    baseline_num = num      # cost the acceptance rule compares against
    trace: list[IterationRecord] = []
    literal_nlgd = cfg.nlgd_literal_baseline and variant is acc.Variant.NLGD

    for it in range(1, cfg.max_iterations + 1):
        logged_utils = ut.utilities
        h = sel.select_heuristic(ut, rng)
        move = nbh.propose(h, tt, inst, rng)
        dnum = delta_numerator(tt, inst, move)
        new_num = num + dnum
        improved = new_num < num

        old_cost = baseline_num / m
        new_cost = new_num / m
        if variant is acc.Variant.GD:
            verdict = acc.gd_accept(state, old_cost, new_cost)
        elif variant is acc.Variant.EGD:
            verdict = acc.egd_accept(state, old_cost, new_cost, best_num / m)
        elif variant is acc.Variant.FD:
            verdict = acc.fd_accept(state, old_cost, new_cost)
        else:
            verdict = acc.nlgd_accept(state, old_cost, new_cost, rng)

        if verdict.accepted:
            apply_move(tt, inst, move, dnum)
            num = new_num
        baseline_num = new_num if literal_nlgd else num

        ut = sel.update_utility(ut, h, improved)
        if num < best_num:
            best_num = num
            best_tt = tt.copy()
            iteration_of_best = it
        if cfg.collect_trace:
            trace.append(IterationRecord(
                it, num / m, best_num / m, verdict.boundary_after, h,
                verdict.accepted, verdict.reheated, logged_utils,
                verdict.level_draw))

    return RunResult(
        instance_name=inst.name,
        variant=variant.value,
        seed=cfg.seed,
        best_timetable=best_tt,
        best_cost_numerator=best_num,
        initial_cost_numerator=initial_num,
        num_students=m,
        iteration_of_best=iteration_of_best,
        iterations=cfg.max_iterations,
        trace=trace,
        wall_time=time.perf_counter() - t0,
    )


RUN_LOG_COLUMNS = ("iteration", "current_cost", "best_cost", "boundary",
                   "heuristic", "accepted", "reheated",
                   "u0", "u1", "u2", "u3", "nlgd_draw")


def run_log_text(result: RunResult) -> str:
    """Deterministic CSV of the per-iteration trace (no wall-clock data)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_LOG_COLUMNS)
    for r in result.trace:
        w.writerow([
            r.iteration, repr(r.current_cost), repr(r.best_cost),
            repr(r.boundary), r.heuristic, int(r.accepted), int(r.reheated),
            *[repr(u) for u in r.utilities],
            "" if r.nlgd_draw is None else repr(r.nlgd_draw),
        ])
    return buf.getvalue()


_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(base_seed: int, replicate: int) -> int:
    """Per-replicate seed: splitmix64 finalizer over base + (r+1)*golden.

    Documented so replicate streams can be reproduced independently of the
    batch machinery.
    """
    z = (base_seed + (replicate + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class BatchRow:
    instance: str
    variant: str
    replicate: int
    seed: int
    best_cost: float
    iteration_of_best: int
    wall_ms: float


@dataclass(frozen=True)
class CellSummary:
    instance: str
    variant: str
    replicates: int
    lowest_best_cost: float
    mean_best_cost: float
    std_best_cost: float
    mean_wall_ms: float


@dataclass
class BatchReport:
    rows: list[BatchRow]
    cells: list[CellSummary]
    failures: list[tuple[str, str, str]]    # (instance, variant/stage, message)

    def lowest_best(self, instance: str, variant: str) -> float:
        for c in self.cells:
            if c.instance == instance and c.variant == variant:
                return c.lowest_best_cost
        raise KeyError((instance, variant))


def _run_cell(inst: ProblemInstance, variant: str, cfg: RunConfig,
              replicates: int) -> tuple[list[BatchRow], RunResult | None]:
    rows = []
    last = None
    for r in range(replicates):
        run_cfg = replace(cfg, variant=variant, seed=derive_seed(cfg.seed, r),
                          collect_trace=False)
        res = run_hh(inst, run_cfg)
        rows.append(BatchRow(
            instance=inst.name, variant=variant, replicate=r, seed=run_cfg.seed,
            best_cost=res.best_cost, iteration_of_best=res.iteration_of_best,
            wall_ms=res.wall_time * 1000.0))
        last = res
    return rows, last


def run_batch(instances: list[ProblemInstance], variants: list[str],
              replicates: int, cfg: RunConfig, jobs: int = 1) -> BatchReport:
    """Run every (instance, variant) cell ``replicates`` times.

    Per-run failures (e.g. construction running out of slots) are recorded
    and the cell is skipped, never fatal.  With ``jobs`` > 1 cells execute
    in worker processes; output ordering is post-sorted either way, and
    results are seed-deterministic regardless of ``jobs``.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    tasks = [(inst, v) for inst in instances for v in variants]
    rows: list[BatchRow] = []
    failures: list[tuple[str, str, str]] = []

    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = {pool.submit(_run_cell, inst, v, cfg, replicates): (inst, v)
                    for inst, v in tasks}
            for fut, (inst, v) in futs.items():
                try:
                    cell_rows, _ = fut.result()
                    rows.extend(cell_rows)
                except SlotsExhausted as exc:
                    failures.append((inst.name, v, str(exc)))
    else:
        for inst, v in tasks:
            try:
                cell_rows, _ = _run_cell(inst, v, cfg, replicates)
                rows.extend(cell_rows)
            except SlotsExhausted as exc:
                failures.append((inst.name, v, str(exc)))

    order = {inst.name: i for i, inst in enumerate(instances)}
    vorder = {v: i for i, v in enumerate(variants)}
    rows.sort(key=lambda r: (order[r.instance], vorder[r.variant], r.replicate))

    cells = []
    for inst in instances:
        for v in variants:
            cell = [r for r in rows if r.instance == inst.name and r.variant == v]
            if not cell:
                continue
            costs = np.array([r.best_cost for r in cell])
            cells.append(CellSummary(
                instance=inst.name, variant=v, replicates=len(cell),
                lowest_best_cost=float(costs.min()),
                mean_best_cost=float(costs.mean()),
                std_best_cost=float(costs.std()),
                mean_wall_ms=float(np.mean([r.wall_ms for r in cell])),
            ))
    return BatchReport(rows=rows, cells=cells, failures=failures)


def batch_raw_csv(report: BatchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", "variant", "replicate", "seed", "best_cost",
                "iteration_of_best", "wall_ms"])
    for r in report.rows:
        w.writerow([r.instance, r.variant, r.replicate, r.seed,
                    repr(r.best_cost), r.iteration_of_best, f"{r.wall_ms:.3f}"])
    return buf.getvalue()


def batch_summary(report: BatchReport) -> dict:
    return {
        "cells": [{
            "instance": c.instance,
            "variant": c.variant,
            "replicates": c.replicates,
            "lowest_best_cost": c.lowest_best_cost,
            "mean_best_cost": c.mean_best_cost,
            "std_best_cost": c.std_best_cost,
            "mean_wall_ms": c.mean_wall_ms,
        } for c in report.cells],
        "failures": [{"instance": i, "variant": v, "error": e}
                     for i, v, e in report.failures],
    }


def comparison_table_csv(report: BatchReport, variants: list[str]) -> str:
    """Per-instance lowest best cost by variant, plus an average row."""
    instances = []
    for c in report.cells:
        if c.instance not in instances:
            instances.append(c.instance)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance"] + list(variants))
    per_variant: dict[str, list[float]] = {v: [] for v in variants}
    for name in instances:
        row = [name]
        for v in variants:
            try:
                val = report.lowest_best(name, v)
                per_variant[v].append(val)
                row.append(f"{val:.6f}")
            except KeyError:
                row.append("")
        w.writerow(row)
    avg_row = ["average_lowest_best_cost"]
    for v in variants:
        vals = per_variant[v]
        avg_row.append(f"{sum(vals) / len(vals):.6f}" if vals else "")
    w.writerow(avg_row)
    return buf.getvalue()
