"""Grids of (size, seed) runs, optionally spread over worker processes."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .analysis import ExperimentReport, scaling_fit
from .constructions.builder import SIZE_KEY, generate
from .engine import ProcessConfig, make_scheduler, run, run_with_ledger
from .errors import ScheduleViolation, UsageError
from .graph import DegreeClassifier, ProcessKind, SwitchRule, random_coloring


@dataclass(frozen=True)
class Cell:
    family: str
    params: dict
    size: int
    seed: int
    scheduler: str = "scripted"
    kind: str = "majority"
    rule: str = "proportional:3/5"
    ledger: bool = False
    c0: float = 3.0
    eps: str = "1/20"


def run_cell(cell: Cell) -> dict:
    params = {**cell.params, SIZE_KEY[cell.family]: cell.size}
    g, schedule, _ = generate(cell.family, params, cell.seed)
    rec = {"size": cell.size, "n": g.n, "seed": cell.seed}
    if schedule is not None and cell.scheduler == "scripted":
        try:
            trace = schedule.replay(g)
            rec.update(steps=len(trace), stabilized=trace.stabilized, good_event=schedule.good_event)
        except ScheduleViolation as exc:
            rec.update(steps=exc.step, stabilized=False, good_event=False, violation=str(exc))
        return rec
    if schedule is not None:
        col, kind, rule = schedule.initial, schedule.kind, schedule.rule
    else:
        col = random_coloring(g, cell.seed)
        kind, rule = ProcessKind(cell.kind), SwitchRule.parse(cell.rule)
    sched = make_scheduler("greedy" if cell.scheduler == "scripted" else cell.scheduler, cell.seed)
    if cell.ledger:
        cfg = ProcessConfig(kind, rule, DegreeClassifier(cell.c0, g.n))
        trace, report = run_with_ledger(g, col, cfg, sched, Fraction(cell.eps))
        rec.update(balanced=report.balanced_high_neighborhoods,
                   ledger_violations=len(report.violations),
                   premise_failures=len(report.premise_failures),
                   initial_active=report.initial_active, initial_rigid=report.initial_rigid)
    else:
        trace = run(g, col, ProcessConfig(kind, rule), sched)
    rec.update(steps=len(trace), stabilized=trace.stabilized,
               within_n_log_n=len(trace) <= 3 * g.n * math.log(g.n))
    return rec


def thread_cap() -> int:
    raw = os.environ.get("INFLAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError("INFLAB_THREADS must be an integer") from None
    return os.cpu_count() or 1


@dataclass
class ExperimentPlan:
    family: str
    sizes: list[int]
    seeds: list[int]
    params: dict = field(default_factory=dict)
    scheduler: str = "scripted"
    kind: str = "majority"
    rule: str = "proportional:3/5"
    ledger: bool = False
    c0: float = 3.0
    eps: str = "1/20"

    def cells(self) -> list[Cell]:
        return [Cell(self.family, self.params, s, seed, self.scheduler, self.kind, self.rule,
                     self.ledger, self.c0, self.eps)
                for s in self.sizes for seed in self.seeds]


def run_experiment(plan: ExperimentPlan, threads: int | None = None, fit: bool = True) -> ExperimentReport:
    """Run every cell; results come back in grid order whatever the worker count."""
    if plan.family not in SIZE_KEY:
        raise UsageError(f"unknown family {plan.family!r}")
    cells = plan.cells()
    workers = min(threads or thread_cap(), len(cells)) or 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_cell, cells))
    else:
        records = [run_cell(c) for c in cells]
    report = ExperimentReport(plan.family, list(plan.sizes), records,
                              {k: v for k, v in asdict(plan).items() if k not in ("family", "sizes")})
    if fit and len(set(plan.sizes)) >= 3 and len(plan.seeds) >= 5:
        report.fit = scaling_fit(report)
    return report
