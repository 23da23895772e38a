"""Command-line entry point: generate | run | experiment | bounds | validate.

Exit codes:
    0  success
    1  runtime error
    2  usage error (bad arguments, malformed files)
    3  schedule violation (a scripted node was not switchable)
    4  step limit reached before stabilization
    5  good-event failure (the coloring fell outside the construction's event)
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from . import __version__
from .analysis import f_composite, f_lambda
from .constructions.base import Schedule
from .constructions.builder import FAMILIES, SIZE_KEY, generate
from .engine import (ProcessConfig, Scripted, StepLimitReached, Trace, _drive, make_scheduler,
                     replay, run_with_ledger)
from .errors import GoodEventFailure, InflabError, ScheduleViolation, UsageError
from .experiment import ExperimentPlan, run_experiment
from .graph import DegreeClassifier, Graph, ProcessKind, SwitchRule, random_coloring

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_SCHEDULE, EXIT_STEP_LIMIT, EXIT_GOOD_EVENT = range(6)

PARAM_FLAGS = ("copies", "m", "n", "mean_degree", "lambda", "alpha", "mu", "p", "c0", "d0",
               "eps", "pad_outputs")


@dataclass
class RunConfig:
    """Everything a subcommand needs; saved next to the outputs."""

    subcommand: str = ""
    family: str | None = None
    params: dict = field(default_factory=dict)
    kind: str = "majority"
    rule: str | None = None
    scheduler: str | None = None
    seed: int = 0
    reps: int = 5
    sizes: list[int] = field(default_factory=list)
    out_dir: str = "."
    graph: str | None = None
    schedule: str | None = None
    trace: str | None = None
    ledger: bool = False
    ledger_c0: float = 3.0
    ledger_eps: str = "1/20"
    step_limit: int | None = None
    lambdas: list[str] = field(default_factory=list)
    composite: bool = False
    tol: float = 1e-9

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise UsageError(f"unknown config keys: {', '.join(sorted(extra))}")
        return cls(**data)


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a flag given before the subcommand from being reset by the subparser
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out-dir", default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="RunConfig JSON; flags given here override it")

    fam = argparse.ArgumentParser(add_help=False)
    fam.add_argument("--family", choices=FAMILIES, default=None)
    fam.add_argument("--copies", type=int)
    fam.add_argument("--m", type=int)
    fam.add_argument("--n", type=int)
    fam.add_argument("--mean-degree", type=float)
    fam.add_argument("--lambda", dest="lambda_", metavar="A/B")
    fam.add_argument("--alpha")
    fam.add_argument("--mu")
    fam.add_argument("--p")
    fam.add_argument("--c0", type=float)
    fam.add_argument("--d0", type=int)
    fam.add_argument("--eps")
    fam.add_argument("--pad-outputs", action="store_true", default=None)

    proc = argparse.ArgumentParser(add_help=False)
    proc.add_argument("--kind", choices=["majority", "minority"], default=None)
    proc.add_argument("--rule", default=None, help="'basic' or 'proportional:A/B'")
    proc.add_argument("--scheduler", choices=["scripted", "greedy", "random", "oracle"], default=None)
    proc.add_argument("--ledger", action="store_true", default=None)
    proc.add_argument("--ledger-c0", type=float, default=None)
    proc.add_argument("--ledger-eps", default=None)
    proc.add_argument("--step-limit", type=int, default=None)

    ap = argparse.ArgumentParser(prog="inflab", description=__doc__.splitlines()[0], parents=[common])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("generate", parents=[common, fam], help="write a graph and its schedule")
    p = sub.add_parser("run", parents=[common, proc], help="simulate on a graph file")
    p.add_argument("--graph")
    p.add_argument("--schedule")
    p = sub.add_parser("experiment", parents=[common, fam, proc], help="size x seed sweep")
    p.add_argument("--sizes", type=_csv_ints)
    p.add_argument("--reps", type=int)
    p = sub.add_parser("bounds", parents=[common], help="CSV table of f(lambda)")
    p.add_argument("--lambdas", default=None, help="comma-separated values, e.g. 1/10,1/4,0.5")
    p.add_argument("--grid", type=int, default=None, help="evenly spaced points in (0, 1)")
    p.add_argument("--composite", action="store_true", default=None)
    p.add_argument("--tol", type=float, default=None)
    p = sub.add_parser("validate", parents=[common], help="check a graph, schedule or trace")
    p.add_argument("--graph")
    p.add_argument("--schedule")
    p.add_argument("--trace")
    p.add_argument("--kind", choices=["majority", "minority"], default=None)
    p.add_argument("--rule", default=None)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    config = getattr(args, "config", None)
    cfg = RunConfig.from_json(Path(config).read_text()) if config else RunConfig()
    cfg.subcommand = args.subcommand
    simple = {"seed": "seed", "out_dir": "out_dir", "family": "family", "kind": "kind",
              "rule": "rule", "scheduler": "scheduler", "graph": "graph", "schedule": "schedule",
              "trace": "trace", "ledger": "ledger", "ledger_c0": "ledger_c0",
              "ledger_eps": "ledger_eps", "step_limit": "step_limit", "sizes": "sizes",
              "reps": "reps", "composite": "composite", "tol": "tol"}
    for attr, key in simple.items():
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, key, val)
    params = dict(cfg.params)
    for name in PARAM_FLAGS:
        val = getattr(args, "lambda_" if name == "lambda" else name, None)
        if val is not None:
            params[name] = val
    cfg.params = params
    lambdas = getattr(args, "lambdas", None)
    grid = getattr(args, "grid", None)
    if lambdas:
        cfg.lambdas = [x.strip() for x in lambdas.split(",") if x.strip()]
    elif grid:
        cfg.lambdas = [str(Fraction(i, grid + 1)) for i in range(1, grid + 1)]
    return cfg


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    print(f"wrote {path}")


def cmd_generate(cfg: RunConfig) -> int:
    if not cfg.family:
        raise UsageError("generate needs --family")
    g, schedule, meta = generate(cfg.family, cfg.params, cfg.seed)
    out = _out(cfg)
    g.save(out / "graph.json")
    print(f"wrote {out / 'graph.json'}")
    print(f"nodes={g.n} edges={g.num_edges}")
    audit = meta.get("audit")
    if audit:
        full = audit["control_degree_full"]
        lo, hi = audit["control_degree_min"], audit["control_degree_max"]
        print(f"audit: collector degrees ok={audit['collector_degrees_ok']} "
              f"regular joins ok={audit['regular_joins_ok']}")
        print(f"audit: control degrees {lo}..{hi} (full (3*alpha+1)*m = {full}; "
              f"{'all equal' if lo == hi == full else 'outputs not padded'})")
        print(f"audit: stub degree identity max slack {audit['degree_identity_max_slack']}")
    if schedule is not None:
        schedule.diagnostics = {**schedule.diagnostics, "meta": meta}
        schedule.save(out / "schedule.json")
        print(f"wrote {out / 'schedule.json'}")
        print(f"schedule: entries={len(schedule.steps)} good_event={schedule.good_event}"
              + (f" failure={schedule.failure}" if schedule.failure else ""))
    _write(out / "config.json", cfg.to_json())
    if schedule is not None and not schedule.good_event:
        return EXIT_GOOD_EVENT
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    if not cfg.graph:
        raise UsageError("run needs --graph")
    g = Graph.load(cfg.graph)
    schedule = Schedule.load(cfg.schedule) if cfg.schedule else None
    if cfg.scheduler == "scripted" and schedule is None:
        raise UsageError("the scripted scheduler needs --schedule")
    if schedule is not None:
        schedule.initial.check_for(g)
        col, kind, rule = schedule.initial, schedule.kind, schedule.rule
    else:
        col, kind = random_coloring(g, cfg.seed), ProcessKind(cfg.kind)
        rule = SwitchRule.parse(cfg.rule or "basic")
    name = cfg.scheduler or ("scripted" if schedule is not None else "greedy")
    sched = make_scheduler(name, cfg.seed, schedule.steps if name == "scripted" else None)
    out = _out(cfg)
    classifier = DegreeClassifier(cfg.ledger_c0, g.n) if cfg.ledger else None
    limit = cfg.step_limit
    script_len = len(Scripted(schedule.steps).expand(g)) if name == "scripted" else None
    if limit is None and script_len is not None:
        limit = max(script_len, 1)
    pcfg = ProcessConfig(kind, rule, classifier, limit)
    code = EXIT_OK
    try:
        if cfg.ledger:
            trace, report = run_with_ledger(g, col, pcfg, sched, Fraction(cfg.ledger_eps))
            _write(out / "ledger.csv", report.to_csv())
            print(f"ledger: initial active={report.initial_active} rigid={report.initial_rigid} "
                  f"non-decreasing steps={len(report.violations)} "
                  f"premise failures={len(report.premise_failures)} "
                  f"high-degree neighborhoods balanced={report.balanced_high_neighborhoods}")
        else:
            trace, _ = _drive(g, col, pcfg, sched)
    except ScheduleViolation as exc:
        print(f"schedule violation: {exc}", file=sys.stderr)
        return EXIT_SCHEDULE
    _write(out / "trace.json", json.dumps(trace.to_json_dict(), separators=(",", ":")) + "\n")
    _write(out / "config.json", cfg.to_json())
    print(f"steps={len(trace)} stabilized={trace.stabilized}")
    hit_limit = len(trace) >= pcfg.limit_for(g) and (script_len is None or len(trace) < script_len)
    if not trace.stabilized and hit_limit:
        print("step limit reached", file=sys.stderr)
        code = EXIT_STEP_LIMIT
    elif schedule is not None and not schedule.good_event:
        print(f"good-event failure: {schedule.failure}", file=sys.stderr)
        code = EXIT_GOOD_EVENT
    return code


def cmd_experiment(cfg: RunConfig) -> int:
    if not cfg.family:
        raise UsageError("experiment needs --family")
    if not cfg.sizes:
        raise UsageError("experiment needs --sizes")
    if cfg.reps < 1:
        raise UsageError("--reps must be positive")
    seeds = list(range(cfg.seed, cfg.seed + cfg.reps))
    scheduler = cfg.scheduler or ("greedy" if cfg.family == "random" else "scripted")
    rule = cfg.rule or "proportional:3/5"
    plan = ExperimentPlan(cfg.family, list(cfg.sizes), seeds,
                          {k: v for k, v in cfg.params.items() if k != SIZE_KEY[cfg.family]},
                          scheduler, cfg.kind, rule, cfg.ledger, cfg.ledger_c0, cfg.ledger_eps)
    report = run_experiment(plan)
    out = _out(cfg)
    _write(out / "report.json", report.to_json())
    _write(out / "report.csv", report.to_csv())
    _write(out / "config.json", cfg.to_json())
    for size, agg in sorted(report.aggregates().items()):
        print(f"size={size} mean={agg['mean']:.1f} min={agg['min']} max={agg['max']}")
    if report.fit is not None:
        f = report.fit
        print(f"slope={f.slope:.3f} band=+-{f.band:.3f} interval=[{f.interval[0]:.3f}, {f.interval[1]:.3f}]")
    else:
        print("slope: not fitted (needs >= 3 sizes and >= 5 reps)")
    return EXIT_OK


def bounds_table(lambdas: list[str], composite: bool, tol: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "f", "phi"])
    for text in lambdas:
        try:
            lam = float(Fraction(text))
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"cannot parse lambda {text!r}") from None
        r = f_composite(lam, tol) if composite else f_lambda(lam, tol)
        w.writerow([text, f"{r.value:.10f}", f"{r.argmax_phi:.10f}"])
    return buf.getvalue()


def cmd_bounds(cfg: RunConfig) -> int:
    lambdas = cfg.lambdas or [str(Fraction(i, 20)) for i in range(1, 20)]
    if cfg.composite and not cfg.lambdas:
        lambdas = [str(Fraction(i, 60)) for i in range(1, 20)]
    table = bounds_table(lambdas, cfg.composite, cfg.tol)
    sys.stdout.write(table)
    if cfg.out_dir != ".":
        _write(_out(cfg) / ("bounds_composite.csv" if cfg.composite else "bounds.csv"), table)
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    if not cfg.graph:
        raise UsageError("validate needs --graph")
    g = Graph.load(cfg.graph)
    print(f"graph ok: nodes={g.n} edges={g.num_edges} groups={len(g.groups)}")
    code = EXIT_OK
    if cfg.schedule:
        sch = Schedule.load(cfg.schedule)
        try:
            trace = sch.replay(g)
        except ScheduleViolation as exc:
            print(f"schedule violation: {exc}", file=sys.stderr)
            return EXIT_SCHEDULE
        print(f"schedule ok: steps={len(trace)} good_event={sch.good_event}")
        if not sch.good_event:
            code = EXIT_GOOD_EVENT
    if cfg.trace:
        trace = Trace.load(cfg.trace)
        pcfg = ProcessConfig(ProcessKind(cfg.kind), SwitchRule.parse(cfg.rule or "basic"))
        try:
            replay(g, trace, pcfg)
        except ScheduleViolation as exc:
            print(f"trace violation: {exc}", file=sys.stderr)
            return EXIT_SCHEDULE
        print(f"trace ok: steps={len(trace)}")
    return code


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "experiment": cmd_experiment,
            "bounds": cmd_bounds, "validate": cmd_validate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.subcommand](cfg)
    except (UsageError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GoodEventFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GOOD_EVENT
    except StepLimitReached as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STEP_LIMIT
    except InflabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
