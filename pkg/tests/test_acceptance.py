"""The ten acceptance criteria, each at its stated tolerance.

Every test records a PASS/FAIL line through the ``verdict`` fixture; the
lines are printed together at the end of the pytest run.  Expected values
come from independent computations (binomial algebra, brute-force conflict
counts, dense grids), never from the code under test.
"""

from __future__ import annotations

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from inflab.analysis import ExperimentReport, f_lambda, scaling_fit
from inflab.constructions.base import Schedule
from inflab.constructions.builder import construction, generate
from inflab.constructions.opening import root_black_frequency
from inflab.constructions.swap import bipartite_color_swap
from inflab.constructions.tower import GrowingChain
from inflab.engine import (ProcessConfig, ProcessState, RandomScheduler, Scripted,
                           make_scheduler, max_stabilization_oracle, replay, run, run_with_ledger)
from inflab.graph import Coloring, DegreeClassifier, Graph, ProcessKind, SwitchRule, random_coloring

LAMBDAS = [Fraction(1, 5), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(3, 5),
           Fraction(4, 5)]


def _random_graph(rng: random.Random, n_max: int, n_min: int = 2) -> Graph:
    n = rng.randint(n_min, n_max)
    p = rng.uniform(0.15, 0.9)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph.from_edges(n, edges)


def _random_rule(rng: random.Random) -> SwitchRule:
    if rng.random() < 0.4:
        return SwitchRule.basic()
    return SwitchRule.proportional(rng.choice(LAMBDAS))


def _brute_conflicts(edges: np.ndarray, bits: np.ndarray, kind: ProcessKind) -> int:
    if not len(edges):
        return 0
    same = bits[edges[:, 0]] == bits[edges[:, 1]]
    return int(same.sum() if kind is ProcessKind.MINORITY else (~same).sum())


# 1 -------------------------------------------------------------------------
def test_criterion_1_conflict_monotonicity(verdict):
    rng = random.Random(101)
    start = time.perf_counter()
    cases = steps_checked = bad = 0
    for case in range(10_000):
        g = _random_graph(rng, 30)
        kind = rng.choice(list(ProcessKind))
        rule = _random_rule(rng)
        col = Coloring([rng.randint(0, 1) for _ in range(g.n)])
        trace = run(g, col, ProcessConfig(kind, rule), RandomScheduler(case))
        edges = np.array(list(g.edges()), dtype=np.int64).reshape(-1, 2)
        bits = np.frombuffer(bytes(col.bits), dtype=np.uint8).copy()
        before = _brute_conflicts(edges, bits, kind)
        for v, delta in trace.steps:
            bits[v] ^= 1
            after = _brute_conflicts(edges, bits, kind)
            drop = before - after
            ok = drop > 0 and -delta == drop
            if rule.lam is not None:
                ok = ok and Fraction(drop) >= rule.lam * g.degree(v)
            bad += not ok
            steps_checked += 1
            before = after
        cases += 1
    elapsed = time.perf_counter() - start
    passed = bad == 0 and elapsed < 60
    verdict(1, passed, f"{cases} cases, {steps_checked} switches, {bad} non-decreasing, {elapsed:.1f}s")
    assert bad == 0
    assert elapsed < 60


# 2 -------------------------------------------------------------------------
def test_criterion_2_oracle_equivalence(verdict):
    rng = random.Random(202)
    start = time.perf_counter()
    exceed = witness_bad = 0
    for case in range(500):
        g = _random_graph(rng, 6, n_min=1)
        kind = rng.choice(list(ProcessKind))
        rule = _random_rule(rng)
        col = Coloring([rng.randint(0, 1) for _ in range(g.n)])
        cfg = ProcessConfig(kind, rule)
        best, witness = max_stabilization_oracle(g, col, cfg)
        greedy = run(g, col, cfg, make_scheduler("greedy", case))
        rand = run(g, col, cfg, make_scheduler("random", case))
        scripted = run(g, col, cfg, Scripted(rand.nodes))
        exceed += any(len(t) > best for t in (greedy, rand, scripted))
        try:
            replay(g, witness, cfg)
            witness_bad += len(witness) != best
        except Exception:
            witness_bad += 1
    elapsed = time.perf_counter() - start
    passed = exceed == 0 and witness_bad == 0 and elapsed < 300
    verdict(2, passed, f"500 instances, {exceed} exceed the oracle, {witness_bad} bad witnesses, "
                       f"{elapsed:.1f}s")
    assert exceed == 0 and witness_bad == 0
    assert elapsed < 300


# 3, 4 ----------------------------------------------------------------------
def _basic_protocol(family: str):
    rows, records = [], []
    for m in (16, 32, 64, 128):
        successes, lengths, short, size, h = 0, [], 0, m, None
        for seed in range(20):
            g, schedule, meta = generate(family, {"m": m}, seed)
            size, h = meta.get("m", m), meta.get("h")
            trace = schedule.replay(g)
            if schedule.good_event:
                successes += 1
                lengths.append(len(trace))
                short += len(trace) < size * size / 2
                records.append({"size": size, "n": g.n, "seed": seed, "steps": len(trace),
                                "stabilized": trace.stabilized})
        rows.append((m, size, h, successes, min(lengths) if lengths else 0, short))
    report = ExperimentReport(family, sorted({r["size"] for r in records}), records)
    return rows, scaling_fit(report)


def test_criterion_3_basic_minority_quadratic(verdict):
    rows, fit = _basic_protocol("basic-minority")
    rate_ok = all(s >= 18 for _, _, _, s, _, _ in rows)
    len_ok = all(short == 0 for *_, short in rows)
    slope_ok = 1.8 <= fit.slope <= 2.1
    detail = " ".join(f"m={m}:{s}/20,min={lo}" for m, _, _, s, lo, _ in rows)
    verdict(3, rate_ok and len_ok and slope_ok, f"{detail} slope={fit.slope:.3f}")
    assert rate_ok and len_ok
    assert slope_ok


def test_criterion_4_basic_majority_quadratic(verdict):
    rows, fit = _basic_protocol("basic-majority")
    rate_ok = all(s >= 18 for _, _, _, s, _, _ in rows)
    len_ok = all(short == 0 for *_, short in rows)
    noise_ok = True
    for _, _, h, s, _, _ in rows:
        p = 2.0 ** -h
        noise_ok &= (20 - s) / 20 <= p + 3 * math.sqrt(p * (1 - p) / 20)
    slope_ok = 1.8 <= fit.slope <= 2.1
    detail = " ".join(f"m={size}(h={h}):{s}/20" for _, size, h, s, _, _ in rows)
    verdict(4, rate_ok and len_ok and noise_ok and slope_ok, f"{detail} slope={fit.slope:.3f}")
    assert rate_ok and len_ok and noise_ok
    assert slope_ok


# 5 -------------------------------------------------------------------------
def test_criterion_5_opening_recurrence(verdict):
    # a depth-one root turns black with probability 5/8; each further level maps p to (1 + p^2) / 2
    expected = {1: Fraction(5, 8)}
    for depth in (2, 3):
        expected[depth] = (1 + expected[depth - 1] ** 2) / 2
    assert expected[3] == Fraction(24305, 32768)
    trials, parts, ok = 10_000, [], True
    for depth, p in expected.items():
        hits = root_black_frequency(depth, range(trials))
        sigma = math.sqrt(float(p) * (1 - float(p)) / trials)
        freq = hits / trials
        good = abs(freq - float(p)) <= 3 * sigma
        ok &= good
        parts.append(f"depth {depth}: {freq:.4f} vs {float(p):.4f} (3sd {3 * sigma:.4f})")
    verdict(5, ok, "; ".join(parts))
    assert ok


# 6 -------------------------------------------------------------------------
TOWER_PARAMS = {"lambda": "1/4", "m": 32}


def _window_holds(state: ProcessState, adj, nodes, color: int, lam: Fraction) -> bool:
    bits = state.bits
    for v in nodes:
        d = len(adj[v])
        k = sum(1 for u in adj[v] if bits[u] == color)
        # majority, proportional: needs at least (1 + lam) d / 2 neighbors of the target color
        if Fraction(k) < (1 + lam) * d / 2:
            return False
    return True


def test_criterion_6_tower_end_to_end(verdict):
    con = construction("prop-tower", TOWER_PARAMS)
    g, lam = con.graph, Fraction(1, 4)
    adj = g.adjacency
    S3 = con.parts["S3b"] + con.parts["S3w"]
    legal = window_ok = 0
    failures: dict[str, int] = {}
    for seed in range(50):
        _, schedule, _ = generate("prop-tower", TOWER_PARAMS, seed)
        if not schedule.good_event:
            failures[schedule.failure] = failures.get(schedule.failure, 0) + 1
            continue
        phases = schedule.diagnostics["phase_steps"]
        offsets, pos = {}, 0
        for name, count in phases.items():
            offsets[name] = pos
            pos += count
        checks = {offsets["black_window"]: 0, offsets["white_window"]: 1}
        script = Scripted(schedule.steps).expand(g)
        state = ProcessState(g, schedule.initial, schedule.kind, schedule.rule)
        windows, ok = 0, True
        for i, v in enumerate(script):
            if i in checks:
                windows += _window_holds(state, adj, S3, checks[i], lam)
            if not state.switchable(v):
                ok = False
                break
            state.flip(v)
        legal += ok and len(script) == pos
        window_ok += ok and windows == 2
    audit = con.audit()
    identity_ok = audit.degree_identity_max_slack <= 2
    passed = legal >= 45 and window_ok == legal and identity_ok
    verdict(6, passed, f"{legal}/50 legal end-to-end, windows fired in {window_ok}, "
                       f"degree identity slack {audit.degree_identity_max_slack}, failures {failures}")
    assert legal >= 45
    assert window_ok == legal
    assert identity_ok


# 7 -------------------------------------------------------------------------
def test_criterion_7_upper_bound(verdict):
    eps, rule = Fraction(1, 20), SwitchRule.proportional(Fraction(3, 5))
    records, balanced_bad, local_bad, over, balanced_runs = [], 0, 0, 0, 0
    for degree in (8, 32):
        for k in range(8, 13):
            n = 2 ** k
            for seed in range(5):
                g, _, _ = generate("random", {"n": n, "mean_degree": degree}, seed)
                cfg = ProcessConfig(ProcessKind.MAJORITY, rule, DegreeClassifier(3.0, n))
                trace, report = run_with_ledger(g, random_coloring(g, seed), cfg,
                                                make_scheduler("greedy", seed), eps)
                if report.balanced_high_neighborhoods:
                    balanced_runs += 1
                    balanced_bad += len(report.violations) > 0
                # every non-decreasing step must be one where the local premise failed
                local_bad += any(row.premise_holds for row in report.violations)
                over += len(trace) > 3 * n * math.log(n)
                records.append({"size": n, "n": n, "seed": seed, "steps": len(trace),
                                "stabilized": trace.stabilized})
    fit = scaling_fit(ExperimentReport("random", [2 ** k for k in range(8, 13)], records))
    passed = balanced_bad == 0 and local_bad == 0 and over == 0 and fit.slope <= 1.3
    verdict(7, passed, f"{len(records)} runs ({balanced_runs} balanced), {balanced_bad} balanced runs "
                       f"with an increase, {local_bad} premise-holding increases, {over} over 3n ln n, "
                       f"slope={fit.slope:.3f}")
    assert balanced_bad == 0 and local_bad == 0
    assert over == 0
    assert fit.slope <= 1.3


# 8 -------------------------------------------------------------------------
def _brute_f(lam: float, points: int) -> float:
    phi = np.linspace(0, (1 - lam) / 2, points + 1)[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.log((1 - phi) / (lam + phi)) / np.log((1 - phi) / phi)
    return float(np.nanmax(np.where(np.isfinite(vals), vals, np.nan)))


def test_criterion_8_f_properties(verdict):
    grid = [i / 51 for i in range(1, 51)]
    vals = np.array([f_lambda(x).value for x in grid])
    in_range = bool(np.all((vals > 0) & (vals < 1)))
    monotone = bool(np.all(np.diff(vals) < 0))
    convex = bool(np.all(np.diff(vals, 2) >= -1e-4))
    oracle = _brute_f(1 / 3, 1_000_000)
    third_ok = abs(f_lambda(1 / 3).value - oracle) <= 1e-3
    low, high = f_lambda(0.001).value, f_lambda(0.999).value
    limits_ok = low > 0.95 and high < 0.01
    passed = in_range and monotone and convex and third_ok and limits_ok
    verdict(8, passed, f"range={in_range} monotone={monotone} convex={convex} "
                       f"f(1/3)={f_lambda(1 / 3).value:.6f} vs grid {oracle:.6f}, "
                       f"f(0.001)={low:.4f} f(0.999)={high:.2e}")
    assert in_range and monotone and convex
    assert third_ok and limits_ok


# 9 -------------------------------------------------------------------------
def test_criterion_9_edge_gadget(verdict):
    copies, seeds = 500, 200
    # each designated endpoint is switchable with probability 1/2, independently
    mean, sigma = copies / 2, math.sqrt(copies / 4)
    counts = []
    for seed in range(seeds):
        _, schedule, _ = generate("edge-gadget", {"copies": copies}, seed)
        counts.append(schedule.diagnostics["switchable_designated"])
    counts = np.array(counts)
    floor_ok = bool(counts.min() >= mean - 3 * sigma)
    mean_ok = abs(counts.mean() - mean) <= 3 * sigma / math.sqrt(seeds)
    verdict(9, floor_ok and mean_ok,
            f"min={counts.min()} (floor {mean - 3 * sigma:.1f}), mean={counts.mean():.2f} "
            f"(target {mean:.0f} +- {3 * sigma / math.sqrt(seeds):.2f})")
    assert floor_ok and mean_ok


# 10 ------------------------------------------------------------------------
def test_criterion_10_color_swap(verdict):
    rng = random.Random(1010)
    mismatches = 0
    for case in range(100):
        a, b = rng.randint(1, 12), rng.randint(1, 12)
        p = rng.uniform(0.2, 0.9)
        edges = [(u, a + v) for u in range(a) for v in range(b) if rng.random() < p]
        g = Graph.from_edges(a + b, edges)
        col = Coloring([rng.randint(0, 1) for _ in range(g.n)])
        rule = _random_rule(rng)
        trace = run(g, col, ProcessConfig(ProcessKind.MAJORITY, rule),
                    make_scheduler(rng.choice(["greedy", "random"]), case))
        sch = Schedule(trace.nodes, col, ProcessKind.MAJORITY, rule)
        _, swapped = bipartite_color_swap(g, range(a), sch)
        try:
            minority = swapped.replay(g)
            mismatches += (swapped.kind is not ProcessKind.MINORITY or len(minority) != len(trace)
                           or minority.steps != trace.steps)
        except Exception:
            mismatches += 1
    chain_ok = 0
    for seed in range(5):
        chain = GrowingChain()
        sch = chain.plan(random_coloring(chain.graph, seed))
        base = sch.replay(chain.graph)
        _, swapped = bipartite_color_swap(chain.graph, chain.odd_levels(), sch)
        chain_ok += len(swapped.replay(chain.graph)) == len(base) > 0
    passed = mismatches == 0 and chain_ok == 5
    verdict(10, passed, f"100 random bipartite instances, {mismatches} mismatches; "
                        f"growing chain {chain_ok}/5 identical")
    assert mismatches == 0 and chain_ok == 5


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
