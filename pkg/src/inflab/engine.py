"""Sequential dynamics: one switchable node flips per step until none is left."""

from __future__ import annotations

import csv
import heapq
import io
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation, ScheduleViolation, SizeGuardError, UsageError
from .graph import (Coloring, DegreeClassifier, Graph, ProcessKind, SwitchRule,
                    as_fraction, is_epsilon_balanced)


@dataclass(frozen=True)
class ProcessConfig:
    kind: ProcessKind
    rule: SwitchRule
    classifier: DegreeClassifier | None = None
    step_limit: int | None = None

    def __post_init__(self):
        if self.step_limit is not None and self.step_limit < 1:
            raise UsageError("step_limit must be positive")

    def limit_for(self, g: Graph) -> int:
        return self.step_limit if self.step_limit is not None else max(4 * g.num_edges, 1)


class ProcessState:
    """Coloring plus cached per-node conflict counts and the running total."""

    def __init__(self, g: Graph, col: Coloring, kind: ProcessKind, rule: SwitchRule):
        col.check_for(g)
        self.g = g
        self.kind = kind
        self.rule = rule
        self.bits = bytearray(col.bits)
        self.minority = kind is ProcessKind.MINORITY
        adj = g.adjacency
        b = self.bits
        self.deg = [len(a) for a in adj]
        self.thr = [rule.threshold(d) for d in self.deg]
        conf = []
        for v, nbrs in enumerate(adj):
            bv = b[v]
            same = sum(1 for u in nbrs if b[u] == bv)
            conf.append(same if self.minority else len(nbrs) - same)
        self.conf = conf
        self.total = sum(conf) // 2

    def switchable(self, v: int) -> bool:
        return self.deg[v] > 0 and self.conf[v] >= self.thr[v]

    def switchable_nodes(self) -> list[int]:
        conf, thr, deg = self.conf, self.thr, self.deg
        return [v for v in range(self.g.n) if deg[v] and conf[v] >= thr[v]]

    def flip(self, v: int) -> int:
        """Flip ``v`` unconditionally and return the change in total conflicts."""
        b, conf = self.bits, self.conf
        bv = b[v]
        minority = self.minority
        for u in self.g.adjacency[v]:
            # conflicted before the flip iff (same color) == minority
            if (b[u] == bv) == minority:
                conf[u] -= 1
            else:
                conf[u] += 1
        c = conf[v]
        d = self.deg[v]
        conf[v] = d - c
        b[v] = bv ^ 1
        delta = d - 2 * c
        self.total += delta
        return delta

    def switch(self, v: int) -> int:
        if not self.switchable(v):
            raise ContractViolation(f"node {v} is not switchable")
        return self.flip(v)

    def coloring(self) -> Coloring:
        return Coloring(self.bits)


@dataclass
class Trace:
    initial: Coloring
    steps: list[tuple[int, int]] = field(default_factory=list)
    stabilized: bool = False

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def nodes(self) -> list[int]:
        return [v for v, _ in self.steps]

    def to_json_dict(self) -> dict:
        return {"initial": self.initial.to_bitstring(),
                "steps": [[v, d] for v, d in self.steps],
                "stabilized": self.stabilized}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Trace":
        try:
            return cls(Coloring.from_bitstring(data["initial"]),
                       [(int(v), int(d)) for v, d in data["steps"]],
                       bool(data["stabilized"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed trace JSON: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Trace":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


# -- schedulers -----------------------------------------------------------
class Scheduler:
    """Chooses the next node to switch, or ``None`` to stop."""

    def start(self, state: ProcessState) -> None:
        pass

    def pick(self, state: ProcessState, step: int) -> int | None:
        raise NotImplementedError

    def notify(self, state: ProcessState, v: int) -> None:
        """Called after ``v`` flipped."""


class Scripted(Scheduler):
    """Replays a fixed list of node ids and group labels.

    A group label stands for all its members in increasing id order; each
    member is checked on its own turn.
    """

    def __init__(self, entries: Sequence[int | str]):
        self.entries = list(entries)

    def expand(self, g: Graph) -> list[int]:
        out: list[int] = []
        for e in self.entries:
            if isinstance(e, str) and not e.lstrip("-").isdigit():
                if e not in g.groups:
                    raise UsageError(f"unknown group label {e!r} in schedule")
                out.extend(g.groups[e])
            else:
                out.append(g.check_node(int(e)))
        return out

    def start(self, state):
        self._queue = self.expand(state.g)
        self._pos = 0

    def pick(self, state, step):
        if self._pos >= len(self._queue):
            return None
        v = self._queue[self._pos]
        self._pos += 1
        if not state.switchable(v):
            raise ScheduleViolation(step, v)
        return v


class GreedyAdversary(Scheduler):
    """Switch the node that removes the fewest conflicts; lowest id breaks ties.

    A heuristic for long runs, not an optimum (compare with the exhaustive oracle).
    """

    def start(self, state):
        conf, deg = state.conf, state.deg
        self._heap = [(2 * conf[v] - deg[v], v) for v in state.switchable_nodes()]
        heapq.heapify(self._heap)

    def _push(self, state, v):
        if state.switchable(v):
            heapq.heappush(self._heap, (2 * state.conf[v] - state.deg[v], v))

    def pick(self, state, step):
        heap, conf, deg = self._heap, state.conf, state.deg
        while heap:
            key, v = heapq.heappop(heap)
            if state.switchable(v) and key == 2 * conf[v] - deg[v]:
                return v
        return None

    def notify(self, state, v):
        self._push(state, v)
        for u in state.g.adjacency[v]:
            self._push(state, u)


class RandomScheduler(Scheduler):
    """Uniformly random switchable node, reproducible from ``seed``."""

    def __init__(self, seed: int):
        self.seed = seed

    def start(self, state):
        self._rng = np.random.default_rng(self.seed)
        self._items: list[int] = []
        self._pos: dict[int, int] = {}
        for v in state.switchable_nodes():
            self._add(v)

    def _add(self, v):
        if v not in self._pos:
            self._pos[v] = len(self._items)
            self._items.append(v)

    def _remove(self, v):
        i = self._pos.pop(v, None)
        if i is None:
            return
        last = self._items.pop()
        if last != v:
            self._items[i] = last
            self._pos[last] = i

    def _refresh(self, state, v):
        if state.switchable(v):
            self._add(v)
        else:
            self._remove(v)

    def pick(self, state, step):
        if not self._items:
            return None
        return self._items[int(self._rng.integers(len(self._items)))]

    def notify(self, state, v):
        self._refresh(state, v)
        for u in state.g.adjacency[v]:
            self._refresh(state, u)


class ExhaustiveOracle(Scheduler):
    """Follows a witness of the longest possible run (small graphs only)."""

    def __init__(self, max_nodes: int = 16, allow_large: bool = False):
        self.max_nodes = max_nodes
        self.allow_large = allow_large

    def start(self, state):
        cfg = ProcessConfig(state.kind, state.rule)
        _, witness = max_stabilization_oracle(state.g, state.coloring(), cfg,
                                              max_nodes=self.max_nodes, allow_large=self.allow_large)
        self._queue = witness.nodes
        self._pos = 0

    def pick(self, state, step):
        if self._pos >= len(self._queue):
            return None
        v = self._queue[self._pos]
        self._pos += 1
        return v


def make_scheduler(name: str, seed: int = 0, script: Sequence[int | str] | None = None) -> Scheduler:
    name = name.lower()
    if name in ("greedy", "greedy-adversary"):
        return GreedyAdversary()
    if name == "random":
        return RandomScheduler(seed)
    if name in ("oracle", "exhaustive"):
        return ExhaustiveOracle()
    if name == "scripted":
        if script is None:
            raise UsageError("the scripted scheduler needs a schedule")
        return Scripted(script)
    raise UsageError(f"unknown scheduler {name!r}")


# -- runs -----------------------------------------------------------------
class StepLimitReached(Exception):
    def __init__(self, trace: Trace):
        self.trace = trace
        super().__init__(f"step limit reached after {len(trace)} steps")


def _drive(g, col, cfg, sched, on_step=None, raise_on_limit=False):
    state = ProcessState(g, col, cfg.kind, cfg.rule)
    trace = Trace(col.copy())
    limit = cfg.limit_for(g)
    sched.start(state)
    step = 0
    while step < limit:
        v = sched.pick(state, step)
        if v is None:
            break
        if not state.switchable(v):
            raise ScheduleViolation(step, v)
        if on_step is not None:
            on_step(state, v)
        delta = state.flip(v)
        trace.steps.append((v, delta))
        sched.notify(state, v)
        step += 1
    trace.stabilized = not any(state.switchable(v) for v in range(g.n))
    if step >= limit and not trace.stabilized and raise_on_limit:
        raise StepLimitReached(trace)
    return trace, state


def run(g: Graph, col: Coloring, cfg: ProcessConfig, sched: Scheduler) -> Trace:
    """Run the process; the input coloring is left untouched."""
    return _drive(g, col, cfg, sched)[0]


def replay(g: Graph, trace: Trace, cfg: ProcessConfig) -> Coloring:
    """Re-execute ``trace`` and return the final coloring.

    Raises :class:`ScheduleViolation` on an illegal step and
    :class:`ContractViolation` if a recorded delta disagrees.
    """
    state = ProcessState(g, trace.initial, cfg.kind, cfg.rule)
    for i, (v, delta) in enumerate(trace.steps):
        v = g.check_node(v)
        if not state.switchable(v):
            raise ScheduleViolation(i, v)
        got = state.flip(v)
        if got != delta:
            raise ContractViolation(f"step {i}: recorded delta {delta}, replay gives {got}")
    return state.coloring()


def count_initially_switchable(g: Graph, col: Coloring, cfg: ProcessConfig,
                               nodes: Iterable[int] | None = None) -> int:
    state = ProcessState(g, col, cfg.kind, cfg.rule)
    if nodes is None:
        return len(state.switchable_nodes())
    return sum(1 for v in nodes if state.switchable(g.check_node(v)))


# -- active / rigid bookkeeping ------------------------------------------
class ConflictLedger:
    """Tracks which conflicts are original and which of those are rigid.

    An edge stays original only while neither endpoint has switched: a flip
    toggles every incident edge, so the first flip of either endpoint ends
    the original conflict (or the edge was never conflicted).
    """

    def __init__(self, state: ProcessState, classifier: DegreeClassifier):
        g = state.g
        self.g = g
        self.high = [classifier.is_high(d) for d in state.deg]
        self.switched = bytearray(g.n)
        b, minority = state.bits, state.minority
        self.initial_conflict = {}
        rigid = 0
        for u, v in g.edges():
            c = (b[u] == b[v]) == minority
            if c:
                self.initial_conflict[(u, v)] = True
                if self.high[u] and self.high[v]:
                    rigid += 1
        self.rigid = rigid
        self.state = state

    @property
    def active(self) -> int:
        return self.state.total - self.rigid

    def is_original(self, u: int, v: int) -> bool:
        key = (u, v) if u < v else (v, u)
        return key in self.initial_conflict and not self.switched[u] and not self.switched[v]

    def is_rigid(self, u: int, v: int) -> bool:
        return self.is_original(u, v) and self.high[u] and self.high[v]

    def rigid_at(self, v: int) -> int:
        if self.switched[v] or not self.high[v]:
            return 0
        return sum(1 for u in self.g.adjacency[v] if self.is_rigid(u, v))

    def before_flip(self, v: int) -> None:
        if self.switched[v]:
            return
        if self.high[v]:
            self.rigid -= self.rigid_at(v)
        self.switched[v] = 1


@dataclass
class LedgerRow:
    step: int
    node: int
    active_before: int
    active_after: int
    rigid_before: int
    rigid_after: int
    high_degree: bool
    rigid_at_node: int
    premise_holds: bool

    @property
    def decreased(self) -> bool:
        return self.active_after < self.active_before


@dataclass
class LedgerReport:
    initial_active: int
    initial_rigid: int
    rows: list[LedgerRow]
    balanced_high_neighborhoods: bool

    @property
    def violations(self) -> list[LedgerRow]:
        return [r for r in self.rows if not r.decreased]

    @property
    def premise_failures(self) -> list[LedgerRow]:
        return [r for r in self.rows if not r.premise_holds]

    def counts(self) -> list[tuple[int, int, int]]:
        """(step, active, rigid) with step 0 the initial state."""
        out = [(0, self.initial_active, self.initial_rigid)]
        out += [(r.step + 1, r.active_after, r.rigid_after) for r in self.rows]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "active", "rigid"])
        w.writerows(self.counts())
        return buf.getvalue()


def high_neighborhoods_balanced(g: Graph, col: Coloring, classifier: DegreeClassifier, eps) -> bool:
    """True iff N(v) is eps-balanced for every high-degree node v."""
    for v in range(g.n):
        d = g.degree(v)
        if d and classifier.is_high(d) and not is_epsilon_balanced(col, g.adjacency[v], eps):
            return False
    return True


def run_with_ledger(g: Graph, col: Coloring, cfg: ProcessConfig, sched: Scheduler,
                    eps=Fraction(1, 20)) -> tuple[Trace, LedgerReport]:
    """Run while recording active and rigid conflict counts around every step.

    ``premise_holds`` on a row says the switching node carried at most
    ``(1/2 + eps) * d`` rigid conflicts; whenever it holds and the rule has
    ``lambda > 1/2 + eps`` the active count must drop.
    """
    if cfg.classifier is None:
        raise UsageError("run_with_ledger needs a degree classifier")
    eps = as_fraction(eps)
    state_holder: dict = {}
    rows: list[LedgerRow] = []

    def on_step(state, v):
        led = state_holder["ledger"]
        a0, r0 = led.active, led.rigid
        r_here = led.rigid_at(v)
        d = state.deg[v]
        premise = (not led.high[v]) or 2 * r_here <= (1 + 2 * eps) * d
        led.before_flip(v)
        rows.append(LedgerRow(len(rows), v, a0, None, r0, None, led.high[v], r_here, premise))

    class _Wrapped(Scheduler):
        def start(self, state):
            state_holder["ledger"] = ConflictLedger(state, cfg.classifier)
            state_holder["init"] = (state_holder["ledger"].active, state_holder["ledger"].rigid)
            sched.start(state)

        def pick(self, state, step):
            return sched.pick(state, step)

        def notify(self, state, v):
            led = state_holder["ledger"]
            rows[-1].active_after = led.active
            rows[-1].rigid_after = led.rigid
            sched.notify(state, v)

    trace, _ = _drive(g, col, cfg, _Wrapped(), on_step=on_step)
    a_init, r_init = state_holder["init"]
    report = LedgerReport(a_init, r_init, rows,
                          high_neighborhoods_balanced(g, col, cfg.classifier, eps))
    return trace, report


# -- exhaustive oracle ------------------------------------------------------
def max_stabilization_oracle(g: Graph, col: Coloring, cfg: ProcessConfig, *,
                             max_nodes: int = 16, allow_large: bool = False) -> tuple[int, Trace]:
    """Longest legal run from ``col``, by memoized search over all colorings."""
    col.check_for(g)
    if g.n > max_nodes and not allow_large:
        raise SizeGuardError(f"oracle refuses n={g.n} > {max_nodes}; pass allow_large to override")
    n = g.n
    nb = [sum(1 << u for u in g.adjacency[v]) for v in range(n)]
    deg = [g.degree(v) for v in range(n)]
    thr = [cfg.rule.threshold(d) for d in deg]
    full = (1 << n) - 1
    minority = cfg.kind is ProcessKind.MINORITY

    def movers(s):
        out = []
        for v in range(n):
            if not deg[v]:
                continue
            white = (s >> v) & 1
            # neighbors with the same color as v
            same_mask = s if white else full & ~s
            same = (nb[v] & same_mask).bit_count()
            c = same if minority else deg[v] - same
            if c >= thr[v]:
                out.append(v)
        return out

    best: dict[int, tuple[int, int]] = {}

    def solve(s):
        hit = best.get(s)
        if hit is not None:
            return hit[0]
        top, arg = 0, -1
        for v in movers(s):
            length = 1 + solve(s ^ (1 << v))
            if length > top:
                top, arg = length, v
        best[s] = (top, arg)
        return top

    start = sum(1 << v for v in range(n) if col.bits[v])
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, g.num_edges + 1000))
    try:
        length = solve(start)
    finally:
        sys.setrecursionlimit(old)
    state = ProcessState(g, col, cfg.kind, cfg.rule)
    trace = Trace(col.copy())
    s = start
    while best[s][1] >= 0:
        v = best[s][1]
        trace.steps.append((v, state.switch(v)))
        s ^= 1 << v
    trace.stabilized = True
    return length, trace
