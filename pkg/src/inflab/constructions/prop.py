"""Stand-in for the external superlinear construction.

Only the interface matters to the tower: a graph, the coloring it must be
forced into, and a switch sequence that is legal from there.  The stub
below is a wiring test made of small gadgets; it is linear, not superlinear.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Protocol

from ..engine import ProcessConfig, Scripted, replay, run, Trace
from ..errors import BlackBoxValidationError, ScheduleViolation, UsageError
from ..graph import Coloring, Graph, ProcessKind, SwitchRule

# 8 nodes, 7 edges; from this coloring the six outer nodes can all switch,
# and each of them has every neighbor in conflict when it does
_GADGET_EDGES = [(0, 6), (1, 7), (2, 7), (3, 6), (3, 7), (4, 7), (5, 7)]
_GADGET_START = "11111100"
_GADGET_STEPS = [0, 1, 2, 3, 4, 5]

_PATH_EDGES = [(0, 1), (1, 2)]
_PATH_START = "010"
_PATH_STEPS = [0, 2]

_EDGE_START = "10"
_EDGE_STEPS = [0]


class PropBlackBox(Protocol):
    graph: Graph
    target: Coloring
    steps: list[int]
    lam_prime: Fraction
    claimed_length: int

    def validate(self) -> Trace: ...


class StubInstance:
    """Disjoint gadgets filling ``m`` nodes, checked by replay at ``lam_prime``."""

    def __init__(self, m: int, lam_prime: Fraction | str = Fraction(2, 3),
                 kind: ProcessKind = ProcessKind.MAJORITY):
        if m < 2:
            raise UsageError("the stub needs at least 2 nodes")
        self.m = m
        self.lam_prime = Fraction(lam_prime)
        self.kind = kind
        edges, bits, steps = [], [], []

        def place(gedges, start, gsteps):
            base = len(bits)
            edges.extend((base + u, base + v) for u, v in gedges)
            bits.extend(int(ch) for ch in start)
            steps.extend(base + v for v in gsteps)

        gadgets, rest = divmod(m, 8)
        if rest == 1 and gadgets:
            gadgets, rest = gadgets - 1, 9
        for _ in range(gadgets):
            place(_GADGET_EDGES, _GADGET_START, _GADGET_STEPS)
        if rest % 2:
            place(_PATH_EDGES, _PATH_START, _PATH_STEPS)
            rest -= 3
        for _ in range(rest // 2):
            place([(0, 1)], _EDGE_START, _EDGE_STEPS)
        self.graph = Graph.from_edges(m, edges)
        self.target = Coloring(bits)
        if kind is ProcessKind.MINORITY:
            # the gadgets are bipartite: invert one side to get the dual instance
            side = _bipartition(self.graph)
            for v in side:
                self.target.flip(v)
        self.steps = steps
        self.claimed_length = len(steps)
        self.validate()

    def config(self) -> ProcessConfig:
        return ProcessConfig(self.kind, SwitchRule.proportional(self.lam_prime))

    def validate(self) -> Trace:
        try:
            trace = run(self.graph, self.target, self.config(), Scripted(self.steps))
        except ScheduleViolation as exc:
            raise BlackBoxValidationError(f"stub replay failed: {exc}") from exc
        if len(trace) != self.claimed_length:
            raise BlackBoxValidationError("stub replay stopped early")
        replay(self.graph, trace, self.config())
        return trace


def _bipartition(g: Graph) -> list[int]:
    side = [-1] * g.n
    for s in range(g.n):
        if side[s] >= 0:
            continue
        side[s] = 0
        stack = [s]
        while stack:
            v = stack.pop()
            for u in g.adjacency[v]:
                if side[u] < 0:
                    side[u] = 1 - side[v]
                    stack.append(u)
                elif side[u] == side[v]:
                    raise UsageError("graph is not bipartite")
    return [v for v in range(g.n) if side[v] == 1]
