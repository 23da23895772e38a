"""Disjoint single edges: the linear-length family."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import UsageError
from ..graph import Coloring, Graph, ProcessKind, SwitchRule, random_coloring
from .base import GraphBuilder, Planner, Schedule


@dataclass(frozen=True)
class EdgeGadgetParams:
    copies: int

    def __post_init__(self):
        if self.copies < 1:
            raise UsageError("copies must be at least 1")


class EdgeGadget:
    """``copies`` disjoint edges (2i, 2i+1); node 2i+1 is the designated endpoint.

    The designated endpoints do not share neighborhoods, so they are kept in
    ``parts`` rather than as a group.
    """

    def __init__(self, params: EdgeGadgetParams, kind: ProcessKind = ProcessKind.MINORITY,
                 rule: SwitchRule = SwitchRule.basic()):
        self.params = params
        self.kind = kind
        self.rule = rule
        b = GraphBuilder()
        for _ in range(params.copies):
            u, v = b.nodes(2)
            b.edge(u, v)
        self.graph: Graph = b.build()
        self.parts = {"anchor": list(range(0, 2 * params.copies, 2)),
                      "designated": list(range(1, 2 * params.copies, 2))}
        self.meta = {"nodes": self.graph.n, "edges": self.graph.num_edges}

    def plan(self, col: Coloring) -> Schedule:
        pl = Planner(self.graph, col, self.kind, self.rule)
        for v in self.parts["designated"]:
            if pl.can(v):
                pl.switch(v)
        floor = math.ceil(self.params.copies / 4)
        ok = pl.count >= floor
        return Schedule(pl.steps, col.copy(), self.kind, self.rule, ok,
                        None if ok else "too_few_switchable",
                        {"switchable_designated": pl.count, "required": floor})


def gen_edge_gadget(params: EdgeGadgetParams, seed: int = 0,
                    kind: ProcessKind = ProcessKind.MINORITY) -> tuple[Graph, Schedule]:
    con = EdgeGadget(params, kind)
    return con.graph, con.plan(random_coloring(con.graph, seed))
