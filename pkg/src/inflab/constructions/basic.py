"""Quadratic-length families under basic switching.

Both graphs hang a group ``P`` of ``m`` nodes between two sides ``A`` and
``B``.  Once ``A0`` and ``B0`` hold opposite colors, every node of ``A`` (or
``B``) with the wrong color is switchable no matter what ``P`` does, and
feeding those nodes one at a time from alternating sides lets the whole of
``P`` switch again and again.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from ..errors import ParameterError
from ..graph import Coloring, Graph, ProcessKind, SwitchRule, random_coloring
from .base import GraphBuilder, Planner, Schedule

MIN_M = 12


@dataclass(frozen=True)
class BasicMinorityParams:
    m: int

    def __post_init__(self):
        if self.m < MIN_M:
            raise ParameterError(f"m must be at least {MIN_M}")


def _alternate(pl: Planner, P: list[int], feeds: dict[int, deque], minority: bool) -> dict:
    """Drive ``P`` back and forth using the nodes queued in ``feeds``.

    ``feeds[c]`` holds nodes whose switch adds one neighbor of color ``c``
    to ``P``.  Returns counts used for the good-event diagnostics.
    """
    m = len(P)
    full_rounds = 0
    reserve_at_first = None
    moves = 0
    while True:
        ready = [v for v in P if pl.can(v)]
        if ready:
            if len(ready) == m:
                if reserve_at_first is None:
                    reserve_at_first = min(len(feeds[0]), len(feeds[1]))
                pl.switch_group("P", P)
                full_rounds += 1
            else:
                for v in ready:
                    pl.switch(v)
            continue
        have = pl.color(P[0])
        need = have if minority else 1 - have
        q = feeds[need]
        while q and not pl.can(q[0]):
            q.popleft()
        if not q:
            break
        pl.switch(q.popleft())
        moves += 1
    return {"full_rounds": full_rounds, "feed_moves": moves,
            "reserve_after_rebalance": reserve_at_first if reserve_at_first is not None else 0}


class BasicMinority:
    """P (m) + parity node x, A and B (m each), A0 and B0 (m+1 each).

    Complete bipartite joins: P-A, P-B, P-x, A-A0, B-B0, A0-B0.  That gives
    5m+3 nodes, odd degree 2m+1 on P, A, B, A0, B0, and |A0| > |B|.
    """

    kind = ProcessKind.MINORITY

    def __init__(self, params: BasicMinorityParams):
        m = params.m
        self.params = params
        self.rule = SwitchRule.basic()
        b = GraphBuilder()
        P = b.nodes(m, "P")
        x = b.nodes(1)
        A = b.nodes(m, "A")
        B = b.nodes(m, "B")
        A0 = b.nodes(m + 1, "A0")
        B0 = b.nodes(m + 1, "B0")
        b.complete(P, A)
        b.complete(P, B)
        b.complete(P, x)
        b.complete(A, A0)
        b.complete(B, B0)
        b.complete(A0, B0)
        self.graph: Graph = b.build()
        self.parts = {"P": P, "x": x, "A": A, "B": B, "A0": A0, "B0": B0}
        self.meta = {"m": m, "nodes": self.graph.n, "edges": self.graph.num_edges}

    def plan(self, col: Coloring) -> Schedule:
        g, parts, m = self.graph, self.parts, self.params.m
        pl = Planner(g, col, self.kind, self.rule)
        A0, B0 = parts["A0"], parts["B0"]
        # A0 has odd degree, so its whole group prefers one color
        for v in A0:
            if pl.can(v):
                pl.switch(v)
        pref = pl.color(A0[0])
        for v in B0:
            if pl.can(v):
                pl.switch(v)
        setup_ok = (pl.count_color(A0, pref) == len(A0)
                    and pl.count_color(B0, 1 - pref) == len(B0))
        feeds = {1 - pref: deque(v for v in parts["A"] if pl.color(v) == pref),
                 pref: deque(v for v in parts["B"] if pl.color(v) == 1 - pref)}
        usable = {"A": len(feeds[1 - pref]), "B": len(feeds[pref])}
        stats = _alternate(pl, parts["P"], feeds, minority=True)
        need = math.ceil(m / 4)
        good = setup_ok and stats["reserve_after_rebalance"] >= need
        diag = {"setup_ok": setup_ok, "preferred_A0": "white" if pref else "black",
                "usable_A": usable["A"], "usable_B": usable["B"], "reserve_needed": need,
                "steps": pl.count, **stats}
        failure = None if good else ("setup_failure" if not setup_ok else "balance_event_failure")
        return Schedule(pl.steps, col.copy(), self.kind, self.rule, good, failure, diag)


def gen_basic_minority(params: BasicMinorityParams, seed: int = 0) -> tuple[Graph, Schedule]:
    con = BasicMinority(params)
    return con.graph, con.plan(random_coloring(con.graph, seed))


@dataclass(frozen=True)
class BasicMajorityParams:
    m: int
    c0: float = 1.0

    def __post_init__(self):
        if self.m < MIN_M:
            raise ParameterError(f"m must be at least {MIN_M}")
        if self.c0 <= 0:
            raise ParameterError("c0 must be positive")

    @property
    def h(self) -> int:
        h = max(1, round(self.c0 * math.log(self.m)))
        return h if h % 2 else h + 1

    @property
    def adjusted_m(self) -> int:
        """Smallest m' >= m with h | m' and m'/h odd (so no group can tie)."""
        h = self.h
        q = -(-self.m // h)
        if q % 2 == 0:
            q += 1
        return q * h


class BasicMajority:
    """The majority variant: 9m+3 nodes.

    A0 is no longer joined to B0; instead it sees h groups A1_i of size m/h,
    each A1_i fully joined to its own A2_i (and the same on the B side).
    """

    kind = ProcessKind.MAJORITY

    def __init__(self, params: BasicMajorityParams):
        self.params = params
        self.rule = SwitchRule.basic()
        m, h = params.adjusted_m, params.h
        s = m // h
        b = GraphBuilder()
        P = b.nodes(m, "P")
        x = b.nodes(1)
        A = b.nodes(m, "A")
        B = b.nodes(m, "B")
        A0 = b.nodes(m + 1, "A0")
        B0 = b.nodes(m + 1, "B0")
        b.complete(P, A)
        b.complete(P, B)
        b.complete(P, x)
        b.complete(A, A0)
        b.complete(B, B0)
        sides = {}
        for side, top in (("A", A0), ("B", B0)):
            ones, twos = [], []
            for i in range(h):
                g1 = b.nodes(s, f"{side}1_{i}")
                g2 = b.nodes(s, f"{side}2_{i}")
                b.complete(top, g1)
                b.complete(g1, g2)
                ones.append(g1)
                twos.append(g2)
            sides[side] = (ones, twos)
        self.graph: Graph = b.build()
        self.m, self.h, self.group_size = m, h, s
        self.parts = {"P": P, "x": x, "A": A, "B": B, "A0": A0, "B0": B0,
                      "A1": sides["A"][0], "A2": sides["A"][1],
                      "B1": sides["B"][0], "B2": sides["B"][1]}
        self.meta = {"m": m, "requested_m": params.m, "h": h, "group_size": s,
                     "nodes": self.graph.n, "edges": self.graph.num_edges}

    def _setup_side(self, pl: Planner, side: str, color: int) -> tuple[str | None, dict]:
        top = self.parts[f"{side}0"]
        ones, twos = self.parts[f"{side}1"], self.parts[f"{side}2"]
        s = self.group_size
        good = [i for i in range(self.h) if 2 * pl.count_color(ones[i], color) > s]
        # close toward `color` over A2, A1, A0 in that order, repeating until nothing moves
        layers = [v for grp in twos for v in grp] + [v for grp in ones for v in grp] + list(top)
        moved = True
        while moved:
            moved = False
            for v in layers:
                if pl.color(v) != color and pl.can(v):
                    pl.switch(v)
                    moved = True
        diag = {f"{side}_good_indices": good,
                f"{side}1_turned": sum(1 for grp in ones if pl.count_color(grp, color) == s)}
        if pl.count_color(top, color) == len(top):
            return None, diag
        if not good:
            return "no_good_index", diag
        if diag[f"{side}1_turned"] == 0:
            return "a1_not_switchable", diag
        return "a0_not_switchable", diag

    def _plan_oriented(self, col: Coloring, a_color: int):
        pl = Planner(self.graph, col, self.kind, self.rule)
        fail_a, diag_a = self._setup_side(pl, "A", a_color)
        fail_b, diag_b = (None, {}) if fail_a else self._setup_side(pl, "B", 1 - a_color)
        diag = {"A_color": "white" if a_color else "black", **diag_a, **diag_b}
        failure = fail_a or fail_b
        if failure:
            return pl, failure, diag
        feeds = {a_color: deque(v for v in self.parts["A"] if pl.color(v) != a_color),
                 1 - a_color: deque(v for v in self.parts["B"] if pl.color(v) == a_color)}
        diag["usable_A"], diag["usable_B"] = len(feeds[a_color]), len(feeds[1 - a_color])
        stats = _alternate(pl, self.parts["P"], feeds, minority=False)
        diag.update(stats)
        need = math.ceil(self.m / 4)
        diag["reserve_needed"] = need
        if stats["reserve_after_rebalance"] < need:
            return pl, "balance_event_failure", diag
        return pl, None, diag

    def plan(self, col: Coloring) -> Schedule:
        """Try both color orientations and keep the better script."""
        results = [self._plan_oriented(col, c) for c in (1, 0)]
        ok = [r for r in results if r[1] is None]
        pool = ok or results
        pl, failure, diag = max(pool, key=lambda r: r[0].count)
        diag = {**diag, "steps": pl.count, "failures": [r[1] for r in results]}
        return Schedule(pl.steps, col.copy(), self.kind, self.rule, failure is None, failure, diag)


def gen_basic_majority(params: BasicMajorityParams, seed: int = 0) -> tuple[Graph, Schedule]:
    con = BasicMajority(params)
    return con.graph, con.plan(random_coloring(con.graph, seed))
