"""Five-phase construction for proportional switching with lambda < 1/3.

Four towers are built.  Each tower is a forest of small binary trees whose
roots feed a collection level, followed by levels of equal size joined by
circulant regular bipartite graphs with growing degree.  Towers T1 (black)
and T2 (white) both feed the control set S3; T3 (white) and T4 (black) feed
the mirror set S3'.  The black-target nodes of the stub instance hang off S3,
the white-target ones off S3'.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import ParameterError
from ..graph import Coloring, Graph, ProcessKind, SwitchRule, as_fraction, random_coloring
from .base import GraphBuilder, Planner, Schedule
from .opening import add_tree, depth_for, opening_recurrence, tree_size
from .prop import StubInstance

BLACK, WHITE = 0, 1


def composite_lambda(lam: Fraction) -> Fraction:
    """The threshold parameter the embedded instance runs at: 2*lam/(1-lam)."""
    return 2 * lam / (1 - lam)


@dataclass(frozen=True)
class ProportionalTowerParams:
    lam: Fraction
    m: int
    alpha: Fraction = Fraction(4)
    mu: Fraction = Fraction(1, 4)
    p: Fraction = Fraction(89, 128)
    c0: float = 0.6
    eps: Fraction | None = None
    pad_outputs: bool = False
    d0: int | None = None

    def __post_init__(self):
        for name in ("lam", "alpha", "mu", "p"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if self.eps is not None:
            object.__setattr__(self, "eps", as_fraction(self.eps))
        if not 0 < self.lam < Fraction(1, 3):
            raise ParameterError("lambda must lie in (0, 1/3)")
        if self.m < 2:
            raise ParameterError("m must be at least 2")
        if self.alpha < 4:
            raise ParameterError("alpha must be at least 4")
        if not 0 < self.mu <= 1:
            raise ParameterError("mu must lie in (0, 1]")
        if not 0 < self.p < 1:
            raise ParameterError("p must lie in (0, 1)")
        if self.c0 <= 0:
            raise ParameterError("c0 must be positive")
        if self.d0 is not None and self.d0 < 1:
            raise ParameterError("d0 must be positive")
        if self.epsilon <= 0:
            raise ParameterError("eps must be positive")
        if not self.growth_ok:
            raise ParameterError(
                f"growth condition fails: 2*lam + 2*eps*(1+mu) + mu*lam = "
                f"{float(self.growth_lhs):.4f} > 1")

    @property
    def delta(self) -> Fraction:
        return Fraction(2, 3) - (1 + self.lam) / 2

    @property
    def epsilon(self) -> Fraction:
        if self.eps is not None:
            return self.eps
        lam, mu = self.lam, self.mu
        return min(self.delta / 2, (1 - 2 * lam - mu * lam) / (2 * (1 + mu)))

    @property
    def growth_lhs(self) -> Fraction:
        return 2 * self.lam + 2 * self.epsilon * (1 + self.mu) + self.mu * self.lam

    @property
    def growth_ok(self) -> bool:
        return self.growth_lhs <= 1

    @property
    def depth(self) -> int:
        return depth_for(self.p)

    @property
    def lam_prime(self) -> Fraction:
        return composite_lambda(self.lam)


def degree_schedule(level_size: int, d0: int, mu: Fraction) -> list[int]:
    """Degrees between consecutive levels, stopping at the first one >= size/2."""
    degrees = [d0]
    while 2 * degrees[-1] < level_size:
        nxt = math.ceil((1 + mu) * degrees[-1])
        degrees.append(nxt)
    if degrees[-1] > level_size:
        raise ParameterError(f"cannot build a {degrees[-1]}-regular bipartite join on {level_size} nodes")
    return degrees


def _estimate_nodes(params: ProportionalTowerParams, d0: int) -> int:
    m = params.m
    small, big = math.ceil(params.alpha * m), math.ceil(2 * params.alpha * m)
    total = 4 * m + m  # S3, S3', stub
    for size in (small, big, small, big):
        total += 4 * d0 * size * tree_size(params.depth)
        total += size * (len(degree_schedule(size, d0, params.mu)) + 1)
    if params.pad_outputs:
        total += 4 * m * m
    return total


def choose_d0(params: ProportionalTowerParams) -> int:
    """Fixpoint of d0 = ceil(c0 * ln n), n being the node count d0 produces."""
    if params.d0 is not None:
        return params.d0
    d0 = max(1, math.ceil(params.c0 * math.log(params.m)))
    seen = set()
    while d0 not in seen:
        seen.add(d0)
        d0 = max(1, math.ceil(params.c0 * math.log(_estimate_nodes(params, d0))))
    return max(seen)


@dataclass
class Tower:
    name: str
    color: int
    size: int
    tree_layers: list[list[list[int]]]
    levels: list[list[int]]
    degrees: list[int]

    @property
    def final(self) -> list[int]:
        return self.levels[-1]


def _build_tower(b: GraphBuilder, name: str, color: int, size: int, d0: int,
                 depth: int, mu: Fraction) -> Tower:
    degrees = degree_schedule(size, d0, mu)
    trees = [add_tree(b, depth) for _ in range(4 * d0 * size)]
    levels = [b.nodes(size)]
    # which root feeds which collector is a free choice; assign greedily in id order
    for j, layers in enumerate(trees):
        b.edge(layers[0][0], levels[0][j // (4 * d0)])
    for D in degrees:
        prev, nxt = levels[-1], b.nodes(size)
        for j, u in enumerate(prev):
            for k in range(D):
                b.edge(u, nxt[(j + k) % size])
        levels.append(nxt)
    return Tower(name, color, size, trees, levels, degrees)


@dataclass
class TowerAudit:
    collector_degrees_ok: bool
    regular_joins_ok: bool
    control_degrees: list[int]
    control_expected: int
    degree_identity_max_slack: Fraction
    rounding_log: list[str] = field(default_factory=list)


class ProportionalTower:
    def __init__(self, params: ProportionalTowerParams, prop: StubInstance | None = None):
        self.params = params
        m = params.m
        self.kind = ProcessKind.MAJORITY
        self.rule = SwitchRule.proportional(params.lam)
        self.prop = prop if prop is not None else StubInstance(m, params.lam_prime)
        if self.prop.graph.n != m:
            raise ParameterError(f"stub has {self.prop.graph.n} nodes, expected {m}")
        if self.prop.lam_prime != params.lam_prime:
            raise ParameterError("stub was validated at a different lambda'")
        self.prop.validate()
        self.d0 = choose_d0(params)
        rounding = []
        small = math.ceil(params.alpha * m)
        big = math.ceil(2 * params.alpha * m)
        if small != params.alpha * m:
            rounding.append(f"alpha*m = {params.alpha * m} rounded up to {small}")

        b = GraphBuilder()
        depth = params.depth
        self.towers = {
            "T1": _build_tower(b, "T1", BLACK, small, self.d0, depth, params.mu),
            "T2": _build_tower(b, "T2", WHITE, big, self.d0, depth, params.mu),
            "T3": _build_tower(b, "T3", WHITE, small, self.d0, depth, params.mu),
            "T4": _build_tower(b, "T4", BLACK, big, self.d0, depth, params.mu),
        }
        S3b, S3w = b.nodes(m), b.nodes(m)
        S3w_mirror, S3b_mirror = b.nodes(m), b.nodes(m)
        S3 = S3b + S3w
        S3_mirror = S3w_mirror + S3b_mirror
        for t in ("T1", "T2"):
            b.complete(self.towers[t].final, S3)
        for t in ("T3", "T4"):
            b.complete(self.towers[t].final, S3_mirror)

        prop_nodes = b.nodes(m)
        pg = self.prop.graph
        for u, v in pg.edges():
            b.edge(prop_nodes[u], prop_nodes[v])
        factor = (1 + params.lam) / (2 * (1 - params.lam))
        outputs = {v: 0 for v in S3 + S3_mirror}
        cursor = {"b": 0, "w": 0, "mb": 0, "mw": 0}
        pools = {"b": S3b, "w": S3w, "mb": S3b_mirror, "mw": S3w_mirror}
        extra = []
        for i, v in enumerate(prop_nodes):
            dprime = pg.degree(i)
            k = math.ceil(factor * dprime)
            extra.append(k)
            keys = ("b", "w") if self.prop.target.bits[i] == BLACK else ("mb", "mw")
            for key in keys:
                pool = pools[key]
                for _ in range(k):
                    u = pool[cursor[key] % m]
                    cursor[key] += 1
                    b.edge(v, u)
                    outputs[u] += 1
        if any(c > m for c in outputs.values()):
            raise ParameterError("a control node would need more than m outputs")
        pads = {}
        if params.pad_outputs:
            for u, c in outputs.items():
                leaves = b.nodes(m - c)
                for leaf in leaves:
                    b.edge(u, leaf)
                pads[u] = leaves
        self.graph: Graph = b.build(check_groups=False)
        self.parts = {"S3b": S3b, "S3w": S3w, "S3b_mirror": S3b_mirror,
                      "S3w_mirror": S3w_mirror, "prop": prop_nodes}
        self.prop_extra = extra
        self.pads = pads
        self._rank = self._ranks()
        n = self.graph.n
        self.meta = {
            "m": m, "lambda": str(params.lam), "lambda_prime": str(params.lam_prime),
            "alpha": str(params.alpha), "mu": str(params.mu), "epsilon": str(params.epsilon),
            "delta": str(params.delta), "p_target": str(params.p), "tree_depth": depth,
            "p_depth": str(opening_recurrence(depth)), "d0": self.d0,
            "level_sizes": {t: tw.size for t, tw in self.towers.items()},
            "level_degrees": {t: tw.degrees for t, tw in self.towers.items()},
            "levels": {t: len(tw.levels) for t, tw in self.towers.items()},
            "nodes": n, "edges": self.graph.num_edges,
            "nodes_per_m_log_m": n / (m * math.log(m)),
            "stub_length": self.prop.claimed_length,
            "rounding": rounding,
        }

    def _ranks(self) -> list[int]:
        """Order used when closing a tower: leaves first, then upward level by level."""
        rank = [-1] * self.graph.n
        for tw in self.towers.values():
            depth = len(tw.tree_layers[0])
            for layers in tw.tree_layers:
                for t, layer in enumerate(layers):
                    for v in layer:
                        rank[v] = depth - 1 - t
            for i, lev in enumerate(tw.levels):
                for v in lev:
                    rank[v] = depth + i
        return rank

    # -- audit ---------------------------------------------------------------
    def audit(self) -> TowerAudit:
        g, m, lam = self.graph, self.params.m, self.params.lam
        ok_collect = all(g.degree(v) == 5 * self.d0
                         for tw in self.towers.values() for v in tw.levels[0])
        ok_regular = True
        for tw in self.towers.values():
            for i, D in enumerate(tw.degrees):
                nxt = set(tw.levels[i + 1])
                prev = set(tw.levels[i])
                if any(sum(1 for u in g.adjacency[v] if u in nxt) != D for v in tw.levels[i]):
                    ok_regular = False
                if any(sum(1 for u in g.adjacency[v] if u in prev) != D for v in tw.levels[i + 1]):
                    ok_regular = False
        control = self.parts["S3b"] + self.parts["S3w"] + self.parts["S3w_mirror"] + self.parts["S3b_mirror"]
        degs = [g.degree(v) for v in control]
        expected = self.towers["T1"].size + self.towers["T2"].size + m
        slack = Fraction(0)
        for i, v in enumerate(self.parts["prop"]):
            dprime = self.prop.graph.degree(i)
            slack = max(slack, abs(g.degree(v) - Fraction(2, 1) / (1 - lam) * dprime))
        return TowerAudit(ok_collect, ok_regular, degs, expected, slack, list(self.meta["rounding"]))

    # -- schedule ------------------------------------------------------------
    def _close(self, pl: Planner, tower: Tower, include_final: bool) -> None:
        color = tower.color
        members = set(v for layers in tower.tree_layers for layer in layers for v in layer)
        for lev in tower.levels[:-1]:
            members.update(lev)
        if include_final:
            members.update(tower.final)
        rank = self._rank
        adj = self.graph.adjacency
        heap = [(rank[v], v) for v in members if pl.color(v) != color and pl.can(v)]
        heapq.heapify(heap)
        while heap:
            _, v = heapq.heappop(heap)
            if pl.color(v) == color or not pl.can(v):
                continue
            pl.switch(v)
            for u in adj[v]:
                if u in members and pl.color(u) != color and pl.can(u):
                    heapq.heappush(heap, (rank[u], u))

    def _fractions(self, pl: Planner, nodes, color: int) -> list[float]:
        adj, bits = self.graph.adjacency, pl.state.bits
        return [sum(1 for u in adj[v] if bits[u] == color) / len(adj[v]) for v in nodes]

    def _window(self, pl: Planner, nodes, color: int) -> bool:
        """True iff every node either has ``color`` already stable or may switch to it."""
        st = pl.state
        adj, bits = self.graph.adjacency, st.bits
        for v in nodes:
            k = sum(1 for u in adj[v] if bits[u] == color)
            if k < st.thr[v]:
                return False
        return True

    def plan(self, col: Coloring) -> Schedule:
        pl = Planner(self.graph, col, self.kind, self.rule)
        parts, towers = self.parts, self.towers
        S3 = parts["S3b"] + parts["S3w"]
        S3m = parts["S3w_mirror"] + parts["S3b_mirror"]
        diag: dict = {"phase_steps": {}}
        failure = None

        def mark(phase, before):
            diag["phase_steps"][phase] = pl.count - before

        def fail(name):
            nonlocal failure
            failure = name
            return Schedule(pl.steps, col.copy(), self.kind, self.rule, False, name, diag)

        # opening, collection and growing, in all four towers
        for name, include in (("T1", True), ("T2", False), ("T3", True), ("T4", False)):
            tw = towers[name]
            before = pl.count
            self._close(pl, tw, include)
            mark(f"close_{name}", before)
            levels = tw.levels if include else tw.levels[:-1]
            short = [tw.size - pl.count_color(lev, tw.color) for lev in levels]
            diag[f"{name}_level_shortfall"] = short
            # later levels can absorb a few stragglers; only the last one must be complete
            if short[-1]:
                return fail(f"collection_failure:{name}" if len(levels) == 1
                            else f"growing_failure:{name}")

        # control windows: S3 all black, S3' all white
        for nodes, color, label in ((S3, BLACK, "black_window"), (S3m, WHITE, "white_window_mirror")):
            fr = self._fractions(pl, nodes, color)
            diag[f"{label}_min_fraction"] = min(fr)
            diag[f"{label}_fractions"] = fr
            if not self._window(pl, nodes, color):
                return fail(label)
            before = pl.count
            for v in nodes:
                if pl.color(v) != color:
                    pl.switch(v)
            mark(label, before)

        # force the stub's target coloring while both control sets are uniform
        before = pl.count
        for i, v in enumerate(parts["prop"]):
            want = self.prop.target.bits[i]
            if pl.color(v) != want:
                if not pl.can(v):
                    diag["prop_init_node"] = i
                    return fail("prop_init")
                pl.switch(v)
        mark("prop_init", before)

        # flip the held-back final levels, then release half of each control set
        for name, release, color, label in (("T2", parts["S3w"], WHITE, "white_window"),
                                            ("T4", parts["S3b_mirror"], BLACK, "black_window_mirror")):
            tw = towers[name]
            before = pl.count
            for v in tw.final:
                if pl.color(v) != tw.color and pl.can(v):
                    pl.switch(v)
            mark(f"final_{name}", before)
            if pl.count_color(tw.final, tw.color) != tw.size:
                return fail(f"final_level_failure:{name}")
            ctrl = S3 if name == "T2" else S3m
            fr = self._fractions(pl, ctrl, color)
            diag[f"{label}_min_fraction"] = min(fr)
            diag[f"{label}_fractions"] = fr
            if not self._window(pl, ctrl, color):
                return fail(label)
            before = pl.count
            for v in release:
                pl.switch(v)
            mark(label, before)

        before = pl.count
        for j, i in enumerate(self.prop.steps):
            v = parts["prop"][i]
            if not pl.can(v):
                diag["prop_steps_fired"] = j
                return fail("prop_replay")
            pl.switch(v)
        diag["prop_steps_fired"] = len(self.prop.steps)
        mark("prop", before)
        diag["steps"] = pl.count
        return Schedule(pl.steps, col.copy(), self.kind, self.rule, True, None, diag)


def gen_proportional_tower(params: ProportionalTowerParams, prop: StubInstance | None = None,
                           seed: int = 0) -> tuple[Graph, Schedule]:
    con = ProportionalTower(params, prop)
    return con.graph, con.plan(random_coloring(con.graph, seed))


class GrowingChain:
    """Just the growing levels, with the first level standing in as already black."""

    def __init__(self, size: int = 64, d0: int = 8, mu: Fraction = Fraction(1, 4),
                 lam: Fraction = Fraction(1, 4)):
        b = GraphBuilder()
        self.degrees = degree_schedule(size, d0, as_fraction(mu))
        levels = [b.nodes(size)]
        for D in self.degrees:
            prev, nxt = levels[-1], b.nodes(size)
            for j, u in enumerate(prev):
                for k in range(D):
                    b.edge(u, nxt[(j + k) % size])
            levels.append(nxt)
        self.graph: Graph = b.build()
        self.levels = levels
        self.kind = ProcessKind.MAJORITY
        self.rule = SwitchRule.proportional(lam)

    def odd_levels(self) -> list[int]:
        return [v for i, lev in enumerate(self.levels) if i % 2 for v in lev]

    def plan(self, col: Coloring) -> Schedule:
        col = col.copy()
        for v in self.levels[0]:
            col[v] = BLACK
        pl = Planner(self.graph, col, self.kind, self.rule)
        moved = True
        while moved:
            moved = False
            for lev in self.levels[1:]:
                for v in lev:
                    if pl.color(v) != BLACK and pl.can(v):
                        pl.switch(v)
                        moved = True
        short = [len(lev) - pl.count_color(lev, BLACK) for lev in self.levels]
        ok = not any(short)
        return Schedule(pl.steps, col, self.kind, self.rule, ok,
                        None if ok else "growing_failure", {"level_shortfall": short})
