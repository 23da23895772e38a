"""Binary trees whose root turns black with a known probability."""

from __future__ import annotations

from fractions import Fraction

from ..errors import UsageError
from ..graph import Graph, ProcessKind, SwitchRule, random_coloring
from .base import GraphBuilder, Planner

BLACK = 0


def opening_recurrence(i: int) -> Fraction:
    """p_0 = 1/2, p_{k+1} = 1/2 + p_k^2 / 2, exactly."""
    if i < 0:
        raise UsageError("depth must be nonnegative")
    p = Fraction(1, 2)
    for _ in range(i):
        p = Fraction(1, 2) + p * p / 2
    return p


def depth_for(p_target: Fraction) -> int:
    """Smallest depth whose root probability reaches ``p_target``."""
    p_target = Fraction(p_target)
    if not 0 < p_target < 1:
        raise UsageError("target probability must lie in (0, 1)")
    i = 0
    while opening_recurrence(i) < p_target:
        i += 1
        if i > 64:
            raise UsageError(f"target {p_target} needs more than 64 levels")
    return i


def tree_size(depth: int) -> int:
    return 2 ** (depth + 1) - 1


def add_tree(b: GraphBuilder, depth: int) -> list[list[int]]:
    """Heap-ordered full binary tree; returns node ids layer by layer, root first."""
    ids = b.nodes(tree_size(depth))
    for k in range(len(ids)):
        for c in (2 * k + 1, 2 * k + 2):
            if c < len(ids):
                b.edge(ids[k], ids[c])
    return [ids[2 ** t - 1: 2 ** (t + 1) - 1] for t in range(depth + 1)]


def gen_opening_tree(depth: int) -> tuple[Graph, int, dict]:
    """Standalone tree; the root's output edge is only recorded, not built."""
    if depth < 0:
        raise UsageError("depth must be nonnegative")
    b = GraphBuilder()
    layers = add_tree(b, depth)
    g = b.build()
    return g, layers[0][0], {"layers": layers, "output_stub": layers[0][0]}


def blacken_leaf_to_root(pl: Planner, layers: list[list[int]], color: int = BLACK) -> bool:
    """Walk the tree from the leaves up, switching to ``color`` where allowed.

    Returns whether the root ends with ``color``.
    """
    for layer in reversed(layers):
        for v in layer:
            if pl.color(v) != color and pl.can(v):
                pl.switch(v)
    return pl.color(layers[0][0]) == color


def root_black_frequency(depth: int, seeds, lam: Fraction = Fraction(1, 4)) -> int:
    """How many of ``seeds`` end with a black root after the greedy walk."""
    g, _, meta = gen_opening_tree(depth)
    rule = SwitchRule.proportional(lam)
    hits = 0
    for s in seeds:
        pl = Planner(g, random_coloring(g, s), ProcessKind.MAJORITY, rule)
        hits += blacken_leaf_to_root(pl, meta["layers"])
    return hits
