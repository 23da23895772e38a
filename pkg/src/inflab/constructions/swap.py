"""Turn a majority instance on a bipartite graph into a minority one.

Inverting the colors of one side flips, for every edge, whether its two
endpoints agree.  So an edge is a majority conflict before the inversion
exactly when it is a minority conflict after it, and any switch sequence
stays legal with identical deltas.
"""

from __future__ import annotations

from typing import Iterable

from ..errors import UsageError
from ..graph import Graph
from .base import Schedule


def bipartite_color_swap(g: Graph, side: Iterable[int], schedule: Schedule) -> tuple[Graph, Schedule]:
    side = sorted(set(side))
    for v in side:
        g.check_node(v)
    if not g.is_bipartition(side):
        raise UsageError("side is not one class of a bipartition")
    initial = schedule.initial.copy()
    for v in side:
        initial.flip(v)
    swapped = Schedule(list(schedule.steps), initial, schedule.kind.dual, schedule.rule,
                       schedule.good_event, schedule.failure,
                       {**schedule.diagnostics, "color_swapped_side": len(side)})
    return g, swapped
