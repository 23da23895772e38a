"""Shared plumbing for the generators: the schedule record and a node allocator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..engine import ProcessConfig, ProcessState, Scripted, Trace, run
from ..graph import Coloring, Graph, ProcessKind, SwitchRule


@dataclass
class Schedule:
    """A scripted switch sequence produced against one concrete coloring.

    ``steps`` holds node ids and group labels.  ``good_event`` is False when
    the coloring fell outside the event the construction relies on; the
    steps are then still legal, just not guaranteed to be long.
    """

    steps: list[int | str]
    initial: Coloring
    kind: ProcessKind
    rule: SwitchRule
    good_event: bool = True
    failure: str | None = None
    diagnostics: dict = field(default_factory=dict)

    def config(self, step_limit: int | None = None) -> ProcessConfig:
        return ProcessConfig(self.kind, self.rule, step_limit=step_limit)

    def replay(self, g: Graph) -> Trace:
        """Run the script; raises ScheduleViolation on the first illegal step."""
        n_steps = len(Scripted(self.steps).expand(g))
        return run(g, self.initial, self.config(step_limit=max(n_steps, 1)), Scripted(self.steps))

    def to_json_dict(self) -> dict:
        return {"steps": list(self.steps), "good_event": self.good_event,
                "failure": self.failure, "diagnostics": self.diagnostics,
                "initial": self.initial.to_bitstring(), "kind": self.kind.value,
                "rule": str(self.rule)}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Schedule":
        return cls(list(data["steps"]), Coloring.from_bitstring(data["initial"]),
                   ProcessKind(data["kind"]), SwitchRule.parse(data["rule"]),
                   bool(data.get("good_event", True)), data.get("failure"),
                   dict(data.get("diagnostics") or {}))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Schedule":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


class GraphBuilder:
    """Hands out consecutive node ids and collects edges."""

    def __init__(self):
        self.n = 0
        self.edges: list[tuple[int, int]] = []
        self.groups: dict[str, list[int]] = {}

    def nodes(self, k: int, group: str | None = None) -> list[int]:
        ids = list(range(self.n, self.n + k))
        self.n += k
        if group is not None:
            self.groups[group] = ids
        return ids

    def edge(self, u: int, v: int) -> None:
        self.edges.append((u, v))

    def complete(self, left: Sequence[int], right: Sequence[int]) -> None:
        self.edges.extend((u, v) for u in left for v in right)

    def build(self, check_groups: bool = True) -> Graph:
        return Graph.from_edges(self.n, self.edges, self.groups, check_groups=check_groups)


class Planner:
    """Live process state plus the script being recorded against it."""

    def __init__(self, g: Graph, col: Coloring, kind: ProcessKind, rule: SwitchRule):
        self.state = ProcessState(g, col, kind, rule)
        self.steps: list[int | str] = []
        self.count = 0

    def color(self, v: int) -> int:
        return self.state.bits[v]

    def can(self, v: int) -> bool:
        return self.state.switchable(v)

    def switch(self, v: int) -> None:
        self.state.switch(v)
        self.steps.append(v)
        self.count += 1

    def switch_group(self, label: str, members: Sequence[int]) -> None:
        for v in members:
            self.state.switch(v)
        self.steps.append(label)
        self.count += len(members)

    def count_color(self, nodes, color: int) -> int:
        b = self.state.bits
        return sum(1 for v in nodes if b[v] == color)
