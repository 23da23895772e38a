"""Graphs, colorings and the switching rules.

Everything that decides whether an edge is a conflict or a node may switch
lives here; the engine and the constructions only call into these helpers
(or into :class:`inflab.engine.ProcessState`, which caches the same counts).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractViolation, UsageError


class Color(enum.IntEnum):
    BLACK = 0
    WHITE = 1

    @property
    def opposite(self) -> "Color":
        return Color(1 - self)


class ProcessKind(enum.Enum):
    MAJORITY = "majority"
    MINORITY = "minority"

    @property
    def dual(self) -> "ProcessKind":
        return ProcessKind.MINORITY if self is ProcessKind.MAJORITY else ProcessKind.MAJORITY


def as_fraction(value: Fraction | float | int | str) -> Fraction:
    """Parse ``"a/b"`` strings, ints, floats or Fractions into a Fraction.

    Floats are converted through their exact binary value, so ``0.1`` becomes
    a slightly-off rational; pass ``"1/10"`` for an exact threshold.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"cannot parse rational {value!r}") from exc
    return Fraction(value)


@dataclass(frozen=True)
class SwitchRule:
    """Basic switching (``lam is None``) or proportional switching with ``lam``."""

    lam: Fraction | None = None

    def __post_init__(self):
        if self.lam is not None:
            lam = as_fraction(self.lam)
            if not 0 < lam < 1:
                raise UsageError(f"proportional lambda must lie in (0, 1), got {lam}")
            object.__setattr__(self, "lam", lam)

    @classmethod
    def basic(cls) -> "SwitchRule":
        return cls(None)

    @classmethod
    def proportional(cls, lam) -> "SwitchRule":
        return cls(as_fraction(lam))

    @classmethod
    def parse(cls, text: str) -> "SwitchRule":
        """``"basic"`` or ``"proportional:a/b"`` (also accepts a bare ``a/b``)."""
        text = text.strip()
        if text == "basic":
            return cls.basic()
        if text.startswith("proportional"):
            _, _, lam = text.partition(":")
            return cls.proportional(lam)
        return cls.proportional(text)

    @property
    def is_basic(self) -> bool:
        return self.lam is None

    def threshold(self, degree: int) -> int:
        """Smallest conflict count that makes a node of this degree switchable.

        Isolated nodes get threshold 1, so they are never switchable.
        """
        if degree <= 0:
            return 1
        if self.lam is None:
            return degree // 2 + 1
        a, b = self.lam.numerator, self.lam.denominator
        # 2*b*k >= (a+b)*d
        return max(1, -((-(a + b) * degree) // (2 * b)))

    def allows(self, conflicts: int, degree: int) -> bool:
        return degree > 0 and conflicts >= self.threshold(degree)

    def __str__(self) -> str:
        return "basic" if self.lam is None else f"proportional:{self.lam}"


@dataclass(frozen=True)
class DegreeClassifier:
    """High-degree iff ``d >= c0 * ln(n)``."""

    c0: float
    n: int

    def __post_init__(self):
        if self.c0 <= 0:
            raise UsageError("c0 must be positive")
        if self.n < 1:
            raise UsageError("n must be positive")

    @property
    def cutoff(self) -> float:
        return self.c0 * math.log(self.n)

    def is_high(self, degree: int) -> bool:
        return degree >= self.cutoff


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph on nodes ``0..n-1``.

    ``groups`` maps a label to a node tuple whose members share the same
    neighborhood outside the group; the constructor checks it.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    groups: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise UsageError("a graph needs at least one node")
        if len(self.adjacency) != self.n:
            raise UsageError("adjacency length does not match n")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]],
                   groups: Mapping[str, Iterable[int]] | None = None,
                   check_groups: bool = True) -> "Graph":
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise UsageError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise UsageError(f"self-loop at node {u}")
            adj[u].append(v)
            adj[v].append(u)
        frozen = []
        for v, nbrs in enumerate(adj):
            nbrs.sort()
            for i in range(1, len(nbrs)):
                if nbrs[i] == nbrs[i - 1]:
                    raise UsageError(f"duplicate edge ({v}, {nbrs[i]})")
            frozen.append(tuple(nbrs))
        grp = {str(k): tuple(sorted(int(x) for x in members)) for k, members in (groups or {}).items()}
        g = cls(n, tuple(frozen), grp)
        if check_groups:
            g.check_groups()
        return g

    def check_groups(self) -> None:
        for label, members in self.groups.items():
            if not members:
                raise UsageError(f"group {label!r} is empty")
            inside = set(members)
            for v in members:
                if not 0 <= v < self.n:
                    raise UsageError(f"group {label!r} names node {v} outside the graph")
            ref = set(self.adjacency[members[0]]) - inside
            for v in members[1:]:
                if set(self.adjacency[v]) - inside != ref:
                    raise UsageError(f"group {label!r}: node {v} has a different outside neighborhood")

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> Iterable[tuple[int, int]]:
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    yield u, v

    def is_bipartition(self, side: Iterable[int]) -> bool:
        s = set(side)
        return all((u in s) != (v in s) for u, v in self.edges())

    def check_node(self, v) -> int:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 0 <= v < self.n:
            raise UsageError(f"invalid node id {v!r} for graph with n={self.n}")
        return int(v)

    # -- serialization -------------------------------------------------
    def to_json_dict(self) -> dict:
        return {"n": self.n, "edges": [[u, v] for u, v in self.edges()],
                "groups": {k: list(v) for k, v in self.groups.items()}}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Graph":
        try:
            n = int(data["n"])
            edges = [(int(u), int(v)) for u, v in data["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed graph JSON: {exc}") from exc
        return cls.from_edges(n, edges, data.get("groups") or {})

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Graph":
        """Read graph JSON, or an edge list with one ``u v`` pair per line."""
        text = Path(path).read_text()
        stripped = text.lstrip()
        if stripped.startswith("{"):
            return cls.from_json_dict(json.loads(text))
        return cls.from_edge_list(text)

    @classmethod
    def from_edge_list(cls, text: str, n: int | None = None) -> "Graph":
        edges = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise UsageError(f"edge list line {lineno}: expected 'u v', got {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
        if n is None:
            n = 1 + max((max(e) for e in edges), default=0)
        return cls.from_edges(n, edges)


class Coloring:
    """Two-color assignment, stored as a bytearray (1 = white)."""

    __slots__ = ("bits",)

    def __init__(self, bits: bytes | bytearray | Sequence[int]):
        self.bits = bytearray(bits)

    @classmethod
    def uniform(cls, n: int, color: Color = Color.BLACK) -> "Coloring":
        return cls(bytes([int(color)]) * n)

    @classmethod
    def from_bitstring(cls, s: str) -> "Coloring":
        if set(s) - {"0", "1"}:
            raise UsageError("coloring bitstring may only contain 0 and 1")
        return cls(b"".join(b"\x01" if ch == "1" else b"\x00" for ch in s))

    def to_bitstring(self) -> str:
        return self.bits.translate(bytes.maketrans(b"\x00\x01", b"01")).decode()

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, v: int) -> Color:
        return Color(self.bits[v])

    def __setitem__(self, v: int, color: Color | int) -> None:
        self.bits[v] = int(color)

    def __eq__(self, other) -> bool:
        return isinstance(other, Coloring) and self.bits == other.bits

    def __repr__(self) -> str:
        s = self.to_bitstring()
        return f"Coloring({s if len(s) <= 40 else s[:37] + '...'})"

    def flip(self, v: int) -> None:
        self.bits[v] ^= 1

    def copy(self) -> "Coloring":
        return Coloring(self.bits)

    def white_count(self, nodes: Iterable[int] | None = None) -> int:
        if nodes is None:
            return sum(self.bits)
        b = self.bits
        return sum(b[v] for v in nodes)

    def check_for(self, g: Graph) -> None:
        if len(self) != g.n:
            raise UsageError(f"coloring has {len(self)} entries but the graph has {g.n} nodes")


def edge_in_conflict(col: Coloring, kind: ProcessKind, u: int, v: int) -> bool:
    same = col.bits[u] == col.bits[v]
    return same if kind is ProcessKind.MINORITY else not same


def conflict_count(g: Graph, col: Coloring, kind: ProcessKind, v: int) -> int:
    v = g.check_node(v)
    b = col.bits
    same = sum(1 for u in g.adjacency[v] if b[u] == b[v])
    return same if kind is ProcessKind.MINORITY else g.degree(v) - same


def total_conflicts(g: Graph, col: Coloring, kind: ProcessKind) -> int:
    return sum(1 for u, v in g.edges() if edge_in_conflict(col, kind, u, v))


def is_switchable(g: Graph, col: Coloring, kind: ProcessKind, rule: SwitchRule, v: int) -> bool:
    v = g.check_node(v)
    return rule.allows(conflict_count(g, col, kind, v), g.degree(v))


def apply_switch(g: Graph, col: Coloring, kind: ProcessKind, rule: SwitchRule, v: int) -> int:
    """Flip ``v`` and return the change in the total number of conflicted edges."""
    v = g.check_node(v)
    c = conflict_count(g, col, kind, v)
    d = g.degree(v)
    if not rule.allows(c, d):
        raise ContractViolation(f"node {v} is not switchable ({c} conflicts, degree {d}, rule {rule})")
    col.flip(v)
    # every incident edge toggles, so c conflicts become d - c
    return d - 2 * c


def is_epsilon_balanced(col: Coloring, s: Iterable[int], eps) -> bool:
    nodes = list(s)
    if not nodes:
        raise UsageError("epsilon-balance needs a nonempty set")
    eps = as_fraction(eps)
    if eps < 0:
        raise UsageError("eps must be nonnegative")
    k = len(nodes)
    w = col.white_count(nodes)
    half = Fraction(1, 2)
    return (half - eps) * k <= w <= (half + eps) * k


def random_coloring(g: Graph | int, seed: int) -> Coloring:
    """Each node white with probability 1/2, independently; fixed by ``seed``."""
    n = g if isinstance(g, int) else g.n
    rng = np.random.default_rng(seed)
    return Coloring(rng.integers(0, 2, size=n, dtype=np.uint8).tobytes())
