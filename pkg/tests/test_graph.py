from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inflab.analysis import chernoff_tail
from inflab.errors import ContractViolation, UsageError
from inflab.graph import (Color, Coloring, DegreeClassifier, Graph, ProcessKind, SwitchRule,
                          apply_switch, conflict_count, is_epsilon_balanced, is_switchable,
                          random_coloring, total_conflicts)

MAJ, MIN = ProcessKind.MAJORITY, ProcessKind.MINORITY


def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def star(leaf_colors: str, center: str):
    """Center 0 with one leaf per character."""
    k = len(leaf_colors)
    return Graph.from_edges(k + 1, [(0, i) for i in range(1, k + 1)]), Coloring.from_bitstring(center + leaf_colors)


def test_conflict_count_triangle():
    g, col = triangle(), Coloring.uniform(3)
    assert [conflict_count(g, col, MIN, v) for v in range(3)] == [2, 2, 2]
    assert [conflict_count(g, col, MAJ, v) for v in range(3)] == [0, 0, 0]


def test_conflict_count_two_black_neighbors():
    g, col = star("001", "1")
    assert conflict_count(g, col, MAJ, 0) == 2


def test_conflict_count_bad_node():
    with pytest.raises(UsageError):
        conflict_count(triangle(), Coloring.uniform(3), MAJ, 7)


@pytest.mark.parametrize("conflicts,degree,rule,expected", [
    (2, 3, SwitchRule.basic(), True),
    (2, 3, SwitchRule.proportional(Fraction(1, 3)), True),
    (2, 4, SwitchRule.basic(), False),
    (0, 0, SwitchRule.basic(), False),
    (0, 0, SwitchRule.proportional(Fraction(1, 2)), False),
])
def test_rule_allows(conflicts, degree, rule, expected):
    assert rule.allows(conflicts, degree) is expected


def test_thresholds():
    basic = SwitchRule.basic()
    assert [basic.threshold(d) for d in range(1, 7)] == [1, 2, 2, 3, 3, 4]
    half = SwitchRule.proportional(Fraction(1, 2))
    # (1 + 1/2) d / 2, rounded up
    assert [half.threshold(d) for d in (1, 2, 3, 4, 8)] == [1, 2, 3, 3, 6]


def test_rule_parse():
    assert SwitchRule.parse("basic") == SwitchRule.basic()
    assert SwitchRule.parse("proportional:3/5").lam == Fraction(3, 5)
    assert str(SwitchRule.parse("proportional:3/5")) == "proportional:3/5"
    for bad in ("proportional:0", "proportional:1", "nonsense", "proportional:x"):
        with pytest.raises(UsageError):
            SwitchRule.parse(bad)


def test_apply_switch_all_conflicted():
    g, col = star("000", "1")
    assert apply_switch(g, col, MAJ, SwitchRule.basic(), 0) == -3
    assert conflict_count(g, col, MAJ, 0) == 0


def test_apply_switch_two_of_three():
    g, col = star("001", "1")
    before = total_conflicts(g, col, MAJ)
    assert apply_switch(g, col, MAJ, SwitchRule.basic(), 0) == -1
    assert total_conflicts(g, col, MAJ) == before - 1


def test_apply_switch_proportional():
    g, col = star("0001", "1")
    rule = SwitchRule.proportional(Fraction(1, 2))
    before = total_conflicts(g, col, MAJ)
    delta = apply_switch(g, col, MAJ, rule, 0)
    assert delta == -2 == total_conflicts(g, col, MAJ) - before
    assert delta <= -rule.lam * g.degree(0)


def test_apply_switch_contract():
    g, col = triangle(), Coloring.uniform(3)
    with pytest.raises(ContractViolation):
        apply_switch(g, col, MAJ, SwitchRule.basic(), 0)


@pytest.mark.parametrize("bits,eps,expected", [
    ("0011", 0, True),
    ("1111111000", Fraction(1, 10), False),
    ("11111000", Fraction(1, 4), True),
])
def test_epsilon_balanced(bits, eps, expected):
    col = Coloring.from_bitstring(bits)
    assert is_epsilon_balanced(col, range(len(bits)), eps) is expected


def test_epsilon_balanced_empty():
    with pytest.raises(UsageError):
        is_epsilon_balanced(Coloring.uniform(3), [], 0)


def test_random_coloring_deterministic():
    g = triangle()
    assert random_coloring(g, 5) == random_coloring(g, 5)
    assert random_coloring(200, 1) != random_coloring(200, 2)


def test_random_coloring_fraction():
    # Chernoff: a 10% relative deviation at n=10^4 has probability below 2e-7
    assert chernoff_tail(10_000, 0.1) < 1e-6
    col = random_coloring(10_000, 3)
    assert 0.45 <= col.white_count() / 10_000 <= 0.55


def test_graph_validation():
    with pytest.raises(UsageError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(UsageError):
        Graph.from_edges(3, [(0, 5)])
    with pytest.raises(UsageError):
        Graph.from_edges(3, [(0, 1), (1, 0)])


def test_groups_must_share_neighborhoods():
    edges = [(0, 2), (1, 2), (1, 3)]
    Graph.from_edges(4, edges, {"pair": [2, 3]}, check_groups=False)
    with pytest.raises(UsageError):
        Graph.from_edges(4, edges, {"pair": [0, 1]})
    g = Graph.from_edges(4, [(0, 2), (1, 2), (0, 3), (1, 3)], {"pair": [2, 3]})
    assert list(g.groups["pair"]) == [2, 3]


def test_graph_round_trip(tmp_path):
    g = Graph.from_edges(4, [(0, 1), (2, 3), (1, 2)], {"a": [0]})
    g.save(tmp_path / "g.json")
    h = Graph.load(tmp_path / "g.json")
    assert sorted(h.edges()) == sorted(g.edges()) and h.groups == g.groups
    (tmp_path / "g.txt").write_text("# comment\n0 1\n2 3\n1 2\n")
    assert sorted(Graph.load(tmp_path / "g.txt").edges()) == sorted(g.edges())


def test_bipartition_check():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    assert g.is_bipartition([0, 2])
    assert not g.is_bipartition([0, 1])
    assert not triangle().is_bipartition([0])


def test_degree_classifier():
    c = DegreeClassifier(1.0, 100)
    assert c.is_high(5) and not c.is_high(4)


def test_color_helpers():
    assert Color.BLACK.opposite is Color.WHITE
    assert MAJ.dual is MIN and MIN.dual is MAJ
    col = Coloring.from_bitstring("0101")
    col.flip(0)
    assert col.to_bitstring() == "1101" and col[0] is Color.WHITE


@st.composite
def graph_and_coloring(draw, max_nodes=10):
    n = draw(st.integers(1, max_nodes))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    bits = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    return Graph.from_edges(n, edges), Coloring(bits)


@settings(max_examples=200, deadline=None)
@given(graph_and_coloring(), st.sampled_from([MAJ, MIN]),
       st.sampled_from(["basic", "proportional:1/5", "proportional:1/2", "proportional:4/5"]))
def test_switch_delta_matches_recount(data, kind, rule_text):
    g, col = data
    rule = SwitchRule.parse(rule_text)
    for v in range(g.n):
        if not is_switchable(g, col, kind, rule, v):
            continue
        trial = col.copy()
        before = total_conflicts(g, trial, kind)
        delta = apply_switch(g, trial, kind, rule, v)
        assert delta < 0
        assert total_conflicts(g, trial, kind) - before == delta
        if rule.lam is not None:
            assert -delta >= rule.lam * g.degree(v)
