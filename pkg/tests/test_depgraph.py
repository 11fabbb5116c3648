import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _factories import random_dag
from skillalloc.depgraph import (
    DependencyGraph,
    build_graph,
    detect_cycle,
    generate_dependencies,
    parse_edge_text,
    remove_nodes,
    root_nodes,
    to_dot,
)
from skillalloc.errors import CyclicAfterRetries, EdgeOutOfRange, SelfEdge, UnknownNode
from skillalloc.scoring import MockScorer
from skillalloc.skills import parse_skill

SKILLS = [parse_skill(f"pick_and_place(b{i} block, cell {i})") for i in range(4)]


def test_parse_edges_skips_prose():
    raw = "Edges:\n0 -> 1\n- 1 → 2\nsome prose\nv_2 => 3."
    assert parse_edge_text(raw, 4) == {(0, 1), (1, 2), (2, 3)}
    assert parse_edge_text("", 4) == frozenset()


def test_parse_edges_rejects_bad_nodes():
    with pytest.raises(EdgeOutOfRange):
        parse_edge_text("0 -> 7", 4)
    with pytest.raises(EdgeOutOfRange):
        parse_edge_text("-1 -> 2", 4)
    with pytest.raises(SelfEdge):
        parse_edge_text("2 -> 2", 4)


def test_two_cycle_witness():
    g = build_graph(SKILLS[:2], {(0, 1), (1, 0)})
    assert detect_cycle(g) == [0, 1]


def test_cycle_witness_is_a_cycle():
    g = build_graph(SKILLS, {(0, 1), (1, 2), (2, 3), (3, 1)})
    cyc = detect_cycle(g)
    assert sorted(cyc) == [1, 2, 3]
    assert all((cyc[i], cyc[(i + 1) % len(cyc)]) in g.edges for i in range(len(cyc)))


def test_random_dags_acyclic():
    rng = random.Random(11)
    for _ in range(1000):
        n = rng.randint(1, 12)
        g = DependencyGraph(frozenset(range(n)), frozenset(random_dag(n, rng, p=rng.random())))
        assert detect_cycle(g) is None
        assert root_nodes(g)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))))))
def test_cycle_detection_matches_topological_peeling(case):
    n, edges = case
    edges = {(i, j) for i, j in edges if i != j}
    g = DependencyGraph(frozenset(range(n)), frozenset(edges))
    # peel roots until stuck; leftovers exist iff there is a cycle
    while g.nodes and root_nodes(g):
        g2 = remove_nodes(g, root_nodes(g))
        g = g2
    has_cycle = bool(g.nodes)
    assert (detect_cycle(DependencyGraph(frozenset(range(n)), frozenset(edges))) is not None) == has_cycle


def test_roots_and_removal():
    g = build_graph(SKILLS, {(0, 1), (1, 2)})
    assert root_nodes(g) == [0, 3]
    g = remove_nodes(g, [0])
    assert root_nodes(g) == [1, 3]
    assert g.edges == {(1, 2)}
    with pytest.raises(UnknownNode):
        remove_nodes(g, [0])


def test_graph_rejects_bad_edges():
    with pytest.raises(SelfEdge):
        DependencyGraph(frozenset({0}), frozenset({(0, 0)}))
    with pytest.raises(UnknownNode):
        DependencyGraph(frozenset({0}), frozenset({(0, 1)}))


def test_regenerates_after_cycle():
    mock = MockScorer(completions={"go": ["0 -> 1\n1 -> 0", "0 -> 1"]})
    g = generate_dependencies("go", SKILLS[:2], mock)
    assert g.edges == {(0, 1)} and g.attempts == 2


def test_cycle_every_time_gives_up_after_three():
    calls = []

    class Always(MockScorer):
        def _complete(self, prompt, stop):
            calls.append(prompt)
            return "0 -> 1\n1 -> 0"

    with pytest.raises(CyclicAfterRetries) as err:
        generate_dependencies("go", SKILLS[:2], Always())
    assert err.value.attempts == 3 and len(calls) == 3
    # each retry carries one more note about the cycle
    assert [p.count("Note: ") for p in calls] == [0, 1, 2]


def test_parse_error_reports_attempt():
    mock = MockScorer(completions={"go": ["0 -> 1\n1 -> 0", "0 -> 9"]})
    with pytest.raises(EdgeOutOfRange) as err:
        generate_dependencies("go", SKILLS[:2], mock)
    assert err.value.attempt == 2


def test_dot_export():
    dot = to_dot(build_graph(SKILLS[:2], {(0, 1)}))
    assert '0 [label="0: pick_and_place(b0 block, cell 0)"];' in dot
    assert "  0 -> 1;" in dot and dot.startswith("digraph")
