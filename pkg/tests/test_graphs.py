import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isodisplay.core import ValidationError
from isodisplay.fixtures import rigid_tree7
from isodisplay.graphs import (Graph, PermutationGroup, automorphism_group, build_display_graph, complete_graph,
                               compose_perm, cycle_graph, orbit_markers, path_graph, path_metric, star_graph,
                               verify_gadget)


def _is_automorphism(g: Graph, p) -> bool:
    edges = {frozenset(e) for e in g.edges}
    return {frozenset((p[a], p[b])) for a, b in g.edges} == edges


def _brute_force_order(g: Graph) -> int:
    return sum(_is_automorphism(g, p) for p in itertools.permutations(range(g.n)))


def test_path_metrics():
    assert path_metric(path_graph(3))[0, 2] == 2
    tri = path_metric(complete_graph(3))
    assert all(tri[i, j] == 1 for i in range(3) for j in range(3) if i != j)
    c5 = path_metric(cycle_graph(5))
    assert c5[0, 2] == 2 and c5[0, 3] == 2


def test_disconnected_graph_rejected():
    with pytest.raises(ValidationError):
        path_metric(Graph.from_edges(3, [(0, 1)]))


@pytest.mark.parametrize("graph,order", [(path_graph(3), 2), (cycle_graph(4), 8), (star_graph(3), 6),
                                         (complete_graph(5), 120), (rigid_tree7(), 1), (cycle_graph(5), 10)])
def test_automorphism_orders(graph, order):
    aut = automorphism_group(graph)
    assert aut.order == order == _brute_force_order(graph)
    assert aut.is_closed()
    assert all(_is_automorphism(graph, p) for p in aut.elements)


@st.composite
def connected_graphs(draw):
    n = draw(st.integers(3, 7))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=n))
    edges = {tuple(sorted((i + 1, p))) for i, p in enumerate(parents)}
    edges |= {tuple(sorted(e)) for e in extra if e[0] != e[1]}
    return Graph.from_edges(n, sorted(edges))


@settings(max_examples=40, deadline=None)
@given(connected_graphs())
def test_automorphisms_match_brute_force(g):
    aut = automorphism_group(g)
    assert set(aut.elements) == {p for p in itertools.permutations(range(g.n)) if _is_automorphism(g, p)}


def test_orbit_marker_law():
    h = PermutationGroup.symmetric(3)
    markers = orbit_markers(h, (1, 2))
    assert markers[()] == 7
    for s, o in markers.items():
        for g in h.elements:
            assert markers[tuple(g[x] for x in s)] == o
    assert len({markers[s] for s in markers if len(s) == 2}) == 2  # diagonal and off-diagonal pairs


def test_gadget_degrees():
    h = PermutationGroup.symmetric(2)
    g, layout = build_display_graph(h, (1, 2))
    deg = g.degrees()
    tuple_vertices = set(layout.tuples.values())
    assert {v for v in range(g.n) if deg[v] >= 7} == tuple_vertices
    for v, role in enumerate(layout.roles):
        if role == "a":
            assert deg[v] == 3
        elif role == "c":
            assert deg[v] == 4
        elif role in ("leaf", "b", "d", "e"):
            assert deg[v] == 1
    for s, v in layout.tuples.items():
        assert sum(1 for w in g.adjacency()[v] if deg[w] == 1) == layout.marker[s]


@pytest.mark.parametrize("h,depths", [(PermutationGroup.trivial(1), (1,)), (PermutationGroup.trivial(1), (1, 2)),
                                      (PermutationGroup.trivial(3), (1,)), (PermutationGroup.trivial(3), (1, 2)),
                                      (PermutationGroup.symmetric(2), (1, 2)),
                                      (PermutationGroup.symmetric(3), (1, 2))])
def test_gadget_equal(h, depths):
    g, layout = build_display_graph(h, depths)
    rep = verify_gadget(g, layout, h)
    assert rep.verdict == "EQUAL"
    assert rep.markers_respected


def test_cyclic_gadget_verdict_is_reported():
    h = PermutationGroup.cyclic(4)
    g, layout = build_display_graph(h, (1, 2))
    rep = verify_gadget(g, layout, h)
    assert rep.verdict in ("EQUAL", "K-CLOSURE-GAP")
    assert rep.restricted_order >= h.order


def test_rigid_gadget_has_no_twin_symmetry():
    h = PermutationGroup.symmetric(2)
    g, layout = build_display_graph(h, (1, 2), rigid=True)
    assert automorphism_group(g).order == h.order


def test_bad_depths_rejected():
    with pytest.raises(ValidationError):
        build_display_graph(PermutationGroup.trivial(2), (1, 4))


def test_permutation_group_generation():
    g = PermutationGroup.generate(4, [(1, 0, 3, 2), (2, 3, 0, 1)])
    assert g.order == 4 and g.is_closed()
    assert compose_perm((1, 0, 3, 2), (2, 3, 0, 1)) in g
    with pytest.raises(ValidationError):
        PermutationGroup.generate(3, [(0, 0, 1)])


def test_graph_json_round_trip():
    g = rigid_tree7()
    assert Graph.from_json(g.to_json()) == g
