from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isodisplay.core import norm_eval
from isodisplay.fixtures import rigid_tree7
from isodisplay.graph_norm import (CERTIFIED, VERIFIED, brute_force_signed_maps, display_on_c0, extreme_points,
                                   gamma_facets, gamma_isometry_group, gamma_norm, gamma_space,
                                   is_pm_automorphism_group, pair_norm, pair_norms_distinct, recover_distance,
                                   signed_units)
from isodisplay.graphs import Graph, PermutationGroup, cycle_graph, path_graph, path_metric, star_graph

CATALOG = [path_graph(3), path_graph(5), cycle_graph(4), cycle_graph(5), star_graph(3), rigid_tree7()]
rationals = st.fractions(min_value=-3, max_value=3, max_denominator=9)


def test_norm_examples():
    s = gamma_space(path_graph(3))
    assert gamma_norm(s, [1, 0, 0]) == 1
    assert gamma_norm(s, [1, 0, 1]) == F(6, 5)
    assert gamma_norm(s, [1, -1, 0]) == F(5, 4)


def test_facet_order_and_count():
    metric = path_metric(path_graph(3))
    facets = gamma_facets(metric)
    n = 3
    assert len(facets) == 2 * (n + 2 * n * (n - 1))
    assert facets[0] == (1, 0, 0)
    assert facets[1] == (1, F(1, 3), 0)
    assert facets[2] == (1, F(-1, 4), 0)
    assert set(tuple(-v for v in f) for f in facets) == set(facets)


@pytest.mark.parametrize("g", CATALOG, ids=lambda g: f"n{g.n}e{len(g.edges)}")
def test_pair_closed_forms_and_distance_recovery(g):
    s = gamma_space(g)
    d = path_metric(g)
    for n in range(g.n):
        for m in range(g.n):
            if n != m:
                assert pair_norm(s, n, m, 1) == 1 + F(1, 1 + 2 * int(d[n, m]))
                assert pair_norm(s, n, m, -1) == 1 + F(1, 2 + 2 * int(d[n, m]))
                assert recover_distance(s, n, m) == d[n, m]
    assert pair_norms_distinct(s)


@pytest.mark.parametrize("g", CATALOG[:5], ids=lambda g: f"n{g.n}e{len(g.edges)}")
def test_isometries_equal_pm_automorphisms(g):
    s = gamma_space(g)
    maps = brute_force_signed_maps(s)
    assert is_pm_automorphism_group(s, maps)
    group, rep = gamma_isometry_group(s)
    assert rep.status in (VERIFIED, CERTIFIED)
    assert group.order == len(maps)


def test_isometry_orders():
    assert gamma_isometry_group(gamma_space(path_graph(3)))[0].order == 4
    assert gamma_isometry_group(gamma_space(star_graph(3)))[0].order == 12


def test_single_vertex_ball():
    s = gamma_space(Graph.from_edges(1, []))
    assert set(extreme_points(s)) == signed_units(1)


def test_unit_vectors_are_vertices():
    # every +-e_p is a vertex; in finite dimension the ball has further vertices
    for g in CATALOG[:5]:
        verts = set(extreme_points(gamma_space(g)))
        assert signed_units(g.n) <= verts
        assert len(verts) > 2 * g.n


def test_c0_display():
    _, group, rep = display_on_c0(PermutationGroup.symmetric(2))
    assert rep.gadget_verdict == "EQUAL"
    assert group.order == 4 and rep.isomorphic_to_pm_h
    _, group, rep = display_on_c0(PermutationGroup.trivial(1))
    assert group.order == 2


@settings(max_examples=150, deadline=None)
@given(st.lists(rationals, min_size=5, max_size=5))
def test_sandwich_and_vertex_gauge(a):
    s = gamma_space(cycle_graph(5))
    sup = max(abs(v) for v in a)
    value = norm_eval(s, a)
    assert sup <= value <= F(4, 3) * sup
    assert (value == sup) == (sum(1 for v in a if v != 0) <= 1)


@settings(max_examples=60, deadline=None)
@given(st.lists(rationals, min_size=3, max_size=3))
def test_norm_is_gauge_of_vertex_hull(a):
    # the norm equals the max over facets, and no vertex exceeds 1 in any facet
    s = gamma_space(path_graph(3))
    verts = extreme_points(s)
    for f in s.facet_list[:6]:
        assert max(sum(x * y for x, y in zip(f, v)) for v in verts) == 1
    assert norm_eval(s, a) == max(sum(x * y for x, y in zip(f, a)) for f in s.facet_list)
