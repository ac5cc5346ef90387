import itertools
from fractions import Fraction as F

import pytest

from isodisplay.core import DimensionError, ell_infinity, ell_one
from isodisplay.polytope import enumerate_vertices, irredundant_facets, linear_symmetries, vertex_facet_incidence


def test_cube_and_cross_polytope():
    cube = enumerate_vertices(ell_infinity(3).facets)
    assert set(cube) == set(itertools.product((F(-1), F(1)), repeat=3))
    cross = enumerate_vertices(ell_one(3).facets)
    assert len(cross) == 6


def test_incidence_counts():
    verts, incid = vertex_facet_incidence(ell_infinity(2).facets)
    assert all(len(s) == 2 for s in incid)


def test_redundant_facet_dropped():
    facets = list(ell_infinity(2).facets) + [(F(1, 2), F(1, 2)), (F(-1, 2), F(-1, 2))]
    assert set(irredundant_facets(facets)) == set(ell_infinity(2).facets)


def test_linear_symmetries_of_square():
    maps = linear_symmetries(ell_infinity(2).facets)
    assert len(maps) == 8


def test_dimension_cap():
    with pytest.raises(DimensionError):
        enumerate_vertices(ell_infinity(3).facets, cap=2)
