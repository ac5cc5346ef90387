import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isodisplay.core import (DimensionError, GroupOrderExceeded, LinearMap, ModeError, ValidationError,
                             dual_norm_eval, ell_infinity, ell_one, euclidean, graph_norm_space, group_closure,
                             group_from_elements, group_from_json, group_to_json, minus_identity, norm_eval,
                             permutation_matrix, pimple_space, polyhedral, scalar_mode, space_from_json,
                             space_to_json, support_functional, to_exact)

PATH3 = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)


def test_euclidean_norm_exact_and_float():
    assert norm_eval(euclidean(2), [3, 4]) == 5
    assert isinstance(norm_eval(euclidean(2), [3, 4]), F)
    assert norm_eval(euclidean(2), [1.0, 1.0]) == pytest.approx(math.sqrt(2))
    assert norm_eval(euclidean(2), [1, 1]) == pytest.approx(math.sqrt(2))


@pytest.mark.parametrize("space", [euclidean(3), ell_infinity(3), ell_one(3), graph_norm_space(PATH3)])
def test_zero_vector_has_norm_zero(space):
    assert norm_eval(space, [0, 0, 0]) == 0


def test_graph_norm_pair():
    assert norm_eval(graph_norm_space(PATH3), [1, 1, 0]) == F(4, 3)


def test_dual_norms():
    assert dual_norm_eval(euclidean(2), [0, 1]) == 1
    assert dual_norm_eval(ell_infinity(2), [1, 1]) == 2
    assert dual_norm_eval(graph_norm_space(PATH3), [1, 0, 0]) == 1


def test_support_functionals():
    assert support_functional(euclidean(2), [0, 2]) == (0, 1)
    assert support_functional(ell_infinity(2), [1, 1]) == (1, 0)
    phi = support_functional(graph_norm_space(PATH3), [1, 1, 0])
    assert phi == (1, F(1, 3), 0)
    assert dual_norm_eval(graph_norm_space(PATH3), phi) == 1


def test_support_functional_of_zero_rejected():
    with pytest.raises(ValidationError):
        support_functional(euclidean(2), [0, 0])


def test_mode_mixing_rejected():
    with pytest.raises(ModeError):
        scalar_mode([F(1), 1.0])
    with pytest.raises(ModeError):
        to_exact(0.5)
    with pytest.raises(ModeError):
        LinearMap.identity(2).compose(LinearMap.from_rows([[1.0, 0.0], [0.0, 1.0]]))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        norm_eval(euclidean(2), [1, 2, 3])


def test_polyhedral_validation():
    with pytest.raises(ValidationError):
        polyhedral([[1, 0], [0, 1]])  # not symmetric
    with pytest.raises(ValidationError):
        polyhedral([[1, 0], [-1, 0]])  # does not span


def test_pimple_space_validation():
    with pytest.raises(ValidationError):
        pimple_space(euclidean(2), [((1.0, 0.0), 0.3)])
    with pytest.raises(ValidationError):
        pimple_space(euclidean(2), [((2.0, 0.0), 0.9)])


def test_group_closure_examples():
    assert group_closure([minus_identity(2)]).order == 2
    assert group_closure([minus_identity(2), permutation_matrix([1, 0])]).order == 4
    c, s = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
    rot = LinearMap.from_rows([[c, -s], [s, c]])
    assert group_closure([rot], cap=10).order == 3


def test_group_closure_cap():
    c, s = math.cos(0.1), math.sin(0.1)
    with pytest.raises(GroupOrderExceeded):
        group_closure([LinearMap.from_rows([[c, -s], [s, c]])], cap=20)


def test_group_from_elements_requires_closure():
    with pytest.raises(ValidationError):
        group_from_elements([LinearMap.identity(2), permutation_matrix([1, 0]), minus_identity(2)])


def test_group_table_and_inverses():
    g = group_closure([permutation_matrix([1, 2, 0]), permutation_matrix([1, 0, 2]), minus_identity(3)])
    assert g.order == 12
    assert g.is_closed()
    for i, a in enumerate(g.elements):
        for j, b in enumerate(g.elements):
            assert g.elements[g.table[i][j]].matrix == a.compose(b).matrix
        assert g.elements[g.inverse_index(i)].compose(a).matrix == LinearMap.identity(3).matrix
    assert g.contains_minus_identity()


def test_signed_permutation_group_preserves_ell_infinity():
    space = ell_infinity(3)
    g = group_closure([permutation_matrix([1, 2, 0]), permutation_matrix([0, 1, 2], [-1, 1, 1])])
    rng = np.random.default_rng(0)
    pts = [tuple(F(int(v), 7) for v in rng.integers(-20, 20, size=3)) for _ in range(100)]
    for h in g.elements:
        for x in pts:
            assert norm_eval(space, h.apply(x)) == norm_eval(space, x)


def test_json_round_trips():
    g = group_closure([minus_identity(2), permutation_matrix([1, 0])])
    back = group_from_json(group_to_json(g))
    assert back.matrix_set() == g.matrix_set()
    for space in (euclidean(2), ell_infinity(2), graph_norm_space(PATH3),
                  pimple_space(euclidean(2), [((1.0, 0.0), 0.9)])):
        assert space_from_json(space_to_json(space)) == space


@settings(max_examples=200, deadline=None)
@given(st.lists(rationals, min_size=3, max_size=3), st.lists(rationals, min_size=3, max_size=3), rationals)
def test_norm_axioms_exact(x, y, c):
    for space in (ell_infinity(3), ell_one(3), graph_norm_space(PATH3)):
        nx, ny = norm_eval(space, x), norm_eval(space, y)
        assert norm_eval(space, [a + b for a, b in zip(x, y)]) <= nx + ny
        assert norm_eval(space, [c * a for a in x]) == abs(c) * nx
        assert nx >= 0


@settings(max_examples=100, deadline=None)
@given(st.lists(rationals, min_size=3, max_size=3).filter(lambda v: any(v)))
def test_support_functional_norms_exactly(x):
    for space in (ell_infinity(3), graph_norm_space(PATH3)):
        phi = support_functional(space, x)
        assert dual_norm_eval(space, phi) == 1
        assert sum(a * b for a, b in zip(phi, x)) == norm_eval(space, x)
