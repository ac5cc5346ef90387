import math

import numpy as np
import pytest

from isodisplay.core import ValidationError, ell_infinity, euclidean, group_closure, permutation_matrix
from isodisplay.diagnostics import (OrthogonalSampler, WordSampler, convex_transitivity_test, distinguished_point_check,
                                    dual_norm, euclidean_delta, lur_modulus, necessary_conditions, norm,
                                    norming_functional, separation_witness, uniform_convexity_modulus)
from isodisplay.fixtures import pm_identity, signed_permutations, signed_swap
from isodisplay.pimple import display_renorm

E2 = euclidean(2)
LINF2 = ell_infinity(2)


def _rotation(t):
    return [[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]]


def test_rotations_are_convex_transitive():
    v = convex_transitivity_test(E2, OrthogonalSampler(2, special=True), [0, 1], [1, 0], samples=10_000)
    assert v.kind == "convex_transitive" and not v.exact
    assert v.sup >= 1 - 1e-3
    # a coarse and a fine rotation generate angles dense enough to come within the radius
    sampler = WordSampler([_rotation(1.0), _rotation(0.03)], max_length=40)
    v = convex_transitivity_test(E2, sampler, [1, 0], [0.6, 0.8], samples=10_000)
    assert v.kind == "convex_transitive" and v.sup >= 1 - 1e-3


def test_ell_infinity_fails_convex_transitivity():
    group = group_closure([permutation_matrix([1, 0]), permutation_matrix([0, 1], [-1, 1])])
    assert group.order == 8
    v = convex_transitivity_test(LINF2, group, [1, 0], [0.5, 0.5])
    assert v.kind == "fails" and v.exact
    assert v.sup == pytest.approx(0.5)
    assert v.witness["sup"] == pytest.approx(0.5)


def test_support_functional_attains_one():
    x = np.array([0.6, -0.8])
    v = convex_transitivity_test(E2, pm_identity(2), x, norming_functional(E2, x))
    assert v.sup == pytest.approx(1.0) and v.kind == "convex_transitive"


def test_non_normalized_inputs_rejected():
    with pytest.raises(ValidationError):
        convex_transitivity_test(E2, pm_identity(2), [2, 0], [1, 0])
    with pytest.raises(ValidationError):
        convex_transitivity_test(E2, pm_identity(2), [1, 0], [3, 0])


def test_group_monotonicity():
    rng = np.random.default_rng(4)
    small, big = pm_identity(2), signed_swap()
    for _ in range(50):
        x = rng.standard_normal(2)
        x /= norm(LINF2, x)
        phi = rng.standard_normal(2)
        phi /= dual_norm(LINF2, phi)
        a = convex_transitivity_test(LINF2, small, x, phi).sup
        b = convex_transitivity_test(LINF2, big, x, phi).sup
        assert b >= a - 1e-12


def test_necessary_conditions():
    rep = necessary_conditions(E2, pm_identity(2))
    assert rep.verdicts == {"minus_identity": "PASS", "closed": "PASS", "witness": "WITNESS-FOUND"}
    assert rep.witness["sup"] < 1
    rep = necessary_conditions(E2, OrthogonalSampler(2))
    assert rep.verdicts["witness"] == "NO-WITNESS"
    assert rep.verdicts["minus_identity"] == "PASS"
    swap = group_closure([permutation_matrix([1, 0])])
    assert necessary_conditions(E2, swap).verdicts["minus_identity"] == "FAIL"
    assert necessary_conditions(E2, WordSampler([_rotation(0.3)])).verdicts["minus_identity"] == "UNVERIFIED"


def test_necessary_conditions_on_displayed_space():
    res = display_renorm(signed_swap(), samples=200)
    rep = necessary_conditions(res.space, res.group)
    assert rep.verdicts["minus_identity"] == "PASS"
    assert rep.verdicts["witness"] == "WITNESS-FOUND"


def test_distinguished_points():
    assert distinguished_point_check(E2, pm_identity(2), [1, 0]) == pytest.approx(2.0)
    g = signed_swap()
    assert distinguished_point_check(E2, g, np.array([1, 1]) / math.sqrt(2)) == pytest.approx(0.0, abs=1e-12)
    x = np.array([2, 1]) / math.sqrt(5)
    assert distinguished_point_check(E2, g, x) == pytest.approx(math.sqrt(2 / 5))


def test_euclidean_lur_closed_form():
    for x in ([1, 0], [0.6, 0.8]):
        mod = lur_modulus(E2, x)
        for eps, delta in mod.table:
            assert delta == pytest.approx(euclidean_delta(eps), abs=1e-6)
            assert delta == pytest.approx(2 - math.sqrt(4 - eps * eps), abs=1e-6)
    mod3 = lur_modulus(euclidean(3), [0, 0, 1], eps_grid=[0.3, 1.2])
    assert mod3.delta(1.2) == pytest.approx(euclidean_delta(1.2), abs=1e-6)


def test_lur_modulus_flat_faces_and_zero():
    mod = lur_modulus(LINF2, [1, 0], eps_grid=[0.0, 0.25, 0.5, 1.0, 1.5])
    for eps, delta in mod.table:
        if eps <= 1:
            assert delta == pytest.approx(0.0, abs=1e-9)
    assert mod.not_lur
    deltas = [d for _, d in mod.table]
    assert all(a <= b + 1e-12 for a, b in zip(deltas, deltas[1:]))
    assert lur_modulus(E2, [1, 0], eps_grid=[0.0]).delta(0.0) == 0.0


def test_lur_requires_unit_vector():
    with pytest.raises(ValidationError):
        lur_modulus(E2, [2, 0])


def test_uniform_convexity():
    grid = [0.5, 1.0, 1.5]
    uni = uniform_convexity_modulus(E2, grid, points=3)
    for eps, delta in uni:
        assert delta == pytest.approx(euclidean_delta(eps), abs=1e-6)
    assert all(d == pytest.approx(0.0, abs=1e-9) for _, d in uniform_convexity_modulus(LINF2, grid, points=3))
    assert all(d == 2.0 for _, d in uniform_convexity_modulus(euclidean(1), grid, points=2))


@pytest.mark.parametrize("group,y", [(pm_identity(2), [1.0, 0.0]), (signed_swap(), [2.0, 1.0]),
                                     (signed_permutations(3), [3.0, 2.0, 1.0])],
                         ids=["pm-id", "signed-swap", "signed-S3"])
def test_separation_witness(group, y):
    w = separation_witness(euclidean(group.dim), group, y)
    assert w.verified and w.beta > 0
    assert w.sup <= 1 - w.beta + 1e-12
    assert 0 < w.radius < w.eps


def test_separation_witness_fixed_orbit():
    w = separation_witness(E2, group_closure([permutation_matrix([0, 1])]), [0.0, 1.0])
    assert math.isinf(w.alpha) and w.verified


def test_separation_witness_dimension_one():
    with pytest.raises(ValidationError):
        separation_witness(euclidean(1), pm_identity(1), [1.0])
