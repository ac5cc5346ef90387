import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from isodisplay.core import UnsupportedSpace, ValidationError, ell_infinity, euclidean, group_closure, \
    permutation_matrix
from isodisplay.fixtures import pi_c2, pi_klein, pm_identity, signed_permutations, signed_swap
from isodisplay.graphs import PermutationGroup
from isodisplay.pimple import (PimpleSpec, build_y_sequence, central_involution_embedding, display_renorm,
                               distinguished_mu, dual_lower_bound, isometry_group_from_extremes,
                               min_single_norms, orbit_separations, pimple_norms, power_display,
                               segment_length, select_lambda, signed_orbit, single_pimple_norm)

E2 = euclidean(2)


def _spec(dirs, gaps):
    dirs = np.asarray(dirs, float)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    return PimpleSpec(euclidean(dirs.shape[1]), dirs, np.asarray(gaps, float), np.zeros(len(dirs), int))


def test_single_spike_examples():
    lam = 0.9
    assert single_pimple_norm(E2, [1, 0], lam, [1, 0]) == pytest.approx(lam)
    assert single_pimple_norm(E2, [1, 0], lam, [0, 3]) == pytest.approx(3.0)
    assert single_pimple_norm(E2, [1, 0], lam, [1 / lam, 0]) == pytest.approx(1.0)
    assert single_pimple_norm(E2, [1, 0], lam, [-2, 0]) == pytest.approx(2 * lam)


def test_single_spike_validation():
    with pytest.raises(ValidationError):
        single_pimple_norm(E2, [2, 0], 0.9, [1, 0])
    with pytest.raises(ValidationError):
        single_pimple_norm(E2, [1, 0], 0.3, [1, 0])
    with pytest.raises(UnsupportedSpace):
        single_pimple_norm(ell_infinity(2), [1, 0], 0.9, [1, 0])


def test_single_spike_matches_brute_minimum():
    rng = np.random.default_rng(1)
    v = np.array([0.6, 0.8])
    for _ in range(50):
        y = rng.standard_normal(2)
        ts = np.linspace(-4, 4, 40001)
        brute = np.min(np.linalg.norm(y[None] - ts[:, None] * v[None], axis=1) + 0.8 * np.abs(ts))
        assert single_pimple_norm(E2, v, 0.8, y) == pytest.approx(brute, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_norm_bounds(y):
    spec = _spec([[1, 0, 0], [0, 1, 1], [1, -1, 2]], [0.05, 0.02, 0.01])
    val = pimple_norms(spec, [y])[0]
    r = float(np.linalg.norm(y))
    assert 0.5 * r - 1e-12 <= val <= r + 1e-12
    assert val == pytest.approx(min_single_norms(spec, [y])[0], abs=1e-9)
    assert dual_lower_bound(spec, y) <= val + 1e-9


def test_gauge_oracle_in_the_plane():
    # the unit ball is the convex hull of the euclidean disc and the spike tips
    spec = _spec([[1, 0], [1, 1], [-1, 3]], [0.03, 0.01, 0.02])
    theta = np.linspace(0, 2 * np.pi, 4000, endpoint=False)
    circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    tips = spec.directions / (1 - spec.gaps)[:, None]
    pts = np.vstack([circle, tips, -tips])
    rng = np.random.default_rng(3)
    for y in rng.standard_normal((25, 2)):
        res = linprog(np.ones(len(pts)), A_eq=pts.T, b_eq=y, bounds=(0, None), method="highs")
        val = pimple_norms(spec, [y])[0]
        assert val <= res.fun + 1e-9
        assert res.fun <= val / math.cos(np.pi / 4000) + 1e-9


def test_select_lambda_constraints():
    g = signed_swap()
    ys = [np.array([0.8, 0.6]), np.array([1.0, 0.0])]
    orbits = [signed_orbit(y, g) for y in ys]
    c = orbit_separations(orbits)
    spec, info, rep = select_lambda(E2, orbits, c, samples=300)
    assert rep.verdict == "PASS"
    for k, gap in enumerate(info["gaps"]):
        assert gap / (1 - gap) <= info["delta"][k] / 3 + 1e-15
        assert info["delta"][k] <= c[k] / 4
    lengths = [segment_length(gap) for gap in info["gaps"]]
    assert lengths[1] < lengths[0] / 2


def test_signed_orbit_sizes():
    g = signed_permutations(3)
    y = np.array([0.8, 0.6, 0.0])
    orbit = signed_orbit(y, g)
    assert len(orbit) == 12
    c = orbit_separations([orbit])[0]
    assert c == pytest.approx(math.sqrt(2) * 0.2, rel=1e-9)
    assert len(signed_orbit(np.array([1.0, 0.0]), signed_swap())) == 4


def test_distinguished_mu_schedule():
    g = signed_permutations(3)
    xs = [(F(3, 5), F(4, 5), F(0)), (F(1), F(0), F(0)), (F(0), F(0), F(1))]
    sched = distinguished_mu(xs, g)
    assert sched.mu[0] == 1
    assert all(m.denominator & (m.denominator - 1) == 0 for m in sched.mu)
    assert sched.mu[1] <= sched.alpha[0] / 32
    assert all(sched.conditions.values())
    ys, zs, rep = build_y_sequence(xs, sched, g)
    assert rep.a_ok and rep.b_ok
    assert all(abs(np.linalg.norm(y) - 1) < 1e-12 for y in ys)
    assert isinstance(zs[-1][0], F)


def test_distinguished_mu_rejects_dependent_sequence():
    with pytest.raises(ValidationError):
        distinguished_mu([(F(1), F(0)), (F(2), F(0))], pm_identity(2))


def test_display_rejects_group_without_minus_identity():
    swap = group_closure([permutation_matrix([1, 0])])
    with pytest.raises(ValidationError):
        display_renorm(swap)


@pytest.mark.parametrize("group", [pm_identity(2), signed_swap()], ids=["pm-id-2", "signed-swap"])
def test_display_pipeline(group):
    res = display_renorm(group, samples=300)
    assert set(res.verdicts.values()) == {"PASS"}
    maps, rep = isometry_group_from_extremes(res, samples=200)
    assert rep.verdict == "EQUAL"
    assert len(maps) == group.order


def test_display_result_round_trip():
    res = display_renorm(pm_identity(2), samples=200)
    from isodisplay.pimple import DisplayResult
    back = DisplayResult.from_json(res.to_json())
    assert back.space == res.space
    assert np.allclose(back.extremes, res.extremes)
    assert back.schedule.mu == res.schedule.mu


def test_central_involution_embeddings():
    group, maps, rep = central_involution_embedding(PermutationGroup.symmetric(2), (1, 0))
    assert group.order == 2 and group.contains_minus_identity()
    assert rep.sign_of_s == [-1]
    assert pi_c2().order == 2
    k = pi_klein()
    assert k.order == 4 and k.contains_minus_identity()
    with pytest.raises(ValidationError):
        central_involution_embedding(PermutationGroup.symmetric(3), (1, 0, 2))


def test_power_display():
    res, info = power_display(pm_identity(1), [[1.0], [1.0]], alpha=1.0, samples=200)
    assert info["copies"] == 2 and info["distinguished"]
    assert res.space.dim == 2
    with pytest.raises(ValidationError):
        power_display(pm_identity(1), [[1.0]], alpha=3.0)
