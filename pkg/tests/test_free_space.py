import itertools
import math

import numpy as np
import pytest

from isodisplay.core import ValidationError
from isodisplay.fixtures import rigid_metric4
from isodisplay.free_space import (FiniteMetricSpace, Molecule, ae_isometry_group, ae_norm, ae_norm_dual,
                                   ae_norm_primal, both_transforms, concavity_report, equilateral,
                                   exhaustive_transport, free_extreme_atoms, has_dilation, induced_map,
                                   metric_isometry_group, path_metric_space, random_metric, random_molecule,
                                   transform_bounded, transform_concave)


def _path_d3():
    return transform_concave(transform_bounded(path_metric_space(3)))


def test_transform_examples():
    sp = FiniteMetricSpace.from_matrix([[0, 3], [3, 0]])
    b = transform_bounded(sp)
    assert b.d[0, 1] == pytest.approx(0.75)
    c, _ = transform_concave(b)
    assert c.d[0, 1] == pytest.approx(0.866025, abs=1e-6)
    assert c.d[0, 1] == pytest.approx(math.sqrt(0.75), abs=1e-12)


def test_path_transform_margin():
    d3, rep = _path_d3()
    assert d3.d[0, 1] == pytest.approx(0.707107, abs=1e-6)
    assert d3.d[0, 2] == pytest.approx(0.816497, abs=1e-6)
    assert rep.concave
    assert rep.min_margin == pytest.approx(2 * math.sqrt(0.5) - math.sqrt(2 / 3), abs=1e-12)
    assert rep.min_margin == pytest.approx(0.597717, abs=1e-6)


def test_concave_transform_needs_small_diameter():
    with pytest.raises(ValidationError):
        transform_concave(path_metric_space(3))


def test_invalid_metrics_rejected():
    with pytest.raises(ValidationError):
        FiniteMetricSpace.from_matrix([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    with pytest.raises(ValidationError):
        FiniteMetricSpace.from_matrix([[0, 0], [0, 0]])
    with pytest.raises(ValidationError):
        Molecule({"a": 1.0, "b": -0.5})


def test_metric_isometry_examples():
    assert len(metric_isometry_group(equilateral(3))) == 6
    assert len(metric_isometry_group(path_metric_space(3))) == 2
    assert len(metric_isometry_group(rigid_metric4())) == 1


@pytest.mark.parametrize("seed", range(8))
def test_transforms_preserve_isometries(seed):
    rng = np.random.default_rng(seed)
    sp = random_metric(rng, int(rng.integers(3, 8)), kind=["graph", "weighted", "generic"][seed % 3])
    g1 = set(metric_isometry_group(sp))
    d2 = transform_bounded(sp)
    d3, rep = transform_concave(d2)
    assert set(metric_isometry_group(d2)) == g1 == set(metric_isometry_group(d3))
    assert rep.concave and d2.diameter < 1
    assert not has_dilation(sp, 2.0) and not has_dilation(sp, 0.5)
    assert has_dilation(sp, 1.0)


def test_norm_examples():
    sp = path_metric_space(3)
    assert ae_norm(sp, Molecule.atom("y0", "y2")) == pytest.approx(2.0)
    m = Molecule({"y0": 1, "y1": 1, "y2": -2})
    dec = ae_norm_primal(sp, m)
    assert dec.value == pytest.approx(3.0)
    assert dec.cost(sp) == pytest.approx(3.0)
    assert exhaustive_transport(sp, m) == pytest.approx(3.0)
    assert ae_norm(sp, np.zeros(3)) == 0
    dual = ae_norm_dual(sp, np.zeros(3))
    assert dual.value == 0 and set(dual.witness.values()) == {0.0}


def test_decomposition_reproduces_molecule():
    rng = np.random.default_rng(5)
    sp = both_transforms(random_metric(rng, 6))
    for _ in range(30):
        v = random_molecule(rng, sp)
        dec = ae_norm_primal(sp, v)
        back = np.zeros(sp.size)
        for x, y, a in dec.atoms:
            assert a >= 0
            back[x] += a
            back[y] -= a
        assert np.allclose(back, v, atol=1e-9)
        assert dec.cost(sp) == pytest.approx(dec.value, abs=1e-9)


def test_strong_duality_and_oracle():
    rng = np.random.default_rng(11)
    for trial in range(60):
        n = int(rng.integers(2, 9))
        sp = random_metric(rng, n, kind="generic")
        if trial % 2:
            sp = both_transforms(sp)
        v = random_molecule(rng, sp)
        primal = ae_norm(sp, v)
        dual = ae_norm_dual(sp, v)
        assert abs(primal - dual.value) <= 1e-9
        assert dual.lipschitz_ok(sp)
        assert dual.witness[sp.points[0]] == 0
        assert abs(exhaustive_transport(sp, v) - primal) <= 1e-9


def test_norm_axioms():
    rng = np.random.default_rng(2)
    sp = both_transforms(random_metric(rng, 7))
    for _ in range(40):
        a, b = random_molecule(rng, sp), random_molecule(rng, sp)
        c = float(rng.normal())
        assert ae_norm(sp, a + b) <= ae_norm(sp, a) + ae_norm(sp, b) + 1e-9
        assert ae_norm(sp, c * a) == pytest.approx(abs(c) * ae_norm(sp, a), abs=1e-9)


def test_extreme_atoms():
    rep = free_extreme_atoms(both_transforms(equilateral(3)))
    assert rep.concave and len(rep.extreme) == 6 and not rep.not_extreme
    two = free_extreme_atoms(FiniteMetricSpace.from_matrix([[0, 0.5], [0.5, 0]]))
    assert len(two.extreme) == 2
    colinear = free_extreme_atoms(path_metric_space(3))
    assert not colinear.concave
    assert set(colinear.not_extreme) == {("y0", "y2"), ("y2", "y0")}
    assert colinear.gauges[("y0", "y2")] == pytest.approx(1.0)


def test_isometry_group_examples():
    maps, rep = ae_isometry_group(both_transforms(equilateral(3)))
    assert rep.order == 12 and len(maps) == 12
    assert rep.structure_ok and rep.extra_maps == 0 and rep.all_atoms_extreme
    maps, rep = ae_isometry_group(both_transforms(rigid_metric4()))
    assert rep.order == 2
    assert any(np.allclose(m, -np.eye(3)) for m in maps)


def test_isometry_group_needs_three_concave_points():
    with pytest.raises(ValidationError):
        ae_isometry_group(both_transforms(equilateral(2)))
    with pytest.raises(ValidationError):
        ae_isometry_group(path_metric_space(3))


def test_induced_map_group_law():
    sp = both_transforms(equilateral(3))
    perms = metric_isometry_group(sp)
    for (s, g), (t, h) in itertools.product(itertools.product((1, -1), perms), repeat=2):
        gh = tuple(g[h[i]] for i in range(3))
        assert np.allclose(induced_map(sp, s, g) @ induced_map(sp, t, h), induced_map(sp, s * t, gh))


def test_molecule_json_round_trip():
    m = Molecule({"a": 0.5, "b": -0.25, "c": -0.25})
    assert Molecule.from_json(m.to_json()) == m
    sp = equilateral(3)
    assert FiniteMetricSpace.from_json(sp.to_json()).points == sp.points
    assert concavity_report(sp).concave is False  # diameter 1 is not below 1
