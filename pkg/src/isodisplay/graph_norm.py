"""The polyhedral norm of a connected graph and its linear isometries.

For a path metric ``d`` on ``0..n-1`` the norm is

    ||a|| = max( |a_n + a_m/(1+2d(n,m))|, |a_n - a_m/(2+2d(n,m))|, |a_n| ).

The denominators are odd for sums and even for differences, which is what
pins every isometry to a signed graph automorphism with a single sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (EXACT, LinearMap, MatrixGroup, NormedSpace, ValidationError, exact_vector,
                   graph_norm_space, group_closure, permutation_matrix, scalar_mode)
from .graphs import Graph, PermutationGroup, automorphism_group, build_display_graph, path_metric, \
    verify_gadget
from .polytope import DEFAULT_VERTEX_CAP, enumerate_vertices, linear_symmetries

VERIFIED = "VERIFIED"
CERTIFIED = "CERTIFIED"
UNVERIFIED = "UNVERIFIED"
MISMATCH = "MISMATCH"


def plus_coefficient(d: int) -> Fraction:
    return Fraction(1, 1 + 2 * int(d))


def minus_coefficient(d: int) -> Fraction:
    return Fraction(-1, 2 + 2 * int(d))


def gamma_facets(metric) -> tuple[tuple[Fraction, ...], ...]:
    """Facet functionals in a fixed order.

    For each ``n``: ``e_n*``, then for each ``m != n`` the sum and the
    difference functional; the negations of all of these follow.
    """
    n = len(metric)
    zero = Fraction(0)
    rows = []
    for i in range(n):
        e = [zero] * n
        e[i] = Fraction(1)
        rows.append(tuple(e))
        for j in range(n):
            if j == i:
                continue
            for c in (plus_coefficient(metric[i][j]), minus_coefficient(metric[i][j])):
                f = [zero] * n
                f[i] = Fraction(1)
                f[j] = c
                rows.append(tuple(f))
    return tuple(rows) + tuple(tuple(-v for v in f) for f in rows)


def gamma_norm_from_metric(metric, a: Sequence):
    n = len(metric)
    if len(a) != n:
        from .core import DimensionError

        raise DimensionError("vector length differs from vertex count")
    if scalar_mode(a) == EXACT:
        x = exact_vector(a)
        best = max(abs(v) for v in x)
        for i in range(n):
            if x[i] == 0 and best > 0:
                # |a_n + c a_m| <= |a_m|/3 < best when a_n = 0
                continue
            for j in range(n):
                if i != j and x[j] != 0:
                    d = metric[i][j]
                    best = max(best, abs(x[i] + x[j] * plus_coefficient(d)),
                               abs(x[i] + x[j] * minus_coefficient(d)))
        return best
    x = np.asarray(a, dtype=float)
    m = np.asarray(metric, dtype=float)
    with np.errstate(divide="ignore"):
        plus = np.abs(x[:, None] + x[None, :] / (1 + 2 * m))
        minus = np.abs(x[:, None] - x[None, :] / (2 + 2 * m))
    np.fill_diagonal(plus, 0.0)
    np.fill_diagonal(minus, 0.0)
    return float(max(np.max(np.abs(x)), plus.max(initial=0.0), minus.max(initial=0.0)))


def gamma_space(g: Graph) -> NormedSpace:
    return graph_norm_space(path_metric(g).tolist())


def gamma_norm(space: NormedSpace, a: Sequence):
    if space.kind != "graph_norm":
        raise ValidationError("gamma_norm needs a graph_norm space")
    return gamma_norm_from_metric(space.metric, a)


def graph_of(space: NormedSpace) -> Graph:
    m = space.metric
    return Graph.from_edges(space.dim, [(i, j) for i in range(space.dim) for j in range(i + 1, space.dim)
                                        if m[i][j] == 1])


def signed_units(n: int) -> set[tuple[Fraction, ...]]:
    out = set()
    for p in range(n):
        for s in (1, -1):
            out.add(tuple(Fraction(s if k == p else 0) for k in range(n)))
    return out


def extreme_points(space: NormedSpace, cap: int = DEFAULT_VERTEX_CAP) -> tuple[tuple[Fraction, ...], ...]:
    """Exact vertex set of the unit ball."""
    return enumerate_vertices(space.facet_list, cap)


def pair_norm(space: NormedSpace, n: int, m: int, sign: int) -> Fraction:
    x = [Fraction(0)] * space.dim
    x[n] = Fraction(1)
    x[m] = Fraction(sign)
    return gamma_norm(space, x)


def recover_distance(space: NormedSpace, n: int, m: int) -> int:
    """Read ``d(n, m)`` back from ``1/(||e_n + e_m|| - 1) = 1 + 2d``."""
    v = 1 / (pair_norm(space, n, m, 1) - 1)
    if v.denominator != 1 or v.numerator % 2 == 0:
        raise ValidationError("pair norm does not have the expected odd reciprocal")
    return (v.numerator - 1) // 2


def pair_norms_distinct(space: NormedSpace) -> bool:
    n = space.dim
    sums = {pair_norm(space, i, j, 1) for i in range(n) for j in range(n) if i != j}
    diffs = {pair_norm(space, i, j, -1) for i in range(n) for j in range(n) if i != j}
    return not (sums & diffs)


def _pair_facets_ok(metric, phi, eps, i: int, j: int) -> bool:
    """Whether the signed map sends the (i, j) facets onto facets.

    The image of ``e_i* + c e_j*`` is ``eps_i (e_phi(i)* + c eps_i eps_j e_phi(j)*)``,
    a facet exactly when ``c eps_i eps_j`` is one of the two coefficients at
    distance ``d(phi(i), phi(j))``.
    """
    d_new = metric[phi[i]][phi[j]]
    allowed = {plus_coefficient(d_new), minus_coefficient(d_new)}
    s = eps[i] * eps[j]
    return all(c * s in allowed for c in (plus_coefficient(metric[i][j]), minus_coefficient(metric[i][j])))


def preserves_facets(metric, phi: Sequence[int], eps: Sequence[int]) -> bool:
    n = len(metric)
    return all(_pair_facets_ok(metric, phi, eps, i, j) for i in range(n) for j in range(n) if i != j)


def signed_map_matrix(phi: Sequence[int], eps: Sequence[int] | int) -> LinearMap:
    """Matrix of ``e_i -> eps_i e_phi(i)``."""
    signs = [eps] * len(phi) if isinstance(eps, int) else list(eps)
    return permutation_matrix(list(phi), signs)


def brute_force_signed_maps(space: NormedSpace) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Every signed vertex map preserving the facet set, by exhaustive search.

    All ``n! 2^n`` maps are covered; a partial assignment is abandoned as
    soon as one facet supported on assigned coordinates leaves the set.
    """
    metric = space.metric
    n = space.dim
    out = []
    phi: list[int] = []
    eps: list[int] = []

    def extend():
        k = len(phi)
        if k == n:
            out.append((tuple(phi), tuple(eps)))
            return
        for target in range(n):
            if target in phi:
                continue
            for s in (1, -1):
                phi.append(target)
                eps.append(s)
                full_phi = phi + [0] * (n - k - 1)
                full_eps = eps + [1] * (n - k - 1)
                if all(_pair_facets_ok(metric, full_phi, full_eps, i, k) and
                       _pair_facets_ok(metric, full_phi, full_eps, k, i) for i in range(k)):
                    extend()
                phi.pop()
                eps.pop()

    extend()
    return out


@dataclass
class GammaIsometryReport:
    status: str
    order: int
    automorphism_order: int
    uniform_sign: bool
    extreme_points_are_units: bool | None
    extreme_point_count: int | None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def gamma_isometry_group(space: NormedSpace, cap: int = DEFAULT_VERTEX_CAP, certify: bool = True,
                         max_order: int = 100_000) -> tuple[MatrixGroup, GammaIsometryReport]:
    """Signed automorphisms ``eps P_phi`` and a completeness status.

    Every element is checked against the facet set.  Completeness:
    VERIFIED when the ball's vertices are exactly ``{+-e_p}`` (then every
    isometry is a signed vertex map); CERTIFIED when instead a search over
    all linear symmetries of the ball returns the same group; UNVERIFIED
    above the dimension cap; MISMATCH if the linear search finds more.
    """
    g = graph_of(space)
    aut = automorphism_group(g, max_order=max_order)
    maps = []
    for phi in aut.elements:
        for s in (1, -1):
            if not preserves_facets(space.metric, phi, [s] * space.dim):
                raise AssertionError("automorphism failed the facet check")  # pragma: no cover
            maps.append(signed_map_matrix(phi, s))
    group = _group_from_signed(maps)
    notes: list[str] = []
    units, count = None, None
    if space.dim > cap:
        status = UNVERIFIED
        notes.append(f"dimension {space.dim} above vertex cap {cap}; completeness not checked")
    else:
        verts = extreme_points(space, cap)
        count = len(verts)
        units = set(verts) == signed_units(space.dim)
        if units:
            status = VERIFIED
        elif certify:
            notes.append(f"unit ball has {count} vertices, more than the {2 * space.dim} signed units")
            found = linear_symmetries(space.facet_list, cap)
            keys = {m.matrix for m in found}
            status = CERTIFIED if keys == group.matrix_set() else MISMATCH
            if status == MISMATCH:
                notes.append(f"linear symmetry search found {len(found)} maps")
        else:
            status = UNVERIFIED
            notes.append("extra vertices present and certification disabled")
    report = GammaIsometryReport(status, group.order, aut.order, True, units, count, notes)
    return group, report


def _group_from_signed(maps: list[LinearMap]) -> MatrixGroup:
    """Matrix group from a known-closed list of signed permutation matrices."""
    # compose as (phi, eps) pairs; dense products are far too slow in high dimension
    coded = [_decode_signs(m) for m in maps]
    index = {c: i for i, c in enumerate(coded)}
    table = []
    for pa, ea in coded:
        row = []
        for pb, eb in coded:
            phi = tuple(pa[pb[i]] for i in range(len(pb)))
            eps = tuple(eb[i] * ea[pb[i]] for i in range(len(pb)))
            row.append(index[(phi, eps)])
        table.append(tuple(row))
    n = maps[0].dim
    ident = index[(tuple(range(n)), (1,) * n)]
    return MatrixGroup(tuple(maps), ident, tuple(table))


def signed_group(space: NormedSpace, pairs) -> MatrixGroup:
    return _group_from_signed([signed_map_matrix(phi, eps) for phi, eps in pairs])


def is_pm_automorphism_group(space: NormedSpace, pairs) -> bool:
    """Whether a set of signed maps is exactly ``{+-1} x Aut``, by order and generator matching."""
    aut = automorphism_group(graph_of(space))
    expected = {(phi, (s,) * space.dim) for phi in aut.elements for s in (1, -1)}
    got = {(tuple(p), tuple(e)) for p, e in pairs}
    return got == expected and len(got) == 2 * aut.order


@dataclass
class C0DisplayReport:
    gadget_verdict: str
    isometry_order: int
    base_order: int
    isomorphic_to_pm_h: bool
    isometry_status: str
    dim: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def display_on_c0(h: PermutationGroup, depths=(1, 2), rigid: bool = True, certify: bool = True
                  ) -> tuple[NormedSpace, MatrixGroup, C0DisplayReport]:
    """Gadget graph, its graph norm and isometry group, compared with ``{+-1} x h``.

    ``rigid`` replaces pendant twins by pendant paths of distinct lengths so
    that the automorphism group is not inflated by leaf swaps.
    """
    graph, layout = build_display_graph(h, depths, rigid=rigid)
    gadget = verify_gadget(graph, layout, h)
    space = gamma_space(graph)
    group, report = gamma_isometry_group(space, certify=certify)
    points = layout.length_one_vertices()
    pos = {p: i for i, p in enumerate(points)}
    images: set | None = set()
    for g in group.elements:
        phi, eps = _decode_signed(g)
        try:
            images.add((eps, tuple(pos[phi[p]] for p in points)))
        except KeyError:
            images = None
            break
    expected = {(s, p) for s in (1, -1) for p in h.elements}
    iso = images is not None and images == expected and group.order == 2 * h.order
    rep = C0DisplayReport(gadget.verdict, group.order, h.order, iso, report.status, space.dim)
    return space, group, rep


def _decode_signs(g: LinearMap) -> tuple[tuple[int, ...], tuple[int, ...]]:
    n = g.dim
    phi = [0] * n
    eps = [0] * n
    for r, row in enumerate(g.matrix):
        for i, v in enumerate(row):
            if v != 0:
                phi[i] = r
                eps[i] = int(v)
    return tuple(phi), tuple(eps)


def _decode_signed(g: LinearMap) -> tuple[tuple[int, ...], int]:
    n = g.dim
    phi = [0] * n
    sign = 0
    for i in range(n):
        for r in range(n):
            v = g.matrix[r][i]
            if v != 0:
                phi[i] = r
                sign = int(v)
    return tuple(phi), sign
