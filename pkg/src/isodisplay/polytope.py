"""Exact vertex enumeration and linear symmetries of centrally symmetric polytopes.

A polytope is given by functionals ``f`` describing ``{x : <f, x> <= 1}``.
Vertex enumeration uses the double description method in homogeneous
integer coordinates; zero sets are stored as numpy ``uint64`` bitsets so that
the combinatorial adjacency test is vectorised.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache, reduce
from math import gcd, lcm
from typing import Sequence

import numpy as np

from .core import DimensionError, LinearMap, ValidationError, exact_inverse, to_exact

DEFAULT_VERTEX_CAP = 8


def _normalize(v: Sequence[int]) -> tuple[int, ...]:
    g = reduce(gcd, (abs(x) for x in v), 0)
    return tuple(x // g for x in v) if g > 1 else tuple(v)


def _integer_rows(facets) -> list[tuple[int, ...]]:
    """Homogenise ``<f, x> <= 1`` as ``(1, -f) . (t, x) >= 0`` with integer entries."""
    rows = []
    for f in facets:
        den = reduce(lcm, (to_exact(v).denominator for v in f), 1)
        rows.append(_normalize((den,) + tuple(-int(to_exact(v) * den) for v in f)))
    return rows


def _dot(a, b) -> int:
    return sum(x * y for x, y in zip(a, b))


def _independent_rows(rows, d) -> list[int]:
    basis: list[tuple[int, list[Fraction]]] = []
    chosen = []
    for i, r in enumerate(rows):
        v = [Fraction(x) for x in r]
        for p, b in basis:
            if v[p] != 0:
                c = v[p] / b[p]
                v = [x - c * y for x, y in zip(v, b)]
        piv = next((k for k, x in enumerate(v) if x != 0), None)
        if piv is not None:
            basis.append((piv, v))
            chosen.append(i)
            if len(chosen) == d:
                return chosen
    raise ValidationError("facets do not span; the ball is unbounded")


def _bits(indices, words: int) -> np.ndarray:
    z = np.zeros(words, np.uint64)
    for i in indices:
        z[i >> 6] |= np.uint64(1) << np.uint64(i & 63)
    return z


def double_description(rows: list[tuple[int, ...]]) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Extreme rays of the pointed cone ``{y : row . y >= 0 for all rows}``.

    Returns the rays as primitive integer vectors and their zero sets as a
    ``(rays, words)`` bitset array indexed by row position.
    """
    m, d = len(rows), len(rows[0])
    words = (m + 63) // 64
    start = _independent_rows(rows, d)
    inv = exact_inverse([rows[i] for i in start])
    rays = []
    for j in range(d):
        col = [inv[i][j] for i in range(d)]
        den = reduce(lcm, (x.denominator for x in col), 1)
        rays.append(_normalize(tuple(int(x * den) for x in col)))
    zeros = np.array([_bits([i for i in start if _dot(rows[i], r) == 0], words) for r in rays])
    in_start = set(start)
    for i in (i for i in range(m) if i not in in_start):
        row = rows[i]
        vals = [_dot(row, r) for r in rays]
        sign = np.array([(v > 0) - (v < 0) for v in vals])
        pos, neg, zer = np.flatnonzero(sign > 0), np.flatnonzero(sign < 0), np.flatnonzero(sign == 0)
        new_rays, new_zeros = [], []
        bit = _bits([i], words)
        if len(pos) and len(neg):
            zp = zeros[pos]
            for q in neg:
                common = zp & zeros[q]
                counts = np.bitwise_count(common).sum(axis=1)
                for k in np.flatnonzero(counts >= d - 2):
                    z = common[k]
                    # adjacent iff no third ray's zero set contains the common one
                    if np.all((zeros & z) == z, axis=1).sum() == 2:
                        p = pos[k]
                        new_rays.append(_normalize(tuple(vals[p] * y - vals[q] * x
                                                         for x, y in zip(rays[p], rays[q]))))
                        new_zeros.append(z | bit)
        keep = np.concatenate([pos, zer]).astype(int)
        kept_zeros = zeros[keep].copy()
        kept_zeros[len(pos):] |= bit
        rays = [rays[k] for k in keep] + new_rays
        zeros = np.vstack([kept_zeros] + ([np.array(new_zeros)] if new_zeros else []))
    return rays, zeros


@lru_cache(maxsize=64)
def _vertices_cached(facets: tuple) -> tuple[tuple[tuple[Fraction, ...], ...], tuple[frozenset, ...]]:
    rows = _integer_rows(facets)
    # lexicographic row order keeps the intermediate cones small for these norms
    order = sorted(range(len(rows)), key=lambda i: rows[i])
    rays, zeros = double_description([rows[i] for i in order])
    verts, incid = [], []
    for r, z in zip(rays, zeros):
        if r[0] <= 0:
            raise ValidationError("facets describe an unbounded set")
        verts.append(tuple(Fraction(x, r[0]) for x in r[1:]))
        hit = set()
        for w, word in enumerate(z):
            word = int(word)
            while word:
                low = word & -word
                hit.add(order[w * 64 + low.bit_length() - 1])
                word ^= low
        incid.append(frozenset(hit))
    perm = sorted(range(len(verts)), key=lambda k: verts[k])
    return tuple(verts[k] for k in perm), tuple(incid[k] for k in perm)


def enumerate_vertices(facets, cap: int = DEFAULT_VERTEX_CAP) -> tuple[tuple[Fraction, ...], ...]:
    """Exact vertices of ``{x : <f, x> <= 1 for f in facets}``, sorted."""
    facets = tuple(tuple(to_exact(v) for v in f) for f in facets)
    dim = len(facets[0])
    if dim > cap:
        raise DimensionError(f"vertex enumeration capped at dimension {cap}, got {dim}")
    return _vertices_cached(facets)[0]


def vertex_facet_incidence(facets, cap: int = DEFAULT_VERTEX_CAP):
    """Vertices together with, for each vertex, the set of facet indices tight at it."""
    facets = tuple(tuple(to_exact(v) for v in f) for f in facets)
    if len(facets[0]) > cap:
        raise DimensionError(f"vertex enumeration capped at dimension {cap}")
    return _vertices_cached(facets)


def _rank(vectors) -> int:
    from .core import _rank as rank

    return rank([list(v) for v in vectors]) if vectors else 0


_PRIME = (1 << 61) - 1


def _rank_mod_p(vectors, target: int) -> int:
    """Rank modulo a large prime, stopping once ``target`` is reached.

    The modular rank never exceeds the rational rank, so reaching
    ``target`` certifies it.
    """
    basis: list[tuple[int, list[int]]] = []
    for v in vectors:
        row = [x.numerator * pow(x.denominator, -1, _PRIME) % _PRIME for x in v]
        for piv, b in basis:
            if row[piv]:
                c = row[piv]
                row = [(x - c * y) % _PRIME for x, y in zip(row, b)]
        piv = next((k for k, x in enumerate(row) if x), None)
        if piv is not None:
            inv = pow(row[piv], -1, _PRIME)
            basis.append((piv, [x * inv % _PRIME for x in row]))
            if len(basis) >= target:
                break
    return len(basis)


def irredundant_facets(facets, cap: int = DEFAULT_VERTEX_CAP) -> tuple[tuple[Fraction, ...], ...]:
    """Facets whose tight vertices span a hyperplane; the rest are implied."""
    facets = tuple(tuple(to_exact(v) for v in f) for f in facets)
    verts, incid = vertex_facet_incidence(facets, cap)
    dim = len(facets[0])
    tight: dict[int, list] = {i: [] for i in range(len(facets))}
    for v, hits in zip(verts, incid):
        for i in hits:
            tight[i].append(v)
    out = []
    for i, f in enumerate(facets):
        pts = tight[i]
        if len(pts) < dim:
            continue
        if _rank_mod_p(pts, dim) == dim or _rank(pts) == dim:
            out.append(f)
    return tuple(out)


def linear_symmetries(facets, cap: int = DEFAULT_VERTEX_CAP, max_order: int = 100_000) -> list[LinearMap]:
    """All linear maps preserving the polytope, found among facet permutations.

    Uses the invariant form ``Q = sum f f^T`` over the irredundant facets: a
    facet permutation comes from a linear symmetry exactly when it preserves
    the Gram matrix ``f_i Q^{-1} f_j``.  Candidates are built by backtracking
    on the images of a facet basis, then checked against the whole facet set.
    """
    fs = list(irredundant_facets(facets, cap))
    n = len(fs[0])
    q = [[sum((f[i] * f[j] for f in fs), Fraction(0)) for j in range(n)] for i in range(n)]
    qinv = exact_inverse(q)
    proj = [tuple(sum((qinv[i][k] * f[k] for k in range(n)), Fraction(0)) for i in range(n)) for f in fs]
    gram = [[sum((a * b for a, b in zip(fs[i], proj[j])), Fraction(0)) for j in range(len(fs))]
            for i in range(len(fs))]
    profile = [tuple(sorted(row)) for row in gram]
    basis = _basis_indices(fs)
    fset = {f: i for i, f in enumerate(fs)}
    fb_inv = exact_inverse([fs[b] for b in basis])
    out: list[LinearMap] = []

    def extend(images: list[int]):
        k = len(images)
        if k == n:
            # f_b T^{-1} = image rows  =>  T^{-1} = F_B^{-1} F'_B
            img_rows = [fs[j] for j in images]
            tinv = [[sum((fb_inv[r][c] * img_rows[c][s] for c in range(n)), Fraction(0)) for s in range(n)]
                    for r in range(n)]
            for f in fs:
                g = tuple(sum((f[r] * tinv[r][s] for r in range(n)), Fraction(0)) for s in range(n))
                if g not in fset:
                    return
            out.append(LinearMap.from_rows(exact_inverse(tinv)))
            if len(out) > max_order:
                raise ValidationError("symmetry group larger than max_order")
            return
        b = basis[k]
        for j in range(len(fs)):
            if profile[j] != profile[b] or j in images:
                continue
            if all(gram[j][images[i]] == gram[b][basis[i]] for i in range(k)):
                extend(images + [j])

    extend([])
    return out


def _basis_indices(vectors) -> list[int]:
    chosen: list[int] = []
    for i, v in enumerate(vectors):
        if _rank([vectors[c] for c in chosen] + [v]) > len(chosen):
            chosen.append(i)
            if len(chosen) == len(vectors[0]):
                break
    return chosen
