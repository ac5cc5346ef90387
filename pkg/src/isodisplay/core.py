"""Scalars, normed spaces, linear maps and finite matrix groups.

Two arithmetic modes coexist: exact rationals (``fractions.Fraction``) for
polyhedral and graph norms, and binary floats for everything that involves
square roots.  A single computation never mixes the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOLERANCE = 1e-9

EXACT = "exact"
FLOAT = "float"


class IsodisplayError(Exception):
    """Base class for all library errors."""


class DimensionError(IsodisplayError, ValueError):
    pass


class ModeError(IsodisplayError, TypeError):
    """Raised when exact and floating scalars meet in one computation."""


class ValidationError(IsodisplayError, ValueError):
    """An input object violates its documented invariants."""


class GroupOrderExceeded(IsodisplayError, RuntimeError):
    pass


class UnsupportedSpace(IsodisplayError, ValueError):
    pass


# ---------------------------------------------------------------------------
# scalars

def to_exact(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are refused: an exact computation must not silently absorb
    rounding error.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ModeError("booleans are not scalars")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ModeError(f"cannot use {type(value).__name__} {value!r} as an exact scalar")


def scalar_mode(values: Iterable) -> str:
    """Return the common mode of ``values``; raise ModeError when mixed."""
    seen = set()
    for v in values:
        if isinstance(v, (Fraction, int)) and not isinstance(v, bool):
            seen.add(EXACT)
        elif isinstance(v, (float, np.floating)):
            seen.add(FLOAT)
        else:
            raise ModeError(f"unsupported scalar {v!r}")
    if len(seen) > 1:
        raise ModeError("exact and float scalars mixed in one computation")
    return seen.pop() if seen else EXACT


def exact_vector(x: Iterable) -> tuple[Fraction, ...]:
    return tuple(to_exact(v) for v in x)


def float_vector(x: Iterable) -> np.ndarray:
    return np.asarray([float(v) for v in x], dtype=float)


def format_scalar(v) -> str | float:
    """JSON form of a scalar: ``"p/q"`` for exact values, plain float otherwise."""
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    return float(v)


def parse_scalar(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    return float(v)


def dot(a: Sequence, b: Sequence):
    return sum((x * y for x, y in zip(a, b)), Fraction(0) if scalar_mode(a) == EXACT else 0.0)


def _exact_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


# ---------------------------------------------------------------------------
# normed spaces

KINDS = ("euclidean", "polyhedral", "graph_norm", "pimple")


@dataclass(frozen=True)
class NormedSpace:
    """A norm on R^dim.

    ``kind`` selects the evaluator.  ``facets`` holds the functionals of a
    polyhedral norm (the norm is ``max_f <f, x>``), ``metric`` the path metric
    of a graph norm, and ``base``/``spikes`` the data of a pimple overlay where
    each spike is ``(unit direction, lambda, 1 - lambda)``; the gap is kept
    separately because it can be far below the resolution of ``lambda``.
    """

    dim: int
    kind: str
    facets: tuple[tuple[Fraction, ...], ...] | None = None
    metric: tuple[tuple[int, ...], ...] | None = None
    base: "NormedSpace | None" = None
    spikes: tuple[tuple[tuple[float, ...], float, float], ...] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dimension must be positive")
        if self.kind not in KINDS:
            raise ValidationError(f"unknown space kind {self.kind!r}")
        if self.kind == "polyhedral":
            _check_facets(self.facets, self.dim)
        elif self.kind == "graph_norm":
            if self.metric is None or len(self.metric) != self.dim:
                raise ValidationError("graph_norm needs a dim x dim metric")
        elif self.kind == "pimple":
            if self.base is None or self.base.dim != self.dim:
                raise ValidationError("pimple space needs a base of the same dimension")
            if self.base.kind != "euclidean":
                raise UnsupportedSpace("pimple spaces need a euclidean base")
            for direction, lam, gap in self.spikes or ():
                if len(direction) != self.dim:
                    raise DimensionError("spike direction has wrong length")
                if not (0.5 <= lam <= 1 and 0 < gap < 0.5):
                    raise ValidationError(f"spike lambda {lam} outside (1/2, 1)")
                if abs(float(norm_eval(self.base, direction)) - 1.0) > 1e-9:
                    raise ValidationError("spike direction is not a unit vector of the base norm")

    @property
    def exact(self) -> bool:
        return self.kind in ("polyhedral", "graph_norm")

    @cached_property
    def facet_list(self) -> tuple[tuple[Fraction, ...], ...]:
        """Facet functionals; for a graph norm they are derived from the metric."""
        if self.kind == "polyhedral":
            return self.facets
        if self.kind == "graph_norm":
            from .graph_norm import gamma_facets

            return gamma_facets(self.metric)
        raise UnsupportedSpace(f"{self.kind} space has no facet list")


def _check_facets(facets, dim):
    if not facets:
        raise ValidationError("polyhedral space needs facets")
    fs = [exact_vector(f) for f in facets]
    if any(len(f) != dim for f in fs):
        raise DimensionError("facet length differs from dim")
    present = set(fs)
    for f in fs:
        if tuple(-v for v in f) not in present:
            raise ValidationError("facet list is not symmetric under negation")
    if _rank(fs) < dim:
        raise ValidationError("facets do not positively span the dual space")


def euclidean(dim: int) -> NormedSpace:
    return NormedSpace(dim, "euclidean")


def polyhedral(facets: Iterable[Iterable]) -> NormedSpace:
    fs = tuple(exact_vector(f) for f in facets)
    return NormedSpace(len(fs[0]), "polyhedral", facets=fs)


def ell_infinity(dim: int) -> NormedSpace:
    rows = []
    for sign in (1, -1):
        for i in range(dim):
            rows.append(tuple(Fraction(sign if j == i else 0) for j in range(dim)))
    return NormedSpace(dim, "polyhedral", facets=tuple(rows))


def ell_one(dim: int) -> NormedSpace:
    import itertools

    rows = tuple(tuple(Fraction(s) for s in signs) for signs in itertools.product((1, -1), repeat=dim))
    return NormedSpace(dim, "polyhedral", facets=rows)


def graph_norm_space(metric: Sequence[Sequence[int]]) -> NormedSpace:
    m = tuple(tuple(int(v) for v in row) for row in metric)
    return NormedSpace(len(m), "graph_norm", metric=m)


def pimple_space(base: NormedSpace, spikes: Iterable[tuple]) -> NormedSpace:
    """Spikes are ``(direction, lambda)`` or ``(direction, lambda, gap)``."""
    sp = []
    for spike in spikes:
        d, lam = spike[0], float(spike[1])
        gap = float(spike[2]) if len(spike) > 2 else 1.0 - lam
        sp.append((tuple(float(v) for v in d), lam, gap))
    return NormedSpace(base.dim, "pimple", base=base, spikes=tuple(sp))


def norm_eval(space: NormedSpace, x: Sequence):
    """Norm of ``x``.  Exact for polyhedral and graph norms given exact input.

    Euclidean norms are returned exactly when the value is rational and the
    input exact, as a float otherwise.
    """
    if len(x) != space.dim:
        raise DimensionError(f"vector of length {len(x)} in a space of dimension {space.dim}")
    if space.kind == "euclidean":
        if scalar_mode(x) == EXACT:
            q = sum(to_exact(v) ** 2 for v in x)
            r = _exact_sqrt(q)
            return r if r is not None else math.sqrt(q)
        return float(np.linalg.norm(np.asarray(x, dtype=float)))
    if space.kind == "graph_norm":
        from .graph_norm import gamma_norm_from_metric

        return gamma_norm_from_metric(space.metric, x)
    if space.kind == "polyhedral":
        mode = scalar_mode(x)
        if mode == EXACT:
            xs = exact_vector(x)
            return max(sum((f * v for f, v in zip(fac, xs)), Fraction(0)) for fac in space.facets)
        arr = np.asarray(x, dtype=float)
        return float(max(np.asarray(space.facets, dtype=float) @ arr))
    from .pimple import pimple_norm_of_space

    return pimple_norm_of_space(space, x)


def _vertex_list(space: NormedSpace):
    from .polytope import enumerate_vertices

    return enumerate_vertices(space.facet_list)


def dual_norm_eval(space: NormedSpace, phi: Sequence):
    """Dual norm ``sup{phi(x) : ||x|| <= 1}``.

    Polyhedral and graph norms take the maximum over the exactly enumerated
    vertices of the unit ball.
    """
    if len(phi) != space.dim:
        raise DimensionError("functional length differs from dim")
    if space.kind == "euclidean":
        return norm_eval(space, phi)
    if space.kind in ("polyhedral", "graph_norm"):
        verts = _vertex_list(space)
        if scalar_mode(phi) == EXACT:
            p = exact_vector(phi)
            return max(sum((a * b for a, b in zip(p, v)), Fraction(0)) for v in verts)
        arr = np.asarray(phi, dtype=float)
        return float(max(np.asarray(verts, dtype=float) @ arr))
    raise UnsupportedSpace("dual norm needs a euclidean, polyhedral or graph-norm space")


def support_functional(space: NormedSpace, x: Sequence):
    """A norming functional: dual norm 1 and ``phi(x) = ||x||``.

    For polyhedral and graph norms the first facet (in list order) attaining
    the maximum is returned.
    """
    if all(v == 0 for v in x):
        raise ValidationError("support functional of the zero vector is undefined")
    if space.kind == "euclidean":
        n = norm_eval(space, x)
        if isinstance(n, Fraction):
            return tuple(to_exact(v) / n for v in x)
        return tuple(float(v) / n for v in x)
    if space.kind in ("polyhedral", "graph_norm"):
        value = norm_eval(space, x)
        exact = scalar_mode(x) == EXACT
        for fac in space.facet_list:
            s = dot(fac, exact_vector(x)) if exact else float(np.dot(np.asarray(fac, float), np.asarray(x, float)))
            if (s == value) if exact else abs(s - value) <= DEFAULT_TOLERANCE * max(1.0, abs(value)):
                return fac if exact else tuple(float(v) for v in fac)
        raise AssertionError("no facet attains the norm")  # pragma: no cover
    raise UnsupportedSpace(f"no support functional for {space.kind} spaces")


# ---------------------------------------------------------------------------
# linear maps and groups

def _rank(rows: Sequence[Sequence[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(rank + 1, len(m)):
            if m[i][col] != 0:
                c = m[i][col] / m[rank][col]
                m[i] = [a - c * b for a, b in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank


def exact_inverse(rows: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    n = len(rows)
    a = [[to_exact(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(rows)]
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            raise ValidationError("matrix is singular")
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [v / p for v in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                k = a[r][c]
                a[r] = [u - k * v for u, v in zip(a[r], a[c])]
    return [row[n:] for row in a]


@dataclass(frozen=True)
class LinearMap:
    """A square matrix acting on column vectors."""

    matrix: tuple[tuple, ...]

    def __post_init__(self):
        n = len(self.matrix)
        if any(len(row) != n for row in self.matrix):
            raise DimensionError("linear map must be square")
        scalar_mode(v for row in self.matrix for v in row)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "LinearMap":
        rows = [list(r) for r in rows]
        if scalar_mode(v for r in rows for v in r) == EXACT:
            return cls(tuple(tuple(to_exact(v) for v in r) for r in rows))
        return cls(tuple(tuple(float(v) for v in r) for r in rows))

    @classmethod
    def identity(cls, dim: int) -> "LinearMap":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(dim)) for i in range(dim)))

    @classmethod
    def scalar(cls, dim: int, c) -> "LinearMap":
        c = to_exact(c)
        return cls(tuple(tuple(c if i == j else Fraction(0) for j in range(dim)) for i in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @property
    def exact(self) -> bool:
        return scalar_mode(v for row in self.matrix for v in row) == EXACT

    def apply(self, x: Sequence):
        if len(x) != self.dim:
            raise DimensionError("vector length differs from map dimension")
        if self.exact and scalar_mode(x) == EXACT:
            return tuple(sum((a * b for a, b in zip(row, x)), Fraction(0)) for row in self.matrix)
        return tuple(float(v) for v in self.to_numpy() @ np.asarray(x, dtype=float))

    def compose(self, other: "LinearMap") -> "LinearMap":
        """``self`` after ``other``."""
        if self.exact and other.exact:
            cols = list(zip(*other.matrix))
            return LinearMap(tuple(tuple(sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols)
                                   for row in self.matrix))
        if self.exact != other.exact:
            raise ModeError("cannot compose exact and float maps")
        return LinearMap.from_rows((self.to_numpy() @ other.to_numpy()).tolist())

    def inverse(self) -> "LinearMap":
        if self.exact:
            return LinearMap.from_rows(exact_inverse(self.matrix))
        return LinearMap.from_rows(np.linalg.inv(self.to_numpy()).tolist())

    def to_numpy(self) -> np.ndarray:
        return np.asarray([[float(v) for v in row] for row in self.matrix], dtype=float)

    def transpose(self) -> "LinearMap":
        return LinearMap(tuple(zip(*self.matrix)))

    def key(self, tolerance: float = DEFAULT_TOLERANCE):
        """Hashable identity; floats are bucketed at ``tolerance``."""
        if self.exact:
            return self.matrix
        return tuple(int(round(v / tolerance)) for row in self.matrix for v in row)

    def is_close(self, other: "LinearMap", tolerance: float = DEFAULT_TOLERANCE) -> bool:
        if self.exact and other.exact:
            return self.matrix == other.matrix
        return bool(np.max(np.abs(self.to_numpy() - other.to_numpy())) <= tolerance)


def minus_identity(dim: int) -> LinearMap:
    return LinearMap.scalar(dim, -1)


def permutation_matrix(perm: Sequence[int], signs: Sequence[int] | None = None) -> LinearMap:
    """Matrix sending ``e_i`` to ``signs[i] * e_{perm[i]}``."""
    n = len(perm)
    signs = signs or [1] * n
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i, p in enumerate(perm):
        rows[p][i] = Fraction(signs[i])
    return LinearMap(tuple(tuple(r) for r in rows))


@dataclass(frozen=True)
class MatrixGroup:
    """A finite group of matrices with its composition table.

    ``table[i][j]`` is the index of ``elements[i] @ elements[j]``.
    """

    elements: tuple[LinearMap, ...]
    identity_index: int
    table: tuple[tuple[int, ...], ...]
    tolerance: float = DEFAULT_TOLERANCE
    _index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {g.key(self.tolerance): i for i, g in enumerate(self.elements)})

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    def index_of(self, g: LinearMap) -> int | None:
        idx = self._index.get(g.key(self.tolerance))
        if idx is not None or g.exact:
            return idx
        for i, h in enumerate(self.elements):
            if g.is_close(h, self.tolerance):
                return i
        return None

    def __contains__(self, g: LinearMap) -> bool:
        return self.index_of(g) is not None

    def contains_minus_identity(self) -> bool:
        return minus_identity(self.dim) in self if self.elements[0].exact else \
            self.index_of(LinearMap.from_rows((-np.eye(self.dim)).tolist())) is not None

    def inverse_index(self, i: int) -> int:
        return self.table[i].index(self.identity_index)

    def is_closed(self) -> bool:
        n = self.order
        ok_table = all(0 <= self.table[i][j] < n for i in range(n) for j in range(n))
        return ok_table and all(self.identity_index in row for row in self.table)

    def matrix_set(self) -> set:
        return {g.key(self.tolerance) for g in self.elements}


def group_closure(generators: Sequence[LinearMap], cap: int = 10_000,
                  tolerance: float = DEFAULT_TOLERANCE) -> MatrixGroup:
    """Smallest matrix group containing ``generators``; breadth-first closure.

    Raises GroupOrderExceeded once more than ``cap`` elements appear.
    """
    if not generators:
        raise ValidationError("at least one generator is required")
    dim = generators[0].dim
    exact = all(g.exact for g in generators)
    if not exact and any(g.exact for g in generators):
        generators = [LinearMap.from_rows(g.to_numpy().tolist()) for g in generators]
    for g in generators:
        if g.dim != dim:
            raise DimensionError("generators have different dimensions")
        det = np.linalg.det(g.to_numpy())
        if abs(det) < 1e-12:
            raise ValidationError("generator is not invertible")
    ident = LinearMap.identity(dim) if exact else LinearMap.from_rows(np.eye(dim).tolist())
    elements = [ident]
    index = {ident.key(tolerance): 0}
    frontier = [ident]
    while frontier:
        nxt = []
        for h in frontier:
            for g in generators:
                prod = g.compose(h)
                k = prod.key(tolerance)
                if k not in index:
                    index[k] = len(elements)
                    elements.append(prod)
                    nxt.append(prod)
                    if len(elements) > cap:
                        raise GroupOrderExceeded(f"group order exceeds cap {cap}")
        frontier = nxt
    table = []
    for a in elements:
        row = []
        for b in elements:
            k = a.compose(b).key(tolerance)
            if k not in index:  # float drift across a bucket boundary
                k = next(key for key, i in index.items() if a.compose(b).is_close(elements[i], tolerance))
            row.append(index[k])
        table.append(tuple(row))
    return MatrixGroup(tuple(elements), 0, tuple(table), tolerance)


def group_from_elements(elements: Sequence[LinearMap], tolerance: float = DEFAULT_TOLERANCE) -> MatrixGroup:
    """Wrap an explicit element list, checking closure."""
    try:
        group = group_closure(list(elements), cap=max(len(elements), 1), tolerance=tolerance)
    except GroupOrderExceeded:
        raise ValidationError("element list is not closed under composition") from None
    if group.order != len({g.key(tolerance) for g in elements}):
        raise ValidationError("element list is not closed under composition")
    return group


# ---------------------------------------------------------------------------
# JSON records

def linear_map_to_json(g: LinearMap) -> dict:
    return {"matrix": [[format_scalar(v) for v in row] for row in g.matrix]}


def linear_map_from_json(obj: dict) -> LinearMap:
    return LinearMap.from_rows([[parse_scalar(v) for v in row] for row in obj["matrix"]])


def group_to_json(group: MatrixGroup) -> dict:
    return {"dim": group.dim, "elements": [linear_map_to_json(g)["matrix"] for g in group.elements]}


def group_from_json(obj: dict) -> MatrixGroup:
    maps = [linear_map_from_json({"matrix": m}) for m in obj["elements"]]
    if "dim" in obj and maps and maps[0].dim != obj["dim"]:
        raise DimensionError("group dim does not match its elements")
    return group_from_elements(maps)


def space_to_json(space: NormedSpace) -> dict:
    out: dict = {"dim": space.dim, "kind": space.kind}
    if space.kind == "polyhedral":
        out["facets"] = [[format_scalar(v) for v in f] for f in space.facets]
    elif space.kind == "graph_norm":
        out["metric"] = [list(row) for row in space.metric]
    elif space.kind == "pimple":
        out["base"] = space_to_json(space.base)
        out["spikes"] = [{"direction": list(d), "lambda": lam, "gap": gap} for d, lam, gap in space.spikes]
    return out


def space_from_json(obj: dict) -> NormedSpace:
    kind = obj["kind"]
    dim = int(obj["dim"])
    if kind == "euclidean":
        return euclidean(dim)
    if kind == "polyhedral":
        space = polyhedral([[parse_scalar(v) for v in f] for f in obj["facets"]])
    elif kind == "graph_norm":
        space = graph_norm_space(obj["metric"])
    elif kind == "pimple":
        space = pimple_space(space_from_json(obj["base"]),
                             [(s["direction"], s["lambda"], s.get("gap", 1.0 - s["lambda"]))
                              for s in obj["spikes"]])
    else:
        raise ValidationError(f"unknown kind {kind!r}")
    if space.dim != dim:
        raise DimensionError("declared dim does not match the data")
    return space
