"""Finite metric spaces, their concave transforms and the Arens-Eells (free space) norm.

The norm of a sum-zero molecule ``m`` is the optimal transport cost between
its positive and negative parts; its dual is the maximum of ``sum m(y) f(y)``
over 1-Lipschitz ``f``.  The primal side uses a successive-shortest-path
min-cost flow, the dual side a linear program.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import DEFAULT_TOLERANCE, ValidationError

DEFAULT_POINT_CAP = 10
MASS_TOL = 1e-12


@dataclass(frozen=True)
class FiniteMetricSpace:
    points: tuple[str, ...]
    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "points", tuple(str(p) for p in self.points))
        n = len(self.points)
        if d.shape != (n, n):
            raise ValidationError("distance matrix shape does not match the point list")
        if len(set(self.points)) != n:
            raise ValidationError("point labels must be distinct")
        if np.any(np.diag(d) != 0):
            raise ValidationError("distance matrix must have zero diagonal")
        if not np.allclose(d, d.T, rtol=0, atol=1e-15):
            raise ValidationError("distance matrix must be symmetric")
        off = d[~np.eye(n, dtype=bool)]
        if np.any(off <= 0):
            raise ValidationError("distinct points must have positive distance")
        via = d[:, :, None] + d[None, :, :]  # via[i, k, j] = d(i,k) + d(k,j)
        if np.any(d > via.min(axis=1) + 1e-12 * max(1.0, float(d.max(initial=0.0)))):
            raise ValidationError("triangle inequality fails")

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def diameter(self) -> float:
        return float(self.d.max(initial=0.0))

    def index(self, label) -> int:
        return self.points.index(str(label))

    def to_json(self) -> dict:
        return {"points": list(self.points), "d": self.d.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "FiniteMetricSpace":
        return cls(tuple(obj["points"]), np.asarray(obj["d"], dtype=float))

    @classmethod
    def from_matrix(cls, d) -> "FiniteMetricSpace":
        d = np.asarray(d, dtype=float)
        return cls(tuple(f"y{i}" for i in range(d.shape[0])), d)


def equilateral(n: int = 3) -> FiniteMetricSpace:
    return FiniteMetricSpace.from_matrix(1.0 - np.eye(n))


def path_metric_space(n: int = 3) -> FiniteMetricSpace:
    i = np.arange(n)
    return FiniteMetricSpace.from_matrix(np.abs(i[:, None] - i[None, :]))


def random_metric(rng: np.random.Generator, n: int, kind: str = "weighted") -> FiniteMetricSpace:
    """Shortest-path metric of a random connected graph.

    ``kind="graph"`` uses unit weights, ``"weighted"`` small integer weights
    and ``"generic"`` uniform real weights; the first two often have
    nontrivial symmetry, the last almost never.
    """
    from scipy.sparse.csgraph import shortest_path

    while True:
        w = np.zeros((n, n))
        p = rng.uniform(0.3, 0.9)
        for i, j in itertools.combinations(range(n), 2):
            if rng.random() < p:
                if kind == "graph":
                    w[i, j] = 1.0
                elif kind == "weighted":
                    w[i, j] = float(rng.integers(1, 4))
                else:
                    w[i, j] = float(rng.uniform(0.5, 2.0))
        w = w + w.T
        d = shortest_path(w, directed=False, unweighted=False)
        if np.all(np.isfinite(d)):
            return FiniteMetricSpace.from_matrix(d)


def transform_bounded(space: FiniteMetricSpace) -> FiniteMetricSpace:
    """``d -> d / (1 + d)``: a metric with the same isometries and diameter below 1."""
    return FiniteMetricSpace(space.points, space.d / (1.0 + space.d))


@dataclass
class ConcavityReport:
    concave: bool
    min_margin: float
    worst_triple: tuple[int, int, int] | None
    diameter: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def concavity_report(space: FiniteMetricSpace, tolerance: float = DEFAULT_TOLERANCE) -> ConcavityReport:
    """Strict triangle inequality on distinct triples; the margin is ``d(x,y)+d(y,z)-d(x,z)``."""
    best, worst = math.inf, None
    for x, y, z in itertools.permutations(range(space.size), 3):
        margin = space.d[x, y] + space.d[y, z] - space.d[x, z]
        if margin < best:
            best, worst = margin, (x, y, z)
    best = best if worst is not None else math.inf
    ok = best > tolerance and space.diameter < 1
    return ConcavityReport(ok, float(best) if worst else float("inf"), worst, space.diameter)


def transform_concave(space: FiniteMetricSpace, tolerance: float = DEFAULT_TOLERANCE
                      ) -> tuple[FiniteMetricSpace, ConcavityReport]:
    """``d -> sqrt(d)`` on a metric of diameter below 1, with a concavity report."""
    if space.diameter >= 1:
        raise ValidationError("concave transform needs diameter below 1")
    out = FiniteMetricSpace(space.points, np.sqrt(space.d))
    return out, concavity_report(out, tolerance)


def both_transforms(space: FiniteMetricSpace) -> FiniteMetricSpace:
    return transform_concave(transform_bounded(space))[0]


def metric_isometry_group(space: FiniteMetricSpace, tolerance: float = 1e-12,
                          cap: int = DEFAULT_POINT_CAP) -> list[tuple[int, ...]]:
    """All distance-preserving permutations, by backtracking on distance profiles."""
    n = space.size
    if n > cap:
        raise ValidationError(f"{n} points exceed the cap of {cap}")
    d = space.d
    scale = max(1.0, space.diameter)
    profile = [np.sort(d[i]) for i in range(n)]
    same = [[bool(np.allclose(profile[i], profile[j], rtol=0, atol=tolerance * scale)) for j in range(n)]
            for i in range(n)]
    out: list[tuple[int, ...]] = []
    image: list[int] = []

    def extend():
        k = len(image)
        if k == n:
            out.append(tuple(image))
            return
        for w in range(n):
            if w in image or not same[k][w]:
                continue
            if all(abs(d[w, image[i]] - d[k, i]) <= tolerance * scale for i in range(k)):
                image.append(w)
                extend()
                image.pop()

    extend()
    return out


def has_dilation(space: FiniteMetricSpace, lam: float, tolerance: float = 1e-12) -> bool:
    """Whether some bijection multiplies every distance by ``lam``."""
    if space.size < 2:
        return True
    if abs(lam - 1) > tolerance:
        # a surjective dilation maps the diameter onto lam * diameter
        return False
    return bool(metric_isometry_group(space, tolerance))


# ---------------------------------------------------------------------------
# molecules

@dataclass(frozen=True)
class Molecule:
    masses: dict

    def __post_init__(self):
        m = {str(k): float(v) for k, v in self.masses.items()}
        object.__setattr__(self, "masses", m)
        total = sum(m.values())
        scale = max([1.0] + [abs(v) for v in m.values()])
        if abs(total) > 1e-9 * scale:
            raise ValidationError(f"molecule masses sum to {total}, not zero")

    def vector(self, space: FiniteMetricSpace) -> np.ndarray:
        v = np.zeros(space.size)
        for k, mass in self.masses.items():
            if k not in space.points:
                raise ValidationError(f"unknown point {k!r}")
            v[space.index(k)] += mass
        return v

    @classmethod
    def from_vector(cls, space: FiniteMetricSpace, v) -> "Molecule":
        return cls({p: float(x) for p, x in zip(space.points, v) if x != 0})

    @classmethod
    def atom(cls, x, y) -> "Molecule":
        return cls({str(x): 1.0, str(y): -1.0})

    def to_json(self) -> dict:
        return {"masses": dict(self.masses)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Molecule":
        return cls(dict(obj["masses"]))


def random_molecule(rng: np.random.Generator, space: FiniteMetricSpace, support: int | None = None) -> np.ndarray:
    n = space.size
    k = support or int(rng.integers(2, n + 1))
    idx = rng.choice(n, size=k, replace=False)
    v = np.zeros(n)
    v[idx] = rng.standard_normal(k)
    v[idx] -= v[idx].mean()
    return v


def _as_vector(space, m) -> np.ndarray:
    if isinstance(m, Molecule):
        return m.vector(space)
    v = np.asarray(m, dtype=float)
    if v.shape != (space.size,):
        raise ValidationError("molecule vector has the wrong length")
    if abs(v.sum()) > 1e-9 * max(1.0, float(np.abs(v).max(initial=0.0))):
        raise ValidationError("molecule masses must sum to zero")
    return v


@dataclass
class Decomposition:
    value: float
    atoms: list[tuple[int, int, float]]

    def cost(self, space: FiniteMetricSpace) -> float:
        return float(sum(a * space.d[x, y] for x, y, a in self.atoms))


def ae_norm_primal(space: FiniteMetricSpace, m) -> Decomposition:
    """Transportation cost between the positive and negative parts of ``m``.

    Successive shortest augmenting paths (Bellman-Ford on the residual
    network).  Each augmentation saturates a supply or a demand, so at most
    ``|support|`` rounds are needed.  The returned atoms ``(x, y, a)`` stand
    for ``a * (1_x - 1_y)``.
    """
    v = _as_vector(space, m)
    scale = max(1.0, float(np.abs(v).max(initial=0.0)))
    sup = [i for i in range(space.size) if v[i] > MASS_TOL * scale]
    dem = [j for j in range(space.size) if v[j] < -MASS_TOL * scale]
    if not sup:
        return Decomposition(0.0, [])
    supply = {i: v[i] for i in sup}
    demand = {j: -v[j] for j in dem}
    flow = {(i, j): 0.0 for i in sup for j in dem}
    while sum(supply.values()) > MASS_TOL * scale and sum(demand.values()) > MASS_TOL * scale:
        # nodes: ('s', i), ('t', j); source feeds supplies with remaining capacity
        dist = {("s", i): (0.0 if supply[i] > MASS_TOL * scale else math.inf) for i in sup}
        dist.update({("t", j): math.inf for j in dem})
        prev: dict = {}
        for _ in range(len(sup) + len(dem)):
            changed = False
            for i in sup:
                di = dist[("s", i)]
                if di < math.inf:
                    for j in dem:
                        c = di + space.d[i, j]
                        if c < dist[("t", j)] - 1e-15:
                            dist[("t", j)] = c
                            prev[("t", j)] = ("s", i)
                            changed = True
            for j in dem:
                dj = dist[("t", j)]
                if dj < math.inf:
                    for i in sup:
                        if flow[(i, j)] > MASS_TOL * scale:
                            c = dj - space.d[i, j]
                            if c < dist[("s", i)] - 1e-15:
                                dist[("s", i)] = c
                                prev[("s", i)] = ("t", j)
                                changed = True
            if not changed:
                break
        target = min((j for j in dem if demand[j] > MASS_TOL * scale), key=lambda j: dist[("t", j)])
        path = [("t", target)]
        while path[-1] in prev:
            path.append(prev[path[-1]])
        path.reverse()
        start = path[0][1]
        amount = min(supply[start], demand[target])
        for a, b in zip(path, path[1:]):
            if a[0] == "t":
                amount = min(amount, flow[(b[1], a[1])])
        for a, b in zip(path, path[1:]):
            if a[0] == "s":
                flow[(a[1], b[1])] += amount
            else:
                flow[(b[1], a[1])] -= amount
        supply[start] -= amount
        demand[target] -= amount
    atoms = [(i, j, f) for (i, j), f in flow.items() if f > MASS_TOL * scale]
    value = float(sum(f * space.d[i, j] for i, j, f in atoms))
    return Decomposition(value, atoms)


def ae_norm(space: FiniteMetricSpace, m) -> float:
    return ae_norm_primal(space, m).value


def exhaustive_transport(space: FiniteMetricSpace, m) -> float:
    """Oracle: minimum over all spanning-tree basic solutions of the transport problem."""
    v = _as_vector(space, m)
    scale = max(1.0, float(np.abs(v).max(initial=0.0)))
    sup = [i for i in range(space.size) if v[i] > MASS_TOL * scale]
    dem = [j for j in range(space.size) if v[j] < -MASS_TOL * scale]
    if not sup:
        return 0.0
    edges = [(i, j) for i in sup for j in dem]
    nodes = [("s", i) for i in sup] + [("t", j) for j in dem]
    need = len(nodes) - 1
    best = math.inf
    for tree in itertools.combinations(edges, need):
        flows = _tree_flows(tree, v, sup, dem)
        if flows is None or min(flows.values()) < -1e-12 * scale:
            continue
        best = min(best, sum(f * space.d[i, j] for (i, j), f in flows.items()))
    return float(best)


def _tree_flows(tree, v, sup, dem):
    """Unique flow on a spanning tree meeting the supplies, by peeling leaves; None if not a tree."""
    adj: dict = {("s", i): [] for i in sup}
    adj.update({("t", j): [] for j in dem})
    for i, j in tree:
        adj[("s", i)].append(("t", j))
        adj[("t", j)].append(("s", i))
    # connectivity check
    seen, stack = set(), [next(iter(adj))]
    while stack:
        u = stack.pop()
        if u not in seen:
            seen.add(u)
            stack.extend(adj[u])
    if len(seen) != len(adj):
        return None
    rest = {("s", i): v[i] for i in sup}
    rest.update({("t", j): -v[j] for j in dem})
    degree = {u: len(adj[u]) for u in adj}
    alive = set(tree)
    flows = {}
    leaves = [u for u in adj if degree[u] == 1]
    while leaves:
        u = leaves.pop()
        if degree[u] != 1:
            continue
        w = next(x for x in adj[u] if ((u[1], x[1]) if u[0] == "s" else (x[1], u[1])) in alive)
        e = (u[1], w[1]) if u[0] == "s" else (w[1], u[1])
        flows[e] = rest[u]
        rest[w] -= rest[u]
        rest[u] = 0.0
        alive.discard(e)
        degree[u] -= 1
        degree[w] -= 1
        if degree[w] == 1:
            leaves.append(w)
    return flows


@dataclass
class DualResult:
    value: float
    witness: dict

    def lipschitz_ok(self, space: FiniteMetricSpace, tolerance: float = 1e-9) -> bool:
        f = np.asarray([self.witness[p] for p in space.points])
        return bool(np.all(np.abs(f[:, None] - f[None, :]) <= space.d + tolerance))


def ae_norm_dual(space: FiniteMetricSpace, m) -> DualResult:
    """``max sum m(y) f(y)`` over 1-Lipschitz ``f`` with ``f`` = 0 at the first point."""
    v = _as_vector(space, m)
    n = space.size
    if not np.any(v):
        return DualResult(0.0, {p: 0.0 for p in space.points})
    rows, rhs = [], []
    for i, j in itertools.permutations(range(n), 2):
        r = np.zeros(n)
        r[i], r[j] = 1.0, -1.0
        rows.append(r)
        rhs.append(space.d[i, j])
    bounds = [(0.0, 0.0)] + [(None, None)] * (n - 1)
    res = linprog(-v, A_ub=np.asarray(rows), b_ub=np.asarray(rhs), bounds=bounds, method="highs")
    if res.status != 0:
        raise ValidationError(f"dual LP failed: {res.message}")
    return DualResult(float(-res.fun), {p: float(x) for p, x in zip(space.points, res.x)})


# ---------------------------------------------------------------------------
# extreme atoms and isometries

def normalized_atoms(space: FiniteMetricSpace) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """All ``(1_x - 1_y)/d(x,y)`` for ordered pairs ``x != y`` as rows."""
    n = space.size
    pairs = list(itertools.permutations(range(n), 2))
    atoms = np.zeros((len(pairs), n))
    for k, (x, y) in enumerate(pairs):
        atoms[k, x] = 1.0 / space.d[x, y]
        atoms[k, y] = -1.0 / space.d[x, y]
    return atoms, pairs


@dataclass
class ExtremeAtomReport:
    concave: bool
    extreme: list[tuple[str, str]]
    not_extreme: list[tuple[str, str]]
    gauges: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"concave": self.concave, "extreme": [list(p) for p in self.extreme],
                "not_extreme": [list(p) for p in self.not_extreme],
                "gauges": {f"{a}|{b}": g for (a, b), g in self.gauges.items()}}


def free_extreme_atoms(space: FiniteMetricSpace, tolerance: float = DEFAULT_TOLERANCE) -> ExtremeAtomReport:
    """LP certificate of extremality for every normalised atom.

    The free ball is the convex hull of the normalised atoms.  An atom is
    extreme exactly when its gauge with respect to the hull of the other
    atoms exceeds 1 (infeasible counts as infinite).
    """
    conc = concavity_report(space, tolerance)
    atoms, pairs = normalized_atoms(space)
    extreme, not_extreme, gauges = [], [], {}
    for k, (x, y) in enumerate(pairs):
        others = np.delete(atoms, k, axis=0)
        res = linprog(np.ones(len(others)), A_eq=others.T, b_eq=atoms[k], bounds=[(0, None)] * len(others),
                      method="highs")
        g = float(res.fun) if res.status == 0 else math.inf
        label = (space.points[x], space.points[y])
        gauges[label] = g
        (extreme if g > 1 + tolerance else not_extreme).append(label)
    return ExtremeAtomReport(conc.concave, extreme, not_extreme, gauges)


def _coords(v: np.ndarray) -> np.ndarray:
    """Coordinates of a molecule in the basis ``m_{y_i, y_0}``, ``i >= 1``."""
    return v[1:]


def _from_coords(c: np.ndarray) -> np.ndarray:
    return np.concatenate([[-c.sum()], c])


def induced_map(space: FiniteMetricSpace, sigma: int, perm: Sequence[int]) -> np.ndarray:
    """Matrix of ``m_{x,y} -> sigma m_{gx, gy}`` on the basis ``m_{y_i, y_0}``."""
    n = space.size
    mat = np.zeros((n - 1, n - 1))
    for i in range(1, n):
        v = np.zeros(n)
        v[perm[i]] += sigma
        v[perm[0]] -= sigma
        mat[:, i - 1] = _coords(v)
    return mat


@dataclass
class FreeIsometryReport:
    order: int
    metric_group_order: int
    structure_ok: bool
    extra_maps: int
    candidates_checked: int
    all_atoms_extreme: bool
    sampled_norm_deviation: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def ae_isometry_group(space: FiniteMetricSpace, samples: int = 50, seed: int = 0,
                      tolerance: float = DEFAULT_TOLERANCE) -> tuple[list[np.ndarray], FreeIsometryReport]:
    """Linear isometries of the free space over ``space`` and their structure.

    Candidates ``T_{sigma, g}`` come from ``{+-1} x Isom(Y)``; each is
    checked on atoms and on sampled molecules.  Completeness: every linear
    bijection that maps the extreme-atom set onto itself is enumerated by
    backtracking over images of a basis (pruned by the norms of sums and
    differences of pairs) and compared with the candidates.
    """
    n = space.size
    if n < 3:
        raise ValidationError("at least three points are needed")
    conc = concavity_report(space, tolerance)
    if not conc.concave:
        raise ValidationError("metric is not concave; extremality of atoms is not guaranteed")
    ext = free_extreme_atoms(space, tolerance)
    all_extreme = not ext.not_extreme
    isoms = metric_isometry_group(space)
    cands = [induced_map(space, s, g) for s in (1, -1) for g in isoms]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        v = random_molecule(rng, space)
        base = ae_norm(space, v)
        c = _coords(v)
        for t in cands:
            worst = max(worst, abs(ae_norm(space, _from_coords(t @ c)) - base))

    atoms, pairs = normalized_atoms(space)
    extreme = set(ext.extreme)
    keep = [k for k, (x, y) in enumerate(pairs) if (space.points[x], space.points[y]) in extreme]
    pts = np.asarray([_coords(atoms[k]) for k in keep])
    basis_idx = [pairs.index((i, 0)) for i in range(1, n)]
    basis = np.asarray([_coords(atoms[k]) for k in basis_idx])
    basis_inv = np.linalg.inv(basis.T)
    norm_cache: dict = {}

    def pair_norm(a: int, b: int, sign: int) -> float:
        key = (min(a, b), max(a, b), sign) if sign == 1 else (a, b, sign)
        if key not in norm_cache:
            norm_cache[key] = ae_norm(space, _from_coords(pts[a] + sign * pts[b]))
        return norm_cache[key]

    basis_pos = [keep.index(k) if k in keep else None for k in basis_idx]
    found: list[np.ndarray] = []
    checked = 0
    if all(p is not None for p in basis_pos):
        images: list[int] = []

        def extend():
            nonlocal checked
            k = len(images)
            if k == n - 1:
                checked += 1
                w = np.asarray([pts[i] for i in images]).T
                t = w @ basis_inv
                if _maps_set_onto(t, pts):
                    found.append(t)
                return
            for cand in range(len(pts)):
                if cand in images:
                    continue
                ok = all(abs(pair_norm(cand, images[i], s) - pair_norm(basis_pos[k], basis_pos[i], s)) <= 1e-9
                         for i in range(k) for s in (1, -1))
                if ok:
                    images.append(cand)
                    extend()
                    images.pop()

        extend()
    extra = sum(1 for t in found if not any(np.max(np.abs(t - c)) <= 1e-9 for c in cands))
    missing = sum(1 for c in cands if not any(np.max(np.abs(t - c)) <= 1e-9 for t in found))
    structure = (extra == 0 and missing == 0 and len(found) == 2 * len(isoms) and worst <= 1e-9
                 and all_extreme)
    rep = FreeIsometryReport(len(found), len(isoms), structure, extra, checked, all_extreme, worst)
    return found, rep


def _maps_set_onto(t: np.ndarray, pts: np.ndarray, tol: float = 1e-9) -> bool:
    img = pts @ t.T
    d = np.linalg.norm(img[:, None, :] - pts[None, :, :], axis=2)
    hits = d <= tol * max(1.0, float(np.abs(pts).max()))
    return bool(np.all(hits.sum(axis=1) == 1) and np.all(hits.sum(axis=0) == 1))
