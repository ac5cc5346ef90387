"""Testable transitivity conditions, distinguished points and rotundity moduli.

Finite groups are handled exactly (maximum over all elements).  Continuous
groups enter as samplers and their suprema are estimates carrying a
confidence radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (DEFAULT_TOLERANCE, MatrixGroup, NormedSpace, UnsupportedSpace, ValidationError,
                   dual_norm_eval, support_functional)

DEFAULT_EPS_GRID = tuple(round(0.1 * k, 1) for k in range(1, 20))
SAMPLED_TOLERANCE = 1e-3


# ---------------------------------------------------------------------------
# norms on float batches

def norms(space: NormedSpace, xs) -> np.ndarray:
    """Norms of the rows of ``xs`` as floats."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] != space.dim:
        raise ValidationError("vector length differs from the space dimension")
    if space.kind == "euclidean":
        return np.linalg.norm(xs, axis=1)
    if space.kind in ("polyhedral", "graph_norm"):
        f = np.asarray(space.facet_list, dtype=float)
        return (xs @ f.T).max(axis=1)
    from .pimple import PimpleSpec, pimple_norms

    return pimple_norms(PimpleSpec.from_space(space), xs)


def norm(space: NormedSpace, x) -> float:
    return float(norms(space, x)[0])


def dual_norm(space: NormedSpace, phi) -> float:
    phi = np.asarray(phi, dtype=float)
    if space.kind == "pimple":
        # the ball is the hull of the euclidean ball and the spike tips
        tips = [np.asarray(d) / lam for d, lam, _ in space.spikes]
        return float(max([np.linalg.norm(phi)] + [abs(phi @ t) for t in tips]))
    return float(dual_norm_eval(space, [float(v) for v in phi]))


def norming_functional(space: NormedSpace, x) -> np.ndarray:
    """A functional of dual norm 1 attaining ``||x||`` at ``x``.

    Pimple spaces are only supported at spike tips, where the spike
    direction normalised in the dual norm works.
    """
    x = np.asarray(x, dtype=float)
    if space.kind != "pimple":
        return np.asarray(support_functional(space, [float(v) for v in x]), dtype=float)
    for d, lam, _ in space.spikes:
        d = np.asarray(d)
        for s in (1, -1):
            if np.allclose(x / norm(space, x), s * d / lam, atol=1e-12):
                phi = s * d
                return phi / dual_norm(space, phi)
    raise UnsupportedSpace("pimple norming functionals are only available at spike tips")


def _unit(space: NormedSpace, xs) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    return xs / norms(space, xs)[:, None]


def _check_normalized(space, x, xstar, tolerance):
    nx = norm(space, x)
    nd = dual_norm(space, xstar)
    if abs(nx - 1) > tolerance or abs(nd - 1) > tolerance:
        raise ValidationError(f"inputs must be normalised: ||x|| = {nx}, ||x*|| = {nd}")


# ---------------------------------------------------------------------------
# group samplers

@dataclass
class OrthogonalSampler:
    """Haar-random orthogonal matrices (rotations only when ``special``)."""

    dim: int
    special: bool = False

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        z = rng.standard_normal((count, self.dim, self.dim))
        q, r = np.linalg.qr(z)
        q = q * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]
        if self.special:
            flip = np.linalg.det(q) < 0
            q[flip, :, 0] *= -1
        return q

    def contains_minus_identity(self) -> bool:
        return not self.special or self.dim % 2 == 0


@dataclass
class WordSampler:
    """Random words of bounded length in a list of generator matrices."""

    generators: list
    max_length: int = 12
    minus_identity: bool | None = None

    def contains_minus_identity(self) -> bool | None:
        """Declared by the caller; sampled words cannot settle it."""
        return self.minus_identity

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        gens = [np.asarray(g, dtype=float) for g in self.generators]
        gens += [np.linalg.inv(g) for g in gens]
        n = gens[0].shape[0]
        out = np.empty((count, n, n))
        for i in range(count):
            m = np.eye(n)
            for j in rng.integers(0, len(gens), size=int(rng.integers(0, self.max_length + 1))):
                m = gens[j] @ m
            out[i] = m
        return out


def _matrices(group) -> tuple[np.ndarray, bool]:
    if isinstance(group, MatrixGroup):
        return np.asarray([g.to_numpy() for g in group.elements]), True
    return None, False


# ---------------------------------------------------------------------------
# convex transitivity

@dataclass
class TransitivityVerdict:
    kind: str
    sup: float
    exact: bool
    confidence_radius: float
    witness: dict | None = None

    def to_json(self) -> dict:
        return dict(self.__dict__)


def convex_transitivity_test(space: NormedSpace, group, x, xstar, samples: int = 10_000, seed: int = 0,
                             tolerance: float = DEFAULT_TOLERANCE) -> TransitivityVerdict:
    """``sup_{T in G} x*(Tx)`` and whether it falls short of 1.

    A value below ``1 - radius`` refutes convex transitivity with the pair
    ``(x, x*)`` as witness; otherwise the pair is consistent with it.
    """
    x = np.asarray(x, dtype=float)
    xstar = np.asarray(xstar, dtype=float)
    _check_normalized(space, x, xstar, max(tolerance, 1e-9))
    mats, exact = _matrices(group)
    if not exact:
        mats = group.sample(np.random.default_rng(seed), samples)
    values = np.einsum("i,kij,j->k", xstar, mats, x)
    best = int(np.argmax(values))
    sup = float(values[best])
    radius = tolerance if exact else max(tolerance, SAMPLED_TOLERANCE)
    if sup < 1 - radius:
        witness = {"x": x.tolist(), "x_star": xstar.tolist(), "sup": sup, "argmax": mats[best].tolist()}
        return TransitivityVerdict("fails", sup, exact, radius, witness)
    return TransitivityVerdict("convex_transitive", sup, exact, radius)


@dataclass
class NecessaryReport:
    contains_minus_id: bool | None
    closed: str
    witness_found: bool
    witness: dict | None
    pairs_tried: int
    verdicts: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _candidate_pairs(space: NormedSpace, rng, count: int):
    """Sphere points and dual-sphere functionals, including spike tips when present."""
    n = space.dim
    xs = _unit(space, rng.standard_normal((count, n)))
    phis = rng.standard_normal((count, n))
    if space.kind in ("euclidean", "polyhedral", "graph_norm"):
        zs = _unit(space, rng.standard_normal((count, n)))
        phis = np.asarray([norming_functional(space, z) for z in zs])
    else:
        phis = phis / np.asarray([dual_norm(space, p) for p in phis])[:, None]
    extra_x, extra_phi = [], []
    if space.kind == "pimple":
        for d, lam, _ in space.spikes:
            d = np.asarray(d)
            tip = d / lam
            phi = d / dual_norm(space, d)
            # a point just off the tip: tip direction exposed by phi, perturbed sideways
            side = rng.standard_normal(n)
            side -= (side @ d) * d
            x = _unit(space, tip + 1e-3 * side / max(np.linalg.norm(side), 1e-300))[0]
            extra_x.append(x)
            extra_phi.append(phi)
    xs = np.vstack([xs] + ([np.asarray(extra_x)] if extra_x else []))
    phis = np.vstack([phis] + ([np.asarray(extra_phi)] if extra_phi else []))
    return xs, phis


def necessary_conditions(space: NormedSpace, group, samples: int = 200, seed: int = 0,
                         tolerance: float = DEFAULT_TOLERANCE, group_samples: int = 10_000) -> NecessaryReport:
    """Check ``-Id in G``, closedness, and search for a pair with ``sup x*(Tx) < 1``."""
    rng = np.random.default_rng(seed)
    mats, exact = _matrices(group)
    if exact:
        minus = group.contains_minus_identity()
        closed = "VACUOUS (finite group)"
        radius = tolerance
    else:
        mats = group.sample(rng, group_samples)
        minus = group.contains_minus_identity()
        closed = "ASSUMED (sampled group)"
        radius = max(tolerance, SAMPLED_TOLERANCE)
    xs, phis = _candidate_pairs(space, rng, samples)
    best = None
    tried = 0
    for x in xs:
        images = mats @ x  # (|G|, n)
        sups = (images @ phis.T).max(axis=0)
        tried += len(phis)
        k = int(np.argmin(sups))
        if best is None or sups[k] < best[0]:
            best = (float(sups[k]), x, phis[k])
    found = best is not None and best[0] < 1 - radius
    witness = {"x": best[1].tolist(), "x_star": best[2].tolist(), "sup": best[0]} if found else None
    verdicts = {"minus_identity": {True: "PASS", False: "FAIL"}.get(minus, "UNVERIFIED"), "closed": "PASS",
                "witness": "WITNESS-FOUND" if found else "NO-WITNESS"}
    return NecessaryReport(minus, closed, found, witness, tried, verdicts)


def distinguished_point_check(space: NormedSpace, group: MatrixGroup, x) -> float:
    """``min_{T != Id} ||Tx - x||``; positive means ``x`` is distinguished."""
    x = np.asarray(x, dtype=float)
    mats = np.asarray([g.to_numpy() for i, g in enumerate(group.elements) if i != group.identity_index])
    if len(mats) == 0:
        return math.inf
    return float(norms(space, mats @ x - x).min())


# ---------------------------------------------------------------------------
# rotundity moduli

@dataclass
class LurModulus:
    point: list
    table: list[tuple[float, float]]
    seed: int
    budget: int

    def delta(self, eps: float) -> float:
        return dict(self.table)[eps]

    @property
    def not_lur(self) -> bool:
        return any(e > 0 and d <= 1e-9 for e, d in self.table)

    def to_json(self) -> dict:
        return {"point": self.point, "table": [list(r) for r in self.table], "seed": self.seed,
                "budget": self.budget, "not_lur_evidence": self.not_lur}


def euclidean_delta(eps: float) -> float:
    """Closed form ``2 - sqrt(4 - eps^2)`` of the euclidean modulus."""
    return 2.0 - math.sqrt(max(4.0 - eps * eps, 0.0))


def _boundary_points(space, x, ys, eps, steps: int = 60) -> np.ndarray:
    """For each row ``y`` (with ``||x-y|| >= eps``), the point on the normalised path from ``x``
    to ``y`` at distance ``eps`` from ``x``, by bisection on all rows at once."""
    ys = np.atleast_2d(ys)
    lo, hi = np.zeros(len(ys)), np.ones(len(ys))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        z = _unit(space, (1 - mid)[:, None] * x + mid[:, None] * ys)
        far = norms(space, x - z) >= eps
        hi = np.where(far, mid, hi)
        lo = np.where(far, lo, mid)
    return _unit(space, (1 - hi)[:, None] * x + hi[:, None] * ys)


def _sup_sum(space, x, eps, rng, budget, keep: int = 8, rounds: int = 40) -> float:
    """Lower estimate of ``sup{||x+y|| : ||y|| = 1, ||x-y|| >= eps}``; ``-inf`` if nothing qualifies."""
    n = space.dim
    ys = _unit(space, rng.standard_normal((budget, n)))
    ys = np.vstack([ys, -x[None, :]])
    ok = norms(space, x[None, :] - ys) >= eps
    if not np.any(ok):
        return -math.inf
    sums = norms(space, x[None, :] + ys)
    best = float(sums[ok].max())
    # paths through -x pass through the origin, so they are left out of the refinement
    usable = ok & (sums > 1e-9)
    if not np.any(usable):
        return best
    order = np.argsort(-np.where(usable, sums, -np.inf))[: min(keep, int(usable.sum()))]
    z = _boundary_points(space, x, ys[order], eps)
    good = norms(space, x - z) >= eps
    z = z[good]
    if len(z) == 0:
        return best
    val = norms(space, x + z)
    step = np.full(len(z), 0.1)
    for _ in range(rounds):
        trial = _unit(space, z + step[:, None] * rng.standard_normal(z.shape))
        feasible = norms(space, x - trial) >= eps
        if np.any(feasible):
            trial[feasible] = _boundary_points(space, x, trial[feasible], eps)
        feasible &= norms(space, x - trial) >= eps
        tv = norms(space, x + trial)
        better = feasible & (tv > val)
        z[better], val[better] = trial[better], tv[better]
        step = np.where(better, step, 0.7 * step)
    return max(best, float(val.max()))


def lur_modulus(space: NormedSpace, x, eps_grid: Sequence[float] = DEFAULT_EPS_GRID, budget: int = 400,
                seed: int = 0) -> LurModulus:
    """Estimated ``delta(eps) = 2 - sup{||x+y|| : ||y|| = 1, ||x-y|| >= eps}`` at ``x``.

    A feasible ``y`` for a larger ``eps`` is feasible for every smaller one,
    so suprema are propagated downwards; this keeps the table monotone.
    """
    x = np.asarray(x, dtype=float)
    if abs(norm(space, x) - 1) > 1e-9:
        raise ValidationError("x must lie on the unit sphere")
    rng = np.random.default_rng(seed)
    grid = sorted(float(e) for e in eps_grid)
    sups = [2.0 if e <= 0 else _sup_sum(space, x, e, rng, budget) for e in grid]
    for i in range(len(grid) - 2, -1, -1):
        sups[i] = max(sups[i], sups[i + 1])
    table = [(e, (2.0 - s) if s > -math.inf else math.inf) for e, s in zip(grid, sups)]
    return LurModulus(x.tolist(), table, seed, budget)


def uniform_convexity_modulus(space: NormedSpace, eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
                              budget: int = 400, points: int = 8, seed: int = 0) -> list[tuple[float, float]]:
    """Minimum over sampled sphere points of the pointwise modulus."""
    rng = np.random.default_rng(seed)
    xs = _unit(space, rng.standard_normal((points, space.dim)))
    if space.kind in ("polyhedral", "graph_norm"):
        # vertices of the ball are where flat faces meet; include the coordinate directions too
        xs = np.vstack([xs, _unit(space, np.eye(space.dim))])
    tables = [lur_modulus(space, x, eps_grid, budget, seed + i).table for i, x in enumerate(xs)]
    return [(e, min(t[i][1] for t in tables)) for i, (e, _) in enumerate(tables[0])]


# ---------------------------------------------------------------------------
# separating functional from a discrete orbit

@dataclass
class SeparationWitness:
    x: list
    x_star: list
    alpha: float
    eps: float
    radius: float
    beta: float
    sup: float
    verified: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _modulus_at(space, y, eps, budget, seed) -> float:
    if space.kind == "euclidean":
        return euclidean_delta(eps)
    return lur_modulus(space, y, [eps], budget, seed).table[0][1]


def separation_witness(space: NormedSpace, group: MatrixGroup, y, budget: int = 400, seed: int = 0
                       ) -> SeparationWitness:
    """A pair ``(x, x*)`` with ``sup_T x*(Tx) <= 1 - beta``, built from the orbit of ``y``.

    ``alpha`` is the least displacement of ``y`` by elements that move it.
    With ``eps = delta(alpha)/2`` every moved image has ``||y + Ty|| <= 2 - 2 eps``.
    Taking ``x`` at distance ``r = eps/2`` from ``y`` and ``x*`` norming ``y``
    gives ``x*(Tx) <= 1 - delta(r)`` when ``Ty = y`` and
    ``x*(Tx) <= 1 - (2 eps - r)`` otherwise.
    """
    y = np.asarray(y, dtype=float)
    y = y / norm(space, y)
    mats = np.asarray([g.to_numpy() for g in group.elements])
    disp = norms(space, mats @ y - y)
    moved = disp > 1e-12
    alpha = float(disp[moved].min()) if np.any(moved) else math.inf
    if alpha <= 0:
        raise ValidationError("the orbit of y is not discrete")
    eps = 0.5 * _modulus_at(space, y, min(alpha, 2.0), budget, seed) if math.isfinite(alpha) else 1.0
    if eps <= 0:
        raise ValidationError("the modulus at y vanishes at the orbit separation; the space is not LUR there")
    r = min(eps / 2, 0.5)
    rng = np.random.default_rng(seed)
    side = rng.standard_normal(space.dim)
    side -= (side @ y) / (y @ y) * y
    if space.dim == 1:
        raise ValidationError("no sphere point near y other than y in dimension 1")
    x = _boundary_points(space, y, _unit(space, y + side), r)[0]
    r = norm(space, x - y)
    xstar = norming_functional(space, y)
    beta = min(_modulus_at(space, y, r, budget, seed), 2 * eps - r)
    sup = float((mats @ x @ xstar).max())
    return SeparationWitness(x.tolist(), xstar.tolist(), alpha, eps, r, beta, sup,
                             bool(beta > 0 and sup <= 1 - beta + 1e-12))
