"""Pimple renormings of a euclidean space and the display pipeline.

A pimple norm adds spikes ``[-v/lam, v/lam]`` to the unit ball and takes the
gauge of the convex hull:

    ||y||_P = min_t ||y - sum_j t_j v_j|| + sum_j lam_j |t_j|.

Spike parameters are stored through the gap ``kappa = 1 - lam``.  The deeper
levels of the pipeline need gaps far below double precision resolution of
``lam`` itself, so every formula below is written in terms of ``kappa``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (DEFAULT_TOLERANCE, EXACT, LinearMap, MatrixGroup, NormedSpace, UnsupportedSpace,
                   ValidationError, euclidean, exact_vector, group_closure, pimple_space, scalar_mode,
                   to_exact)

DEFAULT_EPS = 0.5
DEFAULT_M = 0.5
DEFAULT_SAMPLES = 2000
CD_MAX_SWEEPS = 500
CD_TOL = 1e-15


# ---------------------------------------------------------------------------
# spike geometry

def sqrt_one_minus_lam_sq(gap):
    """``sqrt(1 - lam^2)`` for ``lam = 1 - gap``."""
    return np.sqrt(gap * (2.0 - gap))


def segment_length(gap):
    """Length of the tangent segment from the tip ``v/lam`` to the unit sphere."""
    return sqrt_one_minus_lam_sq(gap) / (1.0 - gap)


def gap_from_lambda(lam: float) -> float:
    return 1.0 - float(lam)


def single_drop(y: np.ndarray, v: np.ndarray, gap) -> np.ndarray:
    """``||y|| - ||y||_{lam, v}`` for rows of ``y``, computed without cancellation.

    With ``a = |<y, v>|``, ``b = ||y - <y,v> v||`` and ``r = ||y||`` the
    spike lowers the norm exactly when ``a sqrt(1-lam^2) > lam b``; the
    drop is then ``b^2/(r+a) + kappa a - b sqrt(kappa(2-kappa))``.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    a_signed = y @ v
    a = np.abs(a_signed)
    b = np.linalg.norm(y - np.outer(a_signed, v), axis=1)
    r = np.linalg.norm(y, axis=1)
    sq = sqrt_one_minus_lam_sq(gap)
    active = a * sq > (1.0 - gap) * b
    with np.errstate(invalid="ignore", divide="ignore"):
        drop = np.where(r + a > 0, b * b / (r + a), 0.0) + gap * a - b * sq
    return np.where(active, np.maximum(drop, 0.0), 0.0)


def single_pimple_norm(base: NormedSpace, x0: Sequence[float], lam: float, y: Sequence[float],
                       gap: float | None = None) -> float:
    """One-spike norm ``min_t ||y - t x0|| + lam |t|`` (closed form)."""
    _require_euclidean(base)
    v = np.asarray(x0, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ValidationError("spike point must have norm one")
    gap = gap_from_lambda(lam) if gap is None else gap
    if not 0.0 < gap < 0.5:
        raise ValidationError("lambda must lie in (1/2, 1)")
    yv = np.asarray(y, dtype=float)
    return float(np.linalg.norm(yv) - single_drop(yv, v, gap)[0])


def _require_euclidean(base: NormedSpace):
    if base.kind != "euclidean":
        raise UnsupportedSpace("pimple norms are implemented over a euclidean (LUR) base")


# ---------------------------------------------------------------------------
# specs and evaluation

@dataclass(frozen=True)
class PimpleSpec:
    """Spike directions (one per ``+-`` pair), their gaps and level indices."""

    base: NormedSpace
    directions: np.ndarray
    gaps: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        _require_euclidean(self.base)
        d = np.atleast_2d(np.asarray(self.directions, dtype=float))
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "gaps", np.asarray(self.gaps, dtype=float))
        object.__setattr__(self, "levels", np.asarray(self.levels, dtype=int))
        if d.shape[1] != self.base.dim:
            raise ValidationError("spike dimension differs from base")
        if np.any(np.abs(np.linalg.norm(d, axis=1) - 1.0) > 1e-9):
            raise ValidationError("every spike point must have base norm 1")
        if np.any(self.gaps <= 0) or np.any(self.gaps >= 0.5):
            raise ValidationError("every lambda must lie in (1/2, 1)")

    @property
    def lambdas(self) -> np.ndarray:
        return 1.0 - self.gaps

    def to_space(self) -> NormedSpace:
        return pimple_space(self.base, [(tuple(v), 1.0 - g, g) for v, g in zip(self.directions, self.gaps)])

    @classmethod
    def from_space(cls, space: NormedSpace) -> "PimpleSpec":
        if space.kind != "pimple":
            raise ValidationError("not a pimple space")
        dirs = [s[0] for s in space.spikes]
        gaps = [s[2] for s in space.spikes]
        return cls(space.base, np.asarray(dirs), np.asarray(gaps), np.zeros(len(dirs), dtype=int))


def pimple_norms(spec: PimpleSpec, ys, return_coefficients: bool = False):
    """Batch evaluation by cyclic coordinate descent with exact coordinate steps.

    Each coordinate subproblem is a one-spike norm, minimised in closed form;
    the objective is convex, so sweeps decrease it monotonically.
    """
    y = np.atleast_2d(np.asarray(ys, dtype=float))
    v = spec.directions
    gaps = spec.gaps
    lam = 1.0 - gaps
    sq = sqrt_one_minus_lam_sq(gaps)
    t = np.zeros((y.shape[0], v.shape[0]))
    resid = y.copy()
    for _ in range(CD_MAX_SWEEPS):
        change = 0.0
        for j in range(v.shape[0]):
            r = resid + np.outer(t[:, j], v[j])
            a = r @ v[j]
            b = np.linalg.norm(r - np.outer(a, v[j]), axis=1)
            active = np.abs(a) * sq[j] > lam[j] * b
            new = np.where(active, np.sign(a) * (np.abs(a) - lam[j] * b / sq[j]), 0.0)
            change = max(change, float(np.max(np.abs(new - t[:, j]), initial=0.0)))
            t[:, j] = new
            resid = r - np.outer(new, v[j])
        if change <= CD_TOL:
            break
    values = np.linalg.norm(resid, axis=1) + np.abs(t) @ lam
    return (values, t) if return_coefficients else values


def pimple_norm(spec: PimpleSpec, y: Sequence[float]) -> float:
    return float(pimple_norms(spec, [y])[0])


def pimple_norm_of_space(space: NormedSpace, x) -> float:
    return pimple_norm(PimpleSpec.from_space(space), [float(v) for v in x])


def min_single_norms(spec: PimpleSpec, ys) -> np.ndarray:
    """``min`` over spikes of the one-spike norms."""
    y = np.atleast_2d(np.asarray(ys, dtype=float))
    best = np.zeros(y.shape[0])
    for v, g in zip(spec.directions, spec.gaps):
        best = np.maximum(best, single_drop(y, v, g))
    return np.linalg.norm(y, axis=1) - best


def dual_lower_bound(spec: PimpleSpec, y: Sequence[float]) -> float:
    """A dual-feasible value ``<u, y>`` with ``||u|| <= 1`` and ``|<u, v_j>| <= lam_j``.

    Built from the coordinate-descent residual; the primal/dual gap
    certifies the solver.
    """
    val, t = pimple_norms(spec, [y], return_coefficients=True)
    yv = np.asarray(y, dtype=float)
    r = yv - t[0] @ spec.directions
    nr = np.linalg.norm(r)
    if nr < 1e-14:
        j = int(np.argmax(np.abs(t[0])))
        u = np.sign(t[0, j]) * spec.directions[j] * (1.0 - spec.gaps[j])
    else:
        u = r / nr
    ratio = np.abs(spec.directions @ u) / (1.0 - spec.gaps)
    u = u / max(1.0, float(np.max(ratio, initial=0.0)), float(np.linalg.norm(u)))
    return float(u @ yv)


# ---------------------------------------------------------------------------
# groups and sequences

def _group_arrays(group: MatrixGroup) -> np.ndarray:
    return np.stack([g.to_numpy() for g in group.elements])


def _check_orthogonal(group: MatrixGroup, tol: float = 1e-9):
    mats = _group_arrays(group)
    eye = np.eye(group.dim)
    for m in mats:
        if np.max(np.abs(m @ m.T - eye)) > tol:
            raise ValidationError("group is not a group of euclidean isometries")


def _apply_exact(g: LinearMap, x: tuple) -> tuple:
    return g.apply(x)


def prune_dependent(xs: Sequence[Sequence]) -> list[tuple]:
    """Drop vectors dependent on earlier ones, left to right."""
    from .core import _rank

    kept: list[tuple] = []
    for x in xs:
        v = exact_vector(x) if scalar_mode(x) == EXACT else tuple(float(a) for a in x)
        cand = kept + [v]
        if scalar_mode(x) == EXACT and all(scalar_mode(k) == EXACT for k in kept):
            ok = _rank([list(c) for c in cand]) == len(cand)
        else:
            ok = np.linalg.matrix_rank(np.asarray(cand, dtype=float)) == len(cand)
        if ok:
            kept.append(v)
    return kept


def _exact_sq_norm(x) -> Fraction:
    return sum((to_exact(v) ** 2 for v in x), Fraction(0))


def distance_to_span(x, previous) -> float:
    """Euclidean distance of ``x`` to the span of ``previous`` (exact Gram elimination).

    Float inputs fall back to a least-squares projection.
    """
    if any(scalar_mode(p) != EXACT for p in list(previous) + [x]):
        v = np.asarray([float(a) for a in x])
        if not previous:
            return float(np.linalg.norm(v))
        a = np.asarray([[float(t) for t in p] for p in previous]).T
        coef = np.linalg.lstsq(a, v, rcond=None)[0]
        return float(np.linalg.norm(v - a @ coef))
    if not previous:
        return math.sqrt(_exact_sq_norm(x))
    basis: list[tuple[Fraction, ...]] = []
    for p in list(previous) + [x]:
        w = [to_exact(v) for v in p]
        for b in basis:
            c = sum((wi * bi for wi, bi in zip(w, b)), Fraction(0)) / _exact_sq_norm(b)
            w = [wi - c * bi for wi, bi in zip(w, b)]
        basis.append(tuple(w))
    return math.sqrt(_exact_sq_norm(basis[-1]))


@dataclass
class PimpleSchedule:
    """Per-level parameters of the display pipeline."""

    eps: float
    m: float
    alpha: list[float]
    mu: list[Fraction]
    d: list[float]
    c: list[float] = field(default_factory=list)
    eps_k: list[float] = field(default_factory=list)
    delta: list[float] = field(default_factory=list)
    b: list[float] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)
    conditions: dict = field(default_factory=dict)

    @property
    def lambdas(self) -> list[float]:
        return [1.0 - g for g in self.gaps]

    def to_json(self) -> dict:
        return {
            "eps": self.eps, "m": self.m, "alpha": self.alpha, "mu": [str(m) for m in self.mu],
            "d": self.d, "c": self.c, "eps_k": self.eps_k, "delta": self.delta, "b": self.b,
            "gaps": self.gaps, "lambda": self.lambdas, "conditions": self.conditions,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PimpleSchedule":
        return cls(obj["eps"], obj["m"], obj["alpha"], [Fraction(m) for m in obj["mu"]], obj["d"],
                   obj.get("c", []), obj.get("eps_k", []), obj.get("delta", []), obj.get("b", []),
                   obj.get("gaps", []), obj.get("conditions", {}))


def _stabilizer(group: MatrixGroup, points: list[tuple]) -> list[LinearMap]:
    return [g for g in group.elements if all(_fixes(g, p) for p in points)]


def _fixes(g: LinearMap, p: tuple) -> bool:
    if g.exact and scalar_mode(p) == EXACT:
        return g.apply(p) == tuple(p)
    return bool(np.allclose(g.to_numpy() @ np.asarray(p, float), np.asarray(p, float), atol=1e-12))


def _dist(p, q) -> float:
    if scalar_mode(p) == EXACT and scalar_mode(q) == EXACT:
        return math.sqrt(sum((to_exact(a) - to_exact(b)) ** 2 for a, b in zip(p, q)))
    return float(np.linalg.norm(np.asarray(p, float) - np.asarray(q, float)))


def stabilizer_separations(xs: list[tuple], group: MatrixGroup, default: float = 2.0) -> list[float]:
    """Decreasing ``alpha_n``: least displacement of ``x_n`` by its moving stabiliser elements.

    When the stabiliser of ``x_0..x_{n-1}`` fixes ``x_n`` the bound is
    vacuous and ``default`` is used (the diameter of the unit sphere).
    """
    out = []
    for n, x in enumerate(xs):
        stab = _stabilizer(group, xs[:n])
        moved = [_dist(g.apply(x), x) for g in stab if not _fixes(g, x)]
        raw = min(moved) if moved else default
        out.append(min(raw, out[-1]) if out else raw)
    return out


def _largest_power_of_half(bound: float) -> Fraction:
    if bound <= 0:
        raise ValidationError("non-positive bound in the mu schedule")
    k = max(0, math.ceil(-math.log2(bound)))
    while Fraction(1, 2 ** k) > bound:
        k += 1
    while k > 0 and Fraction(1, 2 ** (k - 1)) <= bound:
        k -= 1
    return Fraction(1, 2 ** k)


def mu_conditions(mu: Sequence[Fraction], alpha: Sequence[float], d: Sequence[float], eps: float,
                  xs: Sequence[tuple]) -> dict:
    """Evaluate the four schedule conditions verbatim; returns per-condition booleans."""
    n = len(mu)
    mu_f = [float(m) for m in mu]
    norm_ok = True
    for k in range(n):
        z = [sum(float(mu[j]) * float(xs[j][i]) for j in range(k + 1)) for i in range(len(xs[0]))]
        nz = float(np.linalg.norm(z))
        norm_ok &= 1 - eps / 2 <= nz <= 1 + eps / 2 and 1 - eps / 2 <= 1 / nz <= 1 + eps / 2
    tail_ok = all(sum(mu_f[k + 1:]) < min(alpha[k] * mu_f[k] / 4, alpha[k] / 16, mu_f[k]) or k == n - 1
                  for k in range(n))
    step_ok = all(8 * mu_f[k + 1] <= min(alpha[k] * mu_f[k] / 24, eps * d[k] * mu_f[k]) for k in range(n - 1))
    sep_ok = all((1 - eps) * d[k + 1] * mu_f[k + 1] <= alpha[k] * mu_f[k] / 8 for k in range(n - 1))
    return {"norm_bounds": bool(norm_ok), "tail_sum": bool(tail_ok), "step": bool(step_ok),
            "separation": bool(sep_ok)}


def distinguished_mu(xs: Sequence[Sequence], group: MatrixGroup, eps: float = DEFAULT_EPS) -> PimpleSchedule:
    """Coefficients ``mu`` (powers of 1/2, ``mu_0 = 1``) meeting the schedule conditions.

    Each ``mu_{k+1}`` is the largest power of 1/2 below half of the tightest
    bound implied by the conditions; they are then re-checked verbatim.
    """
    if not 0 < eps < 1:
        raise ValidationError("eps must lie in (0, 1)")
    x = prune_dependent(xs)
    if len(x) != len(xs):
        raise ValidationError("x sequence is linearly dependent; prune it first")
    alpha = stabilizer_separations(x, group)
    d = [distance_to_span(x[k], x[:k]) for k in range(len(x))]
    mu = [Fraction(1)]
    for k in range(len(x) - 1):
        a, m = alpha[k], float(mu[k])
        bound = min(a * m / 8, a / 32, m / 2, a * m / 192, eps * d[k] * m / 8,
                    a * m / (8 * (1 - eps) * d[k + 1]), eps / 8)
        mu.append(_largest_power_of_half(bound / 2))
    sched = PimpleSchedule(eps, DEFAULT_M, alpha, mu, d)
    sched.conditions = mu_conditions(mu, alpha, d, eps, x)
    if not all(sched.conditions.values()):
        raise ValidationError(f"mu schedule violates {sched.conditions}")
    return sched


@dataclass
class SeparationReport:
    a_ok: bool
    b_ok: bool
    a_violations: int
    b_violations: int
    a_min_margin: float
    b_min_margin: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def build_y_sequence(xs: Sequence[Sequence], schedule: PimpleSchedule, group: MatrixGroup
                     ) -> tuple[list[np.ndarray], list[tuple], SeparationReport]:
    """Normalised partial sums ``y_n`` with an exhaustive check of both separation bounds.

    (a) every ``g`` fixes ``y_n`` or moves it by at least
    ``(1-eps) mu_{n+1} d_{n+1}``; (b) ``||y_n - g y_m|| >= (1-eps) mu_{m+1} d_{m+1}``
    for ``n > m``.  For the last index the bound ``alpha_n mu_n / 4`` is used.
    Also returns the unnormalised partial sums (exact when inputs are).
    """
    x = [tuple(v) for v in xs]
    n = len(x)
    mu, d, eps = schedule.mu, schedule.d, schedule.eps
    zs, ys = [], []
    for k in range(n):
        if scalar_mode(x[0]) == EXACT:
            z = tuple(sum((mu[j] * to_exact(x[j][i]) for j in range(k + 1)), Fraction(0)) for i in range(len(x[0])))
        else:
            z = tuple(sum(float(mu[j]) * x[j][i] for j in range(k + 1)) for i in range(len(x[0])))
        zs.append(z)
        zf = np.asarray([float(v) for v in z])
        ys.append(zf / np.linalg.norm(zf))

    def bound(k: int) -> float:
        if k + 1 < n:
            return (1 - eps) * float(mu[k + 1]) * d[k + 1]
        return schedule.alpha[k] * float(mu[k]) / 4

    mats = _group_arrays(group)
    a_viol = b_viol = 0
    a_margin = b_margin = math.inf
    for k in range(n):
        for g, gm in zip(group.elements, mats):
            if _fixes(g, zs[k]):
                continue
            dist = float(np.linalg.norm(ys[k] - gm @ ys[k]))
            a_margin = min(a_margin, dist - bound(k))
            if dist < bound(k) * (1 - 1e-12):
                a_viol += 1
    for k in range(n):
        for m_ in range(k):
            for gm in mats:
                dist = float(np.linalg.norm(ys[k] - gm @ ys[m_]))
                b_margin = min(b_margin, dist - bound(m_))
                if dist < bound(m_) * (1 - 1e-12):
                    b_viol += 1
    rep = SeparationReport(a_viol == 0, b_viol == 0, a_viol, b_viol,
                           a_margin if a_margin < math.inf else 0.0, b_margin if b_margin < math.inf else 0.0)
    return ys, zs, rep


def signed_orbit(y: np.ndarray, group: MatrixGroup, tol: float = 1e-12) -> np.ndarray:
    """Distinct points of ``G y`` (closed under sign since ``-Id`` is in G)."""
    pts: list[np.ndarray] = []
    for gm in _group_arrays(group):
        p = gm @ y
        if not any(np.linalg.norm(p - q) <= tol for q in pts):
            pts.append(p)
    return np.asarray(pts)


def sign_representatives(points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    reps: list[np.ndarray] = []
    for p in points:
        if not any(np.linalg.norm(p - q) <= tol or np.linalg.norm(p + q) <= tol for q in reps):
            reps.append(p)
    return np.asarray(reps)


def orbit_separations(orbits: list[np.ndarray]) -> list[float]:
    """``c_k``: least nonzero distance from a level-k orbit point to any spike point."""
    everything = np.vstack(orbits)
    out = []
    for orb in orbits:
        dmat = np.linalg.norm(orb[:, None, :] - everything[None, :, :], axis=2)
        nz = dmat[dmat > 1e-12]
        out.append(float(nz.min()) if nz.size else 2.0)
    return out


# ---------------------------------------------------------------------------
# lambda selection and property checks

@dataclass
class PropertyReport:
    verdict: str
    samples: int
    max_decomposition_gap: float
    max_duality_gap: float
    drop_outside_delta: int
    lower_bound_violations: int
    cap_separation_min: float
    cap_separation_required: float
    segment_ok: bool
    failures: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _sphere(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    z = rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _near_spike_samples(rng, spec: PimpleSpec, per_spike: int, radius_scale) -> np.ndarray:
    """Unit vectors at chord distance about ``radius_scale[j]`` from each spike."""
    out = []
    dim = spec.base.dim
    for v, r in zip(spec.directions, radius_scale):
        for _ in range(per_spike):
            w = rng.standard_normal(dim)
            w -= (w @ v) * v
            nw = np.linalg.norm(w)
            if nw == 0 or dim == 1:
                out.append(v.copy())
                continue
            theta = 2 * math.asin(min(1.0, r * rng.uniform(0.2, 2.0) / 2))
            out.append(math.cos(theta) * v + math.sin(theta) * w / nw)
    return np.asarray(out).reshape(-1, dim)


def _cap_points(rng, v: np.ndarray, gap: float, count: int) -> np.ndarray:
    """Points of the spike cap: between the tip and the tangent circle."""
    dim = v.shape[0]
    tip = v / (1.0 - gap)
    theta = math.atan(float(segment_length(gap)))
    pts = []
    for _ in range(count):
        w = rng.standard_normal(dim)
        w -= (w @ v) * v
        nw = np.linalg.norm(w)
        q = v if nw == 0 else math.cos(theta) * v + math.sin(theta) * w / nw
        tau = rng.uniform(0.0, 1.0)
        pts.append((1 - tau) * tip + tau * q)
    return np.asarray(pts)


def check_pimple_properties(spec: PimpleSpec, schedule: PimpleSchedule, samples: int = 1000,
                            seed: int = 0, tolerance: float = 1e-7) -> PropertyReport:
    """Sampled checks of the multi-spike norm against its one-spike pieces.

    (i) the norm equals the minimum of the one-spike norms; (ii) wherever it
    drops below the base norm some spike lies within ``delta_k``; (iii)
    caps of distinct spikes stay ``c_min/3`` apart.  Also checks the lower
    estimate ``m ||y||`` and the tangent segment bounds.
    """
    rng = np.random.default_rng(seed)
    dim = spec.base.dim
    delta = np.asarray([schedule.delta[k] for k in spec.levels])
    ys = np.vstack([_sphere(rng, samples, dim), _near_spike_samples(rng, spec, 4, delta)])
    multi = pimple_norms(spec, ys)
    single = min_single_norms(spec, ys)
    decomp = float(np.max(np.abs(multi - single)))
    duality = max(pimple_norm(spec, y) - dual_lower_bound(spec, y) for y in ys[: min(len(ys), 200)])
    failures = []
    if decomp > tolerance:
        failures.append(f"decomposition gap {decomp:.3e}")

    # (ii): a drop, detected by the cancellation-free one-spike formula, must sit near its spike
    outside = 0
    for v, g, dk in zip(spec.directions, spec.gaps, delta):
        dropping = single_drop(ys, v, g) > 0
        chord = np.minimum(np.linalg.norm(ys - v, axis=1), np.linalg.norm(ys + v, axis=1))
        outside += int(np.sum(dropping & (chord >= dk)))
    if outside:
        failures.append(f"{outside} drops outside delta")
    low = int(np.sum(multi < schedule.m * np.linalg.norm(ys, axis=1) - 1e-12))
    if low:
        failures.append(f"{low} lower-bound violations")

    c_min = min(schedule.c) if schedule.c else 2.0
    caps = [_cap_points(rng, v, g, 8) for v, g in zip(spec.directions, spec.gaps)]
    caps += [-c for c in caps]
    sep = math.inf
    for i, j in itertools.combinations(range(len(caps)), 2):
        sep = min(sep, float(np.min(np.linalg.norm(caps[i][:, None] - caps[j][None], axis=2))))
    if sep < c_min / 3:
        failures.append(f"cap separation {sep:.3e} < c_min/3")

    seg_ok = True
    for k, (g, lev) in enumerate(zip(spec.gaps, spec.levels)):
        s = float(segment_length(g))
        lam_inv_minus_1 = g / (1.0 - g)
        if not (schedule.b[lev] * (1 + 1e-12) >= s >= lam_inv_minus_1):
            seg_ok = False
    if not seg_ok:
        failures.append("tangent segment outside [1/lam - 1, b_k]")
    return PropertyReport("PASS" if not failures else "FAIL", len(ys), decomp, float(duality), outside, low,
                          sep if sep < math.inf else 0.0, c_min / 3, seg_ok, failures)


def select_lambda(base: NormedSpace, orbits: list[np.ndarray], c: Sequence[float], m: float = DEFAULT_M,
                  samples: int = DEFAULT_SAMPLES, seed: int = 0, max_rounds: int = 40
                  ) -> tuple[PimpleSpec, dict, PropertyReport]:
    """Spike gaps for each level, starting from the analytic choice and shrinking on failure.

    ``delta_k`` follows the constraints ``delta_k <= min_{i<=k} c_i/4``,
    ``delta_k <= eps_k/2`` with ``eps_k = c_k/2`` and
    ``(3/2) delta_k <= 1 - sqrt(1 - c_k^2/4)`` (the euclidean modulus).
    The gap ``delta^2/2`` makes the one-spike drop region exactly the
    ``delta``-ball around the spike; it is then capped by
    ``1/lam - 1 <= delta/3``, by the previous level's gap, and by halving the
    tangent segment from level to level so that segment lengths identify
    levels.  ``b_k`` is the tangent segment length.
    """
    _require_euclidean(base)
    n = len(orbits)
    eps_k = [ck / 2 for ck in c]
    delta: list[float] = []
    for k in range(n):
        modulus_gap = (c[k] ** 2 / 4) / (1 + math.sqrt(1 - c[k] ** 2 / 4))
        dk = min(min(c[: k + 1]) / 4, eps_k[k] / 2, (2 / 3) * modulus_gap)
        delta.append(min(dk, delta[-1]) if delta else dk)
    gaps: list[float] = []
    for k in range(n):
        g = delta[k] ** 2 / 2
        g = min(g, (delta[k] / 3) / (1 + delta[k] / 3), 1 - m - 1e-12)
        if gaps:
            g = min(g, gaps[-1])
            while segment_length(g) >= 0.5 * segment_length(gaps[-1]):
                g /= 4
        gaps.append(float(g))
    reps = [sign_representatives(o) for o in orbits]
    directions = np.vstack(reps)
    levels = np.concatenate([[k] * len(r) for k, r in enumerate(reps)])
    report = None
    for _ in range(max_rounds):
        spec = PimpleSpec(base, directions, np.asarray([gaps[k] for k in levels]), levels)
        sched = PimpleSchedule(0.0, m, [], [], [], list(c), eps_k, delta,
                               [float(segment_length(g)) for g in gaps], gaps)
        report = check_pimple_properties(spec, sched, samples, seed, tolerance=1e-9)
        if report.verdict == "PASS":
            break
        gaps = [g / 4 for g in gaps]
    info = {"delta": delta, "eps_k": eps_k, "b": [float(segment_length(g)) for g in gaps], "gaps": gaps}
    return spec, info, report


# ---------------------------------------------------------------------------
# display pipeline

@dataclass
class DisplayResult:
    space: NormedSpace
    spec: PimpleSpec
    group: MatrixGroup
    schedule: PimpleSchedule
    ys: list[np.ndarray]
    extremes: np.ndarray
    extreme_levels: np.ndarray
    separation: SeparationReport
    properties: PropertyReport
    verdicts: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from .core import group_to_json, space_to_json

        return {
            "space": space_to_json(self.space),
            "group": group_to_json(self.group),
            "schedule": self.schedule.to_json(),
            "y": [list(map(float, y)) for y in self.ys],
            "E": [{"point": list(map(float, p)), "level": int(k)} for p, k in zip(self.extremes, self.extreme_levels)],
            "levels": [int(k) for k in self.spec.levels],
            "separation": self.separation.to_json(),
            "properties": self.properties.to_json(),
            "verdicts": self.verdicts,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DisplayResult":
        from .core import group_from_json, space_from_json

        space = space_from_json(obj["space"])
        spec = PimpleSpec.from_space(space)
        spec = PimpleSpec(spec.base, spec.directions, spec.gaps, np.asarray(obj["levels"], dtype=int))
        sep = SeparationReport(**obj["separation"])
        props = PropertyReport(**obj["properties"])
        return cls(space, spec, group_from_json(obj["group"]), PimpleSchedule.from_json(obj["schedule"]),
                   [np.asarray(y) for y in obj["y"]], np.asarray([e["point"] for e in obj["E"]]),
                   np.asarray([e["level"] for e in obj["E"]], dtype=int), sep, props, obj.get("verdicts", {}))


def display_renorm(group: MatrixGroup, base: NormedSpace | None = None, xs: Sequence[Sequence] | None = None,
                   eps: float = DEFAULT_EPS, m: float = DEFAULT_M, samples: int = DEFAULT_SAMPLES,
                   seed: int = 0) -> DisplayResult:
    """Renorm ``base`` so that its isometry group is ``group``.

    Pipeline: schedule ``mu`` -> partial sums ``y_n`` -> orbits and
    separations ``c_k`` -> spike gaps -> pimple norm over all orbits.
    """
    base = base or euclidean(group.dim)
    _require_euclidean(base)
    if base.dim != group.dim:
        raise ValidationError("group and base dimensions differ")
    if not group.contains_minus_identity():
        raise ValidationError("the group must contain -Id")
    _check_orthogonal(group)
    if xs is None:
        xs = [tuple(Fraction(int(i == j)) for j in range(base.dim)) for i in range(base.dim)]
    x = prune_dependent(xs)
    if len(x) < base.dim:
        raise ValidationError("x sequence does not span the space")
    for v in x:
        if abs(math.sqrt(float(sum(float(a) ** 2 for a in v))) - 1) > 1e-12:
            raise ValidationError("x vectors must be unit vectors")
    sched = distinguished_mu(x, group, eps)
    ys, _, sep = build_y_sequence(x, sched, group)
    orbits = [signed_orbit(y, group) for y in ys]
    c = orbit_separations(orbits)
    spec, info, props = select_lambda(base, orbits, c, m, samples, seed)
    sched.c, sched.eps_k, sched.delta, sched.b, sched.gaps = c, info["eps_k"], info["delta"], info["b"], info["gaps"]
    sched.m = m
    extremes = np.vstack([o / (1.0 - sched.gaps[k]) for k, o in enumerate(orbits)])
    levels = np.concatenate([[k] * len(o) for k, o in enumerate(orbits)])
    verdicts = {"separation": "PASS" if sep.a_ok and sep.b_ok else "FAIL",
                "properties": props.verdict,
                "mu_conditions": "PASS" if all(sched.conditions.values()) else "FAIL"}
    return DisplayResult(spec.to_space(), spec, group, sched, ys, extremes, levels, sep, props, verdicts)


@dataclass
class ExtremeIsometryReport:
    verdict: str
    candidates: int
    members: int
    rejected: int
    min_rejection_deviation: float
    max_member_deviation: float
    unexplained: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def isometry_group_from_extremes(result: DisplayResult, tolerance: float = DEFAULT_TOLERANCE,
                                 samples: int = 500, seed: int = 0
                                 ) -> tuple[list[LinearMap], ExtremeIsometryReport]:
    """Linear maps permuting the isolated extreme points level by level, then certified.

    Levels are told apart by the tangent segment lengths at their spike tips.
    A candidate is fixed by the images of the tips ``y_k / lam_k``; it must
    map every level onto itself.  Candidates within ``tolerance`` of a group
    element are accepted as that element; any other candidate is rejected
    when its sampled norm deviation exceeds ``10 * tolerance``.
    """
    spec = result.spec
    gaps = result.schedule.gaps
    lengths = [float(segment_length(g)) for g in gaps]
    if len(set(np.round(np.log(lengths), 9))) != len(lengths):
        raise ValidationError("levels are not distinguished by their segment lengths")
    n = spec.base.dim
    levels = sorted(set(int(k) for k in result.extreme_levels))
    if len(levels) < n:
        raise ValidationError("extreme points do not span the space")
    by_level = {k: result.extremes[result.extreme_levels == k] for k in levels}
    tips = np.asarray([result.ys[k] / (1.0 - gaps[k]) for k in levels[:n]]).T
    tips_inv = np.linalg.inv(tips)
    mats = _group_arrays(result.group)
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal((samples, n))
    base_vals = pimple_norms(spec, probe)
    accepted: list[LinearMap] = []
    members = rejected = unexplained = count = 0
    min_rej, max_mem = math.inf, 0.0
    for images in itertools.product(*[range(len(by_level[k])) for k in levels[:n]]):
        w = np.asarray([by_level[k][i] for k, i in zip(levels[:n], images)]).T
        t = w @ tips_inv
        if not all(_maps_onto(t, by_level[k]) for k in levels):
            continue
        count += 1
        match = next((i for i, gm in enumerate(mats) if np.max(np.abs(gm - t)) <= tolerance), None)
        dev = float(np.max(np.abs(pimple_norms(spec, probe @ t.T) - base_vals)))
        if match is not None:
            members += 1
            max_mem = max(max_mem, dev)
            accepted.append(result.group.elements[match])
        elif dev > 10 * tolerance:
            rejected += 1
            min_rej = min(min_rej, dev)
        else:
            unexplained += 1
            accepted.append(LinearMap.from_rows(t.tolist()))
    keys = {g.key() for g in accepted}
    equal = keys == result.group.matrix_set() and unexplained == 0
    rep = ExtremeIsometryReport("EQUAL" if equal else "MISMATCH", count, members, rejected,
                                min_rej if min_rej < math.inf else 0.0, max_mem, unexplained)
    return accepted, rep


def _maps_onto(t: np.ndarray, points: np.ndarray, tol: float = 1e-8) -> bool:
    img = points @ t.T
    d = np.linalg.norm(img[:, None, :] - points[None, :, :], axis=2)
    scale = max(1.0, float(np.max(np.linalg.norm(points, axis=1))))
    hits = d <= tol * scale
    return bool(np.all(hits.sum(axis=1) == 1) and np.all(hits.sum(axis=0) == 1))


# ---------------------------------------------------------------------------
# group embeddings

@dataclass
class EmbeddingReport:
    dim: int
    orbits: list[tuple]
    homomorphism_ok: bool
    faithful: bool
    sign_of_s: list[int]

    def to_json(self) -> dict:
        return {"dim": self.dim, "orbits": [list(map(list, o)) for o in self.orbits],
                "homomorphism_ok": self.homomorphism_ok, "faithful": self.faithful, "sign_of_s": self.sign_of_s}


def central_involution_embedding(h, s: Sequence[int], r: int = 0, mode: str = "copies"
                                 ) -> tuple[MatrixGroup, dict, EmbeddingReport]:
    """Signed-permutation image of ``h`` in which the central involution ``s`` acts as ``-Id``.

    The moved set ``B`` of ``s`` is crossed with a second factor: ``r + 1``
    inert copies (``mode="copies"``, ``g(n, j) = (g n, j)``) or the base
    points themselves (``mode="points"``, ``g(n, j) = (g n, g j)``).  The
    orbits of ``s`` on this set are pairs; ``g`` permutes them by
    ``sigma_g`` and gets sign ``-1`` on a pair whose order it reverses.
    """
    from .graphs import compose_perm

    s = tuple(s)
    elems = list(h.elements)
    ident = tuple(range(h.degree))
    if s not in set(elems):
        raise ValidationError("s is not an element of h")
    if s == ident or compose_perm(s, s) != ident:
        raise ValidationError("s must be an involution different from the identity")
    if any(compose_perm(g, s) != compose_perm(s, g) for g in elems):
        raise ValidationError("s is not central in h")
    moved = [n for n in range(h.degree) if s[n] != n]
    if mode == "copies":
        second = list(range(r + 1))
        act = lambda g, p: (g[p[0]], p[1])  # noqa: E731
    elif mode == "points":
        second = list(range(h.degree))
        act = lambda g, p: (g[p[0]], g[p[1]])  # noqa: E731
    else:
        raise ValidationError("mode must be 'copies' or 'points'")
    points = sorted(itertools.product(moved, second))
    orbits: list[tuple] = []
    seen = set()
    for p in points:
        if p in seen:
            continue
        q = act(s, p)
        pair = tuple(sorted((p, q)))
        orbits.append(pair)
        seen.update(pair)
    where = {p: i for i, o in enumerate(orbits) for p in o}
    dim = len(orbits)

    def image(g) -> LinearMap:
        rows = [[Fraction(0)] * dim for _ in range(dim)]
        for i, (lo, hi) in enumerate(orbits):
            glo, ghi = act(g, lo), act(g, hi)
            k = where[glo]
            rows[k][i] = Fraction(1 if glo < ghi else -1)
        return LinearMap(tuple(tuple(rw) for rw in rows))

    maps = {g: image(g) for g in elems}
    faithful = len({m.matrix for m in maps.values()}) == len(elems)
    if not faithful:
        raise ValidationError("h does not act faithfully on the chosen index set")
    hom = all(maps[g].compose(maps[f]).matrix == maps[compose_perm(g, f)].matrix for g in elems for f in elems)
    group = group_closure(list(maps.values()), cap=len(elems))
    sign_s = [int(maps[s].matrix[i][i]) for i in range(dim)]
    rep = EmbeddingReport(dim, orbits, hom, faithful, sign_s)
    return group, maps, rep


def block_diagonal(g: LinearMap, copies: int) -> LinearMap:
    n = g.dim
    rows = []
    zero = Fraction(0) if g.exact else 0.0
    for c in range(copies):
        for i in range(n):
            row = [zero] * (n * copies)
            for j in range(n):
                row[c * n + j] = g.matrix[i][j]
            rows.append(tuple(row))
    return LinearMap(tuple(rows))


def power_display(group: MatrixGroup, witnesses: Sequence[Sequence], alpha: float,
                  samples: int = DEFAULT_SAMPLES, seed: int = 0) -> tuple[DisplayResult, dict]:
    """Display ``group`` on the euclidean ``l2``-power ``X^r`` through its diagonal action.

    The concatenated witness point is checked to be distinguished with
    displacement at least ``alpha`` and leads the spanning sequence.
    """
    r = len(witnesses)
    if r == 0:
        raise ValidationError("at least one witness is required")
    n = group.dim
    point = np.concatenate([np.asarray([float(v) for v in w]) for w in witnesses])
    mats = _group_arrays(group)
    ident = np.eye(n)
    disp = min((float(np.linalg.norm(np.concatenate([gm @ np.asarray([float(v) for v in w], float)
                                                     for w in witnesses]) - point))
                for gm in mats if np.max(np.abs(gm - ident)) > 1e-12), default=math.inf)
    if disp < alpha - 1e-12:
        raise ValidationError(f"witnesses move some element by only {disp:.3e} < alpha")
    big = group_closure([block_diagonal(g, r) for g in group.elements], cap=group.order)
    lead = point / np.linalg.norm(point)
    xs = [tuple(lead)] + [tuple(float(i == j) for j in range(n * r)) for i in range(n * r)]
    xs = prune_dependent(xs)
    result = display_renorm(big, euclidean(n * r), xs, samples=samples, seed=seed)
    return result, {"copies": r, "displacement": disp, "alpha": alpha, "distinguished": disp >= alpha}
