"""The acceptance catalog: one check per criterion, each with a verdict, timing and details.

Shared by ``tests/test_acceptance.py`` and ``isodisplay selftest``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .core import DEFAULT_TOLERANCE, ValidationError, ell_infinity, euclidean
from .fixtures import DISPLAY_GROUPS, GRAPHS, fixture


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float
    detail: str
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"criterion {self.number:2d} {'PASS' if self.passed else 'FAIL'} ({self.seconds:.2f}s) {self.title}: " \
               f"{self.detail}"

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _timed(number: int, title: str, limit: float | None, body: Callable[[], tuple[bool, str, dict]]
           ) -> CriterionResult:
    start = time.perf_counter()
    ok, detail, data = body()
    seconds = time.perf_counter() - start
    if limit is not None and seconds >= limit:
        ok = False
        detail += f"; runtime {seconds:.1f}s over the {limit:.0f}s limit"
    return CriterionResult(number, title, ok, seconds, detail, data)


def criterion_1(seed: int = 0) -> CriterionResult:
    from .graph_norm import gamma_space, pair_norm
    from .graphs import path_metric

    def body():
        bad = []
        pairs = 0
        for name in GRAPHS:
            g = fixture(name)
            space = gamma_space(g)
            d = path_metric(g)
            for n in range(g.n):
                for m in range(g.n):
                    if n == m:
                        continue
                    pairs += 1
                    plus = pair_norm(space, n, m, 1)
                    minus = pair_norm(space, n, m, -1)
                    if plus != 1 + Fraction(1, 1 + 2 * int(d[n, m])) or minus != 1 + Fraction(1, 2 + 2 * int(d[n, m])):
                        bad.append((name, n, m, str(plus), str(minus)))
        return not bad, f"{pairs} ordered pairs, {len(bad)} mismatches", {"mismatches": bad}

    return _timed(1, "graph norm pair closed forms", 1.0, body)


def criterion_2(seed: int = 0) -> CriterionResult:
    from .graph_norm import extreme_points, gamma_space, signed_units

    def body():
        counts = {}
        ok = True
        for name in GRAPHS:
            g = fixture(name)
            if g.n > 8:
                continue
            verts = extreme_points(gamma_space(g))
            counts[name] = len(verts)
            ok &= set(verts) == signed_units(g.n)
        detail = ", ".join(f"{k} {v} vertices (2n = {2 * fixture(k).n})" for k, v in counts.items())
        return ok, detail, {"vertex_counts": counts}

    return _timed(2, "graph norm ball vertices are the signed units", 30.0, body)


def criterion_3(seed: int = 0) -> CriterionResult:
    from .graph_norm import brute_force_signed_maps, gamma_space, is_pm_automorphism_group
    from .graphs import automorphism_group

    def body():
        orders = {}
        ok = True
        for name in GRAPHS:
            g = fixture(name)
            space = gamma_space(g)
            maps = brute_force_signed_maps(space)
            aut = automorphism_group(g)
            good = is_pm_automorphism_group(space, maps)
            orders[name] = (len(maps), 2 * aut.order)
            ok &= good
        detail = ", ".join(f"{k} {a}={b}" for k, (a, b) in orders.items())
        return ok, detail, {"orders": orders}

    return _timed(3, "brute-force signed isometries equal +-Aut", 60.0, body)


def criterion_4(seed: int = 0) -> CriterionResult:
    from .graphs import build_display_graph, verify_gadget

    def body():
        verdicts = {}
        for name in ("trivial-1", "trivial-3", "S2", "C4", "S3"):
            h = fixture(name)
            g, layout = build_display_graph(h, (1, 2))
            verdicts[name] = verify_gadget(g, layout, h).verdict
        required = all(verdicts[k] == "EQUAL" for k in ("trivial-1", "trivial-3", "S2"))
        gaps = [k for k, v in verdicts.items() if v == "K-CLOSURE-GAP"]
        detail = ", ".join(f"{k} {v}" for k, v in verdicts.items())
        if gaps:
            detail += f"; K-CLOSURE-GAP reported for {gaps}"
        return required, detail, {"verdicts": verdicts}

    return _timed(4, "gadget graphs at depths {1,2}", None, body)


def criterion_5(seed: int = 0) -> CriterionResult:
    from .pimple import (_near_spike_samples, min_single_norms, orbit_separations, pimple_norms, select_lambda,
                         signed_orbit)
    from .fixtures import pm_identity

    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        near_worst = 0.0
        configs = 0
        for dim in (2, 3, 4):
            group = pm_identity(dim)
            for levels in (1, 2, 3):
                ys = rng.standard_normal((levels, dim))
                ys /= np.linalg.norm(ys, axis=1)[:, None]
                orbits = [signed_orbit(y, group) for y in ys]
                c = orbit_separations(orbits)
                spec, info, _ = select_lambda(euclidean(dim), orbits, c, samples=200, seed=seed)
                sphere = rng.standard_normal((1000, dim))
                sphere /= np.linalg.norm(sphere, axis=1)[:, None]
                worst = max(worst, float(np.max(np.abs(pimple_norms(spec, sphere) - min_single_norms(spec, sphere)))))
                delta = np.asarray([info["delta"][k] for k in spec.levels])
                near = _near_spike_samples(rng, spec, 50, delta)
                near_worst = max(near_worst, float(np.max(np.abs(pimple_norms(spec, near) - min_single_norms(spec, near)))))
                configs += 1
        ok = worst <= 1e-7 and near_worst <= 1e-7
        detail = f"{configs} configurations, max gap {worst:.2e} on sphere samples, {near_worst:.2e} near spikes"
        return ok, detail, {"sphere_gap": worst, "near_gap": near_worst}

    return _timed(5, "multi-spike norm equals min of single-spike norms", None, body)


def criterion_6(seed: int = 0) -> CriterionResult:
    from .pimple import build_y_sequence, distinguished_mu

    def body():
        out = {}
        for name in DISPLAY_GROUPS:
            group = fixture(name)
            xs = [tuple(Fraction(int(i == j)) for j in range(group.dim)) for i in range(group.dim)]
            sched = distinguished_mu(xs, group)
            _, _, rep = build_y_sequence(xs, sched, group)
            out[name] = (rep.a_violations, rep.b_violations)
        total = sum(a + b for a, b in out.values())
        return total == 0, f"{len(out)} groups, {total} violations", {"violations": out}

    return _timed(6, "separation bounds (a) and (b)", None, body)


def criterion_7(seed: int = 0) -> CriterionResult:
    from .pimple import display_renorm, isometry_group_from_extremes

    def body():
        out = {}
        ok = True
        for name in DISPLAY_GROUPS:
            group = fixture(name)
            result = display_renorm(group, seed=seed)
            _, rep = isometry_group_from_extremes(result, DEFAULT_TOLERANCE, seed=seed)
            clean = rep.verdict == "EQUAL" and rep.unexplained == 0 and \
                rep.rejected == rep.candidates - rep.members and \
                (rep.rejected == 0 or rep.min_rejection_deviation > 10 * DEFAULT_TOLERANCE)
            out[name] = {"verdict": rep.verdict, "order": group.order, "rejected": rep.rejected,
                         "min_rejection": rep.min_rejection_deviation, "pipeline": result.verdicts}
            ok &= clean and all(v == "PASS" for v in result.verdicts.values())
        detail = ", ".join(f"{k} {v['verdict']}" for k, v in out.items())
        return ok, detail, out

    return _timed(7, "display round trip", 300.0, body)


def criterion_8(seed: int = 0) -> CriterionResult:
    from .free_space import ae_norm_dual, ae_norm_primal, exhaustive_transport, random_metric, random_molecule

    def body():
        rng = np.random.default_rng(seed)
        gap = oracle_gap = 0.0
        oracle_cases = 0
        for k in range(500):
            space = random_metric(rng, int(rng.integers(3, 13)), ("graph", "weighted", "generic")[k % 3])
            v = random_molecule(rng, space)
            p = ae_norm_primal(space, v)
            d = ae_norm_dual(space, v)
            gap = max(gap, abs(p.value - d.value), abs(p.cost(space) - p.value))
            if np.count_nonzero(v) <= 8:
                oracle_cases += 1
                oracle_gap = max(oracle_gap, abs(p.value - exhaustive_transport(space, v)))
        ok = gap <= 1e-9 and oracle_gap <= 1e-9
        return ok, f"500 molecules, duality gap {gap:.1e}, oracle gap {oracle_gap:.1e} on {oracle_cases}", \
            {"gap": gap, "oracle_gap": oracle_gap}

    return _timed(8, "free-space norm duality", None, body)


def _free_instances(seed: int):
    from .free_space import equilateral, random_metric

    rng = np.random.default_rng(seed)
    spaces = [equilateral(3)]
    kinds = ("graph", "weighted", "generic")
    while len(spaces) < 25:
        spaces.append(random_metric(rng, int(rng.integers(3, 8)), kinds[len(spaces) % 3]))
    return spaces


def criterion_9(seed: int = 0) -> CriterionResult:
    from .free_space import ae_isometry_group, both_transforms

    def body():
        orders = []
        ok = True
        for space in _free_instances(seed):
            _, rep = ae_isometry_group(both_transforms(space), seed=seed)
            orders.append((space.size, rep.order, rep.metric_group_order))
            ok &= rep.structure_ok and rep.order == 2 * rep.metric_group_order and rep.extra_maps == 0
        eq = orders[0][1]
        ok &= eq == 12
        return ok, f"25 spaces, equilateral order {eq}, all orders twice the metric group: {ok}", \
            {"orders": orders}

    return _timed(9, "free-space isometries", None, body)


def criterion_10(seed: int = 0) -> CriterionResult:
    from .free_space import metric_isometry_group, transform_bounded, transform_concave

    def body():
        bad = 0
        for space in _free_instances(seed):
            d2 = transform_bounded(space)
            d3, _ = transform_concave(d2)
            a, b, c = (set(metric_isometry_group(s)) for s in (space, d2, d3))
            bad += not (a == b == c)
        return bad == 0, f"25 spaces, {bad} disagreements", {"disagreements": bad}

    return _timed(10, "transform invariance of metric isometries", None, body)


def criterion_11(seed: int = 0) -> CriterionResult:
    from .core import group_closure, permutation_matrix
    from .diagnostics import DEFAULT_EPS_GRID, convex_transitivity_test, euclidean_delta, lur_modulus, \
        separation_witness
    from .pimple import build_y_sequence, distinguished_mu

    def body():
        lur_err = 0.0
        for dim, x in ((2, [1.0, 0.0]), (3, [0.6, 0.0, 0.8])):
            table = lur_modulus(euclidean(dim), x, DEFAULT_EPS_GRID, seed=seed).table
            lur_err = max(lur_err, max(abs(d - euclidean_delta(e)) for e, d in table))
        hyper = group_closure([permutation_matrix([1, 0]), permutation_matrix([0, 1], [-1, 1])])
        ct = convex_transitivity_test(ell_infinity(2), hyper, [1.0, 0.0], [0.5, 0.5])
        witnesses = {}
        for name in DISPLAY_GROUPS:
            group = fixture(name)
            xs = [tuple(Fraction(int(i == j)) for j in range(group.dim)) for i in range(group.dim)]
            ys, _, _ = build_y_sequence(xs, distinguished_mu(xs, group), group)
            try:
                w = separation_witness(euclidean(group.dim), group, ys[0], seed=seed)
                witnesses[name] = {"beta": w.beta, "sup": w.sup, "verified": w.verified}
            except ValidationError as exc:
                witnesses[name] = {"verified": False, "reason": str(exc)}
        failed = [k for k, v in witnesses.items() if not v["verified"]]
        ok = lur_err <= 1e-6 and ct.kind == "fails" and ct.witness is not None and not failed
        detail = f"LUR error {lur_err:.1e}, l_inf test {ct.kind} (sup {ct.sup}), separation witnesses " \
                 f"verified for {len(witnesses) - len(failed)}/{len(witnesses)}"
        if failed:
            reasons = [f"{k} ({witnesses[k].get('reason', 'bound')})" for k in failed]
            detail += "; not verified: " + ", ".join(reasons)
        return ok, detail, {"lur_error": lur_err, "transitivity": ct.to_json(), "witnesses": witnesses}

    return _timed(11, "diagnostics", None, body)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11]


def run_all(seed: int = 0, only: list[int] | None = None, echo: Callable[[str], None] | None = None
            ) -> list[CriterionResult]:
    out = []
    for k, crit in enumerate(CRITERIA, start=1):
        if only and k not in only:
            continue
        res = crit(seed)
        if echo:
            echo(res.line())
        out.append(res)
    return out


def summary(results: list[CriterionResult]) -> str:
    passed = sum(r.passed for r in results)
    total = sum(r.seconds for r in results)
    return f"{passed}/{len(results)} criteria passed in {total:.1f}s" + \
        ("" if passed == len(results) else f"; failing: {[r.number for r in results if not r.passed]}")


__all__ = ["CriterionResult", "CRITERIA", "run_all", "summary"]
