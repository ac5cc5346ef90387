"""Command line: one subcommand per module, JSON in and out.

Inputs are file paths or ``fixture:NAME`` references into the built-in
catalog.  Exit codes: 0 success, 1 a verdict failed (unless
``--no-fail-on-verdict``), 2 usage error, 3 invalid input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .core import DEFAULT_TOLERANCE, IsodisplayError, NormedSpace, format_scalar, group_from_json, \
    group_to_json, parse_scalar, space_from_json, space_to_json

EXIT_OK, EXIT_VERDICT, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3
FAILING = ("FAIL", "MISMATCH")


class InputError(Exception):
    pass


def jsonable(obj):
    """Plain JSON values: rationals as ``"p/q"``, non-finite floats as strings."""
    if isinstance(obj, Fraction):
        return format_scalar(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if hasattr(obj, "to_json"):
        return jsonable(obj.to_json())
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# input loading

def _load_raw(ref: str):
    if ref.startswith("fixture:"):
        from .fixtures import fixture

        try:
            return fixture(ref.split(":", 1)[1])
        except KeyError as exc:
            raise InputError(str(exc)) from None
    try:
        return json.loads(Path(ref).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {ref}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{ref} is not valid JSON: {exc}") from None


def load_graph(ref: str):
    from .graphs import Graph

    raw = _load_raw(ref)
    return raw if isinstance(raw, Graph) else Graph.from_json(raw)


def load_perm_group(ref: str):
    from .graphs import PermutationGroup

    raw = _load_raw(ref)
    if isinstance(raw, PermutationGroup):
        return raw
    degree = int(raw["degree"])
    if "elements" in raw:
        group = PermutationGroup(degree, tuple(sorted(tuple(p) for p in raw["elements"])))
        if not group.is_closed():
            raise InputError("permutation list is not a group")
        return group
    return PermutationGroup.generate(degree, raw.get("generators", []))


def load_group(ref: str):
    from .core import MatrixGroup

    raw = _load_raw(ref)
    return raw if isinstance(raw, MatrixGroup) else group_from_json(raw)


def load_space(ref: str) -> NormedSpace:
    raw = _load_raw(ref)
    return raw if isinstance(raw, NormedSpace) else space_from_json(raw)


def load_metric(ref: str):
    from .free_space import FiniteMetricSpace

    raw = _load_raw(ref)
    return raw if isinstance(raw, FiniteMetricSpace) else FiniteMetricSpace.from_json(raw)


def load_molecules(ref: str) -> list:
    from .free_space import Molecule

    raw = _load_raw(ref)
    items = raw if isinstance(raw, list) else [raw]
    return [Molecule.from_json(m) for m in items]


def parse_vector(text: str) -> list:
    try:
        return [parse_scalar(v.strip()) for v in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad vector {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands; each returns (verdicts, result, witnesses)

def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def cmd_graph_norm(args):
    from .graph_norm import brute_force_signed_maps, extreme_points, gamma_isometry_group, gamma_space, \
        is_pm_automorphism_group, pair_norm, signed_units
    from .core import norm_eval

    g = load_graph(args.graph)
    space = gamma_space(g)
    if args.action == "norm":
        if not args.vector:
            raise InputError("--vector is required")
        return {}, {"norm": norm_eval(space, parse_vector(args.vector))}, {}
    if args.action == "pairs":
        table = [{"n": n, "m": m, "plus": pair_norm(space, n, m, 1), "minus": pair_norm(space, n, m, -1)}
                 for n in range(g.n) for m in range(g.n) if n != m]
        return {}, {"pairs": table}, {}
    if args.action == "vertices":
        verts = extreme_points(space, args.vertex_cap)
        units = set(verts) == signed_units(g.n)
        result = {"count": len(verts), "signed_units_only": units}
        witnesses = {} if units else {"extra_vertex": next(v for v in verts if v not in signed_units(g.n))}
        return {"vertices_are_signed_units": _verdict(units)}, result, witnesses
    group, rep = gamma_isometry_group(space, cap=args.vertex_cap)
    maps = brute_force_signed_maps(space)
    pm_aut = is_pm_automorphism_group(space, maps)
    status = {"VERIFIED": "PASS", "CERTIFIED": "PASS", "UNVERIFIED": "UNVERIFIED"}.get(rep.status, "FAIL")
    verdicts = {"isometry_group": status, "brute_force_matches": _verdict(pm_aut)}
    result = {"order": group.order, "report": rep, "brute_force_order": len(maps), "group": group_to_json(group)}
    witnesses = {}
    if status == "FAIL":
        witnesses["notes"] = rep.notes
    if not pm_aut:
        witnesses["brute_force_maps"] = [[list(p), list(e)] for p, e in maps]
    return verdicts, result, witnesses


def cmd_gadget(args):
    from .graphs import build_display_graph, verify_gadget

    h = load_perm_group(args.group)
    depths = tuple(int(v) for v in args.depths.split(","))
    g, layout = build_display_graph(h, depths, rigid=args.rigid)
    rep = verify_gadget(g, layout, h)
    verdict = {"EQUAL": "PASS", "K-CLOSURE-GAP": "K-CLOSURE-GAP"}.get(rep.verdict, "FAIL")
    witnesses = {"report": rep} if verdict != "PASS" else {}
    result = {"report": rep, "graph": g.to_json(), "layout": layout.to_json()}
    if args.c0:
        from .graph_norm import display_on_c0

        _, group, c0 = display_on_c0(h, depths, rigid=True)
        result["c0_display"] = c0
        if not c0.isomorphic_to_pm_h:
            witnesses["c0_display"] = c0
        return {"gadget": verdict, "c0_display": _verdict(c0.isomorphic_to_pm_h)}, result, witnesses
    return {"gadget": verdict}, result, witnesses


def cmd_display(args):
    from .pimple import DisplayResult, display_renorm, isometry_group_from_extremes

    if args.action == "verify":
        result = DisplayResult.from_json(_load_raw(args.result))
    else:
        group = load_group(args.group)
        result = display_renorm(group, samples=args.samples, seed=args.seed)
    _, rep = isometry_group_from_extremes(result, args.tolerance, seed=args.seed)
    verdicts = dict(result.verdicts)
    verdicts["round_trip"] = "PASS" if rep.verdict == "EQUAL" else "FAIL"
    witnesses = {}
    if rep.verdict != "EQUAL":
        witnesses["round_trip"] = rep
    if result.properties.verdict != "PASS":
        witnesses["properties"] = result.properties.failures
    if verdicts.get("separation") == "FAIL":
        witnesses["separation"] = result.separation
    if verdicts.get("mu_conditions") == "FAIL":
        witnesses["mu_conditions"] = result.schedule.conditions
    return verdicts, {"display": result.to_json(), "isometries": rep}, witnesses


def _transformed(metric, transform: str):
    from .free_space import transform_bounded, transform_concave

    if transform == "none":
        return metric, None
    bounded = transform_bounded(metric)
    if transform == "bounded":
        return bounded, None
    return transform_concave(bounded)


def cmd_free_space(args):
    from .free_space import ae_isometry_group, ae_norm_dual, ae_norm_primal, free_extreme_atoms, \
        metric_isometry_group

    metric, conc = _transformed(load_metric(args.metric), args.transform)
    result: dict = {"metric": metric.to_json()}
    if conc is not None:
        result["concavity"] = conc
    if args.action in ("norm", "dual"):
        if not args.molecule:
            raise InputError("--molecule is required")
        mols = load_molecules(args.molecule)
        vecs = [m.vector(metric) for m in mols]
        if args.action == "norm":
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                outs = list(pool.map(lambda v: ae_norm_primal(metric, v), vecs))
            result["values"] = [{"value": o.value,
                                 "atoms": [[metric.points[x], metric.points[y], a] for x, y, a in o.atoms]}
                                for o in outs]
        else:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                outs = list(pool.map(lambda v: ae_norm_dual(metric, v), vecs))
            result["values"] = [{"value": o.value, "witness": o.witness} for o in outs]
        return {}, result, {}
    if args.action == "atoms":
        rep = free_extreme_atoms(metric, args.tolerance)
        result["atoms"] = rep
        witnesses = {"not_extreme": rep.not_extreme} if rep.not_extreme else {}
        return {"atoms_extreme": _verdict(not rep.not_extreme)}, result, witnesses
    isom = metric_isometry_group(metric)
    result["metric_isometries"] = [list(p) for p in isom]
    maps, rep = ae_isometry_group(metric, seed=args.seed, tolerance=args.tolerance)
    result["report"] = rep
    result["order"] = rep.order
    witnesses = {"report": rep} if not rep.structure_ok else {}
    return {"structure": _verdict(rep.structure_ok)}, result, witnesses


def cmd_diag(args):
    from .diagnostics import OrthogonalSampler, convex_transitivity_test, distinguished_point_check, \
        lur_modulus, necessary_conditions, separation_witness, uniform_convexity_modulus

    space = load_space(args.space)
    if args.group == "orthogonal":
        group = OrthogonalSampler(space.dim)
    elif args.group == "rotations":
        group = OrthogonalSampler(space.dim, special=True)
    elif args.group:
        group = load_group(args.group)
    else:
        group = None
    needs_group = args.action in ("convex-transitive", "necessary", "distinguished", "separation")
    if needs_group and group is None:
        raise InputError("--group is required")
    finite_only = args.action in ("distinguished", "separation")
    if finite_only and isinstance(group, OrthogonalSampler):
        raise InputError(f"{args.action} needs a finite group")
    if args.action == "convex-transitive":
        if not (args.x and args.xstar):
            raise InputError("--x and --xstar are required")
        v = convex_transitivity_test(space, group, [float(t) for t in parse_vector(args.x)],
                                     [float(t) for t in parse_vector(args.xstar)], seed=args.seed,
                                     tolerance=args.tolerance)
        verdict = "FAIL" if v.kind == "fails" else "PASS"
        return {"convex_transitive": verdict}, {"verdict": v}, ({"pair": v.witness} if v.witness else {})
    if args.action == "necessary":
        rep = necessary_conditions(space, group, seed=args.seed, tolerance=args.tolerance)
        verdicts = dict(rep.verdicts)
        witnesses = {"pair": rep.witness} if rep.witness else {}
        if verdicts["minus_identity"] == "FAIL":
            witnesses["minus_identity"] = "no element equals -Id"
        return verdicts, {"report": rep}, witnesses
    if args.action == "distinguished":
        if not args.x:
            raise InputError("--x is required")
        value = distinguished_point_check(space, group, [float(t) for t in parse_vector(args.x)])
        ok = value > args.tolerance
        return {"distinguished": _verdict(ok)}, {"separation": value}, ({} if ok else {"separation": value})
    if args.action == "separation":
        if not args.x:
            raise InputError("--x is required (the point y)")
        w = separation_witness(space, group, [float(t) for t in parse_vector(args.x)], seed=args.seed)
        return {"bound": _verdict(w.verified)}, {"witness": w}, ({} if w.verified else {"witness": w})
    grid = [float(t) for t in args.eps.split(",")] if args.eps else None
    kwargs = {"eps_grid": grid} if grid else {}
    if args.action == "uniform":
        table = uniform_convexity_modulus(space, seed=args.seed, **kwargs)
        return {}, {"table": [list(r) for r in table]}, {}
    if not args.x:
        raise InputError("--x is required")
    m = lur_modulus(space, [float(t) for t in parse_vector(args.x)], seed=args.seed, **kwargs)
    return {}, {"modulus": m}, {}


def cmd_selftest(args):
    from .acceptance import run_all, summary
    from .fixtures import fixture_catalog

    if args.list_fixtures:
        return {}, {"fixtures": [{"name": f.name, "kind": f.kind, "provenance": f.provenance}
                                 for f in fixture_catalog()]}, {}
    only = [int(v) for v in args.only.split(",")] if args.only else None
    results = run_all(args.seed, only, echo=(lambda line: print(line, file=sys.stderr)) if args.verbose else None)
    verdicts = {f"criterion_{r.number}": _verdict(r.passed) for r in results}
    witnesses = {f"criterion_{r.number}": {"detail": r.detail, "data": r.data} for r in results if not r.passed}
    result = {"summary": summary(results),
              "criteria": [{"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail}
                           for r in results]}
    return verdicts, result, witnesses


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE, help="numeric tolerance")
    common.add_argument("--threads", type=int, default=1, help="worker threads for batch evaluations")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--fail-on-verdict", action=argparse.BooleanOptionalAction, default=True,
                        help="exit with code 1 when any verdict is FAIL or MISMATCH")
    common.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")

    p = argparse.ArgumentParser(prog="isodisplay", description="Isometry groups of renormed spaces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph-norm", parents=[common], help="graph norms and their isometries")
    g.add_argument("action", choices=["isom", "norm", "pairs", "vertices"])
    g.add_argument("--graph", required=True, help="graph JSON or fixture:NAME")
    g.add_argument("--vector", help="comma-separated coordinates, rationals allowed (norm)")
    g.add_argument("--vertex-cap", type=int, default=8, help="largest dimension for vertex enumeration")
    g.set_defaults(func=cmd_graph_norm)

    gd = sub.add_parser("gadget", parents=[common], help="build and verify a gadget graph")
    gd.add_argument("--group", required=True, help="permutation group JSON or fixture:NAME")
    gd.add_argument("--depths", default="1,2", help="tuple lengths, consecutive powers of 2")
    gd.add_argument("--rigid", action="store_true", help="replace pendant twins by paths")
    gd.add_argument("--c0", action="store_true", help="also compute the graph-norm isometry group")
    gd.set_defaults(func=cmd_gadget)

    d = sub.add_parser("display", parents=[common], help="renorm a space so that G is its isometry group")
    d.add_argument("action", choices=["run", "verify"], nargs="?", default="run")
    d.add_argument("--group", help="matrix group JSON or fixture:NAME (run)")
    d.add_argument("--result", help="display result JSON (verify)")
    d.add_argument("--samples", type=int, default=2000, help="property-check samples")
    d.set_defaults(func=cmd_display)

    f = sub.add_parser("free-space", parents=[common], help="free-space norms and isometries")
    f.add_argument("action", choices=["norm", "dual", "isom", "atoms"])
    f.add_argument("--metric", required=True, help="metric JSON or fixture:NAME")
    f.add_argument("--molecule", help="molecule JSON (or a list of them)")
    f.add_argument("--transform", choices=["none", "bounded", "concave"], default="none",
                   help="apply d/(1+d), then optionally the square root")
    f.set_defaults(func=cmd_free_space)

    dg = sub.add_parser("diag", parents=[common], help="transitivity and rotundity diagnostics")
    dg.add_argument("action", choices=["convex-transitive", "necessary", "distinguished", "lur", "uniform",
                                       "separation"])
    dg.add_argument("--space", required=True, help="space JSON or fixture:NAME")
    dg.add_argument("--group", help="matrix group JSON, fixture:NAME, 'orthogonal' or 'rotations'")
    dg.add_argument("--x", help="comma-separated point")
    dg.add_argument("--xstar", help="comma-separated functional")
    dg.add_argument("--eps", help="comma-separated eps grid")
    dg.set_defaults(func=cmd_diag)

    s = sub.add_parser("selftest", parents=[common], help="run the acceptance catalog")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.add_argument("--list-fixtures", action="store_true", help="list the built-in fixtures")
    s.add_argument("--verbose", action="store_true", help="print one line per criterion to stderr")
    s.set_defaults(func=cmd_selftest)
    return p


def _summary_lines(report: dict) -> list[str]:
    lines = [f"isodisplay {' '.join(report['command'])}"]
    for k, v in sorted(report["verdicts"].items()):
        lines.append(f"  {k}: {v}")
    if not report["verdicts"]:
        lines.append("  (no verdicts; see the JSON report)")
    return lines


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.threads < 1:
        print("isodisplay: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    start = time.perf_counter()
    try:
        verdicts, result, witnesses = args.func(args)
    except (InputError, IsodisplayError, KeyError, TypeError, ValueError) as exc:
        print(f"isodisplay: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = {"command": argv, "verdicts": verdicts, "result": result, "witnesses": witnesses}
    if args.timing:
        report["timing"] = {"seconds": time.perf_counter() - start}
    text = dumps(report)
    if args.out:
        Path(args.out).write_text(text + "\n")
        for line in _summary_lines(report):
            print(line)
    else:
        print(text)
    failed = any(v in FAILING for v in verdicts.values())
    return EXIT_VERDICT if failed and args.fail_on_verdict else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
