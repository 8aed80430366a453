"""Command-line interface: ``symtriquad <command> [options]``.

Exit status is 0 on success, 1 when a solve does not converge or a seed is
missing, and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import mpmath as mp

from .errors import ContinuationError, MissingSeedError, QuadratureError
from .functions import flatten
from .geometry import REFERENCE_TRIANGLE, Triangle, map_to_physical
from .integrals import IntegralTable
from .io import (
    document_from_physical,
    load_config,
    read_rule,
    sequence_from_descriptor,
    write_rule,
)
from .kernels import run_study, write_csv
from .linerule import validate_1d
from .optimizer import SolverConfig, residuals
from .pipeline import (
    line_document,
    polynomial_document,
    study_rules,
    subdivision_document,
    symmetric_documents,
)
from .seeds import POLY_DEGREE, default_registry

log = logging.getLogger("symtriquad")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _triangle(text: str) -> Triangle:
    try:
        coords = [mp.mpf(c) for c in text.split(",")]
        return Triangle.from_flat(coords)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _solver_config(args) -> SolverConfig:
    base = {}
    if getattr(args, "config", None):
        base = load_config(args.config).get("solver", {})
    cfg = SolverConfig.from_dict(base)
    over = {}
    if args.precision is not None:
        over["precision_digits"] = args.precision
    if args.threshold is not None:
        over["threshold"] = args.threshold
    if args.max_iter is not None:
        over["max_iter"] = args.max_iter
    return SolverConfig.from_dict({**cfg.to_dict(), **over})


def _output_path(out: str | None, default_name: str) -> Path:
    if out is None:
        return Path(default_name)
    p = Path(out)
    if p.suffix == ".json":
        p.parent.mkdir(parents=True, exist_ok=True)
        return p
    p.mkdir(parents=True, exist_ok=True)
    return p / default_name


def _register_seeds(paths, digits):
    for path in paths or []:
        doc = read_rule(path)
        default_registry.register(doc.symmetric_rule(), label=str(path))


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------
def cmd_gen_poly(args) -> int:
    cfg = _solver_config(args)
    status = EXIT_OK
    for n in args.n:
        doc = polynomial_document(n, cfg)
        path = _output_path(args.out if len(args.n) == 1 else args.out or ".", f"polynomial_n{n}.json")
        write_rule(path, doc)
        ok = doc.meta["converged"]
        print(f"n={n} degree={POLY_DEGREE[n]} converged={ok} F={doc.meta['objective']} -> {path}")
        status = max(status, EXIT_OK if ok else EXIT_FAIL)
    return status


def cmd_gen_sym(args) -> int:
    cfg = _solver_config(args)
    _register_seeds(args.seed, cfg.precision_digits)
    builder, desc_for = None, None
    if args.seq:
        desc = load_config(args.seq)
        desc = desc.get("sequence", desc)
        if desc.get("builtin") == "2d":
            extrap = bool(desc.get("extrapolate", False))
            builder = lambda nu: sequence_from_descriptor({"builtin": "2d", "nu_max": nu, "extrapolate": extrap})  # noqa: E731
            desc_for = lambda nu: {"builtin": "2d", "nu_max": nu, "extrapolate": extrap}  # noqa: E731
        else:
            full = sequence_from_descriptor(desc)
            builder = full.prefix
            desc_for = lambda nu: {"dim": 2, "groups": [[f.descriptor() for f in g.members] for g in full.prefix(nu)]}  # noqa: E731
    for n in args.n:
        default_registry.lookup(n, cfg.precision_digits)
    results = symmetric_documents(args.n, cfg, builder, desc_for)
    status = EXIT_OK
    for n, (rep, doc) in results.items():
        stages = " ".join(f"{nu}:{'ok' if r.converged else 'x'}" for nu, r in rep.stages)
        print(f"n={n} initial_nu={rep.initial_nu} final_nu={rep.final_nu} eliminated={rep.eliminated} [{stages}]")
        if doc is None:
            print(f"n={n}: initial stage did not converge", file=sys.stderr)
            status = EXIT_FAIL
            continue
        path = _output_path(args.out if len(args.n) == 1 else args.out or ".", f"approach1_n{n}.json")
        write_rule(path, doc)
        print(f"  -> {path}")
    return status


def cmd_gen_1d(args) -> int:
    doc = line_document(args.nprime)
    path = _output_path(args.out, f"line_n{args.nprime}.json")
    write_rule(path, doc)
    print(f"n'={args.nprime} residual_max={doc.residual_max} schedule={doc.meta.get('schedule')} -> {path}")
    return EXIT_OK


def cmd_gen_subdiv(args) -> int:
    tri = args.triangle or REFERENCE_TRIANGLE
    doc = subdivision_document(args.nprime, tri, args.orientation)
    path = _output_path(args.out, f"approach2_n{doc.n}.json")
    write_rule(path, doc)
    print(f"n'={args.nprime} n={doc.n} -> {path}")
    return EXIT_OK


def _validate_doc(doc, seq):
    funcs = flatten(seq)
    table = IntegralTable(digits=doc.precision_digits)
    if doc.kind == "line":
        return funcs, validate_1d(doc.line_rule(), funcs, table)
    if "triangle" in doc.meta:
        raise ValueError("validation needs a rule on the reference triangle")
    if doc.orbits is not None:
        return funcs, residuals(doc.symmetric_rule(), funcs, table)
    rule = doc.physical_rule()
    with mp.workdps(doc.precision_digits):
        out = []
        for f in funcs:
            exact = table[f]
            q = rule.integrate(f.value)
            out.append((q - exact) / exact if exact != 0 else q - exact)
    return funcs, out


def cmd_validate(args) -> int:
    doc = read_rule(args.rule)
    if args.seq:
        desc = load_config(args.seq)
        desc = desc.get("sequence", desc)
    elif doc.sequence:
        desc = doc.sequence
    else:
        print("no sequence given and none recorded in the rule file", file=sys.stderr)
        return EXIT_USAGE
    funcs, res = _validate_doc(doc, sequence_from_descriptor(desc))
    worst = max((abs(r) for r in res), default=mp.mpf(0))
    for f, r in zip(funcs, res):
        print(f"{f.label():>40s}  {mp.nstr(r, 6)}")
    if doc.orbits is not None:
        rule = doc.symmetric_rule()
        if rule.exterior_points():
            print("warning: rule has points outside the triangle")
        if rule.has_negative_weights():
            print("warning: rule has negative weights")
    ok = worst < args.tol
    print(f"max |residual| = {mp.nstr(worst, 6)} ({'ok' if ok else 'FAIL'} at tol {args.tol:g})")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_study(args) -> int:
    if args.rules:
        rules = {"polynomial": {}, "approach1": {}, "approach2": {}}
        for path in sorted(Path(args.rules).glob("*.json")):
            doc = read_rule(path)
            if doc.kind != "triangle" or "triangle" in doc.meta or doc.approach not in rules:
                continue
            if doc.meta.get("eliminated"):
                continue
            rules[doc.approach][doc.n] = doc.physical_rule()
    else:
        rules = study_rules(_solver_config(args))
    records, refs = run_study(rules)
    write_csv(records, args.out)
    for (k, dom), (val, err) in sorted(refs.items()):
        print(f"reference I_{k[0]} domain {dom}: {val:.15e} (level difference {err:.1e})")
    print(f"{len(records)} records -> {args.out}")
    return EXIT_OK


def cmd_export(args) -> int:
    doc = read_rule(args.rule)
    if doc.kind != "triangle" or "triangle" in doc.meta:
        print("export needs a rule on the reference triangle", file=sys.stderr)
        return EXIT_USAGE
    if doc.orbits is not None:
        phys = map_to_physical(doc.symmetric_rule(), args.triangle)
    else:
        ref = doc.physical_rule()
        with mp.workdps(doc.precision_digits):
            scale = 2 * args.triangle.area()
            pts = [args.triangle.barycentric_to_xy(x, y) for x, y in ref.points]
            wts = [scale * w for w in ref.weights]
        phys = type(ref)(tuple(pts), tuple(wts), ref.source)
    meta = dict(doc.meta)
    meta["triangle"] = [[str(c) for c in v] for v in args.triangle.vertices]
    out = document_from_physical(phys, doc.approach, doc.precision_digits, doc.sequence, None, meta)
    out.residual_max = doc.residual_max
    path = _output_path(args.out, f"{doc.approach}_n{doc.n}_physical.json")
    write_rule(path, out)
    print(f"{len(phys)} points -> {path}")
    return EXIT_OK


# --------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, help="working precision in digits (default 64)")
    common.add_argument("--threshold", type=float, help="convergence threshold on the objective (default 1e-32)")
    common.add_argument("--max-iter", type=int, dest="max_iter", help="extended-precision iterations per stage")
    common.add_argument("--config", help="JSON config file with a 'solver' section")
    common.add_argument("--out", help="output file (.json/.csv) or directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="symtriquad", description="Symmetric triangle rules for singular sequences.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-poly", parents=[common], help="refine a built-in polynomial rule")
    s.add_argument("--n", type=int, nargs="+", required=True)
    s.set_defaults(func=cmd_gen_poly)

    s = sub.add_parser("gen-sym", parents=[common], help="Approach 1: grow function groups for symmetric rules")
    s.add_argument("--n", type=int, nargs="+", required=True)
    s.add_argument("--seq", help="sequence descriptor file (default: built-in 2-D sequence)")
    s.add_argument("--seed", action="append", help="extra initial-guess rule file (repeatable)")
    s.set_defaults(func=cmd_gen_sym)

    s = sub.add_parser("gen-1d", parents=[common], help="1-D rule by continuation")
    s.add_argument("--nprime", type=int, required=True)
    s.set_defaults(func=cmd_gen_1d)

    s = sub.add_parser("gen-subdiv", parents=[common], help="Approach 2: three-quadrilateral triangle rule")
    s.add_argument("--nprime", type=int, required=True)
    s.add_argument("--triangle", type=_triangle, help="x1,y1,x2,y2,x3,y3 (default: reference triangle)")
    s.add_argument("--orientation", choices=("edges", "interior"), default="edges")
    s.set_defaults(func=cmd_gen_subdiv)

    s = sub.add_parser("validate", parents=[common], help="moment residuals of a rule file")
    s.add_argument("--rule", required=True)
    s.add_argument("--seq", help="sequence descriptor file (default: the one recorded in the rule)")
    s.add_argument("--tol", type=float, default=1e-16)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("study", parents=[common], help="kernel error study, CSV output")
    s.add_argument("--rules", help="directory of rule files (default: generate them)")
    s.set_defaults(func=cmd_study, out="study.csv")

    s = sub.add_parser("export", parents=[common], help="map a reference rule onto a triangle")
    s.add_argument("--rule", required=True)
    s.add_argument("--triangle", type=_triangle, required=True)
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except MissingSeedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ContinuationError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
