"""End-to-end generation of rule documents, shared by the CLI and the tests."""
from __future__ import annotations

import logging
from functools import lru_cache

import mpmath as mp

from .errors import MissingSeedError
from .functions import Monomial1D, build_sequence_1d
from .geometry import REFERENCE_TRIANGLE, Triangle, map_to_physical
from .io import RuleDocument, decimal, document_from_line, document_from_physical, document_from_symmetric
from .linerule import LineRuleConfig, build_1d_rule
from .optimizer import GrowReport, SolverConfig, elimination_pass, grow_groups, refine_polynomial_rule
from .seeds import ORBIT_COUNTS, POLY_DEGREE, default_registry
from .subdivision import assemble_triangle_rule

log = logging.getLogger(__name__)

__all__ = [
    "polynomial_report",
    "polynomial_document",
    "grow_report",
    "symmetric_documents",
    "line_rule",
    "line_document",
    "subdivision_document",
    "study_rules",
    "STUDY_APPROACH2_NPRIME",
]

STUDY_APPROACH2_NPRIME = (1, 2, 3, 4, 5, 6)


@lru_cache(maxsize=None)
def _polynomial_cached(n: int, seed_index: int, cfg: SolverConfig):
    seeds = default_registry.lookup(n, cfg.precision_digits)
    return refine_polynomial_rule(seeds[seed_index], POLY_DEGREE[n], cfg)


def polynomial_report(n: int, cfg: SolverConfig = SolverConfig(), seed_index: int = 0):
    """Seed for ``n`` refined on the reduced monomial sequence of its degree."""
    if n not in POLY_DEGREE:
        raise MissingSeedError(f"no polynomial degree tabulated for n={n}")
    return _polynomial_cached(n, seed_index, cfg)


def polynomial_document(n: int, cfg: SolverConfig = SolverConfig()) -> RuleDocument:
    rep = polynomial_report(n, cfg)
    return document_from_symmetric(
        rep.rule,
        "polynomial",
        {"builtin": "poly2d", "degree": POLY_DEGREE[n]},
        rep.residual_max,
        {"converged": rep.converged, "objective": mp.nstr(rep.final_objective, 6), "degree": POLY_DEGREE[n]},
    )


def grow_report(n: int, cfg: SolverConfig = SolverConfig(), seq_builder=None, seed_index: int = 0) -> GrowReport:
    """Approach 1 for one point count: refine the seed, then grow function groups."""
    poly = polynomial_report(n, cfg, seed_index)
    if not poly.converged:
        rep = GrowReport(n, ORBIT_COUNTS[n], POLY_DEGREE[n], None)
        rep.failed_stage = -1
        return rep
    return grow_groups(n, ORBIT_COUNTS[n], seq_builder, poly.rule, cfg)


def _grow_document(rep: GrowReport, seq_desc_for) -> RuleDocument | None:
    rule = rep.final_rule
    if rule is None:
        return None
    stage = rep.stage(rep.final_nu)
    return document_from_symmetric(
        rule,
        "approach1",
        seq_desc_for(rep.final_nu),
        stage.residual_max,
        {
            "initial_nu": rep.initial_nu,
            "final_nu": rep.final_nu,
            "eliminated": rep.eliminated,
            "objective": mp.nstr(stage.final_objective, 6),
        },
    )


def symmetric_documents(ns, cfg: SolverConfig = SolverConfig(), seq_builder=None, seq_desc_for=None):
    """Grow every ``n`` in ``ns``, run the elimination pass, return ``{n: (report, doc)}``."""
    if seq_desc_for is None:
        seq_desc_for = lambda nu: {"builtin": "2d", "nu_max": nu}  # noqa: E731
    reports = [grow_report(n, cfg, seq_builder) for n in sorted(ns)]
    reports = elimination_pass(reports)
    return {r.n: (r, _grow_document(r, seq_desc_for)) for r in reports}


@lru_cache(maxsize=None)
def line_rule(n_prime: int, cfg: LineRuleConfig = LineRuleConfig()):
    return build_1d_rule(n_prime, build_sequence_1d(n_prime), cfg)


def line_document(n_prime: int, cfg: LineRuleConfig = LineRuleConfig()) -> RuleDocument:
    return document_from_line(line_rule(n_prime, cfg))


def subdivision_document(
    n_prime: int, tri: Triangle = REFERENCE_TRIANGLE, orientation: str = "edges", cfg: LineRuleConfig = LineRuleConfig()
) -> RuleDocument:
    rule = line_rule(n_prime, cfg)
    phys = assemble_triangle_rule(rule, tri, orientation)
    meta = {"n_prime": n_prime, "orientation": orientation, "line_sequence": {"builtin": "1d", "n_prime": n_prime}}
    if tri != REFERENCE_TRIANGLE:
        meta["triangle"] = [[decimal(c, rule.precision_digits) for c in v] for v in tri.vertices]
    degree = approach2_exact_degree(rule)
    return document_from_physical(
        phys, "approach2", rule.precision_digits, {"builtin": "poly2d", "degree": degree}, rule.residual_max, meta
    )


def approach2_exact_degree(rule) -> int:
    """Total degree of 2-D polynomials the assembled rule integrates exactly.

    A degree-d polynomial pulls back to degree d in each of (xi, eta) on a
    patch, and the Jacobian adds one more; the 1-D rule therefore needs
    every power up to d + 1 in its sequence.
    """
    powers = {f.k for f in rule.sequence if isinstance(f, Monomial1D)}
    k = 0
    while k + 1 in powers:
        k += 1
    return k - 1 if 0 in powers else -1


def study_rules(cfg: SolverConfig = SolverConfig(), ns=None, symmetric: dict | None = None) -> dict:
    """Reference-triangle rules for the kernel study, keyed by family then ``n``.

    Polynomial rules for every built-in seed; Approach 1 rules for the
    non-eliminated ``n``; Approach 2 rules for ``n' = 1..6``.  ``symmetric``
    may carry the output of :func:`symmetric_documents` to avoid regrowing.
    """
    ns = sorted(ns or (symmetric.keys() if symmetric else default_registry_ns()))
    rules = {"polynomial": {}, "approach1": {}, "approach2": {}}
    for n in ns:
        rep = polynomial_report(n, cfg)
        rules["polynomial"][n] = map_to_physical(rep.rule, REFERENCE_TRIANGLE) if rep.converged else None
    for n, (rep, doc) in (symmetric or symmetric_documents(ns, cfg)).items():
        if rep.eliminated:
            continue
        rules["approach1"][n] = map_to_physical(rep.final_rule, REFERENCE_TRIANGLE) if doc else None
    for k in STUDY_APPROACH2_NPRIME:
        rules["approach2"][3 * k * k] = assemble_triangle_rule(line_rule(k), REFERENCE_TRIANGLE)
    return rules


def default_registry_ns() -> list:
    out = []
    for n in POLY_DEGREE:
        try:
            default_registry.lookup(n)
        except MissingSeedError:
            continue
        out.append(n)
    return out

