import random

import mpmath as mp
import pytest

from symtriquad.errors import MissingSeedError
from symtriquad.functions import (
    Monomial2D,
    build_group_sequence_2d,
    group_sequence_from_functions,
    polynomial_group_sequence_2d,
)
from symtriquad.geometry import Orbit, SymmetricRule
from symtriquad.integrals import IntegralTable
from symtriquad.optimizer import (
    GrowReport,
    SolverConfig,
    elimination_pass,
    grow_groups,
    objective,
    objective_at,
    objective_gradient,
    pack,
    solve_rule,
    unpack,
)
from symtriquad.pipeline import polynomial_report
from symtriquad.seeds import ORBIT_COUNTS, SeedRegistry, initial_guess_registry, seed_rule

THRESHOLD = mp.mpf(10) ** -32


def _seq(*funcs):
    return group_sequence_from_functions(list(funcs), 2)


def centroid(w="0.5"):
    return SymmetricRule((Orbit.centroid(mp.mpf(w)),))


def test_objective_centroid_examples():
    one, x, xx = Monomial2D(0, 0), Monomial2D(1, 0), Monomial2D(2, 0)
    assert objective(centroid(), _seq(one, x)) < mp.mpf(10) ** -120
    assert abs(objective(centroid(), _seq(one, x, xx)) - mp.mpf(1) / 9) < mp.mpf(10) ** -60


def test_objective_uses_absolute_residual_for_zero_integral():
    from symtriquad.functions import Custom

    zero = Custom("x - y", lambda x, y: x - y, dim=2, singular=False, integral=0)
    rule = SymmetricRule((Orbit.median(mp.mpf("0.6"), mp.mpf(1) / 6),))
    # symmetric rules integrate x - y to exactly zero
    assert objective(rule, _seq(zero)) < mp.mpf(10) ** -60


def test_solve_centroid():
    rep = solve_rule((1, 0, 0), build_group_sequence_2d(1), centroid("0.3"))
    assert rep.converged and rep.final_objective < THRESHOLD
    assert abs(rep.rule.orbits[0].weight - mp.mpf(1) / 2) < mp.mpf(10) ** -30


def test_solve_median_orbit_matches_moment_solution():
    # 3 points (alpha, g, g): the x^2 and xy moments force alpha = 2/3, w' = 1/6
    init = SymmetricRule((Orbit.median(mp.mpf("0.6"), mp.mpf("0.15")),))
    rep = solve_rule((0, 1, 0), polynomial_group_sequence_2d(2), init)
    assert rep.converged
    o = rep.rule.orbits[0]
    assert abs(o.alpha - mp.mpf(2) / 3) < mp.mpf(10) ** -30
    assert abs(o.weight - mp.mpf(1) / 6) < mp.mpf(10) ** -30


def test_thirteen_point_seed_reaches_nu_seven():
    poly = polynomial_report(13)
    assert poly.converged
    rep = solve_rule((1, 2, 1), build_group_sequence_2d(7), poly.rule)
    assert rep.converged and rep.final_objective < THRESHOLD
    assert rep.residual_max < mp.mpf(10) ** -16


def test_converged_rule_residuals_below_sqrt_threshold():
    rep = polynomial_report(12)
    assert rep.converged
    assert all(abs(r) < mp.mpf(10) ** -16 for r in rep.residuals)


def test_grow_small_rules():
    for n in (1, 3):
        poly = polynomial_report(n)
        rep = grow_groups(n, ORBIT_COUNTS[n], None, poly.rule)
        assert rep.final_nu == {1: 1, 3: 2}[n]
        assert rep.initial_nu <= rep.final_nu
        assert not rep.stages[-1][1].converged


def test_grow_reports_failed_initial_stage():
    bad = SymmetricRule((Orbit.centroid(mp.mpf("0.5")),))
    rep = grow_groups(1, (1, 0, 0), None, bad, SolverConfig(max_iter=20), initial_nu=2)
    assert rep.final_nu is None and rep.failed_stage == 2
    assert not rep.converged


def _report(n, nu):
    r = GrowReport(n, ORBIT_COUNTS.get(n, (0, 0, 0)), 0, nu)
    return r


def test_elimination_examples():
    out = elimination_pass([_report(12, 7), _report(13, 7)])
    assert [r.eliminated for r in out] == [False, True]
    out = elimination_pass([_report(1, 1), _report(3, 2), _report(4, 3)])
    assert not any(r.eliminated for r in out)
    assert not elimination_pass([_report(7, 5)])[0].eliminated


def test_elimination_treats_failure_as_eliminated():
    out = elimination_pass([_report(6, 4), _report(7, None), _report(12, 7)])
    assert [r.eliminated for r in out] == [False, True, False]


def test_registry():
    assert initial_guess_registry(12)[0].counts == (0, 2, 1)
    assert ORBIT_COUNTS[12] == (0, 2, 1)
    with pytest.raises(MissingSeedError):
        initial_guess_registry(5)


def test_registry_accepts_alternative_counts():
    reg = SeedRegistry()
    with pytest.raises(MissingSeedError):
        reg.lookup(37)
    # a (1, 4, 4) arrangement with 37 points
    orbits = [Orbit.centroid(mp.mpf("0.02"))]
    orbits += [Orbit.median(mp.mpf(a), mp.mpf("0.01")) for a in ("0.1", "0.5", "0.7", "0.9")]
    orbits += [Orbit.generic(mp.mpf(a), mp.mpf("0.05"), mp.mpf("0.01")) for a in ("0.2", "0.4", "0.6", "0.8")]
    rule = SymmetricRule(tuple(orbits))
    reg.register(rule, "alt")
    assert reg.lookup(37)[0].counts == (1, 4, 4) and rule.n_points == 37
    assert reg.labels(37) == ["alt"]


def test_solve_is_deterministic():
    seq = polynomial_group_sequence_2d(4)
    a = solve_rule((0, 2, 0), seq, seed_rule(6))
    b = solve_rule((0, 2, 0), seq, seed_rule(6))
    assert pack(a.rule) == pack(b.rule) and a.final_objective == b.final_objective


def test_objective_invariant_under_orbit_order():
    rule = polynomial_report(12).rule
    flipped = SymmetricRule(tuple(reversed(rule.orbits)))
    seq = build_group_sequence_2d(7)
    assert abs(objective(rule, seq) - objective(flipped, seq)) < mp.mpf(10) ** -60


def test_downgrade_prefix_consistency():
    poly = polynomial_report(12)
    rep = solve_rule((0, 2, 1), build_group_sequence_2d(7), poly.rule)
    assert rep.converged
    for j in range(7):
        assert objective(rep.rule, build_group_sequence_2d(j)) < THRESHOLD


def test_pack_unpack_round_trip():
    rule = seed_rule(13)
    assert len(pack(rule)) == rule.n_unknowns == 1 + 2 * 2 + 3
    back = unpack(pack(rule), rule.counts)
    assert pack(back) == pack(rule)


def test_counts_mismatch_rejected():
    with pytest.raises(ValueError):
        solve_rule((0, 1, 0), build_group_sequence_2d(1), centroid())


def test_float_presolve_does_not_change_outcome():
    seq = polynomial_group_sequence_2d(6)
    a = solve_rule((0, 2, 1), seq, seed_rule(12))
    b = solve_rule((0, 2, 1), seq, seed_rule(12), SolverConfig(float_presolve=False))
    assert a.converged and b.converged
    assert all(abs(u - v) < mp.mpf(10) ** -30 for u, v in zip(pack(a.rule), pack(b.rule)))


def _random_feasible(counts, rng):
    x = []
    for _ in range(counts[0]):
        x.append(rng.uniform(0.05, 0.2))
    for _ in range(counts[1]):
        x += [rng.uniform(0.05, 0.9), rng.uniform(0.01, 0.1)]
    for _ in range(counts[2]):
        a = rng.uniform(0.02, 0.6)
        x += [a, rng.uniform(0.02, 0.95 - a), rng.uniform(0.01, 0.06)]
    return [mp.mpf(v) for v in x]


def test_gradient_matches_finite_differences():
    rng = random.Random(7)
    counts = (1, 2, 1)
    seq = build_group_sequence_2d(9)
    table = IntegralTable.for_sequence(seq)
    h = mp.mpf(10) ** -25
    x = _random_feasible(counts, rng)
    g = objective_gradient(x, counts, seq, table)
    for k in range(len(x)):
        xp, xm = list(x), list(x)
        xp[k] += h
        xm[k] -= h
        fd = (objective_at(xp, counts, seq, table) - objective_at(xm, counts, seq, table)) / (2 * h)
        assert abs(g[k] - fd) <= mp.mpf(10) ** -10 * max(abs(fd), mp.mpf(10) ** -20)


def test_solver_config_round_trip():
    cfg = SolverConfig(precision_digits=80, max_iter=100)
    assert SolverConfig.from_dict(cfg.to_dict()) == cfg
    assert SolverConfig.from_dict({"damping": "1e-2"}).initial_damping == 1e-2
    with pytest.raises(ValueError):
        SolverConfig.from_dict({"max_iters": 3})


def test_growth_stops_at_end_of_explicit_sequence():
    poly = polynomial_report(3)
    short = build_group_sequence_2d(2)
    rep = grow_groups(3, (0, 1, 0), short.prefix, poly.rule)
    assert rep.final_nu == 2 and len(rep.stages) == 1
