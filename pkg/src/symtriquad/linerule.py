"""Generalised Gaussian rules on [0, 1] by polynomial-to-target continuation.

An ``n'``-point rule has ``2 n'`` unknowns (nodes and weights) and is asked
to integrate ``2 n'`` functions exactly.  Starting from the Gauss-Legendre
rule, which integrates ``1, x, ..., x**(2n'-1)``, the system is deformed
along

    f_j(t) = (1 - t) * x**(j-1) + t * f_j,      t: 0 -> 1,

with Newton's method at every accepted value of ``t``.

For longer sequences the simultaneous homotopy can carry the last node out
through ``x = 1``.  The ``staged`` schedule instead blends one function at a
time (in sequence order), keeping the others at their current state;
``auto`` tries the simultaneous path first and falls back to the staged one.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import mpmath as mp

from .errors import ContinuationError, SingularEvaluationError
from .functions import Monomial1D, build_sequence_1d, flatten
from .integrals import IntegralTable

log = logging.getLogger(__name__)

__all__ = ["LineRuleConfig", "Rule1D", "gauss_legendre_01", "build_1d_rule", "validate_1d"]


@dataclass(frozen=True)
class LineRuleConfig:
    precision_digits: int = 64
    initial_step: float = 1 / 16
    min_step: float = 1e-6
    newton_tol: float = 1e-45
    max_newton: int = 50
    schedule: str = "auto"


@dataclass(frozen=True)
class Rule1D:
    nodes: tuple
    weights: tuple
    sequence: tuple = ()
    residual_max: mp.mpf = mp.mpf(0)
    precision_digits: int = 64
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.nodes) != len(self.weights):
            raise ValueError("nodes and weights differ in length")

    @property
    def n(self) -> int:
        return len(self.nodes)

    def integrate(self, f) -> mp.mpf:
        return mp.fsum(w * f(x) for x, w in zip(self.nodes, self.weights))


def gauss_legendre_01(n: int, digits: int = 64) -> tuple[list, list]:
    """Gauss-Legendre nodes and weights on [0, 1] by Newton on the recurrence."""
    if n < 1:
        raise ValueError("n must be >= 1")
    with mp.workdps(digits + 10):
        nodes, weights = [], []
        for i in range(1, n + 1):
            x = mp.cos(mp.pi * (i - mp.mpf(1) / 4) / (n + mp.mpf(1) / 2))
            for _ in range(100):
                p0, p1 = mp.mpf(1), x
                for k in range(2, n + 1):
                    p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
                dp = n * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < mp.mpf(10) ** (-(digits + 8)):
                    break
            p0, p1 = mp.mpf(1), x
            for k in range(2, n + 1):
                p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
            dp = n * (x * p1 - p0) / (x * x - 1)
            nodes.append((1 - x) / 2)
            weights.append(1 / ((1 - x * x) * dp * dp))
        order = sorted(range(n), key=lambda i: nodes[i])
        xs = [+nodes[i] for i in order]
        ws = [+weights[i] for i in order]
    with mp.workdps(digits):
        return [+x for x in xs], [+w for w in ws]


def _moment_system(funcs, monos, ints_t, lam_t, t, nodes, weights):
    """Scaled residuals and Jacobian of the blended moment equations."""
    m = len(funcs)
    n = len(nodes)
    r = [mp.mpf(0)] * m
    J = mp.zeros(m, 2 * n)
    for i, (x, w) in enumerate(zip(nodes, weights)):
        for j in range(m):
            f, g = funcs[j], monos[j]
            v = (1 - t) * g.value(x) + t * f.value(x)
            dv = (1 - t) * g.gradient(x)[0] + t * f.gradient(x)[0]
            r[j] += w * v
            J[j, i] += w * dv
            J[j, n + i] += v
    for j in range(m):
        r[j] = (r[j] - ints_t[j]) / lam_t[j]
        for k in range(2 * n):
            J[j, k] /= lam_t[j]
    return r, J


def _valid(nodes) -> bool:
    if any(not (0 < x < 1) for x in nodes):
        return False
    gap = mp.mpf(10) ** (-(mp.mp.dps // 2))
    return all(b - a > gap for a, b in zip(nodes, nodes[1:]))


def _newton(funcs, monos, ints_t, lam_t, t, nodes, weights, cfg):
    tol = mp.mpf(cfg.newton_tol)
    n = len(nodes)
    for _ in range(cfg.max_newton):
        r, J = _moment_system(funcs, monos, ints_t, lam_t, t, nodes, weights)
        if max(abs(v) for v in r) < tol:
            return nodes, weights
        try:
            d = mp.lu_solve(J, mp.matrix([-v for v in r]))
        except ZeroDivisionError:
            return None
        nodes = [nodes[i] + d[i] for i in range(n)]
        weights = [weights[i] + d[n + i] for i in range(n)]
        if not _valid(nodes):
            return None
    return None


def _continue(base, target, table, nodes, weights, cfg):
    """Track the solution from ``base`` (t=0) to ``target`` (t=1)."""
    ints_f = table.values(target)
    ints_g = table.values(base)
    t, step = mp.mpf(0), mp.mpf(cfg.initial_step)
    successes = 0
    while t < 1:
        t_new = min(t + step, mp.mpf(1))
        ints_t = [(1 - t_new) * g + t_new * f for f, g in zip(ints_f, ints_g)]
        lam_t = [v if v != 0 else mp.mpf(1) for v in ints_t]
        try:
            sol = _newton(target, base, ints_t, lam_t, t_new, nodes, weights, cfg)
        except SingularEvaluationError:
            sol = None
        if sol is None:
            step /= 2
            successes = 0
            if step < cfg.min_step:
                raise ContinuationError(
                    f"continuation step fell below {cfg.min_step} at t={mp.nstr(t, 8)}", last_t=float(t)
                )
            continue
        nodes, weights = sol
        t = t_new
        successes += 1
        if successes >= 2:
            step *= 2
            successes = 0
    return nodes, weights


def _staged(monos, funcs, table, nodes, weights, cfg):
    current = list(monos)
    for j, f in enumerate(funcs):
        if current[j] == f:
            continue
        target = current[:j] + [f] + current[j + 1 :]
        nodes, weights = _continue(current, target, table, nodes, weights, cfg)
        current = target
    return nodes, weights


def _polish(funcs, table, nodes, weights, cfg):
    # a few extra Newton steps at t = 1 take the moments to working precision
    ints = table.values(funcs)
    lam = [v if v != 0 else mp.mpf(1) for v in ints]
    tight = replace(cfg, newton_tol=10.0 ** (8 - cfg.precision_digits), max_newton=3)
    try:
        sol = _newton(funcs, funcs, ints, lam, mp.mpf(1), nodes, weights, tight)
    except SingularEvaluationError:
        sol = None
    return sol if sol is not None else (nodes, weights)


def build_1d_rule(n_prime: int, seq=None, cfg: LineRuleConfig = LineRuleConfig(), table=None) -> Rule1D:
    """``n'``-point rule exactly integrating ``seq`` (default: the built-in 1-D sequence)."""
    funcs = flatten(seq) if seq is not None else build_sequence_1d(n_prime)
    if len(funcs) != 2 * n_prime:
        raise ValueError(f"a {n_prime}-point rule needs {2 * n_prime} functions, got {len(funcs)}")
    if cfg.schedule not in ("auto", "simultaneous", "staged"):
        raise ValueError(f"unknown continuation schedule {cfg.schedule!r}")
    monos = [Monomial1D(j) for j in range(2 * n_prime)]
    with mp.workdps(cfg.precision_digits):
        table = (table or IntegralTable(digits=cfg.precision_digits)).extend(funcs + monos)
        nodes, weights = gauss_legendre_01(n_prime, cfg.precision_digits)
        used = cfg.schedule
        if cfg.schedule == "staged":
            nodes, weights = _staged(monos, funcs, table, nodes, weights, cfg)
        else:
            try:
                nodes, weights = _continue(monos, funcs, table, nodes, weights, cfg)
                used = "simultaneous"
            except ContinuationError as exc:
                if cfg.schedule == "simultaneous":
                    raise
                log.info("simultaneous continuation failed (%s); using staged schedule", exc)
                nodes, weights = _staged(monos, funcs, table, nodes, weights, cfg)
                used = "staged"
        nodes, weights = _polish(funcs, table, nodes, weights, cfg)
        res = validate_1d(Rule1D(tuple(nodes), tuple(weights), precision_digits=cfg.precision_digits), funcs, table)
    return Rule1D(
        tuple(nodes),
        tuple(weights),
        tuple(funcs),
        max(abs(v) for v in res),
        cfg.precision_digits,
        {"schedule": used},
    )


def validate_1d(rule: Rule1D, seq, table=None) -> list:
    """Relative residuals (absolute for zero integrals) of ``rule`` on ``seq``."""
    funcs = flatten(seq)
    with mp.workdps(rule.precision_digits):
        table = table or IntegralTable(digits=rule.precision_digits)
        out = []
        for f in funcs:
            exact = table[f]
            q = mp.fsum(w * f.value(x) for x, w in zip(rule.nodes, rule.weights))
            out.append((q - exact) / exact if exact != 0 else q - exact)
    return out
