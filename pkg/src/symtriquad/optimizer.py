"""Orbit optimisation of symmetric triangle rules (Approach 1).

The unknowns of a rule with orbit counts ``(n0, n1, n2)`` are packed as::

    [w0 if n0] + [alpha, w] per type-1 orbit + [alpha, beta, w] per type-2 orbit

and the objective is the sum of squared relative moment residuals over a
function sequence.  Minimisation is Levenberg-Marquardt with gain-ratio
damping: a double-precision pass does the bulk of the work and an
extended-precision pass (``precision_digits``) finishes and certifies the
result against ``threshold``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath as mp
import numpy as np

from .errors import NumericFailureError, SequenceRangeError, SingularEvaluationError
from .functions import (
    GroupSequence,
    Monomial2D,
    build_group_sequence_2d,
    flatten,
    polynomial_group_sequence_2d,
)
from .geometry import Orbit, OrbitKind, SymmetricRule, expand_rule, unknown_count
from .integrals import IntegralTable

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "SolveReport",
    "GrowReport",
    "pack",
    "unpack",
    "objective",
    "residuals",
    "objective_gradient",
    "solve_rule",
    "grow_groups",
    "elimination_pass",
    "refine_polynomial_rule",
]


@dataclass(frozen=True)
class SolverConfig:
    precision_digits: int = 64
    threshold: float = 1e-32
    initial_damping: float = 1e-3
    max_iter: int = 500
    stall_window: int = 25
    stall_tol: float = 1e-8
    float_presolve: bool = True
    float_max_iter: int = 5000
    polish_iter: int = 10

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        if "damping" in d:
            d["initial_damping"] = d.pop("damping")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown solver settings: {', '.join(sorted(unknown))}")
        known = dict(d)
        for k in ("threshold", "initial_damping", "stall_tol"):
            if k in known:
                known[k] = float(known[k])
        return cls(**known)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class SolveReport:
    final_objective: mp.mpf
    iterations: int
    converged: bool
    rule: SymmetricRule
    residuals: list
    float_iterations: int = 0
    message: str = ""

    @property
    def residual_max(self):
        return max((abs(r) for r in self.residuals), default=mp.mpf(0))


@dataclass
class GrowReport:
    n: int
    counts: tuple
    initial_nu: int
    final_nu: int | None
    eliminated: bool = False
    stages: list = field(default_factory=list)
    failed_stage: int | None = None

    @property
    def converged(self) -> bool:
        return self.final_nu is not None

    @property
    def final_rule(self) -> SymmetricRule | None:
        for nu, rep in reversed(self.stages):
            if rep.converged:
                return rep.rule
        return None

    def stage(self, nu) -> SolveReport:
        for k, rep in self.stages:
            if k == nu:
                return rep
        raise KeyError(nu)


# --------------------------------------------------------------------------
# packing
# --------------------------------------------------------------------------
def pack(rule: SymmetricRule) -> list:
    x = []
    for o in rule.orbits:
        x += list(o.params) + [o.weight]
    return x


def unpack(x: Sequence, counts: Sequence[int], digits: int = 64) -> SymmetricRule:
    n0, n1, n2 = counts
    if len(x) != unknown_count(counts):
        raise ValueError(f"expected {unknown_count(counts)} unknowns, got {len(x)}")
    orbits, i = [], 0
    for _ in range(n0):
        orbits.append(Orbit(OrbitKind.TYPE0, x[i]))
        i += 1
    for _ in range(n1):
        orbits.append(Orbit(OrbitKind.TYPE1, x[i + 1], x[i]))
        i += 2
    for _ in range(n2):
        orbits.append(Orbit(OrbitKind.TYPE2, x[i + 2], x[i], x[i + 1]))
        i += 3
    return SymmetricRule(tuple(orbits), digits)


class _Layout:
    """Points of a packed rule as affine functions of the unknowns."""

    def __init__(self, counts):
        self.counts = tuple(counts)
        self.n_unknowns = unknown_count(counts)
        n0, n1, n2 = counts
        # per point: (a_const, [(idx, coeff)]), (b_const, [...]), weight index
        pts = []
        i = 0
        third = 1 / mp.mpf(3)
        for _ in range(n0):
            pts.append(((third, []), (third, []), i))
            i += 1
        half = mp.mpf(1) / 2
        for _ in range(n1):
            al = (0, [(i, 1)])
            g = (half, [(i, -half)])
            for a, b in ((al, g), (g, al), (g, g)):
                pts.append((a, b, i + 1))
            i += 2
        for _ in range(n2):
            al = (0, [(i, 1)])
            be = (0, [(i + 1, 1)])
            c = (1, [(i, -1), (i + 1, -1)])
            for a, b in ((al, be), (be, al), (al, c), (c, al), (be, c), (c, be)):
                pts.append((a, b, i + 2))
            i += 3
        self.points = pts
        u, npts = self.n_unknowns, len(pts)
        self.Ca = np.zeros((npts, u))
        self.Cb = np.zeros((npts, u))
        self.a0 = np.zeros(npts)
        self.b0 = np.zeros(npts)
        self.wi = np.array([p[2] for p in pts], dtype=int)
        for k, ((ac, al), (bc, bl), _) in enumerate(pts):
            self.a0[k] = float(ac)
            self.b0[k] = float(bc)
            for j, c in al:
                self.Ca[k, j] += float(c)
            for j, c in bl:
                self.Cb[k, j] += float(c)
        self.W = np.zeros((npts, u))
        self.W[np.arange(npts), self.wi] = 1.0

    @staticmethod
    def _affine(spec, x):
        const, terms = spec
        v = mp.mpf(const)
        for j, c in terms:
            v += c * x[j]
        return v


def _eval_point(funcs, a, b):
    """Values and gradients of every function at one point (mp)."""
    pmax = 0
    for f in funcs:
        if isinstance(f, Monomial2D):
            pmax = max(pmax, f.p, f.q)
    pa = [mp.mpf(1)]
    pb = [mp.mpf(1)]
    for _ in range(pmax):
        pa.append(pa[-1] * a)
        pb.append(pb[-1] * b)
    vals, gxs, gys = [], [], []
    for f in funcs:
        if isinstance(f, Monomial2D):
            p, q = f.p, f.q
            vals.append(pa[p] * pb[q])
            gxs.append(p * pa[p - 1] * pb[q] if p else 0)
            gys.append(q * pa[p] * pb[q - 1] if q else 0)
        else:
            vals.append(f.value(a, b))
            gx, gy = f.gradient(a, b)
            gxs.append(gx)
            gys.append(gy)
    return vals, gxs, gys


def _scales(ints):
    return [v if v != 0 else mp.mpf(1) for v in ints]


def _residual_jacobian_mp(layout, funcs, ints, x, want_jac=True):
    m, u = len(funcs), layout.n_unknowns
    q = [mp.mpf(0)] * m
    J = [[mp.mpf(0)] * u for _ in range(m)] if want_jac else None
    for aspec, bspec, wi in layout.points:
        a = layout._affine(aspec, x)
        b = layout._affine(bspec, x)
        w = x[wi]
        if want_jac:
            vals, gxs, gys = _eval_point(funcs, a, b)
        else:
            vals = [f.value(a, b) for f in funcs]
        for j in range(m):
            q[j] += w * vals[j]
            if want_jac:
                row = J[j]
                row[wi] += vals[j]
                gx, gy = gxs[j], gys[j]
                for k, c in aspec[1]:
                    row[k] += w * c * gx
                for k, c in bspec[1]:
                    row[k] += w * c * gy
    s = _scales(ints)
    r = [(q[j] - ints[j]) / s[j] for j in range(m)]
    if want_jac:
        J = [[v / s[j] for v in J[j]] for j in range(m)]
    return r, J


def _residual_jacobian_np(layout, funcs, ints, x):
    a = layout.a0 + layout.Ca @ x
    b = layout.b0 + layout.Cb @ x
    w = x[layout.wi]
    V = np.empty((len(funcs), len(a)))
    GX = np.empty_like(V)
    GY = np.empty_like(V)
    for j, f in enumerate(funcs):
        V[j] = f.value_np(a, b)
        GX[j], GY[j] = f.gradient_np(a, b)
    r = (V @ w - ints) / np.where(ints != 0, ints, 1.0)
    J = V @ layout.W + (GX * w) @ layout.Ca + (GY * w) @ layout.Cb
    J /= np.where(ints != 0, ints, 1.0)[:, None]
    return r, J


# --------------------------------------------------------------------------
# public objective helpers
# --------------------------------------------------------------------------
def residuals(rule: SymmetricRule, seq, table: IntegralTable | None = None) -> list:
    """Relative moment residuals (absolute where the integral is zero)."""
    funcs = flatten(seq)
    with mp.workdps(rule.precision_digits):
        table = table or IntegralTable(digits=rule.precision_digits)
        ints = table.values(funcs)
        s = _scales(ints)
        pts = expand_rule(rule)
        out = []
        for f, iv, sc in zip(funcs, ints, s):
            qv = mp.fsum(w * f.value(p.a, p.b) for p, w in pts)
            out.append((qv - iv) / sc)
    return out


def objective(rule: SymmetricRule, seq, table: IntegralTable | None = None) -> mp.mpf:
    """Sum of squared residuals over the expanded points of ``rule``."""
    with mp.workdps(rule.precision_digits):
        return mp.fsum(r * r for r in residuals(rule, seq, table))


def objective_gradient(x: Sequence, counts, seq, table: IntegralTable) -> list:
    """Gradient of the objective with respect to the packed unknowns."""
    funcs = flatten(seq)
    layout = _Layout(counts)
    r, J = _residual_jacobian_mp(layout, funcs, table.values(funcs), [mp.mpf(v) for v in x])
    return [2 * mp.fsum(J[j][k] * r[j] for j in range(len(r))) for k in range(layout.n_unknowns)]


def objective_at(x: Sequence, counts, seq, table: IntegralTable) -> mp.mpf:
    funcs = flatten(seq)
    r, _ = _residual_jacobian_mp(_Layout(counts), funcs, table.values(funcs), [mp.mpf(v) for v in x], False)
    return mp.fsum(v * v for v in r)


# --------------------------------------------------------------------------
# Levenberg-Marquardt
# --------------------------------------------------------------------------
def _lm_float(layout, funcs, ints, x, cfg):
    ints = np.array([float(v) for v in ints])
    x = np.array([float(v) for v in x])
    with np.errstate(all="ignore"):
        r, J = _residual_jacobian_np(layout, funcs, ints, x)
    F = float(r @ r)
    if not np.isfinite(F):
        return x, F, 0
    lam, nu = None, 2.0
    hist = [F]
    target = cfg.threshold * 1e4
    it = 0
    while it < cfg.float_max_iter and F > target:
        A = J.T @ J
        g = J.T @ r
        D = np.diag(A).copy()
        D[D == 0] = 1.0
        if lam is None:
            lam = cfg.initial_damping * D.max()
        it += 1
        try:
            dx = np.linalg.solve(A + lam * np.diag(D), -g)
        except np.linalg.LinAlgError:
            dx = None
        accepted = False
        if dx is not None and np.all(np.isfinite(dx)):
            xn = x + dx
            with np.errstate(all="ignore"):
                rn, Jn = _residual_jacobian_np(layout, funcs, ints, xn)
            Fn = float(rn @ rn)
            if np.isfinite(Fn) and np.all(np.isfinite(Jn)) and Fn < F:
                pred = float(-2 * dx @ g - dx @ A @ dx)
                rho = (F - Fn) / pred if pred > 0 else 0.0
                x, r, J, F = xn, rn, Jn, Fn
                lam *= max(1 / 3, 1 - (2 * rho - 1) ** 3)
                nu = 2.0
                accepted = True
        if not accepted:
            lam *= nu
            nu *= 2
            if lam > 1e40 * D.max():
                break
        hist.append(F)
        w = cfg.stall_window
        if len(hist) > w and hist[-w - 1] - F < cfg.stall_tol * hist[-w - 1]:
            break
    return x, F, it


def _lm_mp(layout, funcs, ints, x, cfg):
    thr = mp.mpf(cfg.threshold)
    x = [mp.mpf(v) for v in x]
    r, J = _residual_jacobian_mp(layout, funcs, ints, x)
    F = mp.fsum(v * v for v in r)
    u = layout.n_unknowns
    lam, nu = None, 2
    hist = [F]
    it = 0
    stalled = False
    polish = 0
    while it < cfg.max_iter and polish < cfg.polish_iter:
        if F < thr:
            # a few extra steps push the solution well below the threshold
            polish += 1
            if F == 0 or (polish > 1 and F > hist[-2] / 10):
                break
        Jm = mp.matrix(J)
        A = Jm.T * Jm
        g = Jm.T * mp.matrix(r)
        D = [A[i, i] if A[i, i] != 0 else mp.mpf(1) for i in range(u)]
        if lam is None:
            lam = mp.mpf(cfg.initial_damping) * max(D)
        it += 1
        # below the threshold an undamped step is tried first for quadratic convergence
        step_lam = 0 if F < thr else lam
        M = A.copy()
        for i in range(u):
            M[i, i] += step_lam * D[i]
        accepted = False
        try:
            dx = mp.lu_solve(M, -g)
        except ZeroDivisionError:
            dx = None
        if dx is not None:
            xn = [x[i] + dx[i] for i in range(u)]
            try:
                rn, Jn = _residual_jacobian_mp(layout, funcs, ints, xn)
                Fn = mp.fsum(v * v for v in rn)
            except (SingularEvaluationError, ZeroDivisionError):
                Fn = None
            if Fn is not None and (mp.isnan(Fn) or mp.isinf(Fn)):
                raise NumericFailureError("non-finite objective in extended arithmetic")
            if Fn is not None and Fn < F:
                d = mp.matrix(dx)
                pred = -2 * (d.T * g)[0] - (d.T * A * d)[0]
                rho = (F - Fn) / pred if pred > 0 else mp.mpf(0)
                x, r, J, F = xn, rn, Jn, Fn
                if step_lam:
                    lam *= max(mp.mpf(1) / 3, 1 - (2 * rho - 1) ** 3)
                    nu = 2
                accepted = True
        if not accepted:
            lam *= nu
            nu *= 2
            if lam > mp.mpf(10) ** 60 * max(D):
                stalled = True
                break
        hist.append(F)
        w = cfg.stall_window
        if len(hist) > w and hist[-w - 1] - F < mp.mpf(cfg.stall_tol) * hist[-w - 1]:
            stalled = True
            break
    return x, F, r, it, stalled


def solve_rule(counts, seq, init: SymmetricRule, cfg: SolverConfig = SolverConfig(), table=None) -> SolveReport:
    """Minimise the moment objective for fixed orbit counts.

    Non-convergence (stall or iteration limit with the objective above
    ``cfg.threshold``) is reported via ``converged=False``.
    """
    counts = tuple(counts)
    if tuple(init.counts) != counts:
        raise ValueError(f"initial rule has counts {init.counts}, expected {counts}")
    if cfg.precision_digits < 64:
        log.warning("working precision %d digits is below 64", cfg.precision_digits)
    funcs = flatten(seq)
    with mp.workdps(cfg.precision_digits):
        layout = _Layout(counts)
        table = (table or IntegralTable(digits=cfg.precision_digits)).extend(funcs)
        ints = table.values(funcs)
        x0 = [mp.mpf(v) for v in pack(init)]
        f_it = 0
        if cfg.float_presolve and all(f.has_numpy for f in funcs):
            xf, Ff, f_it = _lm_float(layout, funcs, ints, x0, cfg)
            if np.isfinite(Ff):
                F0 = objective_at(x0, counts, funcs, table)
                cand = [mp.mpf(float(v)) for v in xf]
                if objective_at(cand, counts, funcs, table) < F0:
                    x0 = cand
        x, F, r, it, stalled = _lm_mp(layout, funcs, ints, x0, cfg)
        converged = F < mp.mpf(cfg.threshold)
        rule = unpack(x, counts, cfg.precision_digits)
        msg = "converged" if converged else ("stalled" if stalled else "iteration limit")
    return SolveReport(F, it + f_it, bool(converged), rule, r, f_it, msg)


def refine_polynomial_rule(seed: SymmetricRule, degree: int, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Polish a published polynomial rule on the reduced monomial sequence."""
    return solve_rule(seed.counts, polynomial_group_sequence_2d(degree), seed, cfg)


def _default_builder(nu):
    return build_group_sequence_2d(nu)


def grow_groups(
    n: int,
    counts,
    seq_builder: Callable[[int], GroupSequence] | None,
    init: SymmetricRule,
    cfg: SolverConfig = SolverConfig(),
    initial_nu: int | None = None,
    max_nu: int | None = None,
    progress: Callable | None = None,
) -> GrowReport:
    """Append function groups one at a time until the solve stops converging."""
    from .seeds import POLY_DEGREE

    builder = seq_builder or _default_builder
    if initial_nu is None:
        if n not in POLY_DEGREE:
            raise ValueError(f"no tabulated initial nu for n={n}; pass initial_nu")
        initial_nu = POLY_DEGREE[n]
    report = GrowReport(n, tuple(counts), initial_nu, None)
    table = IntegralTable(digits=cfg.precision_digits)
    current = init
    nu = initial_nu
    while max_nu is None or nu <= max_nu:
        try:
            seq = builder(nu)
        except SequenceRangeError:
            log.info("n=%d: sequence ends before nu=%d; growth stops", n, nu)
            break
        table = table.extend(seq)
        rep = solve_rule(counts, seq, current, cfg, table)
        report.stages.append((nu, rep))
        if progress:
            progress(n, nu, rep)
        log.info("n=%d nu=%d F=%s converged=%s", n, nu, mp.nstr(rep.final_objective, 4), rep.converged)
        if not rep.converged:
            if nu == initial_nu:
                report.failed_stage = nu
            break
        report.final_nu = nu
        current = rep.rule
        nu += 1
    return report


def elimination_pass(reports: Sequence[GrowReport]) -> list[GrowReport]:
    """Flag point counts whose final nu does not beat a smaller count."""
    out = sorted(reports, key=lambda r: r.n)
    best = None
    for rep in out:
        if rep.final_nu is None:
            rep.eliminated = True
            continue
        rep.eliminated = best is not None and rep.final_nu <= best
        best = rep.final_nu if best is None else max(best, rep.final_nu)
    return out
