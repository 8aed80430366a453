"""Double-precision study of the 1/r oscillatory kernels over triangle pairs.

The integrals are

    I_k = int_A int_A' g_k(|x - x'|) / |x - x'|  dA' dA,   g_c = cos(2 pi r), g_s = sin(2 pi r).

The inner integral is done in polar coordinates centred on the outer point:
``A'`` is split into the three (signed) triangles formed by the point and
each edge, the radial integral has the closed form ``G(R) = int_0^R g``,
and the angular integral over an edge at distance ``h`` uses
``tan(phi) = sinh(u)``, giving the smooth integrand ``G(h cosh u) / cosh u``.
The outer reference integral maps ``A`` onto the unit square by a Duffy
collapse and applies a tanh-sinh product rule.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateDomainError, PrecisionError
from .geometry import PhysicalRule, Triangle

log = logging.getLogger(__name__)

__all__ = [
    "Kernel",
    "KERNELS",
    "TrianglePair",
    "ErrorRecord",
    "STUDY_TRIANGLE",
    "domain_pair",
    "inner_integral",
    "inner_integral_many",
    "outer_integral",
    "reference_value",
    "map_reference_rule",
    "run_study",
    "write_csv",
]


@dataclass(frozen=True)
class Kernel:
    """A radial kernel ``g(r) / r`` given by ``g`` and, optionally, ``G = int_0^R g``."""

    name: str
    g: Callable
    antiderivative: Callable | None = None

    def radial(self, R):
        """``int_0^R g(rho) d rho`` (the polar Jacobian cancels the 1/r)."""
        R = np.asarray(R, dtype=float)
        if self.antiderivative is not None:
            return self.antiderivative(R)
        z, w = np.polynomial.legendre.leggauss(32)
        s = (z + 1) / 2
        return (R[..., None] / 2 * w * self.g(R[..., None] * s)).sum(axis=-1)


TWO_PI = 2 * np.pi
KERNELS = {
    "cos": Kernel("cos", lambda r: np.cos(TWO_PI * r), lambda R: np.sin(TWO_PI * R) / TWO_PI),
    "sin": Kernel("sin", lambda r: np.sin(TWO_PI * r), lambda R: (1 - np.cos(TWO_PI * R)) / TWO_PI),
    # g(r) = r, i.e. the constant integrand 1; used as a plumbing check
    "one": Kernel("one", lambda r: r, lambda R: R * R / 2),
    "zero": Kernel("zero", lambda r: 0 * r, lambda R: 0 * R),
}


def _kernel(k) -> Kernel:
    return KERNELS[k] if isinstance(k, str) else k


@dataclass(frozen=True)
class TrianglePair:
    outer: Triangle
    inner: Triangle
    relation: str = "identical"


STUDY_TRIANGLE = Triangle((0.0, 0.0), (0.05, 0.05), (-0.05, 0.05))


def domain_pair(domain: int) -> TrianglePair:
    """Domain 1: ``A' = A``; Domain 2: ``A'`` is ``A`` reflected across its top edge."""
    if domain == 1:
        return TrianglePair(STUDY_TRIANGLE, STUDY_TRIANGLE, "identical")
    if domain == 2:
        return TrianglePair(STUDY_TRIANGLE, Triangle((0.0, 0.1), (-0.05, 0.05), (0.05, 0.05)), "edge-reflection")
    raise ValueError("domain must be 1 or 2")


def _float_vertices(tri: Triangle):
    return np.array([[float(c) for c in v] for v in tri.vertices])


def _edge_terms(kernel: Kernel, X, p, q, z, w):
    """Signed polar integral over the triangles (x, p, q) for all rows of X."""
    e = q - p
    L = np.hypot(*e)
    e = e / L
    d = p - X
    h_signed = d[:, 0] * e[1] - d[:, 1] * e[0]
    h = np.abs(h_signed)
    tp = d @ e
    tq = tp + L
    out = np.zeros(len(X))
    ok = h > 1e-15 * L
    if not np.any(ok):
        return out
    hk = h[ok]
    u1 = np.arcsinh(tp[ok] / hk)
    u2 = np.arcsinh(tq[ok] / hk)
    mid, half = (u1 + u2) / 2, (u2 - u1) / 2
    u = mid[:, None] + half[:, None] * z
    ch = np.cosh(u)
    vals = kernel.radial(hk[:, None] * ch) / ch
    out[ok] = np.sign(h_signed[ok]) * half * (vals @ w)
    return out


def inner_integral_many(kernel, A_prime: Triangle, X, tol: float = 1e-13, q0: int = 16, q_max: int = 1024):
    """Inner integrals at the outer points ``X`` (shape (m, 2)).

    The Gauss-Legendre order in ``u`` is doubled until two consecutive
    orders agree to ``tol`` (relative to the absolute sum of edge terms).
    """
    kernel = _kernel(kernel)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    V = _float_vertices(A_prime)
    area2 = (V[1, 0] - V[0, 0]) * (V[2, 1] - V[0, 1]) - (V[2, 0] - V[0, 0]) * (V[1, 1] - V[0, 1])
    if area2 == 0:
        return np.zeros(len(X))
    orient = np.sign(area2)

    def level(q):
        z, w = np.polynomial.legendre.leggauss(q)
        parts = [_edge_terms(kernel, X, V[i], V[(i + 1) % 3], z, w) for i in range(3)]
        return orient * sum(parts), sum(np.abs(t) for t in parts)

    prev, _ = level(q0)
    q = q0
    while True:
        q *= 2
        cur, scale = level(q)
        gap = np.abs(cur - prev)
        if np.all(gap <= tol * np.maximum(scale, 1e-300)):
            return cur
        if q >= q_max:
            raise PrecisionError(f"inner integral not converged at order {q} (gap {gap.max():.3e})")
        prev = cur


def inner_integral(kernel, A_prime: Triangle, x) -> float:
    """Inner integral at a single point ``x``."""
    return float(inner_integral_many(kernel, A_prime, np.asarray([x], dtype=float))[0])


def outer_integral(kernel, pair: TrianglePair, outer_rule: PhysicalRule) -> float:
    """Quadrature of the inner integral with an explicit rule on ``pair.outer``."""
    pts, wts = outer_rule.as_arrays()
    vals = inner_integral_many(kernel, pair.inner, pts)
    return float(np.dot(wts, vals))


def _tanh_sinh_01(level: int):
    h = 2.0 ** -level
    t = np.arange(-int(4.5 / h), int(4.5 / h) + 1) * h
    s = np.pi / 2 * np.sinh(t)
    # 1 - x and x in a symmetric, cancellation-free form
    x = 1 / (1 + np.exp(-2 * s))
    w = h * np.pi / 2 * np.cosh(t) / (2 * np.cosh(s) ** 2)
    keep = (w > 1e-300) & (x > 0) & (x < 1)
    return x[keep], w[keep]


def reference_value(kernel, pair: TrianglePair, tol: float = 1e-12, start_level: int = 3, max_level: int = 7):
    """Reference ``I`` and its certified error from a Duffy tanh-sinh product.

    Levels are refined (halving the step) until two consecutive levels agree
    to ``tol``; returns ``(value, |difference of the last two levels|)``.
    """
    kernel = _kernel(kernel)
    V = _float_vertices(pair.outer)
    area2 = abs((V[1, 0] - V[0, 0]) * (V[2, 1] - V[0, 1]) - (V[2, 0] - V[0, 0]) * (V[1, 1] - V[0, 1]))
    if area2 == 0:
        raise DegenerateDomainError("outer triangle has zero area")
    prev = None
    for lev in range(start_level, max_level + 1):
        s, ws = _tanh_sinh_01(lev)
        S, T = np.meshgrid(s, s, indexing="ij")
        W = np.outer(ws, ws) * S
        P = V[0] + S[..., None] * (V[1] - V[0]) + (S * T)[..., None] * (V[2] - V[1])
        vals = inner_integral_many(kernel, pair.inner, P.reshape(-1, 2)).reshape(S.shape)
        cur = area2 * float((W * vals).sum())
        if prev is not None:
            err = abs(cur - prev)
            if err <= tol * max(abs(cur), 1e-300) or (cur == 0 and prev == 0):
                return cur, err
        prev = cur
    raise PrecisionError(f"reference value not converged by level {max_level}")


def map_reference_rule(rule: PhysicalRule, tri: Triangle) -> PhysicalRule:
    """Affine image of a reference-triangle rule, with the same convention as map_to_physical."""
    (x1, y1), (x2, y2), (x3, y3) = [(float(a), float(b)) for a, b in tri.vertices]
    scale = abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))
    pts, wts = rule.as_arrays()
    a, b = pts[:, 0], pts[:, 1]
    c = 1 - a - b
    xy = np.stack([a * x1 + b * x2 + c * x3, a * y1 + b * y2 + c * y3], axis=1)
    return PhysicalRule(tuple(map(tuple, xy)), tuple(scale * wts), dict(rule.source))


@dataclass(frozen=True)
class ErrorRecord:
    family: str
    n: int
    kernel: str
    domain: int
    epsilon: float


def run_study(rules: dict, kernels=("cos", "sin"), domains=(1, 2), references: dict | None = None):
    """Relative errors for every (family, n, kernel, domain).

    ``rules`` maps a family name to ``{n: PhysicalRule on the reference
    triangle}``; a ``None`` entry marks a rule that could not be produced and
    is skipped with a log message.  Returns ``(records, references)``, with
    records sorted by key and references as ``{(kernel, domain): (I, err)}``.
    """
    refs = dict(references or {})
    records = []
    for dom in domains:
        pair = domain_pair(dom)
        for k in kernels:
            if (k, dom) not in refs:
                refs[(k, dom)] = reference_value(k, pair)
            exact = refs[(k, dom)][0]
            for family in sorted(rules):
                for n in sorted(rules[family]):
                    rule = rules[family][n]
                    if rule is None:
                        log.warning("no %s rule for n=%d; skipped", family, n)
                        continue
                    approx = outer_integral(k, pair, map_reference_rule(rule, pair.outer))
                    eps = abs((approx - exact) / exact) if exact != 0 else abs(approx)
                    records.append(ErrorRecord(family, n, k, dom, float(eps)))
    records.sort(key=lambda r: (r.family, r.n, r.kernel, r.domain))
    return records, refs


def write_csv(records, path=None) -> str:
    """CSV text ``family,n,kernel,domain,epsilon`` (17 significant digits)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "n", "kernel", "domain", "epsilon"])
    for r in records:
        w.writerow([r.family, r.n, r.kernel, r.domain, f"{r.epsilon:.16e}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
