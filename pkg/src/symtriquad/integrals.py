"""Reference integrals of basis functions over their reference domains.

Closed forms are used for monomials and ``x^k ln x``.  The two 2-D
logarithmic families have closed-form inner integrals in ``y``; the outer
integral in ``x`` is done by double-exponential quadrature at two working
precisions, and the agreement between the two is the certificate.

:func:`oracle_integrate_2d` is a generic, independent route: a Duffy
collapse of the triangle onto the unit square followed by a tanh-sinh
product rule.  It is used to cross-check the table and to integrate
user-supplied functions without a known integral.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import mpmath as mp

from .errors import PrecisionError, SingularEvaluationError
from .functions import (
    BasisFunction,
    Custom,
    LogCorner2D,
    LogEdge2D,
    LogMono1D,
    Monomial1D,
    Monomial2D,
    Swapped,
    basis_from_descriptor,
    flatten,
)
from .geometry import REFERENCE_TRIANGLE, Triangle

__all__ = [
    "IntegralEntry",
    "IntegralTable",
    "integrate_reference",
    "reference_entry",
    "oracle_integrate_1d",
    "oracle_integrate_2d",
    "GUARD_DIGITS",
]

GUARD_DIGITS = 16
DEFAULT_DIGITS = 64


@dataclass(frozen=True)
class IntegralEntry:
    value: mp.mpf
    provenance: str
    certified_digits: int


def _agreement_digits(a, b) -> int:
    diff = abs(a - b)
    scale = max(abs(a), abs(b))
    if diff == 0:
        return 10**6
    if scale == 0:
        return int(-mp.log10(diff))
    return int(mp.floor(-mp.log10(diff / scale)))


def _corner_inner(x):
    # integral over y in [0, 1-x] of ln(y + sqrt(x^2 + y^2))
    r = mp.sqrt(x * x + (1 - x) ** 2)
    return (1 - x) * mp.log(1 - x + r) - r + x


def _edge_inner(x):
    # integral over y in [0, 1-x] of ln(y - 1 + sqrt(x^2 + (y-1)^2)); u = 1 - y
    s1 = mp.sqrt(1 + x * x)
    sq2 = mp.sqrt(2)
    return 2 * (1 - x) * mp.log(x) - (mp.log(1 + s1) - s1) + x * (mp.log(x) + mp.log(1 + sq2)) - sq2 * x


def _iterated_log_integral(f, digits: int) -> mp.mpf:
    p = f.power
    inner = _edge_inner if isinstance(f, LogEdge2D) else _corner_inner
    with mp.workdps(digits):
        return mp.quad(lambda x: (x ** p if p else 1) * inner(x), [0, 1], method="tanh-sinh")


def reference_entry(f: BasisFunction, digits: int = DEFAULT_DIGITS) -> IntegralEntry:
    """Reference integral of ``f`` with provenance and certified digits."""
    key = (f, digits)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    entry = _compute_entry(f, digits)
    _CACHE[key] = entry
    return entry


_CACHE: dict = {}


def _compute_entry(f, digits):
    with mp.workdps(digits + GUARD_DIGITS):
        if isinstance(f, Monomial2D):
            v = mp.factorial(f.p) * mp.factorial(f.q) / mp.factorial(f.p + f.q + 2)
            return IntegralEntry(+v, "analytic", digits + GUARD_DIGITS)
        if isinstance(f, Monomial1D):
            return IntegralEntry(mp.mpf(1) / (f.k + 1), "analytic", digits + GUARD_DIGITS)
        if isinstance(f, LogMono1D):
            return IntegralEntry(-mp.mpf(1) / (f.k + 1) ** 2, "analytic", digits + GUARD_DIGITS)
    if isinstance(f, Swapped):
        # the reference triangle is symmetric about y = x
        e = reference_entry(f.base, digits)
        return e
    if isinstance(f, (LogEdge2D, LogCorner2D)):
        lo = _iterated_log_integral(f, digits + GUARD_DIGITS)
        hi = _iterated_log_integral(f, digits + GUARD_DIGITS + 10)
        cert = min(_agreement_digits(lo, hi), digits + GUARD_DIGITS)
        if cert < min(40, digits):
            raise PrecisionError(f"{f.label()}: only {cert} certified digits")
        return IntegralEntry(hi, "numeric", cert)
    if isinstance(f, Custom):
        if f.integral is not None:
            return IntegralEntry(mp.mpf(f.integral), "analytic", digits + GUARD_DIGITS)
        if f.dim == 1:
            v, cert = oracle_integrate_1d(f.value, digits, certificate=True)
        else:
            v, cert = oracle_integrate_2d(f.value, REFERENCE_TRIANGLE, digits, certificate=True)
        return IntegralEntry(v, "numeric", cert)
    raise TypeError(f"no reference integral for {f!r}")


def integrate_reference(f: BasisFunction, digits: int = DEFAULT_DIGITS):
    """``(value, provenance)`` of the integral of ``f`` over its reference domain."""
    e = reference_entry(f, digits)
    return e.value, e.provenance


def _safe(fn):
    def wrapped(*args):
        try:
            return fn(*args)
        except (SingularEvaluationError, ZeroDivisionError, ValueError):
            # only reached at nodes that round onto the singular locus, whose
            # weights are below working precision
            return mp.mpf(0)

    return wrapped


def oracle_integrate_1d(f: Callable, target_digits: int = 40, interval=(0, 1), certificate=False):
    """Tanh-sinh integral of a scalar function on an interval."""
    g = _safe(f)
    with mp.workdps(target_digits + GUARD_DIGITS):
        a, b = mp.mpf(interval[0]), mp.mpf(interval[1])
        v, err = mp.quad(g, [a, b], method="tanh-sinh", error=True)
        cert = _certified(v, err, target_digits)
    return (v, cert) if certificate else v


def _certified(v, err, target_digits):
    if err == 0:
        cert = target_digits + GUARD_DIGITS
    else:
        scale = abs(v) if v != 0 else 1
        cert = int(mp.floor(-mp.log10(err / scale)))
    if cert < target_digits:
        raise PrecisionError(f"oracle certified only {cert} of {target_digits} digits")
    return min(cert, target_digits + GUARD_DIGITS)


def oracle_integrate_2d(
    f: Callable, domain: Triangle = REFERENCE_TRIANGLE, target_digits: int = 40, certificate=False
):
    """Integral of ``f(x, y)`` over a triangle by a collapsed tanh-sinh product.

    The map ``(s, t) -> v1 + s (v2 - v1) + s t (v3 - v2)`` sends every edge
    and vertex of the triangle to the boundary of the unit square, where
    the double-exponential nodes cluster; the factor ``s`` in the Jacobian
    also absorbs ``1/r`` behaviour at ``v1``.  ``mpmath.quad`` raises the
    tanh-sinh level until successive levels agree; that difference is the
    certificate.
    """
    if isinstance(f, BasisFunction):
        f = f.value
    g = _safe(f)
    with mp.workdps(target_digits + GUARD_DIGITS):
        (x1, y1), (x2, y2), (x3, y3) = [(mp.mpf(a), mp.mpf(b)) for a, b in domain.vertices]
        jac = 2 * abs(((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)) / 2)
        if jac == 0:
            return (mp.mpf(0), target_digits) if certificate else mp.mpf(0)
        ex, ey = x2 - x1, y2 - y1
        fx, fy = x3 - x2, y3 - y2

        def integrand(s, t):
            return s * g(x1 + s * (ex + t * fx), y1 + s * (ey + t * fy))

        v, err = mp.quad(integrand, [0, 1], [0, 1], method="tanh-sinh", error=True)
        v = jac * v
        cert = _certified(v, jac * err, target_digits)
    return (v, cert) if certificate else v


class IntegralTable:
    """Reference integrals for a fixed list of functions at one precision."""

    def __init__(self, entries: dict | None = None, digits: int = DEFAULT_DIGITS):
        self.digits = digits
        self._entries = dict(entries or {})

    @classmethod
    def for_sequence(cls, seq, digits: int = DEFAULT_DIGITS) -> "IntegralTable":
        funcs = flatten(seq)
        return cls({f: reference_entry(f, digits) for f in funcs}, digits)

    def extend(self, seq) -> "IntegralTable":
        entries = dict(self._entries)
        for f in flatten(seq):
            if f not in entries:
                entries[f] = reference_entry(f, self.digits)
        return IntegralTable(entries, self.digits)

    def __getitem__(self, f) -> mp.mpf:
        if f not in self._entries:
            self._entries[f] = reference_entry(f, self.digits)
        return self._entries[f].value

    def entry(self, f) -> IntegralEntry:
        self[f]
        return self._entries[f]

    def __contains__(self, f):
        return f in self._entries

    def __len__(self):
        return len(self._entries)

    def values(self, seq) -> list:
        return [self[f] for f in flatten(seq)]

    def covers(self, seq) -> bool:
        return all(f in self._entries for f in flatten(seq))

    # on-disk cache: "tag params precision value certified_digits"
    def save(self, path) -> None:
        lines = []
        for f, e in self._entries.items():
            if isinstance(f, (Custom, Swapped)):
                # custom callables cannot be stored; swapped entries alias their base
                continue
            desc = f.descriptor()
            tag = desc.pop("type")
            params = ",".join(f"{k}={desc[k]}" for k in sorted(desc)) or "-"
            with mp.workdps(self.digits + GUARD_DIGITS):
                val = mp.nstr(e.value, self.digits + GUARD_DIGITS, min_fixed=1, max_fixed=0)
            lines.append(f"{tag} {params} {self.digits} {val} {e.certified_digits} {e.provenance}")
        Path(path).write_text("\n".join(sorted(lines)) + "\n")

    @classmethod
    def load(cls, path, digits: int | None = None) -> "IntegralTable":
        entries = {}
        stored_digits = None
        for line in Path(path).read_text().splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split()
            tag, params, prec, val, cert = parts[:5]
            prov = parts[5] if len(parts) > 5 else "numeric"
            desc = {"type": tag}
            if params != "-":
                for kv in params.split(","):
                    k, v = kv.split("=")
                    desc[k] = int(v)
            stored_digits = int(prec)
            with mp.workdps(int(prec) + GUARD_DIGITS):
                entries[basis_from_descriptor(desc)] = IntegralEntry(mp.mpf(val), prov, int(cert))
        return cls(entries, digits or stored_digits or DEFAULT_DIGITS)
