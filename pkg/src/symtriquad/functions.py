"""Basis functions and function-group sequences.

1-D functions live on ``[0, 1]``, 2-D functions on the reference triangle
``{x, y >= 0, x + y <= 1}``.  Every built-in function has an extended
precision scalar path (``value`` / ``gradient``, mpmath) and a vectorised
double-precision path (``value_np`` / ``gradient_np``, numpy) used by the
float pre-solve and the kernel study.

The two logarithmic 2-D families are

* ``LogEdge2D(k)   = x**k     * ln(y - 1 + sqrt(x**2 + (y - 1)**2))``
  (singular on the edge ``x = 0``),
* ``LogCorner2D(k) = x**(k-1) * ln(y + sqrt(x**2 + y**2))``
  (singular at the corner ``(0, 0)``),

with ``k`` the index in the alternating singular sequence (odd ``k`` for
the edge family, even ``k`` for the corner family).  The resulting power of
``x`` is exposed as :attr:`power`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import mpmath as mp
import numpy as np

from .errors import SequenceRangeError, SingularEvaluationError

__all__ = [
    "BasisFunction",
    "Monomial1D",
    "LogMono1D",
    "Monomial2D",
    "LogEdge2D",
    "LogCorner2D",
    "Custom",
    "Swapped",
    "FunctionGroup",
    "GroupSequence",
    "BUILTIN_NU_MAX",
    "monomial_sequence_2d",
    "polynomial_group_sequence_2d",
    "build_group_sequence_2d",
    "build_sequence_1d",
    "evaluate",
    "evaluate_gradient",
    "flatten",
    "basis_from_descriptor",
]

BUILTIN_NU_MAX = 20


class BasisFunction:
    dim: int = 2
    is_singular: bool = False

    def value(self, *point):
        raise NotImplementedError

    def gradient(self, *point):
        raise NotImplementedError

    def value_np(self, *point):
        raise NotImplementedError

    def gradient_np(self, *point):
        raise NotImplementedError

    @property
    def has_numpy(self) -> bool:
        return True

    def descriptor(self) -> dict:
        raise NotImplementedError

    def label(self) -> str:
        return repr(self)


def _pow(x, k):
    return x ** k if k else mp.mpf(1)


# --------------------------------------------------------------------------
# 1-D
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Monomial1D(BasisFunction):
    k: int
    dim = 1

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("exponents must be non-negative")

    def value(self, x):
        return _pow(x, self.k)

    def gradient(self, x):
        return (self.k * _pow(x, self.k - 1),) if self.k else (mp.mpf(0),)

    def value_np(self, x):
        return np.asarray(x, dtype=float) ** self.k

    def gradient_np(self, x):
        x = np.asarray(x, dtype=float)
        return (self.k * x ** max(self.k - 1, 0),)

    def descriptor(self):
        return {"type": "monomial1d", "k": self.k}

    def label(self):
        return {0: "1", 1: "x"}.get(self.k, f"x^{self.k}")


@dataclass(frozen=True)
class LogMono1D(BasisFunction):
    k: int
    dim = 1
    is_singular = True

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("exponents must be non-negative")

    def value(self, x):
        if x < 0:
            raise SingularEvaluationError(f"x^{self.k} ln x undefined at x={x}")
        if x == 0:
            if self.k == 0:
                raise SingularEvaluationError("ln x is singular at x=0")
            return mp.mpf(0)
        return _pow(x, self.k) * mp.log(x)

    def gradient(self, x):
        k = self.k
        if x < 0 or (x == 0 and k <= 1):
            raise SingularEvaluationError(f"derivative of x^{k} ln x singular at x={x}")
        if x == 0:
            return (mp.mpf(0),)
        lx = mp.log(x)
        return (k * _pow(x, k - 1) * lx + _pow(x, k - 1),) if k else (1 / x,)

    def value_np(self, x):
        x = np.asarray(x, dtype=float)
        return x ** self.k * np.log(x)

    def gradient_np(self, x):
        x = np.asarray(x, dtype=float)
        k = self.k
        return (k * x ** max(k - 1, 0) * np.log(x) + x ** (k - 1.0),)

    def descriptor(self):
        return {"type": "logmono1d", "k": self.k}

    def label(self):
        return "ln x" if self.k == 0 else ("x ln x" if self.k == 1 else f"x^{self.k} ln x")


# --------------------------------------------------------------------------
# 2-D
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Monomial2D(BasisFunction):
    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ValueError("exponents must be non-negative")

    @property
    def degree(self) -> int:
        return self.p + self.q

    def value(self, x, y):
        return _pow(x, self.p) * _pow(y, self.q)

    def gradient(self, x, y):
        p, q = self.p, self.q
        gx = p * _pow(x, p - 1) * _pow(y, q) if p else mp.mpf(0)
        gy = q * _pow(x, p) * _pow(y, q - 1) if q else mp.mpf(0)
        return gx, gy

    def value_np(self, x, y):
        return np.asarray(x, dtype=float) ** self.p * np.asarray(y, dtype=float) ** self.q

    def gradient_np(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        p, q = self.p, self.q
        return p * x ** max(p - 1, 0) * y ** q, q * x ** p * y ** max(q - 1, 0)

    def descriptor(self):
        return {"type": "monomial2d", "p": self.p, "q": self.q}

    def label(self):
        def part(v, e):
            return "" if e == 0 else (v if e == 1 else f"{v}^{e}")

        s = part("x", self.p) + part("y", self.q)
        return s or "1"


@dataclass(frozen=True)
class LogEdge2D(BasisFunction):
    k: int
    is_singular = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("LogEdge2D index must be >= 1")

    @property
    def power(self) -> int:
        return self.k

    def _log(self, x, y):
        u = 1 - y
        r = mp.sqrt(x * x + u * u)
        if x == 0 and u >= 0:
            raise SingularEvaluationError(f"edge logarithm singular at ({x}, {y})")
        if u > 0:
            # y - 1 + r == x^2 / (r + u), avoids cancellation near x = 0
            return 2 * mp.log(abs(x)) - mp.log(r + u), r, u
        return mp.log(r - u), r, u

    def value(self, x, y):
        lg, _, _ = self._log(x, y)
        return _pow(x, self.power) * lg

    def gradient(self, x, y):
        lg, r, u = self._log(x, y)
        k = self.power
        # d/dx ln(r - u) = x / (r (r - u)) = (r + u) / (x r) for u > 0
        if u > 0:
            dx_term = _pow(x, k - 1) * (r + u) / r
        else:
            dx_term = _pow(x, k + 1) / (r * (r - u))
        gx = k * _pow(x, k - 1) * lg + dx_term
        gy = _pow(x, k) / r
        return gx, gy

    def value_np(self, x, y):
        x = np.asarray(x, dtype=float)
        u = 1 - np.asarray(y, dtype=float)
        r = np.hypot(x, u)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(u > 0, 2 * np.log(np.abs(x)) - np.log(r + np.abs(u)), np.log(r - u))
        return x ** self.power * lg

    def gradient_np(self, x, y):
        x = np.asarray(x, dtype=float)
        u = 1 - np.asarray(y, dtype=float)
        r = np.hypot(x, u)
        k = self.power
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(u > 0, 2 * np.log(np.abs(x)) - np.log(r + np.abs(u)), np.log(r - u))
            dx_term = np.where(
                u > 0, x ** (k - 1) * (r + np.abs(u)) / r, x ** (k + 1) / (r * (r - u))
            )
        return k * x ** (k - 1) * lg + dx_term, x ** k / r

    def descriptor(self):
        return {"type": "logedge2d", "k": self.k}

    def label(self):
        xp = "x" if self.power == 1 else f"x^{self.power}"
        return f"{xp} ln(y-1+sqrt(x^2+(y-1)^2))"


@dataclass(frozen=True)
class LogCorner2D(BasisFunction):
    k: int
    is_singular = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("LogCorner2D index must be >= 1")

    @property
    def power(self) -> int:
        return self.k - 1

    def _log(self, x, y):
        r = mp.sqrt(x * x + y * y)
        if x == 0 and y <= 0:
            raise SingularEvaluationError(f"corner logarithm singular at ({x}, {y})")
        if y < 0:
            # y + r == x^2 / (r - y)
            return 2 * mp.log(abs(x)) - mp.log(r - y), r
        return mp.log(y + r), r

    def value(self, x, y):
        lg, _ = self._log(x, y)
        return _pow(x, self.power) * lg

    def gradient(self, x, y):
        lg, r = self._log(x, y)
        p = self.power
        if y < 0:
            dx_term = _pow(x, p - 1) * (r - y) / r if p else (r - y) / (x * r)
        else:
            dx_term = _pow(x, p + 1) / (r * (y + r))
        gx = (p * _pow(x, p - 1) * lg if p else 0) + dx_term
        gy = _pow(x, p) / r
        return gx, gy

    def value_np(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(y < 0, 2 * np.log(np.abs(x)) - np.log(r - y), np.log(y + r))
        return x ** self.power * lg

    def gradient_np(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        p = self.power
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(y < 0, 2 * np.log(np.abs(x)) - np.log(r - y), np.log(y + r))
            dx_term = np.where(y < 0, x ** (p - 1.0) * (r - y) / r, x ** (p + 1) / (r * (y + r)))
        return p * x ** max(p - 1, 0) * lg + dx_term, x ** p / r

    def descriptor(self):
        return {"type": "logcorner2d", "k": self.k}

    def label(self):
        xp = {0: "", 1: "x "}.get(self.power, f"x^{self.power} ")
        return f"{xp}ln(y+sqrt(x^2+y^2))"


@dataclass(frozen=True, eq=False)
class Custom(BasisFunction):
    """User-supplied integrand.

    ``evaluator`` and ``derivative`` take mpmath scalars.  ``integral`` is
    the exact reference integral; when omitted the numeric oracle is used.
    """

    name: str
    evaluator: Callable
    derivative: Callable | None = None
    integral: object = None
    dim: int = 2
    singular: bool = field(default=True)

    @property
    def is_singular(self):
        return self.singular

    @property
    def has_numpy(self):
        return False

    def value(self, *point):
        return self.evaluator(*point)

    def gradient(self, *point):
        if self.derivative is not None:
            g = self.derivative(*point)
            return tuple(g) if isinstance(g, (tuple, list)) else (g,)
        # central differences at working precision, step sqrt(eps)
        h = mp.mpf(10) ** (-(mp.mp.dps // 2))
        out = []
        for i in range(len(point)):
            lo = list(point)
            hi = list(point)
            lo[i] -= h
            hi[i] += h
            out.append((self.evaluator(*hi) - self.evaluator(*lo)) / (2 * h))
        return tuple(out)

    def descriptor(self):
        return {"type": "custom", "name": self.name}

    def label(self):
        return self.name


@dataclass(frozen=True)
class Swapped(BasisFunction):
    """``f(y, x)`` for a 2-D basis function ``f``."""

    base: BasisFunction

    @property
    def is_singular(self):
        return self.base.is_singular

    @property
    def has_numpy(self):
        return self.base.has_numpy

    def value(self, x, y):
        return self.base.value(y, x)

    def gradient(self, x, y):
        gx, gy = self.base.gradient(y, x)
        return gy, gx

    def value_np(self, x, y):
        return self.base.value_np(y, x)

    def gradient_np(self, x, y):
        gx, gy = self.base.gradient_np(y, x)
        return gy, gx

    def descriptor(self):
        return {"type": "swapped", "base": self.base.descriptor()}

    def label(self):
        return f"swap[{self.base.label()}]"


def evaluate(f: BasisFunction, point):
    """Value of ``f`` at ``point`` (a scalar for 1-D, a pair for 2-D)."""
    pt = _as_point(point)
    return f.value(*pt)


def evaluate_gradient(f: BasisFunction, point):
    pt = _as_point(point)
    g = f.gradient(*pt)
    return g[0] if f.dim == 1 else g


def _as_point(point):
    if isinstance(point, (tuple, list)):
        return tuple(mp.mpf(c) for c in point)
    return (mp.mpf(point),)


# --------------------------------------------------------------------------
# Groups and sequences
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class FunctionGroup:
    index: int
    members: tuple
    d_after: int
    ms_after: int

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def is_singular(self) -> bool:
        return len(self.members) == 1 and self.members[0].is_singular


@dataclass(frozen=True)
class GroupSequence:
    groups: tuple
    dim: int = 2

    def prefix(self, nu: int) -> "GroupSequence":
        """Groups ``0..nu`` inclusive."""
        if nu < 0 or nu >= len(self.groups):
            raise SequenceRangeError(f"nu={nu} outside sequence of {len(self.groups)} groups")
        return GroupSequence(self.groups[: nu + 1], self.dim)

    def functions(self) -> list:
        return [f for g in self.groups for f in g.members]

    @property
    def nu_max(self) -> int:
        return len(self.groups) - 1

    @property
    def m(self) -> int:
        return sum(g.size for g in self.groups)

    @property
    def m_mono(self) -> int:
        return sum(g.size for g in self.groups if not g.is_singular)

    @property
    def m_s(self) -> int:
        return self.m - self.m_mono

    def __len__(self):
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)


def flatten(seq) -> list:
    if isinstance(seq, GroupSequence):
        return seq.functions()
    if isinstance(seq, FunctionGroup):
        return list(seq.members)
    return list(seq)


def _monomial_group(d: int) -> tuple:
    return tuple(Monomial2D(d - q, q) for q in range(d // 2 + 1))


def monomial_sequence_2d(d: int) -> list:
    """Symmetry-reduced monomials of total degree <= d (``p >= q``)."""
    if d < 0:
        raise ValueError("degree must be non-negative")
    return [m for deg in range(d + 1) for m in _monomial_group(deg)]


def polynomial_group_sequence_2d(d: int) -> GroupSequence:
    """Monomial-only groups, one per total degree 0..d."""
    groups = tuple(FunctionGroup(deg, _monomial_group(deg), deg, 0) for deg in range(d + 1))
    return GroupSequence(groups, 2)


def _group_stream_2d():
    yield FunctionGroup(0, (Monomial2D(0, 0),), 0, 0)
    index, ms, deg = 1, 0, 1
    while True:
        yield FunctionGroup(index, _monomial_group(deg), deg, ms)
        index += 1
        if deg % 2 == 1:
            ms += 1
            yield FunctionGroup(index, (LogEdge2D(deg),), deg, ms)
            index += 1
            ms += 1
            yield FunctionGroup(index, (LogCorner2D(deg + 1),), deg, ms)
            index += 1
        deg += 1


def build_group_sequence_2d(nu_max: int, extrapolate: bool = False) -> GroupSequence:
    """Built-in 2-D electromagnetic sequence: groups ``0..nu_max``.

    Each singular pair is placed after the monomial group whose degree
    matches its power of ``x``.  Beyond ``nu_max = 20`` the same
    interleaving is continued only when ``extrapolate`` is set.
    """
    if nu_max < 0:
        raise SequenceRangeError("nu_max must be non-negative")
    if nu_max > BUILTIN_NU_MAX and not extrapolate:
        raise SequenceRangeError(
            f"built-in 2-D sequence is tabulated up to nu={BUILTIN_NU_MAX}; pass extrapolate=True"
        )
    groups = []
    for g in _group_stream_2d():
        if g.index > nu_max:
            break
        groups.append(g)
    return GroupSequence(tuple(groups), 2)


def build_sequence_1d(n_prime: int) -> list:
    """First ``2 n'`` entries of 1, x, x ln x, x^2, x^3, x^3 ln x, x^4, ..."""
    if n_prime < 1:
        raise ValueError("n' must be >= 1")
    out = [Monomial1D(0)]
    i = 1
    while len(out) < 2 * n_prime:
        out += [Monomial1D(2 * i - 1), LogMono1D(2 * i - 1), Monomial1D(2 * i)]
        i += 1
    return out[: 2 * n_prime]


_DESCRIPTOR_TYPES = {
    "monomial1d": lambda d: Monomial1D(int(d["k"])),
    "logmono1d": lambda d: LogMono1D(int(d["k"])),
    "monomial2d": lambda d: Monomial2D(int(d["p"]), int(d["q"])),
    "logedge2d": lambda d: LogEdge2D(int(d["k"])),
    "logcorner2d": lambda d: LogCorner2D(int(d["k"])),
}


def basis_from_descriptor(desc: dict) -> BasisFunction:
    kind = desc.get("type")
    if kind == "swapped":
        return Swapped(basis_from_descriptor(desc["base"]))
    if kind not in _DESCRIPTOR_TYPES:
        raise ValueError(f"unknown basis function type {kind!r}")
    return _DESCRIPTOR_TYPES[kind](desc)


def group_sequence_from_functions(funcs: Iterable, dim: int = 2) -> GroupSequence:
    """Wrap an explicit list as a sequence with one function per group."""
    groups, ms = [], 0
    deg = 0
    for i, f in enumerate(funcs):
        if f.is_singular:
            ms += 1
        elif isinstance(f, Monomial2D):
            deg = max(deg, f.degree)
        elif isinstance(f, Monomial1D):
            deg = max(deg, f.k)
        groups.append(FunctionGroup(i, (f,), deg, ms))
    return GroupSequence(tuple(groups), dim)
