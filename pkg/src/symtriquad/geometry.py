"""Barycentric orbits, symmetric rules and their mapping to physical triangles.

A symmetric rule on the triangle is stored as a list of orbits under the
six-element symmetry group of the equilateral triangle:

* type 0 -- the centroid, one point, unknown: weight
* type 1 -- three points on the medians, unknowns: alpha, weight
* type 2 -- six generic points, unknowns: alpha, beta, weight

Reference weights ``w'`` are those of the unit right triangle
``{x, y >= 0, x + y <= 1}`` (area 1/2), where a barycentric point
``(a, b, c)`` is identified with ``(x, y) = (a, b)``.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import mpmath as mp

from .errors import DegenerateDomainError, DegenerateOrbitError

__all__ = [
    "BaryPoint",
    "OrbitKind",
    "Orbit",
    "SymmetricRule",
    "Triangle",
    "PhysicalRule",
    "REFERENCE_TRIANGLE",
    "expand_orbit",
    "expand_rule",
    "map_to_physical",
    "symmetry_images",
    "unknown_count",
    "point_count",
]


def _tol():
    return mp.mpf(10) ** (-(mp.mp.dps - 4))


@dataclass(frozen=True)
class BaryPoint:
    a: mp.mpf
    b: mp.mpf
    c: mp.mpf

    @classmethod
    def from_ab(cls, a, b) -> "BaryPoint":
        a, b = mp.mpf(a), mp.mpf(b)
        return cls(a, b, 1 - a - b)

    def __iter__(self):
        return iter((self.a, self.b, self.c))

    @property
    def xy(self):
        """Reference-triangle coordinates ``(x, y) = (a, b)``."""
        return self.a, self.b

    def is_inside(self) -> bool:
        return min(self.a, self.b, self.c) >= 0


class OrbitKind(enum.IntEnum):
    TYPE0 = 0
    TYPE1 = 1
    TYPE2 = 2

    @property
    def size(self) -> int:
        return (1, 3, 6)[self]

    @property
    def n_params(self) -> int:
        return int(self)


@dataclass(frozen=True)
class Orbit:
    kind: OrbitKind
    weight: mp.mpf
    alpha: mp.mpf | None = None
    beta: mp.mpf | None = None

    def __post_init__(self):
        kind = OrbitKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "weight", mp.mpf(self.weight))
        if kind is OrbitKind.TYPE0:
            if self.alpha is not None or self.beta is not None:
                raise ValueError("type-0 orbit takes no shape parameters")
        elif kind is OrbitKind.TYPE1:
            if self.alpha is None or self.beta is not None:
                raise ValueError("type-1 orbit takes exactly one parameter (alpha)")
            object.__setattr__(self, "alpha", mp.mpf(self.alpha))
        else:
            if self.alpha is None or self.beta is None:
                raise ValueError("type-2 orbit takes two parameters (alpha, beta)")
            object.__setattr__(self, "alpha", mp.mpf(self.alpha))
            object.__setattr__(self, "beta", mp.mpf(self.beta))

    @classmethod
    def centroid(cls, weight) -> "Orbit":
        return cls(OrbitKind.TYPE0, weight)

    @classmethod
    def median(cls, alpha, weight) -> "Orbit":
        return cls(OrbitKind.TYPE1, weight, alpha)

    @classmethod
    def generic(cls, alpha, beta, weight) -> "Orbit":
        return cls(OrbitKind.TYPE2, weight, alpha, beta)

    @property
    def params(self) -> tuple:
        return tuple(p for p in (self.alpha, self.beta) if p is not None)

    def check(self) -> None:
        """Raise :class:`DegenerateOrbitError` if the orbit collapses."""
        eps = _tol()
        if self.kind is OrbitKind.TYPE1:
            if abs(self.alpha - mp.mpf(1) / 3) <= eps:
                raise DegenerateOrbitError("type-1 orbit with alpha=1/3 coincides with the centroid")
        elif self.kind is OrbitKind.TYPE2:
            a, b = self.alpha, self.beta
            c = 1 - a - b
            if abs(a - b) <= eps or abs(a - c) <= eps or abs(b - c) <= eps:
                raise DegenerateOrbitError(
                    f"type-2 orbit ({mp.nstr(a, 8)}, {mp.nstr(b, 8)}) has fewer than 6 distinct points"
                )


def expand_orbit(orbit: Orbit) -> list[tuple[BaryPoint, mp.mpf]]:
    """Explicit points of one orbit, each carrying the orbit weight."""
    orbit.check()
    w = orbit.weight
    if orbit.kind is OrbitKind.TYPE0:
        third = mp.mpf(1) / 3
        return [(BaryPoint(third, third, third), w)]
    if orbit.kind is OrbitKind.TYPE1:
        a = orbit.alpha
        g = (1 - a) / 2
        return [(BaryPoint.from_ab(a, g), w), (BaryPoint.from_ab(g, a), w), (BaryPoint.from_ab(g, g), w)]
    a, b = orbit.alpha, orbit.beta
    c = 1 - a - b
    perms = [(a, b), (b, a), (a, c), (c, a), (b, c), (c, b)]
    return [(BaryPoint.from_ab(p, q), w) for p, q in perms]


def point_count(counts: Sequence[int]) -> int:
    n0, n1, n2 = counts
    return n0 + 3 * n1 + 6 * n2


def unknown_count(counts: Sequence[int]) -> int:
    n0, n1, n2 = counts
    return n0 + 2 * n1 + 3 * n2


@dataclass(frozen=True)
class SymmetricRule:
    """A symmetric triangle rule stored as orbits.

    Orbits are kept in canonical order: the centroid first, then type-1
    orbits, then type-2 orbits, each group in the order given.
    """

    orbits: tuple[Orbit, ...]
    precision_digits: int = 64

    def __post_init__(self):
        orbits = tuple(sorted(self.orbits, key=lambda o: int(o.kind)))
        object.__setattr__(self, "orbits", orbits)
        if self.counts[0] > 1:
            raise ValueError("a symmetric rule has at most one centroid orbit")

    @property
    def counts(self) -> tuple[int, int, int]:
        kinds = [o.kind for o in self.orbits]
        return (kinds.count(OrbitKind.TYPE0), kinds.count(OrbitKind.TYPE1), kinds.count(OrbitKind.TYPE2))

    @property
    def n_points(self) -> int:
        return point_count(self.counts)

    @property
    def n_unknowns(self) -> int:
        return unknown_count(self.counts)

    def weight_sum(self) -> mp.mpf:
        return mp.fsum(o.weight * o.kind.size for o in self.orbits)

    def exterior_points(self) -> list[BaryPoint]:
        return [p for p, _ in expand_rule(self) if not p.is_inside()]

    def has_negative_weights(self) -> bool:
        return any(o.weight < 0 for o in self.orbits)

    def __len__(self):
        return self.n_points


@dataclass(frozen=True)
class Triangle:
    v1: tuple
    v2: tuple
    v3: tuple

    @classmethod
    def from_flat(cls, coords: Sequence) -> "Triangle":
        if len(coords) != 6:
            raise ValueError("a triangle needs 6 coordinates x1,y1,x2,y2,x3,y3")
        c = list(coords)
        return cls((c[0], c[1]), (c[2], c[3]), (c[4], c[5]))

    @property
    def vertices(self):
        return (self.v1, self.v2, self.v3)

    def signed_area(self):
        (x1, y1), (x2, y2), (x3, y3) = self.vertices
        return ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)) / 2

    def area(self):
        return abs(self.signed_area())

    def require_nondegenerate(self) -> None:
        if self.signed_area() == 0:
            raise DegenerateDomainError(f"triangle {self.vertices} has zero area")

    def centroid(self):
        (x1, y1), (x2, y2), (x3, y3) = self.vertices
        return ((x1 + x2 + x3) / 3, (y1 + y2 + y3) / 3)

    def barycentric_to_xy(self, a, b, c=None):
        c = 1 - a - b if c is None else c
        (x1, y1), (x2, y2), (x3, y3) = self.vertices
        return (a * x1 + b * x2 + c * x3, a * y1 + b * y2 + c * y3)


REFERENCE_TRIANGLE = Triangle((0, 0), (1, 0), (0, 1))


@dataclass(frozen=True)
class PhysicalRule:
    """Explicit points and weights on a physical triangle (or quadrilateral)."""

    points: tuple
    weights: tuple
    source: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights differ in length")

    def __len__(self):
        return len(self.weights)

    def as_arrays(self):
        import numpy as np

        pts = np.array([[float(x), float(y)] for x, y in self.points], dtype=float).reshape(-1, 2)
        return pts, np.array([float(w) for w in self.weights], dtype=float)

    def weight_sum(self):
        return mp.fsum(self.weights)

    def integrate(self, f) -> mp.mpf:
        return mp.fsum(w * f(x, y) for (x, y), w in zip(self.points, self.weights))


def expand_rule(rule: SymmetricRule) -> list[tuple[BaryPoint, mp.mpf]]:
    return list(itertools.chain.from_iterable(expand_orbit(o) for o in rule.orbits))


def map_to_physical(rule: SymmetricRule, tri: Triangle, source: dict | None = None) -> PhysicalRule:
    """Affinely map a reference rule onto ``tri``; weights scale by twice the area."""
    tri = Triangle(*(tuple(mp.mpf(c) for c in v) for v in tri.vertices))
    tri.require_nondegenerate()
    scale = 2 * tri.area()
    pts, wts = [], []
    for p, w in expand_rule(rule):
        pts.append(tri.barycentric_to_xy(p.a, p.b, p.c))
        wts.append(scale * w)
    meta = {"n": rule.n_points, "counts": list(rule.counts)}
    meta.update(source or {})
    return PhysicalRule(tuple(pts), tuple(wts), meta)


def symmetry_images(p: BaryPoint | Iterable) -> frozenset:
    """All coordinate permutations of a barycentric point."""
    coords = tuple(p)
    return frozenset(BaryPoint(*perm) for perm in itertools.permutations(coords))
