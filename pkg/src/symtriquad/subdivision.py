"""Triangle rules from a 1-D rule: tensor product, three quadrilaterals, bilinear maps.

A triangle ``ABC`` is split through its edge midpoints ``D`` (on AB),
``E`` (on BC), ``F`` (on CA) and centroid ``O`` into the quadrilaterals
``(A, D, O, F)``, ``(B, E, O, D)`` and ``(C, F, O, E)``.  The tensor rule on
``[0, 1]^2`` is carried onto each patch by the bilinear map

    x(xi, eta) = sum_k x_k psi_k(xi, eta),
    psi = ((1-xi)(1-eta), xi(1-eta), xi eta, (1-xi) eta),

so the corner ``(0, 0)`` of the square lands on the triangle vertex and the
square's edges ``xi = 0`` and ``eta = 0`` lie on the triangle's edges.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .geometry import REFERENCE_TRIANGLE, PhysicalRule, Triangle
from .linerule import Rule1D

__all__ = [
    "ORIENTATIONS",
    "TensorRule",
    "QuadPatch",
    "tensor_product",
    "subdivide_triangle",
    "bilinear_map",
    "assemble_triangle_rule",
    "quadrilateral_rule",
]

# "edges": node clustering of the 1-D rule (toward 0) faces the triangle edges;
# "interior": the 1-D rule is reflected so clustering faces the patch edges at O.
ORIENTATIONS = ("edges", "interior")


@dataclass(frozen=True)
class TensorRule:
    points: tuple
    weights: tuple

    def __len__(self):
        return len(self.weights)

    def weight_sum(self):
        return mp.fsum(self.weights)


@dataclass(frozen=True)
class QuadPatch:
    vertices: tuple

    def area(self):
        (x1, y1), (x2, y2), (x3, y3), (x4, y4) = self.vertices
        return abs((x1 * y2 - x2 * y1) + (x2 * y3 - x3 * y2) + (x3 * y4 - x4 * y3) + (x4 * y1 - x1 * y4)) / 2


def tensor_product(rule: Rule1D, orientation: str = "edges") -> TensorRule:
    """Outer product of ``rule`` with itself on the unit square."""
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    nodes = list(rule.nodes)
    if orientation == "interior":
        nodes = [1 - x for x in nodes]
    pts, wts = [], []
    for xi, wi in zip(nodes, rule.weights):
        for eta, wj in zip(nodes, rule.weights):
            pts.append((xi, eta))
            wts.append(wi * wj)
    return TensorRule(tuple(pts), tuple(wts))


def _mid(p, q):
    return ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)


def subdivide_triangle(tri: Triangle) -> list[QuadPatch]:
    """The three corner quadrilaterals of ``tri`` meeting at its centroid."""
    tri.require_nondegenerate()
    a, b, c = (tuple(mp.mpf(v) for v in p) for p in tri.vertices)
    d, e, f = _mid(a, b), _mid(b, c), _mid(c, a)
    o = ((a[0] + b[0] + c[0]) / 3, (a[1] + b[1] + c[1]) / 3)
    return [QuadPatch((a, d, o, f)), QuadPatch((b, e, o, d)), QuadPatch((c, f, o, e))]


def bilinear_map(patch: QuadPatch, xi, eta):
    """Image of ``(xi, eta)`` under the patch map and the absolute Jacobian there."""
    (x1, y1), (x2, y2), (x3, y3), (x4, y4) = patch.vertices
    psi = ((1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta)
    x = psi[0] * x1 + psi[1] * x2 + psi[2] * x3 + psi[3] * x4
    y = psi[0] * y1 + psi[1] * y2 + psi[2] * y3 + psi[3] * y4
    # partials of psi with respect to xi and eta
    dxi = (-(1 - eta), 1 - eta, eta, -eta)
    deta = (-(1 - xi), -xi, xi, 1 - xi)
    xs, ys = (x1, x2, x3, x4), (y1, y2, y3, y4)
    x_xi = sum(c * v for c, v in zip(dxi, xs))
    x_eta = sum(c * v for c, v in zip(deta, xs))
    y_xi = sum(c * v for c, v in zip(dxi, ys))
    y_eta = sum(c * v for c, v in zip(deta, ys))
    return (x, y), abs(x_xi * y_eta - x_eta * y_xi)


def _map_rule(tensor: TensorRule, patches) -> tuple[list, list]:
    pts, wts = [], []
    for patch in patches:
        for (xi, eta), w in zip(tensor.points, tensor.weights):
            p, jac = bilinear_map(patch, xi, eta)
            pts.append(p)
            wts.append(jac * w)
    return pts, wts


def assemble_triangle_rule(
    rule: Rule1D, tri: Triangle = REFERENCE_TRIANGLE, orientation: str = "edges"
) -> PhysicalRule:
    """The ``3 n'^2``-point rule on ``tri`` built from a 1-D rule.

    Assembly happens once on the reference triangle; the result is moved to
    ``tri`` by the affine map, with weights scaled by the area ratio.
    """
    tri.require_nondegenerate()
    with mp.workdps(rule.precision_digits):
        tensor = tensor_product(rule, orientation)
        ref_pts, ref_wts = _map_rule(tensor, subdivide_triangle(REFERENCE_TRIANGLE))
        target = Triangle(*(tuple(mp.mpf(c) for c in v) for v in tri.vertices))
        scale = 2 * target.area()
        # reference (x, y) are the barycentric weights of v1 and v2, as in map_to_physical
        pts = [target.barycentric_to_xy(u, v) for u, v in ref_pts]
        wts = [scale * w for w in ref_wts]
    meta = {"approach": "approach2", "n_prime": rule.n, "n": len(wts), "orientation": orientation}
    return PhysicalRule(tuple(pts), tuple(wts), meta)


def quadrilateral_rule(rule: Rule1D, vertices, orientation: str = "edges") -> PhysicalRule:
    """Tensor rule carried directly onto a quadrilateral (vertices in cyclic order)."""
    if len(vertices) != 4:
        raise ValueError("a quadrilateral needs four vertices")
    with mp.workdps(rule.precision_digits):
        patch = QuadPatch(tuple(tuple(mp.mpf(c) for c in v) for v in vertices))
        pts, wts = _map_rule(tensor_product(rule, orientation), [patch])
    meta = {"approach": "approach2-quad", "n_prime": rule.n, "n": len(wts), "orientation": orientation}
    return PhysicalRule(tuple(pts), tuple(wts), meta)
