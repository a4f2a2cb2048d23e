"""Analytic surface charts and quadrature of their area element.

A :class:`ParamSurface` wraps a chart w in Omega ⊂ R^2 -> x(w) in R^m
together with the constants the error bounds need: a Lipschitz constant
of the chart gradient and two-sided singular value bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateTriangle

# Symmetric triangle rules in barycentric coordinates, exact to the given
# polynomial degree.  Weights sum to 1 (reference-area normalized).
_TRI_RULES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _perm3(a, b, c):
    pts = {(a, b, c), (b, c, a), (c, a, b)}
    return sorted(pts)


def _build_rules():
    third = 1.0 / 3.0
    _TRI_RULES[1] = (np.array([[third] * 3]), np.array([1.0]))

    pts = _perm3(2 / 3, 1 / 6, 1 / 6)
    _TRI_RULES[2] = (np.array(pts), np.full(3, third))

    pts = [[third] * 3] + _perm3(0.6, 0.2, 0.2)
    _TRI_RULES[3] = (np.array(pts), np.array([-27 / 48, 25 / 48, 25 / 48, 25 / 48]))

    a1, w1 = 0.445948490915965, 0.223381589678011
    a2, w2 = 0.091576213509771, 0.109951743655322
    pts = _perm3(1 - 2 * a1, a1, a1) + _perm3(1 - 2 * a2, a2, a2)
    _TRI_RULES[4] = (np.array(pts), np.array([w1] * 3 + [w2] * 3))

    a1, w1 = 0.470142064105115, 0.132394152788506
    a2, w2 = 0.101286507323456, 0.125939180544827
    pts = [[third] * 3] + _perm3(1 - 2 * a1, a1, a1) + _perm3(1 - 2 * a2, a2, a2)
    _TRI_RULES[5] = (np.array(pts), np.array([0.225] + [w1] * 3 + [w2] * 3))


_build_rules()


def triangle_rule(order: int):
    """Barycentric points and weights of a symmetric rule exact to `order`."""
    order = max(1, min(int(order), 5))
    return _TRI_RULES[order]


@dataclass(frozen=True)
class ParamSurface:
    """Chart of a smooth surface with certified constants.

    Attributes
    ----------
    position : callable
        w (2,) -> x(w) (m,).
    gradient : callable
        w (2,) -> grad x(w) (m, 2), columns are the partials.
    grad_lipschitz : float
        Lipschitz constant of ``gradient`` in Frobenius norm.
    sigma_min, sigma_max : float
        Lower bound on the smallest singular value and upper bound on the
        Frobenius norm of ``gradient`` over the certified chart region.
    total_area : float or None
        Area of the surface, when known in closed form.
    patch_area : callable or None
        Optional closed-form area of the curved patch spanned by three
        surface points (used by the analytic weight mode).
    """

    position: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    grad_lipschitz: float
    sigma_min: float
    sigma_max: float
    total_area: float | None = None
    patch_area: Callable[[np.ndarray, np.ndarray, np.ndarray], float] | None = None

    def __post_init__(self):
        if not (self.sigma_min > 0):
            raise ValueError("sigma_min must be positive (rank-deficient chart)")
        if self.sigma_min > self.sigma_max:
            raise ValueError("sigma_min exceeds sigma_max")

    def area_element(self, w) -> float:
        """sqrt(det(grad^T grad)) at parameter point w."""
        g = self.gradient(np.asarray(w, dtype=float))
        return float(np.sqrt(max(np.linalg.det(g.T @ g), 0.0)))


def _tri_area2d(p):
    return 0.5 * float(
        (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1])
        - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0])
    )


def patch_area_quadrature(surface: ParamSurface, cell, order: int = 3) -> float:
    """Integrate the surface area element over a parameter-domain cell.

    `cell` is a (3, 2) triangle or a (k, 2) convex polygon, which is fan
    split into triangles.  Returns the (signed-orientation-free) area of
    the surface patch above the cell.
    """
    cell = np.asarray(cell, dtype=float)
    if cell.ndim != 2 or cell.shape[0] < 3 or cell.shape[1] != 2:
        raise DegenerateTriangle("parameter cell must be (k, 2) with k >= 3")
    bary, weights = triangle_rule(order)
    total = 0.0
    for t in range(1, cell.shape[0] - 1):
        tri = cell[[0, t, t + 1]]
        area = abs(_tri_area2d(tri))
        if area == 0.0:
            continue
        for bc, wq in zip(bary, weights):
            total += wq * surface.area_element(bc @ tri) * area
    return total


def gauss_legendre_2d(n_u: int, n_v: int, box):
    """Tensor Gauss-Legendre nodes and weights on a rectangle.

    `box` is ((u0, u1), (v0, v1)).  Returns (points (k, 2), weights (k,)).
    """
    (u0, u1), (v0, v1) = box
    xu, wu = np.polynomial.legendre.leggauss(n_u)
    xv, wv = np.polynomial.legendre.leggauss(n_v)
    u = 0.5 * (u1 - u0) * xu + 0.5 * (u1 + u0)
    v = 0.5 * (v1 - v0) * xv + 0.5 * (v1 + v0)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu, wv) * 0.25 * (u1 - u0) * (v1 - v0)
    return np.column_stack([uu.ravel(), vv.ravel()]), ww.ravel()
