"""Barycentric coordinates, hat-function gradients, and plane projection.

For a triangle (v_i, v_j, v_k) with unit normal n, each corner carries a
rotated opposite edge s and a hat gradient b = s / (2 A); the b vectors
are the in-plane gradients of the barycentric coordinate functions and
form a dual basis to the edges.  2-d triangles are embedded in 3-d with
normal (0, 0, +-1) chosen by orientation, so one code path serves both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OffPlane
from .mesh import triangle_metrics

OFF_PLANE_FACTOR = 1e-8


def _embed(v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] == 2:
        return np.concatenate([v, np.zeros(v.shape[:-1] + (1,))], axis=-1), True
    return v, False


@dataclass(frozen=True)
class ProjectionFrame:
    """Per-triangle frame: rotated edges, hat gradients, normal.

    ``rotated_edges`` (3, m) holds s_i, s_j, s_k (opposite edge crossed
    with the normal); ``hat_gradients`` (3, m) their division by twice
    the area.  ``normal`` is always a 3-vector; for 2-d input it is
    (0, 0, +-1) by orientation.  ``area`` and ``diameter`` are cached for
    tolerance scaling.
    """

    rotated_edges: np.ndarray
    hat_gradients: np.ndarray
    normal: np.ndarray
    area: float
    diameter: float


def projection_frame(v_i, v_j, v_k) -> ProjectionFrame:
    """Build the :class:`ProjectionFrame` of a non-degenerate triangle."""
    geom = triangle_metrics(v_i, v_j, v_k)  # raises DegenerateTriangle
    pts = np.asarray([v_i, v_j, v_k], dtype=float)
    emb, was_2d = _embed(pts)
    vi, vj, vk = emb

    n = np.cross(vj - vi, vk - vi)
    n = n / np.linalg.norm(n)
    s = np.array([np.cross(vj - vk, n), np.cross(vk - vi, n), np.cross(vi - vj, n)])
    if was_2d:
        s = s[:, :2]
    b = s / (2.0 * geom.area)
    return ProjectionFrame(
        rotated_edges=s,
        hat_gradients=b,
        normal=n,
        area=geom.area,
        diameter=geom.diameter,
    )


@dataclass(frozen=True)
class ProjectionResult:
    """Orthogonal projection of a point onto a triangle plane.

    ``point`` is the foot of the projection, ``distance`` the signed
    offset along the frame normal (x = point + distance * normal), and
    ``bary`` the barycentric coordinates of the foot.
    """

    point: np.ndarray
    distance: float
    bary: np.ndarray


def barycentric_coords(p, frame: ProjectionFrame, v_i, v_j, v_k) -> np.ndarray:
    """Barycentric coordinates (a_i, a_j, a_k) of an on-plane point.

    a_i = <b_i, p - v_j> and cyclic; the components sum to 1.

    Raises
    ------
    OffPlane
        If p is farther than 1e-8 * diameter from the triangle plane.
    """
    pts = np.asarray([v_i, v_j, v_k], dtype=float)
    emb, was_2d = _embed(pts)
    p3, _ = _embed(np.asarray(p, dtype=float))
    offset = float(frame.normal @ (p3 - emb[0]))
    if abs(offset) > OFF_PLANE_FACTOR * frame.diameter:
        raise OffPlane(f"point is {offset:.3e} off the plane; project first")
    p = np.asarray(p, dtype=float)
    b = frame.hat_gradients
    return np.array(
        [
            b[0] @ (p - pts[1]),
            b[1] @ (p - pts[2]),
            b[2] @ (p - pts[0]),
        ]
    )


def project_to_plane(x, v_i, v_j, v_k) -> ProjectionResult:
    """Project x orthogonally onto the triangle's plane.

    The signed distance is measured along the right-handed unit normal of
    the vertex order.
    """
    frame = projection_frame(v_i, v_j, v_k)
    pts = np.asarray([v_i, v_j, v_k], dtype=float)
    emb, was_2d = _embed(pts)
    x3, _ = _embed(np.asarray(x, dtype=float))
    distance = float(frame.normal @ (x3 - emb[0]))
    foot3 = x3 - distance * frame.normal
    foot = foot3[:2] if was_2d else foot3
    bary = barycentric_coords(foot, frame, v_i, v_j, v_k)
    return ProjectionResult(point=foot, distance=distance, bary=bary)


def interpolate_gradient(frame: ProjectionFrame, values) -> np.ndarray:
    """In-plane gradient of the linear interpolant with nodal `values`.

    `values` is (3,) for a scalar field or (3, k) for k fields; the
    result is the sum of value-weighted hat gradients.
    """
    values = np.asarray(values, dtype=float)
    return values.T @ frame.hat_gradients
