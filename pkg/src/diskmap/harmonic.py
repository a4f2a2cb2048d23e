"""Weak point-source solve on the mesh Laplacian and the disk-shaped
initial guess it induces.

A derivative-of-delta source concentrated in one face turns the singular
Laplacian system into L f = b with exactly three nonzero rows; pinning
one vertex at the origin makes the reduced system nonsingular on a
connected mesh, and solutions for different pins differ by constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import SingularBeyondGauge, SolverFailure
from .laplacian import CotanLaplacian, mapped_area
from .mesh import TriMesh, triangle_metrics

_RESIDUAL_TOL = 1e-10


def source_pairs(v_i, v_j, v_k) -> np.ndarray:
    """Coefficient pairs (a, b) of the three nodal hat functions.

    Row ell is the pair for the hat peaked at vertex ell, measured in the
    fixed orthonormal tangent frame spanned by the edges (v_i - v_j,
    v_j - v_k) after symmetric orthogonalization.  The source rows of the
    weak system are (a, -b) / (2 area); they sum to zero, which keeps the
    singular system consistent and the solution gauge independent.
    """
    v_i = np.asarray(v_i, float)
    v_j = np.asarray(v_j, float)
    v_k = np.asarray(v_k, float)
    vij, vjk, vji = v_i - v_j, v_j - v_k, v_j - v_i
    geom = triangle_metrics(v_i, v_j, v_k)
    double_area = 2.0 * geom.area
    # Rows of the principal square root of [vjk, vji]^T [vjk, vji].
    gram = np.array([[vjk @ vjk, vjk @ vji], [vjk @ vji, vji @ vji]])
    denom = np.sqrt(vij @ vij + vjk @ vjk + 2.0 * double_area)
    root = (gram + double_area * np.eye(2)) / denom
    return np.array([root[0], root[1] - root[0], -root[1]])


@dataclass(frozen=True)
class SourceTerm:
    """Right-hand side of the weak point-source system.

    ``face`` is the source face, ``vertex_ids`` its three vertices, and
    ``rows`` the matching (a, -b) / (2 area) pairs; the dense right-hand
    side is zero everywhere else.
    """

    face: int
    vertex_ids: np.ndarray
    rows: np.ndarray

    def dense(self, size: int) -> np.ndarray:
        b = np.zeros((size, 2))
        b[self.vertex_ids] = self.rows
        return b


def dirac_source(mesh: TriMesh, face: int) -> SourceTerm:
    """Source term for a derivative-of-delta point load inside `face`."""
    v_i, v_j, v_k = mesh.face_points(face)
    pairs = source_pairs(v_i, v_j, v_k)
    double_area = 2.0 * triangle_metrics(v_i, v_j, v_k).area
    rows = np.column_stack([pairs[:, 0], -pairs[:, 1]]) / double_area
    return SourceTerm(
        face=int(face),
        vertex_ids=mesh.faces[face].copy(),
        rows=rows,
    )


def face_nearest(mesh: TriMesh, point) -> int:
    """Index of the face whose centroid is closest to `point`."""
    point = np.asarray(point, dtype=float)
    centroids = mesh.vertices[mesh.faces].mean(axis=1)
    return int(np.argmin(np.linalg.norm(centroids - point, axis=1)))


@dataclass(frozen=True)
class HarmonicSolution:
    """Solution of the pinned weak system.

    ``values`` is the full (n, 2) map with the pinned vertex at the
    origin; ``residual`` is the relative residual of the reduced system.
    """

    values: np.ndarray
    residual: float
    gauge: str


def solve_weak_lb(
    laplacian: CotanLaplacian, source: SourceTerm, pin_vertex: int = 0
) -> HarmonicSolution:
    """Solve L f = b with one vertex pinned to the origin.

    The pinned row and column are removed, the reduced symmetric system
    is factorized directly, and the reduced relative residual must come
    out below 1e-10.

    Raises
    ------
    SingularBeyondGauge
        If the reduced factorization fails (disconnected mesh).
    SolverFailure
        If the solve succeeds but the residual check fails.
    """
    n = laplacian.size
    b = source.dense(n)
    keep = np.concatenate([np.arange(pin_vertex), np.arange(pin_vertex + 1, n)])
    reduced = laplacian.matrix[keep][:, keep].tocsc()
    rhs = b[keep]
    try:
        lu = spla.splu(reduced)
        x = lu.solve(rhs)
    except RuntimeError as exc:
        raise SingularBeyondGauge(f"pinned system is singular: {exc}") from exc
    scale = max(np.linalg.norm(rhs), 1e-300)
    residual = float(np.linalg.norm(reduced @ x - rhs) / scale)
    if not np.isfinite(x).all() or residual > _RESIDUAL_TOL:
        raise SolverFailure(f"reduced residual {residual:.3e} exceeds 1e-10")
    values = np.zeros((n, 2))
    values[keep] = x
    return HarmonicSolution(
        values=values,
        residual=residual,
        gauge=f"vertex {pin_vertex} pinned to the origin",
    )


def disk_initial_guess(
    mesh: TriMesh, laplacian: CotanLaplacian, source_face: int, pin_vertex: int = 0
) -> np.ndarray:
    """Feasible starting map for the disk minimizer.

    The weak point-source solution flattens the surface with the source
    region sent far out; re-centering on the boundary image's mean and
    inverting through the origin (z -> z / |z|^2) turns it inside in,
    after which the map is scaled to unit mean boundary radius, flipped
    to positive orientation if needed, and its boundary snapped onto the
    unit circle.
    """
    solution = solve_weak_lb(laplacian, dirac_source(mesh, source_face), pin_vertex)
    g = solution.values - solution.values[mesh.boundary_vertices].mean(axis=0)
    norms_sq = np.sum(g * g, axis=1)
    norms_sq = np.maximum(norms_sq, 1e-300)
    f = g / norms_sq[:, None]
    if mapped_area(mesh, f) < 0:
        f = f * np.array([1.0, -1.0])
    boundary = mesh.boundary_vertices
    radii = np.linalg.norm(f[boundary], axis=1)
    f = f / radii.mean()
    f[boundary] /= np.linalg.norm(f[boundary], axis=1)[:, None]
    return f
