"""Cotangent Laplacian with per-face area ratios, and the energy trio:
Dirichlet energy, mapped area, and conformal energy (their difference).

Each undirected edge gets the weight (rho_a cot_a + rho_b cot_b) / 2 over
its one or two adjacent faces, where cot is the cotangent of the angle
opposite the edge and rho is the face's curved-to-flat area ratio.  With
rho = 1 this is the classical cotangent Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .barycentric import projection_frame
from .errors import DimensionMismatch, NonFiniteWeight
from .mesh import TriangleGeom, TriMesh, triangle_metrics
from .surface import ParamSurface, patch_area_quadrature


@dataclass(frozen=True)
class CotanLaplacian:
    """Sparse symmetric Laplacian and its per-edge assembly record.

    ``matrix`` is n x n CSR with row sums zero (off-diagonal -w, diagonal
    the row's weight sum).  Parallel arrays describe each undirected
    edge: endpoints, assembled weight, boundary flag, and the one or two
    (area ratio, cotangent) contributions (NaN padding on the second slot
    for boundary edges).  ``face_ratio`` stores rho per face.
    """

    size: int
    matrix: sp.csr_matrix
    edges: np.ndarray
    weights: np.ndarray
    edge_is_boundary: np.ndarray
    edge_ratios: np.ndarray
    edge_cotans: np.ndarray
    face_ratio: np.ndarray

    def write_triplets(self, path):
        """Dump nonzeros as 'i j value' text for external inspection."""
        coo = self.matrix.tocoo()
        with open(path, "w", encoding="utf-8") as fh:
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {v:.17g}\n")


def face_area_ratios(
    mesh: TriMesh,
    mode: str = "unit",
    surface: ParamSurface | None = None,
    param_cells=None,
    quad_order: int = 3,
) -> np.ndarray:
    """Curved-to-flat area ratio of each face.

    ``unit`` returns ones.  ``quadrature`` integrates the surface area
    element over each face's parameter cell (triangle or polygon) with a
    fixed-order symmetric rule.  ``analytic`` calls the surface's closed
    form patch area on the face's vertex positions.
    """
    if mode == "unit":
        return np.ones(mesh.num_faces)
    if mode == "quadrature":
        if surface is None or param_cells is None:
            raise ValueError("quadrature mode needs a surface and parameter cells")
        if len(param_cells) != mesh.num_faces:
            raise DimensionMismatch("one parameter cell per face required")
        ratios = np.empty(mesh.num_faces)
        for t in range(mesh.num_faces):
            patch = patch_area_quadrature(surface, param_cells[t], quad_order)
            flat = triangle_metrics(*mesh.face_points(t)).area
            ratios[t] = patch / flat
        return ratios
    if mode == "analytic":
        if surface is None or surface.patch_area is None:
            raise ValueError("analytic mode needs a surface with patch_area")
        ratios = np.empty(mesh.num_faces)
        for t in range(mesh.num_faces):
            p0, p1, p2 = mesh.face_points(t)
            flat = triangle_metrics(p0, p1, p2).area
            ratios[t] = surface.patch_area(p0, p1, p2) / flat
        return ratios
    raise ValueError(f"unknown area-ratio mode {mode!r}")


def assemble_laplacian(
    mesh: TriMesh,
    rho_mode: str = "unit",
    surface: ParamSurface | None = None,
    param_cells=None,
    quad_order: int = 3,
    face_ratios: np.ndarray | None = None,
) -> CotanLaplacian:
    """Assemble the area-ratio weighted cotangent Laplacian.

    Precomputed `face_ratios` override `rho_mode`.  Raises
    NonFiniteWeight if any cotangent or ratio is not finite and
    propagates DegenerateTriangle from the metric computation.
    """
    if face_ratios is None:
        face_ratios = face_area_ratios(mesh, rho_mode, surface, param_cells, quad_order)
    face_ratios = np.asarray(face_ratios, dtype=float)
    if face_ratios.shape != (mesh.num_faces,):
        raise DimensionMismatch("face_ratios must have one entry per face")
    if not np.isfinite(face_ratios).all():
        raise NonFiniteWeight("non-finite area ratio")

    contrib: dict[tuple[int, int], list[tuple[float, float]]] = {}
    order: list[tuple[int, int]] = []
    for t in range(mesh.num_faces):
        geom = triangle_metrics(*mesh.face_points(t))
        cots = geom.cotangents  # (at_i, at_j, at_k)
        if not np.isfinite(cots).all():
            raise NonFiniteWeight(f"non-finite cotangent in face {t}")
        i, j, k = (int(v) for v in mesh.faces[t])
        rho = float(face_ratios[t])
        # angle at a corner is opposite the edge joining the other two
        for (a, b), cot in (((j, k), cots[0]), ((k, i), cots[1]), ((i, j), cots[2])):
            key = (a, b) if a < b else (b, a)
            if key not in contrib:
                contrib[key] = []
                order.append(key)
            contrib[key].append((rho, float(cot)))

    n_edges = len(order)
    edges = np.array(order, dtype=int)
    weights = np.empty(n_edges)
    boundary = np.empty(n_edges, dtype=bool)
    ratios = np.full((n_edges, 2), np.nan)
    cotans = np.full((n_edges, 2), np.nan)
    for e, key in enumerate(order):
        parts = contrib[key]
        weights[e] = 0.5 * sum(r * c for r, c in parts)
        boundary[e] = len(parts) == 1
        for s, (r, c) in enumerate(parts):
            ratios[e, s] = r
            cotans[e, s] = c

    n = mesh.num_vertices
    rows = np.concatenate([edges[:, 0], edges[:, 1], edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0], edges[:, 0], edges[:, 1]])
    vals = np.concatenate([-weights, -weights, weights, weights])
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    return CotanLaplacian(
        size=n,
        matrix=matrix,
        edges=edges,
        weights=weights,
        edge_is_boundary=boundary,
        edge_ratios=ratios,
        edge_cotans=cotans,
        face_ratio=face_ratios,
    )


def as_vertex_map(values, size: int) -> np.ndarray:
    """Validate a per-vertex planar map: finite float array (size, 2)."""
    f = np.asarray(values, dtype=float)
    if f.shape != (size, 2):
        raise DimensionMismatch(f"expected map of shape ({size}, 2), got {f.shape}")
    if not np.isfinite(f).all():
        raise DimensionMismatch("map contains non-finite entries")
    return f


def dirichlet_energy(laplacian: CotanLaplacian, f) -> float:
    """0.5 <L f, f> over both target coordinates."""
    f = as_vertex_map(f, laplacian.size)
    return 0.5 * float(np.sum(f * (laplacian.matrix @ f)))


def dirichlet_energy_edge_sum(laplacian: CotanLaplacian, f) -> float:
    """Same energy via 0.5 * sum_e w_e |f_i - f_j|^2 (assembly oracle)."""
    f = as_vertex_map(f, laplacian.size)
    d = f[laplacian.edges[:, 0]] - f[laplacian.edges[:, 1]]
    return 0.5 * float(np.sum(laplacian.weights * np.sum(d * d, axis=1)))


def per_triangle_dirichlet(f_i, f_j, f_k, geom: TriangleGeom, rho: float = 1.0) -> float:
    """Per-face Dirichlet form (rho / 2) sum_edges |df|^2 cot(opposite).

    Equals rho * area * |gradient|_F^2 of the linear interpolant; the
    mesh energy is half the sum of these over all faces.
    """
    f_i = np.asarray(f_i, float)
    f_j = np.asarray(f_j, float)
    f_k = np.asarray(f_k, float)
    sq = lambda a: float(a @ a)  # noqa: E731
    return 0.5 * rho * (
        sq(f_i - f_j) * geom.cotangents[2]
        + sq(f_j - f_k) * geom.cotangents[0]
        + sq(f_k - f_i) * geom.cotangents[1]
    )


def per_triangle_dirichlet_matrix(f_i, f_j, f_k, v_i, v_j, v_k, rho: float = 1.0) -> float:
    """Matrix form of the per-face Dirichlet form.

    (rho / (4 A)) |[f_i f_j f_k] [s_i s_j s_k]^T|_F^2 with the rotated
    edges s; agrees with :func:`per_triangle_dirichlet` to rounding.
    """
    frame = projection_frame(v_i, v_j, v_k)
    fmat = np.column_stack([f_i, f_j, f_k]).astype(float)
    m = fmat @ frame.rotated_edges
    return float(np.sum(m * m)) * rho / (4.0 * frame.area)


def mapped_area(mesh: TriMesh, f) -> float:
    """Signed area of the planar image, summed per face.

    Interior-edge terms cancel, so this always equals the shoelace area
    of the (oriented) boundary image polygon.
    """
    f = as_vertex_map(f, mesh.num_vertices)
    fi, fj, fk = (f[mesh.faces[:, c]] for c in range(3))
    e1, e2 = fi - fj, fj - fk
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    return 0.5 * float(det.sum())


def face_image_areas(mesh: TriMesh, f) -> np.ndarray:
    """Per-face signed image areas (negative entries are folds)."""
    f = as_vertex_map(f, mesh.num_vertices)
    fi, fj, fk = (f[mesh.faces[:, c]] for c in range(3))
    e1, e2 = fi - fj, fj - fk
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


@dataclass(frozen=True)
class EnergyBreakdown:
    """Dirichlet energy, mapped area, and their difference."""

    dirichlet: float
    area: float

    @property
    def conformal(self) -> float:
        return self.dirichlet - self.area


def conformal_energy(mesh: TriMesh, laplacian: CotanLaplacian, f) -> EnergyBreakdown:
    """Energy breakdown of a planar vertex map."""
    if laplacian.size != mesh.num_vertices:
        raise DimensionMismatch("laplacian size does not match the mesh")
    return EnergyBreakdown(
        dirichlet=dirichlet_energy(laplacian, f),
        area=mapped_area(mesh, f),
    )
