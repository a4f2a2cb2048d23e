"""A priori error bounds for the flat-triangle discretization of a
parameterized surface, plus triangulation quality diagnostics.

All bounds are per-face and computable from four surface constants (the
chart-gradient Lipschitz constant, two-sided singular value bounds, the
total area) together with the face and its parameter-domain triangle:

* plane-distance bound: how far a surface point can sit from its face's
  plane (quadratic in the parameter diameter);
* tilt bound: how far the face plane can tilt from the tangent plane;
* gradient error terms: the per-face pair (factor, offset) bounding the
  pointwise error of the piecewise-constant surface-gradient surrogate by
  factor * |gradient| + offset;
* a global bound on the Dirichlet-energy discretization error assembled
  from the maxima of those terms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTriangle
from .mesh import TriMesh, triangle_metrics
from .surface import ParamSurface

@dataclass(frozen=True)
class BoundsConfig:
    """Surface constants used by every bound.

    ``grad_lipschitz`` bounds the chart gradient's modulus of continuity,
    ``map_grad_lipschitz`` the target map's tangential-gradient Lipschitz
    constant, ``sigma_min``/``sigma_max`` the chart's singular values over
    the certified region, and ``total_area`` the surface area.
    """

    grad_lipschitz: float
    map_grad_lipschitz: float
    sigma_min: float
    sigma_max: float
    total_area: float

    def __post_init__(self):
        if min(
            self.grad_lipschitz,
            self.map_grad_lipschitz,
            self.sigma_min,
            self.sigma_max,
            self.total_area,
        ) < 0 or self.sigma_min == 0:
            raise ValueError("bound constants must be positive (lipschitz may be 0)")
        if self.sigma_min > self.sigma_max:
            raise ValueError("sigma_min exceeds sigma_max")

    @classmethod
    def for_surface(cls, surface: ParamSurface, map_grad_lipschitz: float):
        if surface.total_area is None:
            raise ValueError("surface has no known total area")
        return cls(
            grad_lipschitz=surface.grad_lipschitz,
            map_grad_lipschitz=map_grad_lipschitz,
            sigma_min=surface.sigma_min,
            sigma_max=surface.sigma_max,
            total_area=surface.total_area,
        )


def plane_distance_bound(config: BoundsConfig, diam_param: float) -> float:
    """Upper bound on the surface-to-face-plane distance over one face.

    Equals grad_lipschitz * diam_param^2; zero for flat charts.
    """
    return config.grad_lipschitz * diam_param**2


def centered_pinv_norm(param_tri) -> float:
    """Largest pseudoinverse norm of the vertex matrix centered anywhere
    in a parameter triangle.

    The maximum over centers is attained at the centroid and has the
    closed form |[e_jk, e_ki, e_ij]|_2 / (2 T) in terms of the edge
    vectors and the triangle area T.
    """
    p = np.asarray(param_tri, dtype=float)
    if p.shape != (3, 2):
        raise DegenerateTriangle("parameter triangle must be (3, 2)")
    edges = np.array([p[1] - p[2], p[2] - p[0], p[0] - p[1]])
    area2 = float(
        (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1])
        - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0])
    )
    if area2 == 0.0:
        raise DegenerateTriangle("degenerate parameter triangle")
    return float(np.linalg.norm(edges.T, 2)) / abs(area2)


def tangent_tilt_bound(config: BoundsConfig, diam_param: float, area_param: float) -> float:
    """Upper bound on |n^T Q|: the sine of the face-plane/tangent-plane
    tilt, 3 * grad_lipschitz * diam_param^3 / (sigma_min * area_param).
    """
    if area_param <= 0:
        raise DegenerateTriangle("parameter triangle area must be positive")
    return 3.0 * config.grad_lipschitz * diam_param**3 / (config.sigma_min * area_param)


def gradient_error_terms(
    config: BoundsConfig,
    diam_face: float,
    area_face: float,
    diam_param: float,
    area_param: float,
) -> tuple[float, float]:
    """Per-face (factor, offset) of the surrogate-gradient error bound.

    factor = 3 C d(V) d(Omega)^2 / A + tilt^2 multiplies the pointwise
    gradient norm; offset = 3 C_f sigma_max^2 d(V) d(Omega)^2 / (2 A) is
    the gradient-free remainder.
    """
    if area_face <= 0 or area_param <= 0:
        raise DegenerateTriangle("face and parameter areas must be positive")
    tilt = tangent_tilt_bound(config, diam_param, area_param)
    factor = 3.0 * config.grad_lipschitz * diam_face * diam_param**2 / area_face + tilt**2
    offset = (
        3.0
        * config.map_grad_lipschitz
        * config.sigma_max**2
        * diam_face
        * diam_param**2
        / (2.0 * area_face)
    )
    return factor, offset


def gradient_error_terms_reduced(
    config: BoundsConfig,
    diam_face: float,
    sin_min_angle_face: float,
    diam_param: float,
    sin_min_angle_param: float,
) -> tuple[float, float]:
    """Shape-ratio form of the gradient error terms.

    Uses only the diameter-to-smallest-angle-sine ratios of the face and
    its parameter triangle; dominates :func:`gradient_error_terms` when
    the chart is uniformly non-degenerate over the face.
    """
    ratio_face = diam_face / sin_min_angle_face
    ratio_param = diam_param / sin_min_angle_param
    c, s = config.grad_lipschitz, config.sigma_min
    factor = 12.0 * c / s**2 * ratio_face + (12.0 * c / s * ratio_param) ** 2
    offset = 6.0 * config.map_grad_lipschitz * config.sigma_max**2 / s**2 * ratio_face
    return factor, offset


def dirichlet_error_bound(dirichlet_value: float, int_sq_error: float) -> float:
    """Bound on |continuous - discretized| Dirichlet energy.

    Takes the discrete energy and a bound on the integrated squared
    pointwise gradient error S, returning S / 2 + sqrt(2 E S).
    """
    if dirichlet_value < 0 or int_sq_error < 0:
        raise ValueError("energy and integral bound must be non-negative")
    return 0.5 * int_sq_error + math.sqrt(2.0 * dirichlet_value * int_sq_error)


def integrated_error_bound(
    config: BoundsConfig, dirichlet_value: float, factor_max: float, offset_max: float
) -> float:
    """Bound on half the integrated squared gradient error:
    (sqrt(E) * factor_max + sqrt(total_area / 2) * offset_max)^2.
    """
    return (
        math.sqrt(max(dirichlet_value, 0.0)) * factor_max
        + math.sqrt(0.5 * config.total_area) * offset_max
    ) ** 2


@dataclass(frozen=True)
class EigenScanReport:
    """Grid check that centering at the column mean minimizes each
    eigenvalue of the centered Gram matrix.

    ``cell_distances`` holds, per eigenvalue, the grid distance (in cells)
    between a grid minimizer and the column mean (meaningful when the
    minimizer is unique); ``grid_minima`` and ``values_at_mean`` compare
    the scanned minimum against the value attained at the mean, which is
    the tie-robust statement.  ``value_mismatch`` compares the values at
    the mean against the eigenvalues of C C^T - n_cols * mean mean^T.
    """

    minimizers: np.ndarray
    cell_distances: np.ndarray
    grid_minima: np.ndarray
    values_at_mean: np.ndarray
    value_mismatch: float
    grid_step: float


def eigen_min_scan(columns, grid_resolution: int = 101, half_width: float | None = None) -> EigenScanReport:
    """Scan eigenvalues of (C - x 1^T)(C - x 1^T)^T over a grid of x.

    `columns` is 2 x k.  The grid covers a square box of the given half
    width (default: the diameter of the column set) around the column
    mean.  Both eigenvalues of the 2 x 2 matrix are tracked.
    """
    c = np.asarray(columns, dtype=float)
    if c.ndim != 2 or c.shape[0] != 2:
        raise ValueError("columns must be a 2 x k array")
    k = c.shape[1]
    mean = c.mean(axis=1)
    if half_width is None:
        spread = c - mean[:, None]
        half_width = 2.0 * float(np.linalg.norm(spread, axis=0).max())
        if half_width == 0.0:
            half_width = 1.0
    xs = np.linspace(mean[0] - half_width, mean[0] + half_width, grid_resolution)
    ys = np.linspace(mean[1] - half_width, mean[1] + half_width, grid_resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")

    # B(x) entries, vectorized over the grid.
    s = c.sum(axis=1)
    b11 = float(c[0] @ c[0]) - 2 * gx * s[0] + k * gx**2
    b22 = float(c[1] @ c[1]) - 2 * gy * s[1] + k * gy**2
    b12 = float(c[0] @ c[1]) - gx * s[1] - gy * s[0] + k * gx * gy
    half_tr = 0.5 * (b11 + b22)
    disc = np.sqrt(np.maximum(0.25 * (b11 - b22) ** 2 + b12**2, 0.0))
    lams = [half_tr - disc, half_tr + disc]

    step = xs[1] - xs[0]
    minimizers = np.empty((2, 2))
    cells = np.empty(2)
    grid_minima = np.empty(2)
    for ell, lam in enumerate(lams):
        flat = int(np.argmin(lam))
        ii, jj = np.unravel_index(flat, lam.shape)
        minimizers[ell] = (xs[ii], ys[jj])
        cells[ell] = max(abs(xs[ii] - mean[0]), abs(ys[jj] - mean[1])) / step
        grid_minima[ell] = float(lam[ii, jj])

    ref = c @ c.T - k * np.outer(mean, mean)
    ref_vals = np.sort(np.linalg.eigvalsh(ref))
    b11v = float(c[0] @ c[0]) - 2 * mean[0] * s[0] + k * mean[0] ** 2
    b22v = float(c[1] @ c[1]) - 2 * mean[1] * s[1] + k * mean[1] ** 2
    b12v = float(c[0] @ c[1]) - mean[0] * s[1] - mean[1] * s[0] + k * mean[0] * mean[1]
    half = 0.5 * (b11v + b22v)
    d = math.sqrt(max(0.25 * (b11v - b22v) ** 2 + b12v**2, 0.0))
    at_mean = np.array([half - d, half + d])
    mismatch = float(np.max(np.abs(at_mean - ref_vals)))

    return EigenScanReport(
        minimizers=minimizers,
        cell_distances=cells,
        grid_minima=grid_minima,
        values_at_mean=at_mean,
        value_mismatch=mismatch,
        grid_step=float(step),
    )


@dataclass(frozen=True)
class TriangleQuality:
    """Per-face shape diagnostics of a mesh (and optionally of its
    parameter triangles).

    ``diam_over_sin`` is the convergence-condition ratio d / sin(min
    angle); ``diam_over_inradius`` the quasi-uniformity ratio d / r.
    """

    diam: np.ndarray
    min_angle: np.ndarray
    diam_over_sin: np.ndarray
    diam_over_inradius: np.ndarray
    param_diam: np.ndarray | None = None
    param_min_angle: np.ndarray | None = None
    param_area: np.ndarray | None = None

    @property
    def max_diam(self) -> float:
        return float(self.diam.max())

    @property
    def max_diam_over_sin(self) -> float:
        return float(self.diam_over_sin.max())

    @property
    def max_diam_over_inradius(self) -> float:
        return float(self.diam_over_inradius.max())


def _tri2_metrics(p):
    geom = triangle_metrics(p[0], p[1], p[2])
    return geom


def quality_report(mesh: TriMesh, param_tris=None) -> TriangleQuality:
    """Shape diagnostics for every face (and parameter triangle)."""
    nf = mesh.num_faces
    diam = np.empty(nf)
    min_angle = np.empty(nf)
    over_sin = np.empty(nf)
    over_r = np.empty(nf)
    for t in range(nf):
        geom = triangle_metrics(*mesh.face_points(t))
        diam[t] = geom.diameter
        min_angle[t] = geom.angles.min()
        over_sin[t] = geom.diameter / math.sin(min_angle[t])
        over_r[t] = geom.diameter / geom.inradius
    pd = pa = pm = None
    if param_tris is not None:
        if len(param_tris) != nf:
            raise DegenerateTriangle("one parameter triangle per face required")
        pd = np.empty(nf)
        pm = np.empty(nf)
        pa = np.empty(nf)
        for t, tri in enumerate(param_tris):
            geom = _tri2_metrics(np.asarray(tri, dtype=float))
            pd[t] = geom.diameter
            pm[t] = geom.angles.min()
            pa[t] = geom.area
    return TriangleQuality(
        diam=diam,
        min_angle=min_angle,
        diam_over_sin=over_sin,
        diam_over_inradius=over_r,
        param_diam=pd,
        param_min_angle=pm,
        param_area=pa,
    )


def is_strictly_decreasing(values) -> bool:
    """Trend flag for a family of quality maxima."""
    values = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(values) < 0))


@dataclass(frozen=True)
class DegradedFace:
    """A face matching the thin-near-isosceles degradation pattern."""

    face: int
    short_over_long: float
    mid_over_long: float


def scan_degraded_faces(
    mesh: TriMesh, short_ratio: float = 0.1, near_equal: float = 0.1
) -> list[DegradedFace]:
    """Flag faces with two nearly equal long edges and a tiny short edge.

    With sorted edge lengths a <= b <= c, a face is flagged when
    a / c <= short_ratio and |b / c - 1| <= near_equal.  This is the
    degradation pattern that thin Delaunay triangulations develop as the
    smallest angle collapses.
    """
    flagged = []
    for t in range(mesh.num_faces):
        geom = triangle_metrics(*mesh.face_points(t))
        a, b, c = np.sort(geom.edge_lengths)
        if a / c <= short_ratio and abs(b / c - 1.0) <= near_equal:
            flagged.append(
                DegradedFace(face=t, short_over_long=float(a / c), mid_over_long=float(b / c))
            )
    return flagged


@dataclass(frozen=True)
class BoundReport:
    """All per-face bound quantities plus their maxima.

    Per-face arrays: plane-distance bound, centered pseudoinverse norm,
    tilt bound, gradient-error factor and offset.  When a Dirichlet value
    is supplied the integrated-error and energy-error bounds are filled
    in.  ``certified`` marks faces whose parameter triangle lies inside
    the chart's certified (non-degenerate) region.
    """

    quality: TriangleQuality
    plane_distance: np.ndarray
    pinv_norm: np.ndarray
    tilt: np.ndarray
    grad_factor: np.ndarray
    grad_offset: np.ndarray
    certified: np.ndarray
    factor_max: float
    offset_max: float
    int_sq_error: float | None = None
    energy_error: float | None = None

    def write_csv(self, path):
        """One row per face plus a summary row of the maxima."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "face",
                    "diam",
                    "diam_over_sin",
                    "param_diam",
                    "plane_distance_bound",
                    "pinv_norm",
                    "tilt_bound",
                    "grad_factor",
                    "grad_offset",
                    "certified",
                ]
            )
            q = self.quality
            for t in range(len(self.plane_distance)):
                writer.writerow(
                    [
                        t,
                        f"{q.diam[t]:.17g}",
                        f"{q.diam_over_sin[t]:.17g}",
                        f"{q.param_diam[t]:.17g}",
                        f"{self.plane_distance[t]:.17g}",
                        f"{self.pinv_norm[t]:.17g}",
                        f"{self.tilt[t]:.17g}",
                        f"{self.grad_factor[t]:.17g}",
                        f"{self.grad_offset[t]:.17g}",
                        int(self.certified[t]),
                    ]
                )
            writer.writerow(
                [
                    "max",
                    f"{q.max_diam:.17g}",
                    f"{q.max_diam_over_sin:.17g}",
                    f"{np.max(q.param_diam):.17g}",
                    f"{np.max(self.plane_distance):.17g}",
                    f"{np.max(self.pinv_norm):.17g}",
                    f"{np.max(self.tilt):.17g}",
                    f"{self.factor_max:.17g}",
                    f"{self.offset_max:.17g}",
                    int(self.certified.all()),
                ]
            )


def build_bound_report(
    mesh: TriMesh,
    param_tris,
    config: BoundsConfig,
    dirichlet_value: float | None = None,
    certified_mask=None,
) -> BoundReport:
    """Evaluate every per-face bound and aggregate the maxima.

    ``certified_mask`` marks faces inside the chart's certified region
    (default: all); the factor/offset maxima and the derived energy-error
    bound are taken over all faces so they stay valid upper bounds.
    """
    quality = quality_report(mesh, param_tris)
    nf = mesh.num_faces
    plane = np.empty(nf)
    pinv = np.empty(nf)
    tilt = np.empty(nf)
    factor = np.empty(nf)
    offset = np.empty(nf)
    for t in range(nf):
        d_param = quality.param_diam[t]
        a_param = quality.param_area[t]
        plane[t] = plane_distance_bound(config, d_param)
        pinv[t] = centered_pinv_norm(param_tris[t])
        tilt[t] = tangent_tilt_bound(config, d_param, a_param)
        geom = triangle_metrics(*mesh.face_points(t))
        factor[t], offset[t] = gradient_error_terms(
            config, geom.diameter, geom.area, d_param, a_param
        )
    certified = (
        np.ones(nf, dtype=bool)
        if certified_mask is None
        else np.asarray(certified_mask, dtype=bool)
    )
    factor_max = float(factor.max())
    offset_max = float(offset.max())
    int_sq = energy_err = None
    if dirichlet_value is not None:
        half_integral = integrated_error_bound(
            config, dirichlet_value, factor_max, offset_max
        )
        int_sq = 2.0 * half_integral
        energy_err = dirichlet_error_bound(dirichlet_value, int_sq)
    return BoundReport(
        quality=quality,
        plane_distance=plane,
        pinv_norm=pinv,
        tilt=tilt,
        grad_factor=factor,
        grad_offset=offset,
        certified=certified,
        factor_max=factor_max,
        offset_max=offset_max,
        int_sq_error=int_sq,
        energy_error=energy_err,
    )


def estimate_map_grad_lipschitz(mesh: TriMesh, grad_at_vertex) -> float:
    """Edge-sampled Lipschitz estimate of a map's tangential gradient.

    ``grad_at_vertex`` maps a vertex index to the gradient matrix there;
    the estimate is the max over mesh edges of the gradient difference
    over the edge length.  A sampled estimate, not a certified bound.
    """
    grads = [np.asarray(grad_at_vertex(i), dtype=float) for i in range(mesh.num_vertices)]
    best = 0.0
    seen = set()
    for tri in mesh.faces:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            if key in seen:
                continue
            seen.add(key)
            gap = np.linalg.norm(grads[a] - grads[b])
            length = np.linalg.norm(mesh.vertices[a] - mesh.vertices[b])
            if length > 0:
                best = max(best, float(gap / length))
    return best


def quality_csv(quality: TriangleQuality, path, flagged=None):
    """Write per-face quality rows plus a summary row."""
    flagged_set = {d.face for d in flagged} if flagged else set()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["face", "diam", "min_angle", "diam_over_sin", "diam_over_inradius", "degraded"])
        for t in range(len(quality.diam)):
            writer.writerow(
                [
                    t,
                    f"{quality.diam[t]:.17g}",
                    f"{quality.min_angle[t]:.17g}",
                    f"{quality.diam_over_sin[t]:.17g}",
                    f"{quality.diam_over_inradius[t]:.17g}",
                    int(t in flagged_set),
                ]
            )
        writer.writerow(
            [
                "max",
                f"{quality.max_diam:.17g}",
                f"{quality.min_angle.min():.17g}",
                f"{quality.max_diam_over_sin:.17g}",
                f"{quality.max_diam_over_inradius:.17g}",
                len(flagged_set),
            ]
        )
