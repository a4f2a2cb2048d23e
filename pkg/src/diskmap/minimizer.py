"""Conformal-energy minimization over maps into the unit disk.

Boundary vertices live on the unit circle and are parameterized by their
angles, so feasibility is exact at every iterate; interior vertices carry
free planar coordinates.  The driver is a backtracking line-search
descent with optional limited-memory curvature pairs, optionally
preconditioned by a factorization of the interior block of the Laplacian
(the energy is quadratic in the interior, so that block is the exact
interior Hessian).  Accepted iterates never increase the energy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, ZeroReference
from .laplacian import CotanLaplacian, EnergyBreakdown, as_vertex_map, face_image_areas
from .mesh import TriMesh

_BOUNDARY_SLACK = 0.1
_ARMIJO = 1e-4
_CURVATURE_FLOOR = 1e-12


def _ring_sum_operator(mesh: TriMesh) -> sp.csr_matrix:
    """Sparse operator P with (P f)_i = sum over faces (i, j, k) of f_j - f_k.

    The area gradient is 0.5 * rot90(P f) per vertex, rot90 (x, y) = (y, -x).
    """
    faces = mesh.faces
    ones = np.ones(len(faces))
    rows, cols, vals = [], [], []
    for c0, c1, c2 in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        rows += [faces[:, c0], faces[:, c0]]
        cols += [faces[:, c1], faces[:, c2]]
        vals += [ones, -ones]
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.num_vertices, mesh.num_vertices),
    )


def energy_gradient(mesh: TriMesh, laplacian: CotanLaplacian, f) -> np.ndarray:
    """Per-vertex gradient of the conformal energy (Dirichlet minus area).

    The Dirichlet part contributes L f; the area part at vertex i is half
    the 90-degree rotation of the summed opposite edges f_k - f_j over
    incident faces, which cancels at interior vertices.
    """
    f = as_vertex_map(f, mesh.num_vertices)
    if laplacian.size != mesh.num_vertices:
        raise DimensionMismatch("laplacian size does not match the mesh")
    pf = _ring_sum_operator(mesh) @ f
    area_grad = 0.5 * np.column_stack([pf[:, 1], -pf[:, 0]])
    return laplacian.matrix @ f - area_grad


@dataclass(frozen=True)
class MinimizerOptions:
    """Knobs of the descent loop.

    ``gradient_tolerance`` is the absolute norm of the reduced gradient
    (interior coordinates plus boundary tangential components) at which
    the run reports convergence.  ``memory`` limited-memory pairs are
    kept (0 disables them); ``precondition`` applies the inverse interior
    Laplacian block as the initial metric.  The line search starts at
    ``initial_step`` and multiplies by ``backtrack_factor`` at most
    ``max_backtracks`` times per direction.
    """

    max_iterations: int = 2000
    gradient_tolerance: float = 1e-6
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 50
    memory: int = 10
    precondition: bool = True

    def __post_init__(self):
        if self.gradient_tolerance <= 0 or self.initial_step <= 0:
            raise ValueError("tolerances and steps must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")


@dataclass
class SolveReport:
    """Outcome of one minimization run.

    ``energy_trace`` has one breakdown per accepted iterate (the entry at
    index 0 is the feasible initial map); the conformal component is
    non-increasing by construction.  ``fold_count`` counts faces with a
    negative signed image area in the final map.
    """

    final_map: np.ndarray
    energy_trace: list[EnergyBreakdown]
    gradient_norms: list[float]
    fold_trace: list[int]
    iterations: int
    converged: bool
    message: str

    @property
    def fold_count(self) -> int:
        return self.fold_trace[-1]

    def write_trace(self, path):
        """CSV trace: iteration, dirichlet, area, conformal, grad norm, folds."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iteration", "dirichlet", "area", "conformal", "grad_norm", "folds"]
            )
            for it, (e, g, folds) in enumerate(
                zip(self.energy_trace, self.gradient_norms, self.fold_trace)
            ):
                writer.writerow(
                    [
                        it,
                        f"{e.dirichlet:.17g}",
                        f"{e.area:.17g}",
                        f"{e.conformal:.17g}",
                        f"{g:.17g}",
                        folds,
                    ]
                )


class _DiskProblem:
    """Reduced variables (interior coordinates, boundary angles) and the
    energy/gradient evaluations on them."""

    def __init__(self, mesh, laplacian, options):
        self.mesh = mesh
        self.lap = laplacian.matrix
        self.ring = _ring_sum_operator(mesh)
        self.boundary = mesh.boundary_vertices
        self.interior = mesh.interior_vertices()
        self.n_int = len(self.interior)
        self.lu = None
        self.theta_scale = None
        if options.precondition:
            block = laplacian.matrix[self.interior][:, self.interior].tocsc()
            if block.shape[0]:
                self.lu = spla.splu(block)
            diag = np.asarray(
                laplacian.matrix[self.boundary, self.boundary]
            ).ravel()
            self.theta_scale = np.maximum(diag, 1e-12)

    def split(self, x):
        return x[: 2 * self.n_int].reshape(-1, 2), x[2 * self.n_int :]

    def assemble(self, x):
        coords, theta = self.split(x)
        f = np.empty((self.mesh.num_vertices, 2))
        f[self.interior] = coords
        f[self.boundary, 0] = np.cos(theta)
        f[self.boundary, 1] = np.sin(theta)
        return f, theta

    def energy(self, x):
        f, theta = self.assemble(x)
        lf = self.lap @ f
        pf = self.ring @ f
        area = 0.25 * float(np.sum(f[:, 0] * pf[:, 1] - f[:, 1] * pf[:, 0]))
        dirichlet = 0.5 * float(np.sum(f * lf))
        return dirichlet, area, f, theta, lf, pf

    def gradient(self, f, theta, lf, pf):
        area_grad = 0.5 * np.column_stack([pf[:, 1], -pf[:, 0]])
        g = lf - area_grad
        tangent = np.column_stack([-np.sin(theta), np.cos(theta)])
        return np.concatenate(
            [g[self.interior].ravel(), np.sum(g[self.boundary] * tangent, axis=1)]
        )

    def precondition(self, v):
        if self.lu is None:
            return v
        out = np.empty_like(v)
        if self.n_int:
            out[: 2 * self.n_int] = self.lu.solve(
                v[: 2 * self.n_int].reshape(-1, 2)
            ).ravel()
        out[2 * self.n_int :] = v[2 * self.n_int :] / self.theta_scale
        return out


def minimize(
    mesh: TriMesh,
    laplacian: CotanLaplacian,
    init,
    options: MinimizerOptions | None = None,
) -> SolveReport:
    """Minimize the conformal energy with the boundary on the unit circle.

    The initial boundary vertices must already be within 0.1 of the unit
    circle; they are snapped onto it radially on entry.  Each accepted
    step satisfies a backtracking Armijo decrease, so the recorded
    conformal energies never increase; the run converges when the reduced
    gradient norm reaches the tolerance, and otherwise stops at the
    iteration cap or when no descent step of at least the minimal step
    size exists (reported as not converged with the best iterate).
    """
    options = options or MinimizerOptions()
    init = as_vertex_map(init, mesh.num_vertices)
    boundary = mesh.boundary_vertices
    if boundary.size == 0:
        raise DimensionMismatch("mesh has no boundary; disk mapping needs one")
    radii = np.linalg.norm(init[boundary], axis=1)
    if np.any(np.abs(radii - 1.0) > _BOUNDARY_SLACK):
        raise ValueError(
            "initial boundary vertices must lie within 0.1 of the unit circle"
        )

    problem = _DiskProblem(mesh, laplacian, options)
    theta0 = np.arctan2(init[boundary, 1], init[boundary, 0])
    x = np.concatenate([init[problem.interior].ravel(), theta0])

    dirichlet, area, f, theta, lf, pf = problem.energy(x)
    energy = dirichlet - area
    g = problem.gradient(f, theta, lf, pf)

    trace = [EnergyBreakdown(dirichlet, area)]
    grad_norms = [float(np.linalg.norm(g))]
    folds = [int(np.sum(face_image_areas(mesh, f) < 0))]

    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    iterations = 0
    converged = False
    message = "iteration cap reached"

    while iterations < options.max_iterations:
        grad_norm = np.linalg.norm(g)
        if grad_norm <= options.gradient_tolerance:
            converged = True
            message = "gradient tolerance reached"
            break

        # Two-loop recursion over the stored pairs, seeded by the
        # preconditioner (or the identity).
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(s_hist), reversed(y_hist)):
            a = (s @ q) / (y @ s)
            alphas.append(a)
            q -= a * y
        q = problem.precondition(q)
        if s_hist and problem.lu is None:
            q *= (s_hist[-1] @ y_hist[-1]) / (y_hist[-1] @ y_hist[-1])
        for (s, y), a in zip(zip(s_hist, y_hist), reversed(alphas)):
            q += (a - (y @ q) / (y @ s)) * s
        direction = -q

        def backtrack(direction, x, energy, slope):
            step = options.initial_step
            for _ in range(options.max_backtracks):
                x_new = x + step * direction
                d_new, a_new, f_new, th_new, lf_new, pf_new = problem.energy(x_new)
                if d_new - a_new <= energy + _ARMIJO * step * slope:
                    return x_new, d_new, a_new, f_new, th_new, lf_new, pf_new
                step *= options.backtrack_factor
            return None

        slope = float(g @ direction)
        if slope > -1e-14 * np.linalg.norm(direction) * grad_norm:
            direction = -problem.precondition(g)
            slope = float(g @ direction)
            s_hist, y_hist = [], []
        result = backtrack(direction, x, energy, slope)
        if result is None and s_hist:
            # Curvature model rejected; retry with the plain direction.
            s_hist, y_hist = [], []
            direction = -problem.precondition(g)
            slope = float(g @ direction)
            result = backtrack(direction, x, energy, slope)
        if result is None:
            message = "line search found no decreasing step"
            break

        x_new, d_new, a_new, f_new, th_new, lf_new, pf_new = result
        g_new = problem.gradient(f_new, th_new, lf_new, pf_new)
        if options.memory > 0:
            s = x_new - x
            y = g_new - g
            if y @ s > _CURVATURE_FLOOR * np.linalg.norm(y) * np.linalg.norm(s):
                s_hist.append(s)
                y_hist.append(y)
                if len(s_hist) > options.memory:
                    s_hist.pop(0)
                    y_hist.pop(0)

        x, g = x_new, g_new
        energy = d_new - a_new
        f = f_new
        iterations += 1
        trace.append(EnergyBreakdown(d_new, a_new))
        grad_norms.append(float(np.linalg.norm(g)))
        folds.append(int(np.sum(face_image_areas(mesh, f) < 0)))

    return SolveReport(
        final_map=f,
        energy_trace=trace,
        gradient_norms=grad_norms,
        fold_trace=folds,
        iterations=iterations,
        converged=converged,
        message=message,
    )


def normalize_map(f, reference) -> np.ndarray:
    """Best origin-fixed orthogonal alignment of `f` onto `reference`.

    Solves the Procrustes problem over rotations and reflections (no
    translation, no scaling) and returns the aligned copy of `f`.
    """
    f = np.asarray(f, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if f.shape != reference.shape:
        raise DimensionMismatch("maps must have identical shapes")
    u, _, vt = np.linalg.svd(f.T @ reference)
    return f @ (u @ vt)


def relative_error(f, reference) -> float:
    """Frobenius error of `f` against `reference`, relative to `reference`.

    Callers should align with :func:`normalize_map` first; this function
    compares the arrays as given.
    """
    f = np.asarray(f, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if f.shape != reference.shape:
        raise DimensionMismatch("maps must have identical shapes")
    denom = np.linalg.norm(reference)
    if denom == 0.0:
        raise ZeroReference("reference map has zero norm")
    return float(np.linalg.norm(f - reference) / denom)
