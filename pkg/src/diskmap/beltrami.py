"""Per-face Beltrami equation solver on planar disk meshes.

The first-order system relating the two partial derivative columns of a
planar map g is encoded by a 2 x 2 matrix built from the per-face
coefficient (mu1, mu2); summing the per-face constraints around each
interior vertex yields one linear row per interior vertex, and boundary
values close the system.  At mu = 0 the assembled interior rows reduce to
the plain cotangent Laplacian.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DegenerateCoefficient,
    DegenerateTriangle,
    DimensionMismatch,
    SingularSystem,
    SolverFailure,
)
from .mesh import TriMesh

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])
_ADMISSIBLE_FLOOR = 1e-12
_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class BeltramiCoefficient:
    """Per-face coefficient pair, strictly inside the unit disk."""

    mu1: np.ndarray
    mu2: np.ndarray

    def __post_init__(self):
        m1 = np.asarray(self.mu1, dtype=float)
        m2 = np.asarray(self.mu2, dtype=float)
        if m1.shape != m2.shape:
            raise DimensionMismatch("mu1 and mu2 must have matching shapes")
        if np.any(m1**2 + m2**2 >= 1.0):
            raise DegenerateCoefficient("need mu1^2 + mu2^2 < 1 on every face")
        object.__setattr__(self, "mu1", m1)
        object.__setattr__(self, "mu2", m2)

    @classmethod
    def zero(cls, num_faces: int) -> "BeltramiCoefficient":
        return cls(np.zeros(num_faces), np.zeros(num_faces))

    def __len__(self):
        return len(self.mu1)


def beltrami_matrix(mu1: float, mu2: float) -> np.ndarray:
    """The 2 x 2 derivative-coupling matrix of the coefficient (mu1, mu2).

    B = [[2 mu2, (1 - mu1)^2 + mu2^2], [-(1 + mu1)^2 - mu2^2, -2 mu2]]
    divided by 1 - mu1^2 - mu2^2.  Trace-free with B^2 = -I; at mu = 0 it
    is the quarter-turn rotation.
    """
    denom = 1.0 - mu1**2 - mu2**2
    if denom < _ADMISSIBLE_FLOOR:
        raise DegenerateCoefficient("coefficient too close to the unit circle")
    return (
        np.array(
            [
                [2.0 * mu2, (1.0 - mu1) ** 2 + mu2**2],
                [-((1.0 + mu1) ** 2) - mu2**2, -2.0 * mu2],
            ]
        )
        / denom
    )


def face_weights(v_i, v_j, v_k, mu1: float, mu2: float) -> np.ndarray:
    """Contributions of one planar face to its first corner's row.

    Returns (w_to_i, w_to_j, w_to_k): the coefficients the face adds to
    the row of vertex i for the unknowns g_i, g_j, g_k, namely
    e_opp^T ehat / (4 A) with e_opp the edge opposite each corner and
    ehat the transformed opposite edge of the row corner.  They sum to
    zero by construction.
    """
    v_i = np.asarray(v_i, dtype=float)[:2]
    v_j = np.asarray(v_j, dtype=float)[:2]
    v_k = np.asarray(v_k, dtype=float)[:2]
    vjk = v_j - v_k
    vki = v_k - v_i
    vij = v_i - v_j
    area2 = float(vij[0] * vjk[1] - vij[1] * vjk[0])  # 2 * signed area
    if area2 == 0.0:
        raise DegenerateTriangle("degenerate planar face")
    b = beltrami_matrix(mu1, mu2)
    vhat = -_J @ b @ vjk
    # Factor 1/2: each interior edge collects one such term from each of
    # its two faces.
    return np.array([vjk @ vhat, vki @ vhat, vij @ vhat]) / (2.0 * area2)


@dataclass(frozen=True)
class BeltramiSystem:
    """Assembled interior rows and the vertex partition.

    ``interior_rows`` is (num interior) x (num vertices); each row sums
    to zero and touches only the vertex's one-ring.
    """

    interior: np.ndarray
    boundary: np.ndarray
    interior_rows: sp.csr_matrix


def _planar_vertices(mesh: TriMesh) -> np.ndarray:
    v = mesh.vertices
    if v.shape[1] == 2:
        return v
    if v.shape[1] == 3 and np.allclose(v[:, 2], 0.0, atol=1e-12):
        return v[:, :2]
    raise DimensionMismatch("beltrami solver needs a planar mesh")


def assemble_beltrami(mesh: TriMesh, mu: BeltramiCoefficient) -> BeltramiSystem:
    """Assemble one constraint row per interior vertex."""
    if len(mu) != mesh.num_faces:
        raise DimensionMismatch("one coefficient pair per face required")
    v = _planar_vertices(mesh)
    interior = mesh.interior_vertices()
    row_of = {int(vid): r for r, vid in enumerate(interior)}
    rows, cols, vals = [], [], []
    for t in range(mesh.num_faces):
        ids = mesh.faces[t]
        for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            vid = int(ids[a])
            if vid not in row_of:
                continue
            w = face_weights(
                v[ids[a]], v[ids[b]], v[ids[c]], float(mu.mu1[t]), float(mu.mu2[t])
            )
            r = row_of[vid]
            for col, wval in zip((ids[a], ids[b], ids[c]), w):
                rows.append(r)
                cols.append(int(col))
                vals.append(wval)
    matrix = sp.csr_matrix(
        (vals, (rows, cols)), shape=(len(interior), mesh.num_vertices)
    )
    return BeltramiSystem(
        interior=interior, boundary=mesh.boundary_vertices, interior_rows=matrix
    )


def solve_beltrami(mesh: TriMesh, mu: BeltramiCoefficient, boundary_values) -> np.ndarray:
    """Solve for the interior vertex images given boundary values.

    `boundary_values` is (num boundary, 2), ordered like
    ``mesh.boundary_vertices``.  Returns the full (n, 2) map with the
    boundary rows passed through unchanged.

    Raises
    ------
    SingularSystem
        If the interior block cannot be factorized.
    SolverFailure
        If the relative residual exceeds 1e-10.
    """
    system = assemble_beltrami(mesh, mu)
    g_b = np.asarray(boundary_values, dtype=float)
    if g_b.shape != (len(system.boundary), 2):
        raise DimensionMismatch(
            f"expected boundary values of shape ({len(system.boundary)}, 2)"
        )
    block_ii = system.interior_rows[:, system.interior].tocsc()
    block_ib = system.interior_rows[:, system.boundary]
    rhs = -block_ib @ g_b
    try:
        lu = spla.splu(block_ii)
        g_i = lu.solve(rhs)
    except RuntimeError as exc:
        raise SingularSystem(f"interior block is singular: {exc}") from exc
    scale = max(float(np.linalg.norm(rhs)), 1e-300)
    residual = float(np.linalg.norm(block_ii @ g_i - rhs)) / scale
    if not np.isfinite(g_i).all() or residual > _RESIDUAL_TOL:
        raise SolverFailure(f"relative residual {residual:.3e} exceeds 1e-10")
    g = np.empty((mesh.num_vertices, 2))
    g[system.interior] = g_i
    g[system.boundary] = g_b
    return g


def read_mu_csv(path, num_faces: int) -> BeltramiCoefficient:
    """Read per-face coefficients from CSV rows 'face,mu1,mu2'."""
    mu1 = np.zeros(num_faces)
    mu2 = np.zeros(num_faces)
    with open(path, "r", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("face", ""):
                continue
            t = int(row[0])
            if not 0 <= t < num_faces:
                raise DimensionMismatch(f"face index {t} out of range")
            mu1[t] = float(row[1])
            mu2[t] = float(row[2])
    return BeltramiCoefficient(mu1, mu2)


def read_boundary_csv(path, mesh: TriMesh) -> np.ndarray:
    """Read boundary values from CSV rows 'vertex,x,y'.

    Every boundary vertex of the mesh must receive a value.
    """
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("vertex", ""):
                continue
            values[int(row[0])] = (float(row[1]), float(row[2]))
    missing = [int(v) for v in mesh.boundary_vertices if int(v) not in values]
    if missing:
        raise DimensionMismatch(f"missing boundary values for vertices {missing[:5]}")
    return np.array([values[int(v)] for v in mesh.boundary_vertices])
