"""South-hemisphere test-bed: structured triangulation, spherical chart,
and the stereographic reference map.

The hemisphere is charted by longitude/colatitude ``w = (phi, psi)`` with
``x = (cos phi sin psi, sin phi sin psi, cos psi)`` on
``[0, 2pi] x [pi/2, pi]``.  The mesh puts ``m`` equally spaced meridians
and ``n`` latitude rings plus the south pole; the exact conformal flatten
of this surface onto the unit disk is stereographic projection from the
north pole, which is used as ground truth throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NearPole
from .mesh import TriMesh
from .surface import ParamSurface

# Lipschitz constant of the chart gradient: the second-derivative tensor
# has spectral norm sqrt(1 + cos^2 psi) <= sqrt(2) everywhere.
GRAD_LIPSCHITZ = math.sqrt(2.0)

# Frobenius norm of the chart gradient is sqrt(sin^2 psi + 1) <= sqrt(2).
SIGMA_MAX = math.sqrt(2.0)

HEMISPHERE_AREA = 2.0 * math.pi

_NEAR_POLE_TOL = 1e-12
_SPHERE_TOL = 1e-9


def sphere_point(w):
    """Chart evaluation: (phi, psi) -> point on the unit sphere."""
    phi, psi = w
    sp = math.sin(psi)
    return np.array([math.cos(phi) * sp, math.sin(phi) * sp, math.cos(psi)])


def sphere_gradient(w):
    """Chart gradient (3, 2); columns are the phi and psi partials."""
    phi, psi = w
    sp, cp = math.sin(psi), math.cos(psi)
    sf, cf = math.sin(phi), math.cos(phi)
    return np.array(
        [
            [-sf * sp, cf * cp],
            [cf * sp, sf * cp],
            [0.0, -sp],
        ]
    )


def spherical_patch_area(p0, p1, p2) -> float:
    """Area of the geodesic triangle through three unit-sphere points.

    Uses l'Huilier's formula, which stays accurate for small triangles.
    """
    def arc(a, b):
        return math.atan2(np.linalg.norm(np.cross(a, b)), float(a @ b))

    a, b, c = arc(p1, p2), arc(p2, p0), arc(p0, p1)
    s = 0.5 * (a + b + c)
    t = (
        math.tan(0.5 * s)
        * math.tan(0.5 * (s - a))
        * math.tan(0.5 * (s - b))
        * math.tan(0.5 * (s - c))
    )
    return 4.0 * math.atan(math.sqrt(max(t, 0.0)))


def stereographic_project(v):
    """Project unit-sphere points (z < 1) from the north pole to the plane.

    (x, y, z) -> (x, y) / (1 - z); the south hemisphere lands in the
    closed unit disk.  Accepts one point (3,) or a stack (..., 3).

    Raises
    ------
    NearPole
        If 1 - z < 1e-12 for any point.
    ValueError
        If a point is not on the unit sphere (tolerance 1e-9).
    """
    v = np.asarray(v, dtype=float)
    norms = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(norms - 1.0) > _SPHERE_TOL):
        raise ValueError("point not on the unit sphere")
    denom = 1.0 - v[..., 2]
    if np.any(denom < _NEAR_POLE_TOL):
        raise NearPole("point too close to the projection pole")
    return v[..., :2] / denom[..., None]


def stereographic_gradient(w):
    """Tangential gradient (2, 3) of the stereographic map at x(w).

    Computed as (d f / d w) (grad^T grad)^{-1} grad^T from the chart
    partials; valid away from the pole (psi < pi).
    """
    phi, psi = w
    half = 0.5 * psi
    s = math.cos(half) / math.sin(half)           # radius cot(psi/2)
    ds = -0.5 / math.sin(half) ** 2
    cf, sf = math.cos(phi), math.sin(phi)
    f_w = np.array([[-s * sf, ds * cf], [s * cf, ds * sf]])
    g = sphere_gradient(w)
    gram_inv = np.diag([1.0 / math.sin(psi) ** 2, 1.0])
    return f_w @ gram_inv @ g.T


def stereographic_dirichlet_energy(n_phi: int = 64, n_psi: int = 64) -> float:
    """Dirichlet energy of the stereographic map over the hemisphere.

    Tensor Gauss-Legendre quadrature of 0.5 * |tangential gradient|_F^2
    times the area element over the chart rectangle.  Converges to the
    flattened image area (the map is conformal onto the unit disk).
    """
    xg, wg = np.polynomial.legendre.leggauss(n_phi)
    yg, vg = np.polynomial.legendre.leggauss(n_psi)
    phis = math.pi * (xg + 1.0)                   # [0, 2pi]
    psis = 0.25 * math.pi * (yg + 1.0) + 0.5 * math.pi  # [pi/2, pi]
    total = 0.0
    for phi, wq in zip(phis, wg):
        for psi, vq in zip(psis, vg):
            grad = stereographic_gradient((phi, psi))
            elt = math.sin(psi)                   # sphere area element
            total += wq * vq * 0.5 * np.sum(grad * grad) * elt
    return total * math.pi * 0.25 * math.pi


@dataclass(frozen=True)
class HemisphereSpec:
    """Resolution of the structured hemisphere mesh.

    ``n`` latitude rings (colatitude steps of pi/(2n)) and ``m``
    meridians; the mesh has m*n + 1 vertices including the pole.
    ``r_exponent`` records the coupling m = max(3, floor(n^r)) when the
    spec came from an exponent.
    """

    n: int
    m: int
    r_exponent: float | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2 latitude rings")
        if self.m < 3:
            raise ValueError("need m >= 3 meridians")

    @classmethod
    def from_counts(cls, n: int, m: int) -> "HemisphereSpec":
        return cls(n=int(n), m=int(m))

    @classmethod
    def from_exponent(cls, n: int, r: float) -> "HemisphereSpec":
        # Floor at 3 meridians so small-n members of slowly growing
        # families still produce valid meshes.
        m = max(3, int(math.floor(n**r)))
        return cls(n=int(n), m=m, r_exponent=float(r))

    @property
    def vertex_count(self) -> int:
        return self.m * self.n + 1

    @property
    def face_count(self) -> int:
        return self.m * (2 * self.n - 1)


@dataclass(frozen=True)
class HemisphereMesh:
    """Generated hemisphere: mesh, chart, and parameter-domain cells.

    ``param_tris`` has one (3, 2) parameter triangle per face, ordered
    like the face's vertices.  Faces touching the pole get a synthetic
    apex at (mid-longitude, pi), since the pole has no unique longitude.
    ``param_cells`` holds the cells whose surface patches partition the
    hemisphere exactly: the same triangles for ordinary faces, but the
    full longitude-colatitude rectangle for pole faces.  ``pole_faces``
    flags the faces containing the pole vertex.
    """

    spec: HemisphereSpec
    mesh: TriMesh
    surface: ParamSurface
    param_tris: list
    param_cells: list
    pole_faces: np.ndarray

    def __iter__(self):
        # Allows (mesh, surface, param_tris) unpacking.
        return iter((self.mesh, self.surface, self.param_tris))

    @property
    def boundary_ring(self) -> np.ndarray:
        """Equator vertex indices, 1..m."""
        return np.arange(1, self.spec.m + 1)

    def reference_map(self) -> np.ndarray:
        """Stereographic images of all vertices (the exact flatten)."""
        return stereographic_project(self.mesh.vertices)


def gen_hemisphere(spec: HemisphereSpec) -> HemisphereMesh:
    """Build the structured hemisphere triangulation.

    Vertex 0 is the south pole; vertex 1 + j*m + i sits at longitude
    2*pi*i/m on ring j (colatitude pi/2 + j*pi/(2n)).  Each quad strip is
    split into two triangle types, and the last ring closes onto the pole
    with one fan of triangles; orientations are mutually consistent and
    project to positively oriented planar triangles.
    """
    n, m = spec.n, spec.m

    phi = lambda i: 2.0 * math.pi * i / m  # noqa: E731 - tiny local closures
    psi = lambda j: 0.5 * math.pi + 0.5 * math.pi * j / n  # noqa: E731

    verts = [np.array([0.0, 0.0, -1.0])]
    for j in range(n):
        for i in range(m):
            verts.append(sphere_point((phi(i), psi(j))))
    vertices = np.array(verts)

    def vid(i, j):
        return 1 + j * m + (i % m)

    faces = []
    param_tris = []
    param_cells = []
    pole = []
    for j in range(n - 1):
        for i in range(m):
            faces.append((vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)))
            tri = np.array(
                [[phi(i + 1), psi(j)], [phi(i + 1), psi(j + 1)], [phi(i), psi(j + 1)]]
            )
            param_tris.append(tri)
            param_cells.append(tri)
            pole.append(False)

            faces.append((vid(i + 1, j), vid(i, j + 1), vid(i, j)))
            tri = np.array(
                [[phi(i + 1), psi(j)], [phi(i), psi(j + 1)], [phi(i), psi(j)]]
            )
            param_tris.append(tri)
            param_cells.append(tri)
            pole.append(False)
    last = psi(n - 1)
    for i in range(m):
        faces.append((0, vid(i, n - 1), vid(i + 1, n - 1)))
        mid = 0.5 * (phi(i) + phi(i + 1))
        param_tris.append(
            np.array([[mid, math.pi], [phi(i), last], [phi(i + 1), last]])
        )
        param_cells.append(
            np.array(
                [
                    [phi(i), last],
                    [phi(i + 1), last],
                    [phi(i + 1), math.pi],
                    [phi(i), math.pi],
                ]
            )
        )
        pole.append(True)

    mesh = TriMesh(vertices, np.array(faces, dtype=int))

    # sigma_min is certified over the meshed band up to the last vertex
    # ring; the chart is rank deficient at the pole itself, so the pole
    # cells sit outside the certified region.
    surface = ParamSurface(
        position=sphere_point,
        gradient=sphere_gradient,
        grad_lipschitz=GRAD_LIPSCHITZ,
        sigma_min=math.sin(0.5 * math.pi / n),
        sigma_max=SIGMA_MAX,
        total_area=HEMISPHERE_AREA,
        patch_area=spherical_patch_area,
    )

    return HemisphereMesh(
        spec=spec,
        mesh=mesh,
        surface=surface,
        param_tris=param_tris,
        param_cells=param_cells,
        pole_faces=np.array(pole),
    )
