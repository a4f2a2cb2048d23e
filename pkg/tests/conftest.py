import numpy as np
import pytest

from diskmap import HemisphereSpec, TriMesh, gen_hemisphere, stereographic_project


@pytest.fixture
def square_mesh():
    """Two right triangles tiling the unit square, oriented consistently."""
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    faces = np.array([[0, 1, 2], [0, 2, 3]])
    return TriMesh(vertices, faces)


@pytest.fixture(scope="session")
def hemi_paper():
    """The n=8, m=27 hemisphere (the illustration resolution)."""
    return gen_hemisphere(HemisphereSpec.from_counts(8, 27))


@pytest.fixture(scope="session")
def hemi_small():
    """Coarse n=8 member of the slowly-thinning family."""
    return gen_hemisphere(HemisphereSpec.from_exponent(8, 11 / 12))


def planar_disk_mesh(n=8, m=12):
    """Planar disk mesh: the hemisphere flattened by its exact projection."""
    hemi = gen_hemisphere(HemisphereSpec.from_counts(n, m))
    flat = stereographic_project(hemi.mesh.vertices)
    return TriMesh(flat, hemi.mesh.faces)


def random_triangle(rng, dim=2, scale=1.0, min_quality=1e-3):
    """Random non-degenerate triangle, resampled until area > quality * d^2."""
    while True:
        pts = rng.normal(size=(3, dim)) * scale
        u, w = pts[1] - pts[0], pts[2] - pts[0]
        gram = (u @ u) * (w @ w) - (u @ w) ** 2
        area = 0.5 * np.sqrt(max(gram, 0.0))
        edge = max(np.linalg.norm(pts[1] - pts[0]),
                   np.linalg.norm(pts[2] - pts[1]),
                   np.linalg.norm(pts[0] - pts[2]))
        if area > min_quality * edge**2:
            return pts
