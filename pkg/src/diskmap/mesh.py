"""Triangle mesh container, per-triangle metric data, and OFF file I/O.

The mesh is an oriented manifold triangle surface with boundary, embedded
in R^m for m >= 2.  Vertices and faces are immutable numpy arrays; all
derived connectivity (edges, boundary) is computed once at construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTriangle, InvalidTopology, ParseError

# A face is rejected when its area falls below this fraction of diameter^2.
DEGENERACY_THRESHOLD = 1e-14


class TriMesh:
    """Oriented triangle mesh in R^m (m >= 2).

    Parameters
    ----------
    vertices : array_like, shape (N, m)
        Vertex coordinates, m >= 2.
    faces : array_like, shape (F, 3)
        Ordered vertex index triples.  All faces must share a consistent
        orientation: every interior edge is traversed in opposite
        directions by its two adjacent faces.

    Attributes
    ----------
    vertices : ndarray, shape (N, m)
    faces : ndarray, shape (F, 3)
    boundary_edges : ndarray, shape (B, 2)
        Undirected boundary edges as sorted index pairs (edges with
        exactly one adjacent face).
    boundary_vertices : ndarray
        Sorted indices of vertices on the boundary.
    """

    def __init__(self, vertices, faces):
        v = np.asarray(vertices, dtype=float)
        f = np.asarray(faces, dtype=int)
        if v.ndim != 2 or v.shape[1] < 2:
            raise InvalidTopology("vertices must have shape (N, m) with m >= 2")
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise InvalidTopology("faces must have shape (F, 3)")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise InvalidTopology("face index out of range")
        if f.size and (
            (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
        ).any():
            raise InvalidTopology("face repeats a vertex")

        v.setflags(write=False)
        f.setflags(write=False)
        self.vertices = v
        self.faces = f
        self._build_edges()
        if self.ambient_dim == 2:
            self._check_planar_orientation()

    def _build_edges(self):
        seen: dict[tuple[int, int], list[tuple[int, int]]] = {}
        # Record each directed edge under its undirected key, in face order.
        for a, b in ((0, 1), (1, 2), (2, 0)):
            for i, j in zip(self.faces[:, a], self.faces[:, b]):
                key = (i, j) if i < j else (j, i)
                seen.setdefault(key, []).append((int(i), int(j)))
        boundary = []
        for key, directed in seen.items():
            if len(directed) > 2:
                raise InvalidTopology(f"edge {key} belongs to {len(directed)} faces")
            if len(directed) == 2 and directed[0] == directed[1]:
                raise InvalidTopology(f"inconsistent orientation across edge {key}")
            if len(directed) == 1:
                boundary.append(key)
        self._edge_faces = seen
        self.boundary_edges = np.array(sorted(boundary), dtype=int).reshape(-1, 2)
        self.boundary_vertices = np.unique(self.boundary_edges)
        self._boundary_set = {tuple(e) for e in self.boundary_edges}

    def _check_planar_orientation(self):
        p = self.vertices[self.faces]
        u, w = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        det = u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]
        if det.size and not ((det > 0).all() or (det < 0).all()):
            raise InvalidTopology("planar faces do not share one orientation sign")

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_faces(self):
        return len(self.faces)

    @property
    def ambient_dim(self):
        return self.vertices.shape[1]

    def is_boundary_edge(self, i, j):
        return (min(i, j), max(i, j)) in self._boundary_set

    def interior_vertices(self):
        """Indices of vertices not on the boundary."""
        mask = np.ones(self.num_vertices, dtype=bool)
        mask[self.boundary_vertices] = False
        return np.nonzero(mask)[0]

    def boundary_loops(self):
        """Boundary cycles as vertex index lists, following face orientation."""
        succ = {}
        for a, b in ((0, 1), (1, 2), (2, 0)):
            for i, j in zip(self.faces[:, a], self.faces[:, b]):
                key = (min(i, j), max(i, j))
                if key in self._boundary_set:
                    succ[int(i)] = int(j)
        loops = []
        remaining = dict(succ)
        while remaining:
            start = min(remaining)
            loop = [start]
            cur = remaining.pop(start)
            while cur != start:
                loop.append(cur)
                cur = remaining.pop(cur)
            loops.append(loop)
        return loops

    def face_points(self, index):
        """The three vertex positions of face `index`."""
        i, j, k = self.faces[index]
        return self.vertices[i], self.vertices[j], self.vertices[k]


@dataclass(frozen=True)
class TriangleGeom:
    """Metric data of one triangle.

    ``edge_lengths`` holds (|vi-vj|, |vj-vk|, |vk-vi|); ``angles`` and
    ``cotangents`` are ordered by the corner they live at, (at_i, at_j,
    at_k), so ``angles[0]`` is the angle opposite the jk edge and so on.
    ``normal`` is the right-handed unit normal of the vertex order for
    3-d triangles and None in 2-d; ``orientation`` is the signed-area
    sign for 2-d triangles and +1 in 3-d.
    """

    edge_lengths: np.ndarray
    angles: np.ndarray
    cotangents: np.ndarray
    area: float
    diameter: float
    inradius: float
    normal: np.ndarray | None
    orientation: int


def triangle_metrics(v_i, v_j, v_k) -> TriangleGeom:
    """Compute :class:`TriangleGeom` for the triangle (v_i, v_j, v_k).

    Cotangents come from dot and cross products directly, never by
    taking an angle and re-evaluating trig functions.

    Raises
    ------
    DegenerateTriangle
        If area < 1e-14 * diameter^2.
    """
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    v_k = np.asarray(v_k, dtype=float)

    lengths = np.array(
        [
            np.linalg.norm(v_i - v_j),
            np.linalg.norm(v_j - v_k),
            np.linalg.norm(v_k - v_i),
        ]
    )
    diameter = float(lengths.max())

    # One corner pair suffices for the area; the cross norm is shared.
    u, w = v_j - v_i, v_k - v_i
    gram = (u @ u) * (w @ w) - (u @ w) ** 2
    double_area = float(np.sqrt(max(gram, 0.0)))
    area = 0.5 * double_area
    if area < DEGENERACY_THRESHOLD * diameter**2 or diameter == 0.0:
        raise DegenerateTriangle(f"area {area:.3e} below threshold for d={diameter:.3e}")

    dots = np.array(
        [
            (v_j - v_i) @ (v_k - v_i),
            (v_k - v_j) @ (v_i - v_j),
            (v_i - v_k) @ (v_j - v_k),
        ]
    )
    cots = dots / double_area
    angles = np.arctan2(double_area, dots)

    perimeter = float(lengths.sum())
    inradius = 2.0 * area / perimeter

    if v_i.shape[0] == 3:
        n = np.cross(v_j - v_i, v_k - v_i)
        normal = n / np.linalg.norm(n)
        orientation = 1
    else:
        normal = None
        orientation = 1 if u[0] * w[1] - u[1] * w[0] > 0 else -1

    return TriangleGeom(
        edge_lengths=lengths,
        angles=angles,
        cotangents=cots,
        area=area,
        diameter=diameter,
        inradius=inradius,
        normal=normal,
        orientation=orientation,
    )


def face_metrics(mesh: TriMesh):
    """List of TriangleGeom, one per face."""
    return [triangle_metrics(*mesh.face_points(t)) for t in range(mesh.num_faces)]


def load_mesh(path) -> TriMesh:
    """Read an OFF file.

    Accepts the minimal grammar: an ``OFF`` header line, a counts line
    ``nv nf ne``, nv vertex lines with 3 coordinates, nf face lines
    ``3 i j k``.  Blank lines and ``#`` comments are skipped.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.readlines()

    tokens = []  # (line_number, split fields)
    for no, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.append((no, body.split()))

    if not tokens:
        raise ParseError("empty file")
    no, fields = tokens[0]
    if fields != ["OFF"]:
        raise ParseError("expected OFF header", line=no)
    if len(tokens) < 2:
        raise ParseError("missing counts line", line=no)
    no, fields = tokens[1]
    if len(fields) != 3:
        raise ParseError("counts line must have three integers", line=no)
    try:
        nv, nf, _ = (int(x) for x in fields)
    except ValueError:
        raise ParseError("counts line must have three integers", line=no) from None

    body = tokens[2:]
    if len(body) != nv + nf:
        raise ParseError(
            f"expected {nv} vertex and {nf} face lines, found {len(body)}",
            line=body[-1][0] if body else no,
        )

    verts = np.empty((nv, 3))
    for r in range(nv):
        no, fields = body[r]
        if len(fields) != 3:
            raise ParseError("vertex line must have three coordinates", line=no)
        try:
            verts[r] = [float(x) for x in fields]
        except ValueError:
            raise ParseError("bad vertex coordinate", line=no) from None

    faces = np.empty((nf, 3), dtype=int)
    for r in range(nf):
        no, fields = body[nv + r]
        if len(fields) != 4 or fields[0] != "3":
            raise ParseError("face line must read '3 i j k'", line=no)
        try:
            faces[r] = [int(x) for x in fields[1:]]
        except ValueError:
            raise ParseError("bad face index", line=no) from None

    return TriMesh(verts, faces)


def save_mesh(mesh: TriMesh, path):
    """Write an OFF file with 17 significant digits (exact round trip).

    2-d meshes are written with a zero third coordinate.
    """
    v = mesh.vertices
    if v.shape[1] == 2:
        v = np.column_stack([v, np.zeros(len(v))])
    lines = ["OFF", f"{mesh.num_vertices} {mesh.num_faces} 0"]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in v]
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.faces]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
