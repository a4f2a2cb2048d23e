import math

import numpy as np
import pytest

from diskmap import (
    DegenerateTriangle,
    HemisphereSpec,
    InvalidTopology,
    NearPole,
    ParseError,
    TriMesh,
    gen_hemisphere,
    load_mesh,
    save_mesh,
    stereographic_project,
    triangle_metrics,
)
from diskmap.mesh import face_metrics

from conftest import random_triangle


class TestTriangleMetrics:
    def test_equilateral(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
        geom = triangle_metrics(*pts)
        assert np.allclose(geom.angles, math.pi / 3, atol=1e-12)
        assert geom.area == pytest.approx(math.sqrt(3) / 4, abs=1e-14)
        assert np.allclose(geom.cotangents, 1 / math.sqrt(3), atol=1e-12)
        assert geom.inradius == pytest.approx(1 / (2 * math.sqrt(3)), abs=1e-14)
        assert geom.diameter == pytest.approx(1.0)

    def test_right_triangle(self):
        geom = triangle_metrics([0.0, 0.0], [1.0, 0.0], [0.0, 1.0])
        assert geom.area == pytest.approx(0.5, abs=1e-15)
        assert sorted(geom.angles) == pytest.approx(
            [math.pi / 4, math.pi / 4, math.pi / 2], abs=1e-12
        )
        assert geom.diameter == pytest.approx(math.sqrt(2))

    @pytest.mark.parametrize("dim", [2, 3])
    def test_area_matches_cross_product(self, dim):
        rng = np.random.default_rng(7)
        for _ in range(100):
            pts = random_triangle(rng, dim)
            geom = triangle_metrics(*pts)
            u, w = pts[1] - pts[0], pts[2] - pts[0]
            if dim == 2:
                expected = 0.5 * abs(u[0] * w[1] - u[1] * w[0])
            else:
                expected = 0.5 * np.linalg.norm(np.cross(u, w))
            assert geom.area == pytest.approx(expected, rel=1e-12)

    def test_angles_sum_to_pi(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            geom = triangle_metrics(*random_triangle(rng, 3))
            assert geom.angles.sum() == pytest.approx(math.pi, rel=1e-12)

    def test_area_consistent_across_corners(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            pts = random_triangle(rng, 2)
            geom = triangle_metrics(*pts)
            lij, ljk, lki = geom.edge_lengths
            # each corner: half product of adjacent edges times sine
            for corner, (la, lb) in enumerate([(lij, lki), (lij, ljk), (ljk, lki)]):
                area = 0.5 * la * lb * math.sin(geom.angles[corner])
                assert area == pytest.approx(geom.area, rel=1e-12)

    def test_inradius_and_diameter(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            pts = random_triangle(rng, 3)
            geom = triangle_metrics(*pts)
            assert geom.inradius == pytest.approx(
                2 * geom.area / geom.edge_lengths.sum(), rel=1e-12
            )
            assert geom.diameter == pytest.approx(geom.edge_lengths.max())
            assert geom.diameter / math.sin(geom.angles.min()) >= geom.diameter

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateTriangle):
            triangle_metrics([0.0, 0.0], [1.0, 0.0], [2.0, 1e-16])

    def test_normal_is_unit_and_right_handed(self):
        geom = triangle_metrics([0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0])
        assert np.allclose(geom.normal, [0, 0, 1])


class TestTriMesh:
    def test_square_boundary(self, square_mesh):
        assert square_mesh.num_vertices == 4
        assert len(square_mesh.boundary_edges) == 4
        assert not square_mesh.is_boundary_edge(0, 2)
        assert square_mesh.is_boundary_edge(0, 1)
        assert square_mesh.boundary_loops() == [[0, 1, 2, 3]]
        assert len(square_mesh.interior_vertices()) == 0

    def test_bad_index_rejected(self):
        with pytest.raises(InvalidTopology):
            TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 5]])

    def test_repeated_vertex_rejected(self):
        with pytest.raises(InvalidTopology):
            TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 1]])

    def test_overfull_edge_rejected(self):
        verts = [[0, 0], [1, 0], [0, 1], [1, 1], [-1, 1]]
        faces = [[0, 1, 2], [0, 2, 3], [0, 2, 4]]
        with pytest.raises(InvalidTopology):
            TriMesh(verts, faces)

    def test_inconsistent_orientation_rejected(self):
        verts = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]
        faces = [[0, 1, 2], [0, 2, 3]]
        TriMesh(verts, faces)  # consistent
        with pytest.raises(InvalidTopology):
            TriMesh(verts, [[0, 1, 2], [0, 3, 2]])


class TestHemisphere:
    def test_paper_resolution_counts(self, hemi_paper):
        assert hemi_paper.mesh.num_vertices == 217
        assert hemi_paper.mesh.num_faces == 27 * (2 * 8 - 1)

    def test_spec_invariants(self):
        spec = HemisphereSpec.from_counts(5, 9)
        assert spec.vertex_count == 46
        with pytest.raises(ValueError):
            HemisphereSpec.from_counts(5, 2)
        with pytest.raises(ValueError):
            HemisphereSpec.from_counts(1, 9)
        assert HemisphereSpec.from_exponent(8, 0.25).m == 3  # floored

    def test_pole_edge_lengths(self, hemi_paper):
        n, m = 8, 27
        mesh = hemi_paper.mesh
        pole_faces = mesh.faces[hemi_paper.pole_faces]
        expected_side = 2 * math.sin(math.pi / (4 * n))
        expected_base = 2 * math.sin(math.pi / m) * math.cos((n - 1) * math.pi / (2 * n))
        for i, j, k in pole_faces:
            assert i == 0
            side1 = np.linalg.norm(mesh.vertices[0] - mesh.vertices[j])
            side2 = np.linalg.norm(mesh.vertices[0] - mesh.vertices[k])
            base = np.linalg.norm(mesh.vertices[j] - mesh.vertices[k])
            assert side1 == pytest.approx(expected_side, rel=1e-12)
            assert side2 == pytest.approx(expected_side, rel=1e-12)
            assert base == pytest.approx(expected_base, rel=1e-12)

    def test_ring_edge_lengths(self, hemi_paper):
        n, m = 8, 27
        mesh = hemi_paper.mesh
        # same-ring neighbours on ring j are 2 sin(pi/m) cos(j pi / 2n) apart
        for j in (0, 3, n - 1):
            a = 1 + j * m
            b = 1 + j * m + 1
            length = np.linalg.norm(mesh.vertices[a] - mesh.vertices[b])
            expected = 2 * math.sin(math.pi / m) * math.cos(j * math.pi / (2 * n))
            assert length == pytest.approx(expected, rel=1e-12)

    def test_watertight(self, hemi_paper):
        mesh = hemi_paper.mesh
        m = hemi_paper.spec.m
        assert len(mesh.boundary_edges) == m
        equator = set(range(1, m + 1))
        for a, b in mesh.boundary_edges:
            assert a in equator and b in equator

    def test_area_sum_converges_to_hemisphere(self):
        areas = []
        for n in (4, 8, 16):
            hemi = gen_hemisphere(HemisphereSpec.from_counts(n, 2 * n))
            total = sum(g.area for g in face_metrics(hemi.mesh))
            areas.append(total)
        target = 2 * math.pi
        assert areas[0] < areas[1] < areas[2] < target
        assert target - areas[2] < target - areas[0]

    def test_vertices_project_into_disk(self, hemi_paper):
        flat = stereographic_project(hemi_paper.mesh.vertices)
        assert np.linalg.norm(flat, axis=1).max() <= 1 + 1e-12

    def test_param_cells_cover_chart(self, hemi_paper):
        # pole faces carry the wedge rectangle, others their own triangle
        for cell, is_pole in zip(hemi_paper.param_cells, hemi_paper.pole_faces):
            assert cell.shape == ((4, 2) if is_pole else (3, 2))

    def test_surface_gradient_matches_finite_differences(self, hemi_small):
        surface = hemi_small.surface
        rng = np.random.default_rng(3)
        h = 1e-6
        for _ in range(20):
            w = np.array(
                [rng.uniform(0, 2 * math.pi), rng.uniform(math.pi / 2 + 0.05, math.pi - 0.05)]
            )
            grad = surface.gradient(w)
            for col, e in enumerate(np.eye(2)):
                fd = (surface.position(w + h * e) - surface.position(w - h * e)) / (2 * h)
                assert np.linalg.norm(fd - grad[:, col]) <= 1e-5 * max(
                    1.0, np.linalg.norm(grad[:, col])
                )
        assert surface.sigma_min > 0


class TestStereographic:
    def test_south_pole_to_center(self):
        assert np.allclose(stereographic_project(np.array([0.0, 0, -1])), [0, 0])

    def test_equator_to_unit_circle(self):
        assert np.allclose(stereographic_project(np.array([1.0, 0, 0])), [1, 0])
        point = np.array([math.cos(0.7), math.sin(0.7), 0.0])
        assert np.linalg.norm(stereographic_project(point)) == pytest.approx(1.0)

    def test_meridian_point_value(self):
        psi = 3 * math.pi / 4
        point = np.array([0.0, -math.sin(psi), math.cos(psi)])
        image = stereographic_project(point)
        assert image[0] == pytest.approx(0.0, abs=1e-15)
        assert image[1] == pytest.approx(-math.sin(psi) / (1 - math.cos(psi)))
        # radius identity: |image| = tan(psi/2 - pi/4) on this meridian
        assert np.linalg.norm(image) == pytest.approx(math.tan(psi / 2 - math.pi / 4))

    def test_near_pole_rejected(self):
        with pytest.raises(NearPole):
            stereographic_project(np.array([0.0, 0.0, 1.0]))

    def test_off_sphere_rejected(self):
        with pytest.raises(ValueError):
            stereographic_project(np.array([0.5, 0.0, 0.0]))


class TestOffIO:
    def test_single_triangle(self, tmp_path):
        path = tmp_path / "tri.off"
        path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
        mesh = load_mesh(path)
        assert mesh.num_vertices == 3
        assert mesh.num_faces == 1
        assert len(mesh.boundary_edges) == 3

    def test_round_trip_exact(self, tmp_path, hemi_small):
        path = tmp_path / "hemi.off"
        save_mesh(hemi_small.mesh, path)
        back = load_mesh(path)
        assert np.array_equal(back.vertices, hemi_small.mesh.vertices)
        assert np.array_equal(back.faces, hemi_small.mesh.faces)
        # bit stability under a second round trip
        path2 = tmp_path / "hemi2.off"
        save_mesh(back, path2)
        assert path.read_text() == path2.read_text()

    def test_hemisphere_face_count_formula(self, tmp_path):
        n, m = 4, 8
        hemi = gen_hemisphere(HemisphereSpec.from_counts(n, m))
        path = tmp_path / "h.off"
        save_mesh(hemi.mesh, path)
        assert load_mesh(path).num_faces == m * (2 * n - 1)

    def test_parse_errors_carry_line_numbers(self, tmp_path):
        path = tmp_path / "bad.off"
        path.write_text("OFX\n")
        with pytest.raises(ParseError) as excinfo:
            load_mesh(path)
        assert excinfo.value.line == 1

        path.write_text("OFF\n3 1 0\n0 0 0\n1 0 x\n0 1 0\n3 0 1 2\n")
        with pytest.raises(ParseError) as excinfo:
            load_mesh(path)
        assert excinfo.value.line == 4

        path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2\n")
        with pytest.raises(ParseError):
            load_mesh(path)

    def test_invalid_topology_detected(self, tmp_path):
        path = tmp_path / "bad.off"
        path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 1\n")
        with pytest.raises(InvalidTopology):
            load_mesh(path)
