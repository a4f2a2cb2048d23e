import math

import numpy as np
import pytest

from diskmap import (
    DimensionMismatch,
    HemisphereSpec,
    MinimizerOptions,
    ZeroReference,
    assemble_laplacian,
    conformal_energy,
    energy_gradient,
    gen_hemisphere,
    minimize,
    normalize_map,
    relative_error,
)

from conftest import planar_disk_mesh


def hemi_with_laplacian(n, r=11 / 12, rho="quadrature"):
    hemi = gen_hemisphere(HemisphereSpec.from_exponent(n, r))
    lap = assemble_laplacian(
        hemi.mesh, rho_mode=rho, surface=hemi.surface, param_cells=hemi.param_cells
    )
    return hemi, lap


class TestEnergyGradient:
    def test_constant_map_has_zero_gradient(self, square_mesh):
        lap = assemble_laplacian(square_mesh)
        f = np.tile([0.3, 0.8], (4, 1))
        assert np.abs(energy_gradient(square_mesh, lap, f)).max() <= 1e-14

    def test_identity_is_critical_on_planar_disk(self):
        mesh = planar_disk_mesh(8, 12)
        lap = assemble_laplacian(mesh)
        grad = energy_gradient(mesh, lap, mesh.vertices)
        # identity attains the zero lower bound, so the full gradient
        # vanishes, interior rows exactly
        interior = mesh.interior_vertices()
        assert np.abs(grad[interior]).max() <= 1e-10
        assert np.abs(grad).max() <= 1e-9

    def test_matches_finite_differences(self):
        hemi, lap = hemi_with_laplacian(6, 11 / 12)
        mesh = hemi.mesh
        rng = np.random.default_rng(0)
        step = 1e-6
        for _ in range(50):
            f = rng.normal(size=(mesh.num_vertices, 2))
            grad = energy_gradient(mesh, lap, f)
            for _ in range(3):
                v = rng.integers(0, mesh.num_vertices)
                c = rng.integers(0, 2)
                fp, fm = f.copy(), f.copy()
                fp[v, c] += step
                fm[v, c] -= step
                fd = (
                    conformal_energy(mesh, lap, fp).conformal
                    - conformal_energy(mesh, lap, fm).conformal
                ) / (2 * step)
                scale = max(1.0, abs(grad[v, c]))
                assert abs(grad[v, c] - fd) <= 1e-5 * scale

    def test_dimension_mismatch(self, square_mesh):
        lap = assemble_laplacian(square_mesh)
        with pytest.raises(DimensionMismatch):
            energy_gradient(square_mesh, lap, np.zeros((2, 2)))


class TestMinimize:
    def test_planar_identity_converges_immediately(self):
        mesh = planar_disk_mesh(8, 12)
        lap = assemble_laplacian(mesh)
        report = minimize(mesh, lap, mesh.vertices, MinimizerOptions(gradient_tolerance=1e-6))
        assert report.converged
        assert report.iterations <= 1
        assert abs(report.energy_trace[-1].conformal) <= 1e-9

    def test_reference_init_dominance(self):
        hemi, lap = hemi_with_laplacian(16)
        reference = hemi.reference_map()
        report = minimize(hemi.mesh, lap, reference)
        start = conformal_energy(hemi.mesh, lap, reference).conformal
        assert report.energy_trace[-1].conformal <= start + 1e-12
        assert report.converged

    def test_monotone_energy_and_feasibility(self):
        hemi, lap = hemi_with_laplacian(8)
        reference = hemi.reference_map()
        report = minimize(hemi.mesh, lap, reference)
        energies = [e.conformal for e in report.energy_trace]
        assert all(b <= a + 1e-15 for a, b in zip(energies, energies[1:]))
        radii = np.linalg.norm(report.final_map[hemi.mesh.boundary_vertices], axis=1)
        assert np.abs(radii - 1.0).max() <= 1e-12

    def test_dominance_from_any_feasible_init(self):
        hemi, lap = hemi_with_laplacian(8)
        mesh = hemi.mesh
        rng = np.random.default_rng(1)
        init = rng.normal(scale=0.3, size=(mesh.num_vertices, 2))
        boundary = mesh.boundary_vertices
        angles = np.linspace(0, 2 * math.pi, len(boundary), endpoint=False)
        init[boundary] = np.column_stack([np.cos(angles), np.sin(angles)])
        start = conformal_energy(mesh, lap, init).conformal
        report = minimize(mesh, lap, init)
        assert report.energy_trace[-1].conformal <= start + 1e-12

    def test_boundary_far_from_circle_rejected(self):
        hemi, lap = hemi_with_laplacian(8)
        bad = hemi.reference_map() * 1.5
        with pytest.raises(ValueError):
            minimize(hemi.mesh, lap, bad)

    def test_zero_iteration_budget(self):
        hemi, lap = hemi_with_laplacian(8)
        reference = hemi.reference_map()
        report = minimize(
            hemi.mesh, lap, reference, MinimizerOptions(max_iterations=0)
        )
        assert not report.converged
        assert report.iterations == 0
        assert len(report.energy_trace) == 1

    def test_plain_descent_matches_preconditioned(self):
        # same minimum through the un-preconditioned path
        hemi, lap = hemi_with_laplacian(6)
        reference = hemi.reference_map()
        fast = minimize(hemi.mesh, lap, reference)
        slow = minimize(
            hemi.mesh,
            lap,
            reference,
            MinimizerOptions(precondition=False, max_iterations=4000),
        )
        assert fast.energy_trace[-1].conformal == pytest.approx(
            slow.energy_trace[-1].conformal, abs=1e-6
        )

    def test_deterministic(self):
        hemi, lap = hemi_with_laplacian(8)
        reference = hemi.reference_map()
        a = minimize(hemi.mesh, lap, reference)
        b = minimize(hemi.mesh, lap, reference)
        assert np.array_equal(a.final_map, b.final_map)
        assert a.iterations == b.iterations

    def test_trace_csv(self, tmp_path):
        hemi, lap = hemi_with_laplacian(8)
        report = minimize(hemi.mesh, lap, hemi.reference_map())
        path = tmp_path / "trace.csv"
        report.write_trace(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "iteration,dirichlet,area,conformal,grad_norm,folds"
        assert len(lines) == len(report.energy_trace) + 1


class TestNormalizeMap:
    def test_recovers_rotation(self):
        rng = np.random.default_rng(2)
        ref = rng.normal(size=(40, 2))
        angle = 1.1
        rot = np.array(
            [[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]]
        )
        assert np.allclose(normalize_map(ref @ rot.T, ref), ref, atol=1e-12)

    def test_recovers_reflection(self):
        rng = np.random.default_rng(3)
        ref = rng.normal(size=(40, 2))
        flipped = ref * np.array([1.0, -1.0])
        assert np.allclose(normalize_map(flipped, ref), ref, atol=1e-12)

    def test_optimal_over_angle_scan(self):
        rng = np.random.default_rng(4)
        ref = rng.normal(size=(30, 2))
        noisy = ref + rng.normal(scale=0.05, size=ref.shape)
        aligned = normalize_map(noisy, ref)
        best = np.linalg.norm(aligned - ref)
        for angle in np.arange(0.0, 2 * math.pi, 1e-4):
            rot = np.array(
                [[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]]
            )
            for sign in (1.0, -1.0):
                cand = noisy @ (rot * np.array([1.0, sign])).T
                assert best <= np.linalg.norm(cand - ref) + 1e-9

    def test_alignment_never_hurts(self):
        rng = np.random.default_rng(5)
        ref = rng.normal(size=(25, 2))
        noisy = ref + rng.normal(scale=0.1, size=ref.shape)
        aligned = normalize_map(noisy, ref)
        assert np.linalg.norm(aligned - ref) <= np.linalg.norm(noisy - ref) + 1e-12


class TestRelativeError:
    def test_zero_for_identical(self):
        f = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert relative_error(f, f) == 0.0

    def test_doubled_map(self):
        rng = np.random.default_rng(6)
        f = rng.normal(size=(10, 2))
        assert relative_error(2 * f, f) == pytest.approx(1.0, rel=1e-12)

    def test_single_vertex_offset(self):
        rng = np.random.default_rng(7)
        ref = rng.normal(size=(10, 2))
        f = ref.copy()
        f[3, 0] += 1.0
        assert relative_error(f, ref) == pytest.approx(
            1.0 / np.linalg.norm(ref), rel=1e-12
        )

    def test_zero_reference_rejected(self):
        with pytest.raises(ZeroReference):
            relative_error(np.ones((3, 2)), np.zeros((3, 2)))
