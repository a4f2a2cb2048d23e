import math

import numpy as np
import pytest

from diskmap import (
    ConvergenceRow,
    HemisphereSpec,
    InsufficientData,
    MinimizerOptions,
    emit_report,
    fit_exponent,
    run_sweep,
    solve_hemisphere_case,
)

FAST = MinimizerOptions(gradient_tolerance=1e-6, max_iterations=1500)


def synthetic_row(h, err, **overrides):
    fields = dict(
        n=8,
        m=6,
        h=h,
        max_diam_over_sin=1.0,
        energy_solution=0.0,
        energy_reference=0.0,
        rel_error=err,
        iterations=10,
        fold_count=0,
        converged=True,
        wall_time=0.1,
    )
    fields.update(overrides)
    return ConvergenceRow(**fields)


class TestFitExponent:
    def test_exact_power_law(self):
        rows = [synthetic_row(h, 2.0 * h**1.5) for h in (0.8, 0.4, 0.2, 0.1)]
        fit = fit_exponent(rows)
        assert fit.exponent == pytest.approx(1.5, abs=1e-10)
        assert fit.coefficient == pytest.approx(2.0, rel=1e-10)
        assert fit.rows_used == 4

    def test_multiplicative_noise(self):
        rng = np.random.default_rng(0)
        hs = np.geomspace(1.0, 0.05, 12)
        rows = [
            synthetic_row(h, 0.7 * h**1.2 * (1.0 + rng.normal(scale=0.01)))
            for h in hs
        ]
        fit = fit_exponent(rows)
        assert abs(fit.exponent - 1.2) <= 0.05

    def test_window_and_filters(self):
        rows = [synthetic_row(h, h) for h in (0.8, 0.4, 0.2, 0.1)]
        rows.append(synthetic_row(0.05, 1e9, converged=False))
        rows.append(synthetic_row(0.025, 1e9, fold_count=3))
        fit = fit_exponent(rows)
        assert fit.rows_used == 4
        assert fit.exponent == pytest.approx(1.0, abs=1e-10)
        windowed = fit_exponent(rows, h_window=(0.15, 0.9))
        assert windowed.rows_used == 3

    def test_insufficient_rows(self):
        rows = [synthetic_row(0.5, 0.1), synthetic_row(0.25, 0.05)]
        with pytest.raises(InsufficientData):
            fit_exponent(rows)


class TestSolveCase:
    def test_case_artifacts(self):
        case = solve_hemisphere_case(HemisphereSpec.from_exponent(8, 11 / 12), FAST)
        row = case.row
        assert row.n == 8 and row.m == 6
        assert row.converged
        assert row.rel_error < 0.05
        assert row.h > 0
        # minimizer cannot do worse than the reference at the same vertex set
        assert row.energy_solution <= row.energy_reference + 1e-10
        assert case.solution.shape == case.reference.shape

    def test_diagnostic_energy_match(self):
        # the initial guess lands in the right basin: its energy is the
        # right order of magnitude (recorded as a diagnostic)
        case = solve_hemisphere_case(HemisphereSpec.from_exponent(16, 11 / 12), FAST)
        start = case.report.energy_trace[0].conformal
        final = case.report.energy_trace[-1].conformal
        assert final <= start
        assert start < 50 * max(final, 1e-12)


class TestRunSweep:
    def test_validation(self):
        with pytest.raises(ValueError):
            run_sweep(11 / 12, [2, 4])
        with pytest.raises(ValueError):
            run_sweep(11 / 12, [8, 8])

    def test_small_sweep_trends(self):
        rows = run_sweep(11 / 12, [4, 6, 8], options=FAST)
        assert [row.n for row in rows] == [4, 6, 8]
        for row in rows:
            assert row.converged
            assert row.energy_solution <= row.energy_reference + 1e-10
            assert row.energy_reference >= 0  # area-ratio weights keep it so
        errs = [row.rel_error for row in rows]
        assert errs[0] > errs[-1]
        # both energy series shrink toward the conformal limit
        sols = [row.energy_solution for row in rows]
        refs = [row.energy_reference for row in rows]
        assert sols[0] > sols[-1] > 0
        assert refs[0] > refs[-1] > 0

    def test_parallel_matches_serial(self):
        serial = run_sweep(11 / 12, [4, 6], options=FAST)
        parallel = run_sweep(11 / 12, [4, 6], options=FAST, max_workers=2)
        for a, b in zip(serial, parallel):
            assert a.rel_error == b.rel_error
            assert a.energy_solution == b.energy_solution


class TestEmitReport:
    def test_empty_rows(self, tmp_path):
        paths = emit_report([], None, tmp_path / "run")
        lines = open(paths["sweep"]).read().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("n,m,h,")

    def test_row_count(self, tmp_path):
        rows = [synthetic_row(h, h) for h in (0.8, 0.4, 0.2, 0.1)]
        paths = emit_report(rows, fit_exponent(rows), tmp_path / "run")
        assert len(open(paths["sweep"]).read().splitlines()) == 5
        assert len(open(paths["error"]).read().splitlines()) == 4
        assert "exponent 1" in open(paths["fit"]).read()

    def test_deterministic_bytes(self, tmp_path):
        # identical invocations produce byte-identical deterministic files
        results = []
        for tag in ("a", "b"):
            rows = run_sweep(11 / 12, [4, 6, 8], options=FAST)
            paths = emit_report(rows, None, tmp_path / tag)
            results.append(
                (
                    open(paths["sweep"], "rb").read(),
                    open(paths["error"], "rb").read(),
                    open(paths["energy"], "rb").read(),
                )
            )
        assert results[0] == results[1]
