"""Hemisphere convergence studies: sweep mesh resolutions, solve for the
disk map, compare against the exact stereographic flatten, and fit the
error-versus-mesh-size exponent.

The solver's gauge is arbitrary up to a rotation or reflection, so the
recorded relative error is measured after the optimal orthogonal
alignment.  Report files are byte-stable for fixed inputs; wall times are
kept on the rows but never written into the deterministic outputs.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import quality_report
from .errors import DiskmapError, InsufficientData
from .harmonic import disk_initial_guess, face_nearest
from .hemisphere import HemisphereMesh, HemisphereSpec, gen_hemisphere
from .laplacian import assemble_laplacian, conformal_energy
from .minimizer import MinimizerOptions, SolveReport, minimize, normalize_map, relative_error

SOUTH_POLE = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True)
class ConvergenceRow:
    """One resolution of a sweep."""

    n: int
    m: int
    h: float
    max_diam_over_sin: float
    energy_solution: float
    energy_reference: float
    rel_error: float
    iterations: int
    fold_count: int
    converged: bool
    wall_time: float

    CSV_FIELDS = (
        "n",
        "m",
        "h",
        "max_diam_over_sin",
        "energy_solution",
        "energy_reference",
        "rel_error",
        "iterations",
        "fold_count",
        "converged",
    )

    def csv_values(self):
        return [
            self.n,
            self.m,
            f"{self.h:.17g}",
            f"{self.max_diam_over_sin:.17g}",
            f"{self.energy_solution:.17g}",
            f"{self.energy_reference:.17g}",
            f"{self.rel_error:.17g}",
            self.iterations,
            self.fold_count,
            int(self.converged),
        ]


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through (log h, log error)."""

    exponent: float
    coefficient: float
    residual: float
    rows_used: int


@dataclass
class CaseResult:
    """Full artifacts of one hemisphere solve (row plus raw objects)."""

    row: ConvergenceRow
    hemisphere: HemisphereMesh
    report: SolveReport
    solution: np.ndarray
    reference: np.ndarray


def solve_hemisphere_case(
    spec: HemisphereSpec,
    options: MinimizerOptions | None = None,
    rho_mode: str = "quadrature",
    quad_order: int = 3,
) -> CaseResult:
    """Generate, assemble, initialize, minimize, and compare one mesh."""
    start = time.perf_counter()
    hemi = gen_hemisphere(spec)
    mesh = hemi.mesh
    laplacian = assemble_laplacian(
        mesh,
        rho_mode=rho_mode,
        surface=hemi.surface,
        param_cells=hemi.param_cells,
        quad_order=quad_order,
    )
    init = disk_initial_guess(mesh, laplacian, face_nearest(mesh, SOUTH_POLE))
    report = minimize(mesh, laplacian, init, options)
    reference = hemi.reference_map()
    aligned = normalize_map(report.final_map, reference)
    err = relative_error(aligned, reference)
    quality = quality_report(mesh)
    energy_ref = conformal_energy(mesh, laplacian, reference).conformal
    elapsed = time.perf_counter() - start
    row = ConvergenceRow(
        n=spec.n,
        m=spec.m,
        h=quality.max_diam,
        max_diam_over_sin=quality.max_diam_over_sin,
        energy_solution=report.energy_trace[-1].conformal,
        energy_reference=energy_ref,
        rel_error=err,
        iterations=report.iterations,
        fold_count=report.fold_count,
        converged=report.converged,
        wall_time=elapsed,
    )
    return CaseResult(
        row=row, hemisphere=hemi, report=report, solution=aligned, reference=reference
    )


def run_sweep(
    r: float,
    n_values,
    options: MinimizerOptions | None = None,
    rho_mode: str = "quadrature",
    quad_order: int = 3,
    max_workers: int = 1,
) -> list[ConvergenceRow]:
    """Solve the m = max(3, floor(n^r)) family over increasing n.

    A failed solve records its row with ``converged`` False instead of
    aborting the sweep.  Rows come back in input order regardless of the
    worker count, so the output is deterministic.
    """
    n_values = [int(n) for n in n_values]
    if any(n < 4 for n in n_values):
        raise ValueError("sweep requires n >= 4")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("sweep requires strictly increasing n values")

    def one(n):
        spec = HemisphereSpec.from_exponent(n, r)
        try:
            return solve_hemisphere_case(spec, options, rho_mode, quad_order).row
        except DiskmapError:
            return ConvergenceRow(
                n=spec.n,
                m=spec.m,
                h=math.nan,
                max_diam_over_sin=math.nan,
                energy_solution=math.nan,
                energy_reference=math.nan,
                rel_error=math.nan,
                iterations=0,
                fold_count=0,
                converged=False,
                wall_time=0.0,
            )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(one, n_values))
    else:
        rows = [one(n) for n in n_values]
    return rows


DEFAULT_N_GRID = (8, 12, 16, 24, 32, 48, 64)


def fit_exponent(rows, h_window=None) -> FitResult:
    """Ordinary least squares on (log h, log rel_error).

    Rows with folds, without convergence, with zero error, or outside the
    optional (h_min, h_max) window are dropped; at least 3 must survive.
    """
    pts = []
    for row in rows:
        if not row.converged or row.fold_count > 0:
            continue
        if not math.isfinite(row.rel_error) or row.rel_error <= 0:
            continue
        if h_window is not None and not (h_window[0] <= row.h <= h_window[1]):
            continue
        pts.append((math.log(row.h), math.log(row.rel_error)))
    if len(pts) < 3:
        raise InsufficientData(f"only {len(pts)} usable rows for the fit")
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    return FitResult(
        exponent=float(slope),
        coefficient=float(math.exp(intercept)),
        residual=float(np.sqrt(np.mean(resid**2))),
        rows_used=len(pts),
    )


def emit_report(rows, fit: FitResult | None, out_dir) -> dict[str, str]:
    """Write the sweep CSV and plot-data files into `out_dir`.

    Outputs are byte-stable for fixed row values: the volatile wall times
    are written to a separate timing log that is excluded from the
    deterministic set.  Returns the written paths keyed by kind.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    sweep_path = os.path.join(out_dir, "sweep.csv")
    with open(sweep_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ConvergenceRow.CSV_FIELDS)
        for row in rows:
            writer.writerow(row.csv_values())
    paths["sweep"] = sweep_path

    err_path = os.path.join(out_dir, "error_vs_h.dat")
    with open(err_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(f"{row.h:.17g} {row.rel_error:.17g}\n")
    paths["error"] = err_path

    energy_path = os.path.join(out_dir, "energy_vs_h.dat")
    with open(energy_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(
                f"{row.h:.17g} {row.energy_solution:.17g} {row.energy_reference:.17g}\n"
            )
    paths["energy"] = energy_path

    if fit is not None:
        fit_path = os.path.join(out_dir, "fit.txt")
        with open(fit_path, "w", encoding="utf-8") as fh:
            fh.write(
                f"exponent {fit.exponent:.17g}\ncoefficient {fit.coefficient:.17g}\n"
                f"residual {fit.residual:.17g}\nrows_used {fit.rows_used}\n"
            )
        paths["fit"] = fit_path

    timing_path = os.path.join(out_dir, "timing.log")
    with open(timing_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(f"n={row.n} m={row.m} wall_time={row.wall_time:.3f}s\n")
    paths["timing"] = timing_path
    return paths
