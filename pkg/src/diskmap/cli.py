"""Command-line front end.

Exit codes: 0 success, 1 numerical failure (a report is still written
when possible), 2 usage or I/O errors.  A ``--config`` file of
``key = value`` lines overrides flags; unknown keys are rejected.  The
``DISKMAP_OUTDIR`` environment variable sets the default output root.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .beltrami import read_boundary_csv, read_mu_csv, solve_beltrami
from .bounds import BoundsConfig, build_bound_report, quality_csv, quality_report, scan_degraded_faces
from .errors import DiskmapError
from .experiments import DEFAULT_N_GRID, emit_report, fit_exponent, run_sweep
from .harmonic import disk_initial_guess, face_nearest
from .hemisphere import HemisphereSpec, gen_hemisphere
from .laplacian import assemble_laplacian, dirichlet_energy
from .mesh import load_mesh, save_mesh
from .minimizer import MinimizerOptions, minimize

USAGE_ERROR = 2
NUMERICAL_ERROR = 1


def _out_root(args):
    root = args.out_dir or os.environ.get("DISKMAP_OUTDIR") or "."
    os.makedirs(root, exist_ok=True)
    return root


def _hemisphere_spec(args):
    if args.m is not None:
        return HemisphereSpec.from_counts(args.n, args.m)
    if args.r is not None:
        return HemisphereSpec.from_exponent(args.n, args.r)
    raise argparse.ArgumentTypeError("need either --m or --r with --n")


def _minimizer_options(args):
    return MinimizerOptions(
        max_iterations=args.max_iterations,
        gradient_tolerance=args.grad_tol,
        backtrack_factor=args.backtrack_factor,
        initial_step=args.initial_step,
        memory=args.memory,
        precondition=not args.no_precondition,
    )


def _write_map_csv(path, values):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("vertex,x,y\n")
        for i, (x, y) in enumerate(values):
            fh.write(f"{i},{x:.17g},{y:.17g}\n")


def cmd_gen(args):
    spec = _hemisphere_spec(args)
    hemi = gen_hemisphere(spec)
    save_mesh(hemi.mesh, args.out)
    print(f"wrote {args.out}: {hemi.mesh.num_vertices} vertices, {hemi.mesh.num_faces} faces")
    return 0


def _load_or_generate(args):
    """Either an OFF mesh (unit weights only) or a generated hemisphere."""
    if args.mesh is not None:
        mesh = load_mesh(args.mesh)
        return mesh, None
    hemi = gen_hemisphere(_hemisphere_spec(args))
    return hemi.mesh, hemi


def cmd_solve(args):
    mesh, hemi = _load_or_generate(args)
    if hemi is None:
        laplacian = assemble_laplacian(mesh, rho_mode="unit")
        source = face_nearest(mesh, mesh.vertices.mean(axis=0))
    else:
        laplacian = assemble_laplacian(
            mesh,
            rho_mode=args.rho,
            surface=hemi.surface,
            param_cells=hemi.param_cells,
            quad_order=args.quad_order,
        )
        source = face_nearest(mesh, np.array([0.0, 0.0, -1.0]))
    if args.source_face is not None:
        source = args.source_face
    init = disk_initial_guess(mesh, laplacian, source)
    report = minimize(mesh, laplacian, init, _minimizer_options(args))
    root = _out_root(args)
    _write_map_csv(os.path.join(root, "map.csv"), report.final_map)
    report.write_trace(os.path.join(root, "trace.csv"))
    final = report.energy_trace[-1]
    print(
        f"energy: dirichlet={final.dirichlet:.12g} area={final.area:.12g} "
        f"conformal={final.conformal:.12g}"
    )
    print(
        f"iterations={report.iterations} converged={report.converged} "
        f"folds={report.fold_count}"
    )
    return 0 if report.converged else NUMERICAL_ERROR


def cmd_quality(args):
    mesh, _ = _load_or_generate(args)
    quality = quality_report(mesh)
    flagged = scan_degraded_faces(mesh, args.short_ratio, args.near_equal)
    root = _out_root(args)
    path = os.path.join(root, "quality.csv")
    quality_csv(quality, path, flagged)
    print(
        f"max diam={quality.max_diam:.6g} max d/sin={quality.max_diam_over_sin:.6g} "
        f"degraded={len(flagged)}"
    )
    print(f"wrote {path}")
    return 0


def cmd_bounds(args):
    hemi = gen_hemisphere(_hemisphere_spec(args))
    mesh = hemi.mesh
    laplacian = assemble_laplacian(
        mesh,
        rho_mode=args.rho,
        surface=hemi.surface,
        param_cells=hemi.param_cells,
        quad_order=args.quad_order,
    )
    reference = hemi.reference_map()
    energy = dirichlet_energy(laplacian, reference)
    config = BoundsConfig.for_surface(hemi.surface, map_grad_lipschitz=args.cl)
    report = build_bound_report(
        mesh,
        hemi.param_tris,
        config,
        dirichlet_value=energy,
        certified_mask=~hemi.pole_faces,
    )
    root = _out_root(args)
    path = os.path.join(root, "bounds.csv")
    report.write_csv(path)
    print(
        f"factor_max={report.factor_max:.6g} offset_max={report.offset_max:.6g} "
        f"energy_error_bound={report.energy_error:.6g}"
    )
    print(f"wrote {path}")
    return 0


def cmd_converge(args):
    rows = run_sweep(
        args.r,
        args.n_list,
        options=_minimizer_options(args),
        rho_mode=args.rho,
        quad_order=args.quad_order,
        max_workers=args.threads,
    )
    fit = None
    try:
        fit = fit_exponent(rows)
    except DiskmapError:
        pass
    root = _out_root(args)
    run_dir = os.path.join(
        root,
        f"sweep_r{args.r:g}_n{args.n_list[0]}-{args.n_list[-1]}_{args.rho}",
    )
    paths = emit_report(rows, fit, run_dir)
    for row in rows:
        print(
            f"n={row.n} m={row.m} h={row.h:.4g} err={row.rel_error:.6g} "
            f"E={row.energy_solution:.6g} E_ref={row.energy_reference:.6g} "
            f"converged={row.converged}"
        )
    if fit is not None:
        print(f"fit exponent={fit.exponent:.4f} over {fit.rows_used} rows")
    print(f"wrote {paths['sweep']}")
    return 0 if all(r.converged for r in rows) else NUMERICAL_ERROR


def cmd_beltrami(args):
    mesh = load_mesh(args.mesh)
    mu = read_mu_csv(args.mu, mesh.num_faces)
    boundary = read_boundary_csv(args.boundary, mesh)
    solution = solve_beltrami(mesh, mu, boundary)
    root = _out_root(args)
    path = os.path.join(root, "beltrami.csv")
    _write_map_csv(path, solution)
    print(f"wrote {path}")
    return 0


def _add_hemisphere_args(p, require=False):
    p.add_argument("--n", type=int, help="latitude ring count", required=require)
    p.add_argument("--m", type=int, help="meridian count (overrides --r)")
    p.add_argument("--r", type=float, help="meridian exponent: m = max(3, floor(n^r))")


def _add_rho_args(p):
    p.add_argument(
        "--rho",
        choices=("unit", "quadrature", "analytic"),
        default="quadrature",
        help="area-ratio weight mode for generated surfaces",
    )
    p.add_argument("--quad-order", type=int, default=3, dest="quad_order")


def _add_minimizer_args(p):
    p.add_argument("--max-iterations", type=int, default=2000, dest="max_iterations")
    p.add_argument("--grad-tol", type=float, default=1e-6, dest="grad_tol")
    p.add_argument("--backtrack-factor", type=float, default=0.5, dest="backtrack_factor")
    p.add_argument("--initial-step", type=float, default=1.0, dest="initial_step")
    p.add_argument("--memory", type=int, default=10)
    p.add_argument("--no-precondition", action="store_true", dest="no_precondition")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="diskmap",
        description="discrete conformal disk maps with certified error bounds",
    )
    parser.add_argument("--version", action="version", version=f"diskmap {__version__}")
    parser.add_argument("--config", help="key = value file overriding flags")
    parser.add_argument("--out-dir", dest="out_dir", help="output directory root")
    parser.add_argument("--threads", type=int, default=1, help="parallel sweep workers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a hemisphere mesh as OFF")
    _add_hemisphere_args(p, require=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="harmonic init then disk minimization")
    p.add_argument("--mesh", help="OFF mesh path (unit weights)")
    _add_hemisphere_args(p)
    _add_rho_args(p)
    _add_minimizer_args(p)
    p.add_argument("--source-face", type=int, dest="source_face")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("quality", help="per-face shape diagnostics")
    p.add_argument("--mesh")
    _add_hemisphere_args(p)
    p.add_argument("--short-ratio", type=float, default=0.1, dest="short_ratio")
    p.add_argument("--near-equal", type=float, default=0.1, dest="near_equal")
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("bounds", help="per-face error bounds for a hemisphere")
    _add_hemisphere_args(p, require=True)
    _add_rho_args(p)
    p.add_argument("--cl", type=float, default=1.0, help="map-gradient Lipschitz constant")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("converge", help="resolution sweep against the exact flatten")
    p.add_argument("--r", type=float, required=True)
    p.add_argument(
        "--n-list",
        dest="n_list",
        type=lambda s: [int(x) for x in s.split(",")],
        default=list(DEFAULT_N_GRID),
        help="comma-separated ring counts",
    )
    _add_rho_args(p)
    _add_minimizer_args(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("beltrami", help="solve the per-face coefficient system")
    p.add_argument("--mesh", required=True)
    p.add_argument("--mu", required=True, help="CSV: face,mu1,mu2")
    p.add_argument("--boundary", required=True, help="CSV: vertex,x,y")
    p.set_defaults(func=cmd_beltrami)
    return parser


def _apply_config(args):
    """Overlay config-file values; the file wins over flags so a run
    manifest reproduces exactly."""
    path = args.config
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ValueError(f"{path}:{no}: expected 'key = value'")
            key, value = (part.strip() for part in body.split("=", 1))
            values[key.replace("-", "_")] = value
    known = vars(args)
    for key, raw in values.items():
        if key not in known:
            raise ValueError(f"{path}: unknown config key {key!r}")
        current = known[key]
        if isinstance(current, bool):
            known[key] = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            known[key] = int(raw)
        elif isinstance(current, float):
            known[key] = float(raw)
        elif isinstance(current, list):
            known[key] = [int(x) for x in raw.split(",")]
        else:
            known[key] = raw
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        return args.func(args)
    except (OSError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except DiskmapError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
