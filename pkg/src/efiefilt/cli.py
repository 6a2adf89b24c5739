"""Command-line interface.

Verbs:
    mesh gen-sphere   write an icosphere OFF file
    mesh gen-body     write the bundled non-spherical test body
    run cond-freq     condition number vs frequency (Fig.-1-style study)
    run cond-h        condition number vs refinement (Fig.-2-style study)
    run scatter       one scattering solve with iteration reporting
    run rcs-check     sphere solve validated against the Mie series
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import matio
from .assembly import assemble_operators
from .experiments import (
    ExperimentConfig,
    cond_vs_frequency,
    cond_vs_refinement,
    rcs_check,
    scattering_run,
)
from .loopstar import build_maps
from .mesh import generate_icosphere, generate_wing_body, load_mesh, write_off
from .quadrature import ALLOWED_ORDERS, QuadratureConfig
from .rwg import PhysicsParams, RwgSpace


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--quad-order", type=int, default=7, choices=ALLOWED_ORDERS,
                   help="Gauss points per triangle")
    p.add_argument("--filter-sharpness", type=int, default=2,
                   help="filter exponent n (even, >= 2)")
    p.add_argument("--filter-tol", type=float, default=1e-10,
                   help="inner CG tolerance of the spectral filters")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="solver relative residual tolerance")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--bands-override", type=int, default=None,
                   help="force the top filter band index")
    p.add_argument("--estimate", action="store_true",
                   help="Lanczos condition estimates instead of dense SVD")
    p.add_argument("--timing", action="store_true",
                   help="include wall times in the CSV (breaks byte determinism)")
    p.add_argument("--dump-operators", metavar="DIR", default=None,
                   help="write ta.bin/tphi.bin/e.bin containers here")
    p.add_argument("--dump-sparse", metavar="DIR", default=None,
                   help="write loop/star incidence and Laplacian .mtx files here")
    p.add_argument("-o", "--output", required=True, help="output CSV path")


def _geometry_flags(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--subdiv", type=int, help="icosphere subdivisions")
    g.add_argument("--mesh", help="OFF or Gmsh v2 mesh file")
    p.add_argument("--radius", type=float, default=1.0)


def _geometry(args) -> tuple:
    if args.mesh is not None:
        return ("file", args.mesh)
    return ("icosphere", args.subdiv, args.radius)


def _config(args, geometry, frequencies, formulations) -> ExperimentConfig:
    return ExperimentConfig(
        geometry=geometry,
        frequencies=tuple(frequencies),
        formulations=tuple(formulations),
        quad_order=args.quad_order,
        solver_tol=args.tol,
        max_iter=args.max_iter,
        filter_sharpness=args.filter_sharpness,
        filter_tol=args.filter_tol,
        bands_override=args.bands_override,
        estimate=args.estimate,
        timing=args.timing,
        output=args.output,
    )


def _dumps(args, config: ExperimentConfig):
    if not (args.dump_operators or args.dump_sparse):
        return
    mesh, _ = config.load_geometry()
    if args.dump_sparse:
        out = Path(args.dump_sparse)
        out.mkdir(parents=True, exist_ok=True)
        maps = build_maps(mesh)
        matio.save_sparse_mm(out / "lambda.mtx", maps.Lambda)
        matio.save_sparse_mm(out / "sigma.mtx", maps.Sigma)
        matio.save_sparse_mm(out / "lap_lambda.mtx", maps.LapLambda)
        matio.save_sparse_mm(out / "lap_sigma.mtx", maps.LapSigma)
    if args.dump_operators:
        out = Path(args.dump_operators)
        out.mkdir(parents=True, exist_ok=True)
        space = RwgSpace.from_mesh(mesh)
        ops = assemble_operators(
            space,
            PhysicsParams(config.frequencies[0]),
            QuadratureConfig(order=config.quad_order),
            wave=config.wave,
        )
        matio.save_matrix(out / "ta.bin", ops.ta)
        matio.save_matrix(out / "tphi.bin", ops.tphi)
        matio.save_matrix(out / "e.bin", ops.e)


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="efiefilt",
        description="EFIE solver with graph-Laplacian spectral-filter "
                    "preconditioning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    mesh_p = sub.add_parser("mesh", help="mesh generation")
    mesh_sub = mesh_p.add_subparsers(dest="mesh_command", required=True)
    gen = mesh_sub.add_parser("gen-sphere", help="write an icosphere OFF file")
    gen.add_argument("--subdivisions", type=int, required=True)
    gen.add_argument("--radius", type=float, default=1.0)
    gen.add_argument("-o", "--output", required=True)
    body = mesh_sub.add_parser("gen-body", help="write the winged test body")
    body.add_argument("--subdivisions", type=int, default=3)
    body.add_argument("-o", "--output", required=True)

    run_p = sub.add_parser("run", help="experiments")
    run_sub = run_p.add_subparsers(dest="run_command", required=True)

    cf = run_sub.add_parser("cond-freq", help="condition number vs frequency")
    _geometry_flags(cf)
    cf.add_argument("--freqs", required=True, help="comma-separated Hz values")
    cf.add_argument("--formulations", default="raw,loop-star,spectral")
    _common_flags(cf)

    ch = run_sub.add_parser("cond-h", help="condition number vs refinement")
    ch.add_argument("--subdivs", default="1,2,3",
                    help="comma-separated icosphere subdivisions")
    ch.add_argument("--radius", type=float, default=1.0)
    ch.add_argument("--freq", type=float, default=1.0)
    ch.add_argument("--formulations", default="loop-star,spectral")
    _common_flags(ch)

    sc = run_sub.add_parser("scatter", help="single scattering solve")
    _geometry_flags(sc)
    sc.add_argument("--freq", type=float, required=True)
    sc.add_argument("--formulation", default="spectral")
    sc.add_argument("--currents", default=None,
                    help="binary container for the RWG coefficient vector")
    sc.add_argument("--magnitudes", default=None,
                    help="per-triangle |J| CSV for visualization")
    _common_flags(sc)

    rc = run_sub.add_parser("rcs-check", help="sphere RCS vs the Mie series")
    rc.add_argument("--subdiv", type=int, default=3)
    rc.add_argument("--radius", type=float, default=1.0)
    rc.add_argument("--ka", type=float, default=1.0)
    rc.add_argument("--angles", type=int, default=73)
    rc.add_argument("--formulation", default="spectral")
    _common_flags(rc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "mesh":
        if args.mesh_command == "gen-sphere":
            mesh = generate_icosphere(args.subdivisions, args.radius)
        else:
            mesh = generate_wing_body(args.subdivisions)
        write_off(mesh, args.output)
        print(f"wrote {args.output}: V={mesh.num_vertices} "
              f"E={mesh.num_edges} F={mesh.num_triangles}")
        return 0

    if args.run_command == "cond-freq":
        freqs = _parse_floats(args.freqs)
        formulations = [f.strip() for f in args.formulations.split(",") if f.strip()]
        if not formulations:
            parser.error("empty formulation list")
        try:
            config = _config(args, _geometry(args), freqs, formulations)
        except ValueError as exc:
            parser.error(str(exc))
        rows = cond_vs_frequency(config)
        _dumps(args, config)
        print(f"wrote {args.output}: {len(rows)} rows")
        return 0

    if args.run_command == "cond-h":
        subdivs = [int(x) for x in args.subdivs.split(",") if x.strip()]
        formulations = [f.strip() for f in args.formulations.split(",") if f.strip()]
        if not subdivs:
            parser.error("empty subdivision list")
        try:
            config = _config(
                args, ("icosphere", subdivs[0], args.radius), [args.freq],
                formulations,
            )
        except ValueError as exc:
            parser.error(str(exc))
        rows, slopes = cond_vs_refinement(config, tuple(subdivs), args.radius)
        _dumps(args, config)
        for formulation, slope in slopes.items():
            print(f"{formulation}: log-log slope vs 1/h = "
                  f"{matio.format_value(slope)}")
        return 0

    if args.run_command == "scatter":
        try:
            config = _config(args, _geometry(args), [args.freq],
                             [args.formulation])
        except ValueError as exc:
            parser.error(str(exc))
        rows, _ = scattering_run(config, currents_path=args.currents,
                                 magnitudes_path=args.magnitudes)
        _dumps(args, config)
        r = rows[0]
        print(f"{r['formulation']}: {r['iterations']} iterations, "
              f"residual {matio.format_value(r['residual'])}")
        return 0

    if args.run_command == "rcs-check":
        freq = PhysicsParams.for_ka(args.ka, args.radius).frequency
        try:
            config = _config(
                args, ("icosphere", args.subdiv, args.radius), [freq],
                [args.formulation],
            )
        except ValueError as exc:
            parser.error(str(exc))
        rows, errors = rcs_check(config, n_angles=args.angles)
        _dumps(args, config)
        for plane, err in errors.items():
            print(f"{plane}-plane relative L2 RCS error: "
                  f"{matio.format_value(err)}")
        return 0

    parser.error("no command")
    return 2


if __name__ == "__main__":
    sys.exit(main())
