"""Desk-scale studies: conditioning sweeps, scattering runs, Mie validation.

Each study emits rows in one fixed CSV schema (matio.CSV_HEADER). Rows are
byte-reproducible for a fixed configuration; wall times are only written
when timing=True since they vary run to run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import matio
from .assembly import assemble_operators, bistatic_rcs
from .errors import SingularMatrix
from .filters import BlockPreconditioner, build_preconditioner, precondition_system
from .krylov import solve
from .loopstar import build_maps, condition_number, make_scaled_system
from .mesh import TriangleMesh, generate_icosphere, load_mesh
from .mie import MieOracle, mie_rcs
from .quadrature import QuadratureConfig
from .rwg import PhysicsParams, PlaneWave, RwgSpace

FORMULATIONS = ("raw", "loop-star", "spectral")

DEFAULT_WAVE = PlaneWave(direction=[0.0, 0.0, -1.0], polarization=[1.0, 0.0, 0.0])


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared knobs for all studies.

    geometry: ("icosphere", subdivisions, radius) or ("file", path).
    """

    geometry: tuple
    frequencies: tuple = (1.0,)
    formulations: tuple = ("raw", "loop-star", "spectral")
    quad_order: int = 7
    solver_tol: float = 1e-6
    max_iter: int | None = None
    filter_sharpness: int = 2
    filter_tol: float = 1e-10
    bands_override: int | None = None
    estimate: bool = False
    timing: bool = False
    output: str | None = None
    wave: PlaneWave = DEFAULT_WAVE

    def __post_init__(self):
        if len(self.frequencies) == 0:
            raise ValueError("frequency list must be nonempty")
        if len(self.formulations) == 0:
            raise ValueError("formulation list must be nonempty")
        for f in self.formulations:
            if f not in FORMULATIONS:
                raise ValueError(f"unknown formulation {f!r} (use {FORMULATIONS})")

    def load_geometry(self) -> tuple[TriangleMesh, str]:
        kind = self.geometry[0]
        if kind == "icosphere":
            _, subdiv, radius = self.geometry
            return (
                generate_icosphere(subdiv, radius),
                f"icosphere({subdiv},r={matio.format_value(float(radius))})",
            )
        if kind == "file":
            path = self.geometry[1]
            return load_mesh(path), Path(path).name
        raise ValueError(f"unknown geometry {self.geometry!r}")


@dataclass
class _Workspace:
    """Per-mesh state reused across frequencies."""

    mesh: TriangleMesh
    name: str
    space: RwgSpace
    maps: object
    precond: BlockPreconditioner | None = None


def _workspace(config: ExperimentConfig, mesh=None, name=None) -> _Workspace:
    if mesh is None:
        mesh, name = config.load_geometry()
    return _Workspace(
        mesh=mesh, name=name, space=RwgSpace.from_mesh(mesh), maps=build_maps(mesh)
    )


def _systems(config, ws, freq):
    params = PhysicsParams(freq)
    ops = assemble_operators(
        ws.space, params, QuadratureConfig(order=config.quad_order), wave=config.wave
    )
    return params, ops


def _spectral(config, ws, ops):
    scaled = make_scaled_system(ops, ws.maps)
    if ws.precond is None:
        ws.precond = build_preconditioner(
            ws.maps,
            sharpness=config.filter_sharpness,
            solver_tol=config.filter_tol,
            n_bands=config.bands_override,
        )
    return precondition_system(scaled, precond=ws.precond)


def _cond_row(config, handle, size, nullity=0):
    """Condition number plus method/notes fields, absorbing near-singularity."""
    try:
        cond = condition_number(handle, size=size, nullity=nullity,
                                estimate=config.estimate)
        note = ""
    except SingularMatrix as exc:
        cond = exc.cond_estimate
        note = "singular-to-working-precision"
    method = "lanczos-estimate" if (config.estimate or size > 6000) else "dense-svd"
    return cond, method, note


def cond_vs_frequency(config: ExperimentConfig) -> list[dict]:
    """Condition number of each formulation across the frequency list."""
    ws = _workspace(config)
    rows = []
    for freq in config.frequencies:
        params, ops = _systems(config, ws, freq)
        for formulation in config.formulations:
            if formulation == "raw":
                cond, method, note = _cond_row(config, ops.system_matrix(), ops.size)
            elif formulation == "loop-star":
                scaled = make_scaled_system(ops, ws.maps)
                cond, method, note = _cond_row(
                    config, scaled, scaled.size, scaled.nullity
                )
            else:
                spec = _spectral(config, ws, ops)
                cond, method, note = _cond_row(config, spec, spec.size, spec.nullity)
            rows.append(
                {
                    "experiment": "cond-freq",
                    "geometry": ws.name,
                    "N": ws.space.size,
                    "freq_hz": freq,
                    "formulation": formulation,
                    "cond": cond,
                    "cond_method": method,
                    "notes": note,
                }
            )
    _check_spectral_bound(rows)
    if config.output:
        matio.write_csv(config.output, rows)
    return rows


def _check_spectral_bound(rows):
    """Annotate any point where spectral does not beat loop-star."""
    by_key = {}
    for row in rows:
        key = (row["geometry"], row["freq_hz"])
        by_key.setdefault(key, {})[row["formulation"]] = row
    for pair in by_key.values():
        if "spectral" in pair and "loop-star" in pair:
            if pair["spectral"]["cond"] > pair["loop-star"]["cond"]:
                note = "spectral-above-loop-star"
                old = pair["spectral"]["notes"]
                pair["spectral"]["notes"] = f"{old};{note}" if old else note
                warnings.warn("spectral conditioning above loop-star", stacklevel=3)


def cond_vs_refinement(config: ExperimentConfig, subdivisions=(1, 2, 3),
                       radius: float = 1.0):
    """Conditioning under icosphere refinement at fixed (low) frequency.

    Returns (rows, slopes): log cond versus log(1/h) slope per formulation,
    NaN (with a warning) when only one subdivision is given.
    """
    if len(config.frequencies) != 1:
        raise ValueError("cond_vs_refinement uses a single frequency")
    freq = config.frequencies[0]
    rows = []
    data: dict[str, list] = {f: [] for f in config.formulations}
    for subdiv in subdivisions:
        sub = replace(config, geometry=("icosphere", subdiv, radius))
        ws = _workspace(sub)
        params, ops = _systems(sub, ws, freq)
        for formulation in config.formulations:
            if formulation == "raw":
                cond, method, note = _cond_row(config, ops.system_matrix(), ops.size)
            elif formulation == "loop-star":
                scaled = make_scaled_system(ops, ws.maps)
                cond, method, note = _cond_row(
                    config, scaled, scaled.size, scaled.nullity
                )
            else:
                spec = _spectral(sub, ws, ops)
                cond, method, note = _cond_row(config, spec, spec.size, spec.nullity)
            data[formulation].append((ws.mesh.h, cond))
            rows.append(
                {
                    "experiment": "cond-h",
                    "geometry": ws.name,
                    "N": ws.space.size,
                    "freq_hz": freq,
                    "formulation": formulation,
                    "cond": cond,
                    "cond_method": method,
                    "notes": note,
                }
            )
    slopes = {}
    for formulation, points in data.items():
        if len(points) < 2:
            warnings.warn("slope undefined for a single subdivision", stacklevel=2)
            slopes[formulation] = float("nan")
        else:
            hs = np.array([p[0] for p in points])
            cs = np.array([p[1] for p in points])
            slopes[formulation] = float(
                np.polyfit(np.log(1.0 / hs), np.log(cs), 1)[0]
            )
        rows.append(
            {
                "experiment": "cond-h",
                "geometry": "slope",
                "freq_hz": freq,
                "formulation": formulation,
                "notes": f"loglog-slope={matio.format_value(slopes[formulation])}",
            }
        )
    if config.output:
        matio.write_csv(config.output, rows)
    return rows, slopes


def scattering_run(config: ExperimentConfig, currents_path=None,
                   magnitudes_path=None):
    """Solve one scattering problem; returns (rows, currents).

    Writes the RWG coefficient vector to currents_path (binary container)
    and optionally a per-triangle current magnitude table for external
    visualization.
    """
    if len(config.frequencies) != 1:
        raise ValueError("scattering_run uses a single frequency")
    if len(config.formulations) != 1:
        raise ValueError("scattering_run uses a single formulation")
    formulation = config.formulations[0]
    freq = config.frequencies[0]
    ws = _workspace(config)
    params, ops = _systems(config, ws, freq)

    if formulation == "raw":
        x, report = solve(ops.system_matrix(), ops.e, tol=config.solver_tol,
                          max_iter=config.max_iter)
        currents = x
    elif formulation == "loop-star":
        scaled = make_scaled_system(ops, ws.maps)
        x, report = solve(scaled.operator, scaled.project_rhs(ops.e),
                          tol=config.solver_tol, max_iter=config.max_iter)
        currents = scaled.to_rwg(x)
    else:
        spec = _spectral(config, ws, ops)
        x, report = solve(spec.operator, spec.make_rhs(ops.e),
                          tol=config.solver_tol, max_iter=config.max_iter)
        currents = spec.recover_currents(x)

    rwg_residual = np.linalg.norm(
        ops.system_matvec(currents) - ops.e
    ) / max(np.linalg.norm(ops.e), 1e-300)
    row = {
        "experiment": "scatter",
        "geometry": ws.name,
        "N": ws.space.size,
        "freq_hz": freq,
        "formulation": formulation,
        "iterations": report.iterations,
        "residual": report.residual,
        "notes": (
            f"converged={report.converged};rwg_residual="
            f"{matio.format_value(rwg_residual)}"
        ),
    }
    if config.timing:
        row["walltime_s"] = report.wall_time
    rows = [row]
    if currents_path:
        matio.save_matrix(currents_path, currents.astype(np.complex128))
    if magnitudes_path:
        _write_magnitudes(ws, currents, magnitudes_path)
    if config.output:
        matio.write_csv(config.output, rows)
    return rows, currents


def _write_magnitudes(ws, currents, path):
    """Per-triangle |J| at centroids, for external visualization."""
    pts, vals = ws.space.eval_current(currents, order=1)
    mag = np.linalg.norm(np.abs(vals[:, 0, :]), axis=1)
    with open(path, "w") as fh:
        fh.write("triangle,cx,cy,cz,J_mag\n")
        for t in range(ws.mesh.num_triangles):
            c = ws.mesh.centroids[t]
            fh.write(
                f"{t},{matio.format_value(c[0])},{matio.format_value(c[1])},"
                f"{matio.format_value(c[2])},{matio.format_value(float(mag[t]))}\n"
            )


def rcs_check(config: ExperimentConfig, n_angles: int = 73):
    """Sphere scattering accuracy against the Mie series.

    Returns (rows, errors) with one row per principal plane; errors maps
    plane name to relative L2 RCS error. Geometry must be an icosphere.
    """
    if config.geometry[0] != "icosphere":
        raise ValueError("rcs_check requires a sphere (icosphere geometry)")
    radius = config.geometry[2]
    if len(config.frequencies) != 1 or len(config.formulations) != 1:
        raise ValueError("rcs_check uses a single frequency and formulation")
    # propagate along +z for the standard Mie frame
    config = replace(
        config, wave=PlaneWave(direction=[0, 0, 1.0], polarization=[1.0, 0, 0])
    )
    rows, currents = scattering_run(config)
    ws = _workspace(config)
    params = PhysicsParams(config.frequencies[0])
    oracle = MieOracle(radius=radius, wavenumber=params.k)

    theta = np.linspace(0.0, np.pi, n_angles)
    planes = {
        "E": np.column_stack([np.sin(theta), np.zeros_like(theta), np.cos(theta)]),
        "H": np.column_stack([np.zeros_like(theta), np.sin(theta), np.cos(theta)]),
    }
    errors = {}
    out_rows = []
    for name, dirs in planes.items():
        num = bistatic_rcs(ws.space, currents, params, dirs,
                           quad=QuadratureConfig(order=config.quad_order))
        ref = mie_rcs(oracle, dirs)
        err = float(np.linalg.norm(num - ref) / np.linalg.norm(ref))
        errors[name] = err
        out_rows.append(
            {
                "experiment": "rcs-check",
                "geometry": rows[0]["geometry"],
                "N": rows[0]["N"],
                "freq_hz": config.frequencies[0],
                "formulation": config.formulations[0],
                "iterations": rows[0]["iterations"],
                "residual": rows[0]["residual"],
                "notes": f"plane={name};rel_l2_rcs_err={matio.format_value(err)}",
            }
        )
    if config.output:
        matio.write_csv(config.output, out_rows)
    return out_rows, errors
