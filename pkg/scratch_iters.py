import sys, time

sys.path.insert(0, "src")
import numpy as np

from efiefilt.mesh import generate_icosphere
from efiefilt.rwg import RwgSpace, PhysicsParams, PlaneWave
from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps, make_scaled_system
from efiefilt.filters import precondition_system
from efiefilt.krylov import solve

wave = PlaneWave(direction=[0, 0, 1], polarization=[1, 0, 0])

cases = [
    (2, PhysicsParams.for_ka(1.0, 1.0), "icosphere(2) ka=1"),
    (3, PhysicsParams(1e3), "icosphere(3) 1kHz"),
]
for s, params, label in cases:
    mesh = generate_icosphere(s, 1.0)
    space = RwgSpace.from_mesh(mesh)
    maps = build_maps(mesh)
    t0 = time.time()
    ops = assemble_operators(space, params, wave=wave)
    t_asm = time.time() - t0
    scaled = make_scaled_system(ops, maps)
    t0 = time.time()
    spec = precondition_system(scaled)
    t_build = time.time() - t0
    t0 = time.time()
    _, rep_ls = solve(scaled.operator, scaled.project_rhs(ops.e), tol=1e-6)
    t_ls = time.time() - t0
    t0 = time.time()
    _, rep_sp = solve(spec.operator, spec.make_rhs(ops.e), tol=1e-6)
    t_sp = time.time() - t0
    r = rep_sp.iterations / rep_ls.iterations
    print(f"{label}: asm {t_asm:.0f}s build {t_build:.1f}s | "
          f"LS {rep_ls.iterations} its ({t_ls:.1f}s) | "
          f"spectral {rep_sp.iterations} its ({t_sp:.1f}s) | ratio {r:.3f}")
