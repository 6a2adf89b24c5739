import sys, time

sys.path.insert(0, "src")
import numpy as np

from efiefilt.mesh import generate_icosphere
from efiefilt.rwg import RwgSpace, PhysicsParams, PlaneWave
from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps, make_scaled_system
from efiefilt.filters import precondition_system
from efiefilt.krylov import solve

rng = np.random.default_rng(3)

mesh = generate_icosphere(1, 1.0)
space = RwgSpace.from_mesh(mesh)
maps = build_maps(mesh)
wave = PlaneWave(direction=[0, 0, 1], polarization=[1, 0, 0])
params = PhysicsParams.for_ka(1.0, 1.0)
ops = assemble_operators(space, params, wave=wave)

scaled = make_scaled_system(ops, maps)
y = rng.standard_normal(scaled.size) + 1j * rng.standard_normal(scaled.size)
dense = scaled.to_dense()
err = np.linalg.norm(dense @ y - scaled.matvec(y)) / np.linalg.norm(dense @ y)
print("ScaledSystem dense-vs-matvec rel:", err)

spec = precondition_system(scaled)
yd = rng.standard_normal(spec.size) + 1j * rng.standard_normal(spec.size)
md = spec.to_dense()
err = np.linalg.norm(md @ yd - spec.matvec(yd)) / np.linalg.norm(md @ yd)
print("SpectralSystem dense-vs-matvec rel:", err)

# direct dense solve of T j = e
t = ops.system_matrix()
j_direct = np.linalg.solve(t, ops.e)

# spectral solve
rhs = spec.make_rhs(ops.e)
ysol, rep = solve(spec.operator, rhs, tol=1e-10)
j_spec = spec.recover_currents(ysol)
print("spectral GMRES iters:", rep.iterations, "res:", rep.residual,
      "current err:", np.linalg.norm(j_spec - j_direct) / np.linalg.norm(j_direct))
print("RWG residual:", np.linalg.norm(t @ j_spec - ops.e) / np.linalg.norm(ops.e))

# loop-star solve
rhs_ls = scaled.project_rhs(ops.e)
ysol2, rep2 = solve(scaled.operator, rhs_ls, tol=1e-10)
j_ls = scaled.to_rwg(ysol2)
print("loop-star GMRES iters:", rep2.iterations,
      "current err:", np.linalg.norm(j_ls - j_direct) / np.linalg.norm(j_direct))

# now iteration comparison at low frequency, icosphere(2)
mesh2 = generate_icosphere(2, 1.0)
space2 = RwgSpace.from_mesh(mesh2)
maps2 = build_maps(mesh2)
params_lo = PhysicsParams(1e3)
ops2 = assemble_operators(space2, params_lo, wave=wave)
scaled2 = make_scaled_system(ops2, maps2)
t0 = time.time()
spec2 = precondition_system(scaled2)
print("precondition_system build:", time.time() - t0, "s; bands:",
      list(spec2.precond.star_bank.band_indices),
      list(spec2.precond.loop_bank.band_indices))

t0 = time.time()
_, rep_ls = solve(scaled2.operator, scaled2.project_rhs(ops2.e), tol=1e-6)
t_ls = time.time() - t0
t0 = time.time()
_, rep_sp = solve(spec2.operator, spec2.make_rhs(ops2.e), tol=1e-6)
t_sp = time.time() - t0
print(f"icosphere(2) @1kHz tol 1e-6: loop-star {rep_ls.iterations} its ({t_ls:.1f}s), "
      f"spectral {rep_sp.iterations} its ({t_sp:.1f}s), "
      f"ratio {rep_sp.iterations / rep_ls.iterations:.3f}")
