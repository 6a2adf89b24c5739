import sys, time

sys.path.insert(0, "src")
import numpy as np

from efiefilt.mesh import generate_icosphere
from efiefilt.rwg import RwgSpace, PhysicsParams
from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps, make_scaled_system, condition_number
from efiefilt.filters import precondition_system
from efiefilt.errors import SingularMatrix


def cond_or_est(mat):
    try:
        return condition_number(mat), ""
    except SingularMatrix as exc:
        return exc.cond_estimate, "*"


print("=== cond vs frequency, icosphere(2) ===")
mesh = generate_icosphere(2, 1.0)
space = RwgSpace.from_mesh(mesh)
maps = build_maps(mesh)
for freq in (1.0, 1e2, 1e4, 1e6):
    params = PhysicsParams(freq)
    ops = assemble_operators(space, params)
    t_raw = ops.system_matrix()
    c_raw, f1 = cond_or_est(t_raw)
    scaled = make_scaled_system(ops, maps)
    c_ls, f2 = cond_or_est(scaled.to_dense())
    spec = precondition_system(scaled)
    c_sp, f3 = cond_or_est(spec.to_dense())
    print(f"f={freq:8.0e}  k={params.k:.3e}  raw={c_raw:.3e}{f1}  "
          f"LS={c_ls:.3e}{f2}  spectral={c_sp:.3e}{f3}")

print("=== cond vs refinement at 1 Hz ===")
params = PhysicsParams(1.0)
hs, c_lss, c_sps = [], [], []
for s in (1, 2, 3):
    mesh = generate_icosphere(s, 1.0)
    space = RwgSpace.from_mesh(mesh)
    maps = build_maps(mesh)
    t0 = time.time()
    ops = assemble_operators(space, params)
    scaled = make_scaled_system(ops, maps)
    c_ls, f2 = cond_or_est(scaled.to_dense())
    spec = precondition_system(scaled)
    c_sp, f3 = cond_or_est(spec.to_dense())
    hs.append(mesh.h)
    c_lss.append(c_ls)
    c_sps.append(c_sp)
    print(f"s={s} N={space.size} h={mesh.h:.4f}  LS={c_ls:.4e}{f2}  "
          f"spectral={c_sp:.4e}{f3}  ({time.time()-t0:.0f}s)")

ls_slope = np.polyfit(np.log(1 / np.array(hs)), np.log(c_lss), 1)[0]
sp_slope = np.polyfit(np.log(1 / np.array(hs)), np.log(c_sps), 1)[0]
print(f"loop-star slope: {ls_slope:.2f}   spectral slope: {sp_slope:.2f}   "
      f"spectral growth 1->3: {c_sps[-1]/c_sps[0]:.2f}x")
