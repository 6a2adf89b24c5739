"""Scatter of loop-block diagonal response vs vertex-Laplacian eigenvalue."""
import sys

sys.path.insert(0, "src")
import numpy as np

from efiefilt.mesh import generate_icosphere
from efiefilt.rwg import RwgSpace, PhysicsParams
from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps

params = PhysicsParams(1.0)
mesh = generate_icosphere(2, 1.0)
space = RwgSpace.from_mesh(mesh)
maps = build_maps(mesh)
ops = assemble_operators(space, params)
k = params.k
t_full = ops.system_matrix()

wL, uL = np.linalg.eigh(maps.LapLambda.toarray())
loop = uL.T @ (maps.Lambda.T @ (t_full @ maps.Lambda.toarray())) @ uL / k
mL = np.abs(np.diag(loop))

print("lam_Lambda   |m|    (sorted by lam, every 8th + all above 5)")
for i in range(0, len(wL), 8):
    print(f"  {wL[i]:9.4f}  {mL[i]:.4e}")
print("...")
idx = np.where(wL > 5.0)[0]
for i in idx:
    print(f"  {wL[i]:9.4f}  {mL[i]:.4e}")
# how many dofs, vertex degrees
deg = np.asarray(maps.LapLambda.diagonal())
print("vertex degrees:", np.unique(deg, return_counts=True))
