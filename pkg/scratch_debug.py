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

wSf, uSf = np.linalg.eigh(maps.LapSigma.toarray())
winv = np.where(wSf > 1e-9 * wSf.max(), 1 / np.where(wSf > 0, wSf, 1), 0.0)
sig_tilde = maps.Sigma.toarray() @ ((uSf * winv) @ uSf.T)
st_r = sig_tilde[:, maps.star_cols]
t_full = ops.system_matrix()
star_block = k * (st_r.T @ t_full @ st_r)

lap_red = maps.LapSigma[maps.star_cols][:, maps.star_cols].toarray()
w, u = np.linalg.eigh(lap_red)
rot = u.T @ star_block @ u
d = np.abs(np.diag(rot))

print("reduced dual Laplacian eigenvalues: min", w.min(), "max", w.max())
print("full dual Laplacian eigenvalues: min nonzero",
      wSf[wSf > 1e-9].min(), "max", wSf.max())
print("lambda, |diag| for the 12 smallest lambdas:")
for i in range(12):
    print(f"  {w[i]:.5e}  {d[i]:.4e}")
print("lambda, |diag| for the 6 largest:")
for i in range(len(w) - 6, len(w)):
    print(f"  {w[i]:.5e}  {d[i]:.4e}")
print("max |diag|:", d.max(), "at lambda", w[np.argmax(d)])
# off-diagonal strength
off = np.abs(rot) - np.diag(d)
print("||offdiag||_F / ||rot||_F:", np.linalg.norm(off) / np.linalg.norm(rot))
row = np.argmax(d)
print("row of max diag: largest couplings at lambdas:",
      w[np.argsort(np.abs(rot[row]))[-5:]])
