"""Measure how loop/star block eigenvalues align with Laplacian eigenvalues."""
import sys

sys.path.insert(0, "src")
import numpy as np

from efiefilt.mesh import generate_icosphere
from efiefilt.rwg import RwgSpace, PhysicsParams
from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps

params = PhysicsParams(1.0)

for s in (1, 2, 3):
    mesh = generate_icosphere(s, 1.0)
    space = RwgSpace.from_mesh(mesh)
    maps = build_maps(mesh)
    ops = assemble_operators(space, params)

    lam_r = maps.Lambda[:, maps.loop_cols].toarray()
    sig_r = maps.Sigma[:, maps.star_cols].toarray()

    # k-free block pieces
    loop_block = lam_r.T @ ops.ta @ lam_r            # ~ j * this at low k
    star_block = sig_r.T @ ops.tphi @ sig_r

    lapL = maps.LapLambda[maps.loop_cols][:, maps.loop_cols].toarray()
    lapS = maps.LapSigma[maps.star_cols][:, maps.star_cols].toarray()

    wL, uL = np.linalg.eigh(lapL)
    wS, uS = np.linalg.eigh(lapS)

    dL = np.abs(np.diag(uL.T @ loop_block @ uL))
    dS = np.abs(np.diag(uS.T @ star_block @ uS))

    # sigma-tilde version of star block
    wSf, uSf = np.linalg.eigh(maps.LapSigma.toarray())
    winv = np.where(wSf > 1e-9 * wSf.max(), 1 / np.where(wSf > 0, wSf, 1), 0.0)
    sig_tilde = maps.Sigma.toarray() @ ((uSf * winv) @ uSf.T)
    st_r = sig_tilde[:, maps.star_cols]
    star_tilde_block = st_r.T @ ops.tphi @ st_r
    dSt = np.abs(np.diag(uS.T @ star_tilde_block @ uS))

    def fit(w, d):
        m = (w > 1e-12) & (d > 1e-300)
        return np.polyfit(np.log(w[m]), np.log(d[m]), 1)[0]

    print(f"s={s} h={mesh.h:.4f}")
    print(f"  loop  LamT Ta Lam : diag in [{dL.min():.3e}, {dL.max():.3e}] "
          f" exponent vs lapL eig: {fit(wL, dL):.2f}")
    print(f"  star  SigT Tphi Sig: diag in [{dS.min():.3e}, {dS.max():.3e}] "
          f" exponent vs lapS eig: {fit(wS, dS):.2f}")
    print(f"  star~ StT Tphi St  : diag in [{dSt.min():.3e}, {dSt.max():.3e}] "
          f" exponent vs lapS eig: {fit(wS, dSt):.2f}")
    print(f"  lapL eig range [{wL.min():.3e}, {wL.max():.3e}]  "
          f"lapS [{wS.min():.3e}, {wS.max():.3e}]")
    # true block eigenvalue ranges (svd)
    for name, blk in (("loop", loop_block), ("star", star_block), ("star~", star_tilde_block)):
        sv = np.linalg.svd(blk, compute_uv=False)
        print(f"    {name} svals [{sv[-1]:.3e}, {sv[0]:.3e}] cond {sv[0]/sv[-1]:.3e}")
