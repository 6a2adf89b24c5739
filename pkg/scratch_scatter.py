"""Loop-block within-band scatter: quadrature- or symmetry-driven?"""
import sys

sys.path.insert(0, "src")
import numpy as np

from efiefilt.mesh import generate_icosphere, generate_wing_body
from efiefilt.rwg import RwgSpace, PhysicsParams
from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps
from efiefilt.quadrature import QuadratureConfig

params = PhysicsParams(1.0)


def band_spread(mesh, order):
    space = RwgSpace.from_mesh(mesh)
    maps = build_maps(mesh)
    ops = assemble_operators(space, params, QuadratureConfig(order, 3.0))
    lam = maps.Lambda.toarray()
    loop = lam.T @ ops.ta @ lam
    w, u = np.linalg.eigh(maps.LapLambda.toarray())
    m = np.abs(np.diag(u.T @ loop @ u))
    wc = np.clip(w, 0, None)
    nz = wc > 1e-9 * wc.max()
    out = []
    i_min = int(np.floor(np.log2(wc[nz].min())))
    i_max = int(np.ceil(np.log2(wc.max())))
    for i in range(i_min, i_max + 1):
        lo = -np.inf if i == i_min else 2.0 ** (i - 1)
        band = (wc > lo) & (wc <= 2.0**i) & nz
        if band.sum() > 1:
            out.append((i, int(band.sum()), m[band].max() / m[band].min()))
    return out


mesh2 = generate_icosphere(2, 1.0)
for order in (7, 12):
    print(f"icosphere(2), order {order}:")
    for i, cnt, spread in band_spread(mesh2, order):
        print(f"  band 2^{i}: {cnt} eigs, within-band diag spread {spread:.1f}")

body = generate_wing_body(2)
print(f"wing-body(2) h={body.h:.3f}:")
for i, cnt, spread in band_spread(body, 7):
    print(f"  band 2^{i}: {cnt} eigs, within-band diag spread {spread:.1f}")

# jittered icosphere: break symmetry, keep sphere-ish shape
rng = np.random.default_rng(0)
v = np.array(mesh2.vertices)
v += 0.03 * mesh2.h * rng.standard_normal(v.shape)
v /= np.linalg.norm(v, axis=1)[:, None]
from efiefilt.mesh import TriangleMesh
jit = TriangleMesh.from_arrays(v, np.array(mesh2.triangles))
print("jittered icosphere(2):")
for i, cnt, spread in band_spread(jit, 7):
    print(f"  band 2^{i}: {cnt} eigs, within-band diag spread {spread:.1f}")
