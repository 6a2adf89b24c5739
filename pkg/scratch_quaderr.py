"""Is the loop-block minimum quadrature-limited?"""
import sys

sys.path.insert(0, "src")
import numpy as np

from efiefilt.mesh import generate_icosphere
from efiefilt.rwg import RwgSpace, PhysicsParams
from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps
from efiefilt.quadrature import QuadratureConfig

params = PhysicsParams(1.0)
for s in (1, 2):
    mesh = generate_icosphere(s, 1.0)
    space = RwgSpace.from_mesh(mesh)
    maps = build_maps(mesh)
    lam = maps.Lambda.toarray()
    for order, ratio in ((3, 3.0), (7, 3.0), (12, 3.0), (12, 6.0)):
        ops = assemble_operators(space, params, QuadratureConfig(order, ratio))
        loop = lam.T @ ops.ta @ lam
        sv = np.linalg.svd(loop, compute_uv=False)
        # nullspace: one zero sval per component
        print(f"s={s} order={order} near={ratio}: loop svals "
              f"min(nonzero)={sv[-2]:.6e} max={sv[0]:.6e}")
