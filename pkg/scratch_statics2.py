"""Polar-coordinate oracle for on/near-plane observation points.

With the projection point rho inside the triangle, split into three apex
sub-triangles. In polar coordinates around rho:
  I0 = sum over edges of int over theta of [sqrt(rmax^2 + d^2) - |d|]
  (the 1/R singularity is removed by the Jacobian).
Each in-plane vector component similarly:
  int (r'-rho)/R dS = sum int dtheta (cos,sin)(theta) * int_0^rmax rho'^2/sqrt(rho'^2+d^2) drho'
with inner antiderivative (x/2)sqrt(x^2+d^2) - (d^2/2) asinh(x/|d|), d->0 ok.
Normal component: int (z'-z_obs)/R = -d * I0 (z'=0 on the triangle plane).
"""
import sys

sys.path.insert(0, "src")
import numpy as np
from mpmath import mp, mpf, quad, sqrt, asinh, atan2, cos, sin

from efiefilt.quadrature import static_potential_integrals

mp.dps = 30


def polar_oracle(rho_xy, d, verts_xy):
    """Triangle in z=0 plane, obs = (rho_xy, d), rho_xy inside triangle."""
    rho = [mpf(rho_xy[0]), mpf(rho_xy[1])]
    d = mpf(d)
    I0 = mpf(0)
    Ix = mpf(0)
    Iy = mpf(0)
    for i in range(3):
        a = [mpf(x) for x in verts_xy[i]]
        b = [mpf(x) for x in verts_xy[(i + 1) % 3]]
        tha = atan2(a[1] - rho[1], a[0] - rho[0])
        thb = atan2(b[1] - rho[1], b[0] - rho[0])
        # unwrap so thb > tha (CCW triangle, apex angles < pi)
        while thb < tha:
            thb += 2 * mp.pi

        def rmax(th):
            # ray rho + t(cos,sin) hits line (a,b)
            ex, ey = b[0] - a[0], b[1] - a[1]
            cx, cy = cos(th), sin(th)
            den = cx * ey - cy * ex
            return ((a[0] - rho[0]) * ey - (a[1] - rho[1]) * ex) / den

        I0 += quad(lambda th: sqrt(rmax(th) ** 2 + d * d) - abs(d), [tha, thb])

        def inner(th):
            x = rmax(th)
            if d == 0:
                return x * x / 2
            return (x / 2) * sqrt(x * x + d * d) - (d * d / 2) * asinh(x / abs(d))

        Ix += quad(lambda th: cos(th) * inner(th), [tha, thb])
        Iy += quad(lambda th: sin(th) * inner(th), [tha, thb])
    return I0, Ix, Iy, -d * I0


cases = [
    ((0.3, 0.3), 0.0),
    ((0.25, 0.25), 1e-3),
    ((0.25, 0.25), 0.05),
    ((1 / 3, 1 / 3), 0.0),   # centroid
]
verts = [[0, 0], [1, 0], [0, 1]]

for rho_xy, d in cases:
    obs = np.array([[rho_xy[0], rho_xy[1], d]])
    tri = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], float)
    I0, Ivec = static_potential_integrals(obs, tri)
    rI0, rIx, rIy, rIz = polar_oracle(rho_xy, d, verts)
    print(f"obs={rho_xy}+z{d}:")
    print(f"  I0  {I0[0]:.15g}  ref {float(rI0):.15g}  rel {abs(I0[0]-float(rI0))/float(rI0):.2e}")
    for lbl, got, ref in (("x", Ivec[0, 0], rIx), ("y", Ivec[0, 1], rIy), ("z", Ivec[0, 2], rIz)):
        ref = float(ref)
        denom = max(abs(ref), 1e-30)
        print(f"  I{lbl}  {got:.15g}  ref {ref:.15g}  rel {abs(got-ref)/denom:.2e}")

# equilateral self-term constant: int_T int_T 1/R dA dA' = C * a^3
# outer integral of I0 over the triangle via refined Gauss on the outer variable
from efiefilt.quadrature import rule, triangle_points

a = 1.0
eq = np.array([[0, 0, 0], [a, 0, 0], [a / 2, a * np.sqrt(3) / 2, 0]])


def outer_refine(levels):
    tris = [eq]
    for _ in range(levels):
        new = []
        for t in tris:
            m01, m12, m20 = (t[0] + t[1]) / 2, (t[1] + t[2]) / 2, (t[2] + t[0]) / 2
            new += [
                np.array([t[0], m01, m20]),
                np.array([t[1], m12, m01]),
                np.array([t[2], m20, m12]),
                np.array([m01, m12, m20]),
            ]
        tris = new
    tris = np.array(tris)
    bary, w = rule(12)
    pts = triangle_points(tris, 12)  # (T, Q, 3)
    areas = np.full(len(tris), (np.sqrt(3) / 4) * a * a / 4 ** levels)
    obs = pts.reshape(-1, 3)
    src = np.broadcast_to(eq, (obs.shape[0], 3, 3))
    I0, _ = static_potential_integrals(obs, src)
    I0 = I0.reshape(len(tris), -1)
    return float(np.einsum("t,q,tq->", areas, w, I0))


for lv in (2, 3, 4, 5):
    print(f"equilateral self-term, outer refine {lv}: {outer_refine(lv):.12f}")
