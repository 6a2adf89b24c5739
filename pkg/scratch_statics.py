"""Scratch validation of static_potential_integrals vs mpmath quadrature."""
import sys

sys.path.insert(0, "src")
import numpy as np
from mpmath import mp, mpf, quad, sqrt

from efiefilt.quadrature import static_potential_integrals

mp.dps = 30


def oracle(obs, v0, v1, v2):
    """int over triangle of 1/R and (r'-obs)/R via nested mpmath quadrature.

    Parametrize r' = v0 + u*(v1-v0) + v*(v2-v0), u in [0,1], v in [0,1-u];
    dS = 2A du dv.
    """
    v0 = [mpf(x) for x in v0]
    e1 = [mpf(a) - b for a, b in zip(v1, v0)]
    e2 = [mpf(a) - b for a, b in zip(v2, v0)]
    cr = [
        e1[1] * e2[2] - e1[2] * e2[1],
        e1[2] * e2[0] - e1[0] * e2[2],
        e1[0] * e2[1] - e1[1] * e2[0],
    ]
    twoA = sqrt(sum(c * c for c in cr))
    obs = [mpf(x) for x in obs]

    def integrand(u, v, comp):
        r = [v0[i] + u * e1[i] + v * e2[i] for i in range(3)]
        R = sqrt(sum((r[i] - obs[i]) ** 2 for i in range(3)))
        if comp < 0:
            return 1 / R
        return (r[comp] - obs[comp]) / R

    vals = []
    for comp in (-1, 0, 1, 2):
        val = quad(
            lambda u: quad(lambda v: integrand(u, v, comp), [0, 1 - u]),
            [0, 1],
        )
        vals.append(val * twoA)
    return vals


cases = [
    # (obs, triangle) : exterior, above-plane, in-plane exterior, near edge line
    ([0.5, 0.9, 0.7], [[0, 0, 0], [1, 0, 0], [0, 1, 0]]),
    ([0.25, 0.25, 1e-3], [[0, 0, 0], [1, 0, 0], [0, 1, 0]]),
    ([2.0, -1.0, 0.0], [[0, 0, 0], [1, 0, 0], [0, 1, 0]]),
    ([0.3, 0.3, 0.0], [[0, 0, 0], [1, 0, 0], [0, 1, 0]]),  # interior, in plane
    ([-0.5, 0.0, 0.0], [[0, 0, 0], [1, 0, 0], [0, 1, 0]]),  # on edge LINE, outside segment
    ([0.2, -0.7, 0.4], [[0.1, 0.2, 0.0], [0.9, -0.1, 0.3], [0.4, 0.8, -0.2]]),
]

for obs, tri in cases:
    I0, Ivec = static_potential_integrals(
        np.array([obs], float), np.array([tri], float)
    )
    ref = oracle(obs, *tri)
    err0 = abs(I0[0] - float(ref[0])) / abs(float(ref[0]))
    errv = max(
        abs(Ivec[0][i] - float(ref[1 + i])) for i in range(3)
    ) / max(1e-30, max(abs(float(ref[1 + i])) for i in range(3)))
    print(f"obs={obs}: I0={I0[0]:.12g} ref={float(ref[0]):.12g} rel={err0:.2e}  "
          f"Ivec rel={errv:.2e}")
