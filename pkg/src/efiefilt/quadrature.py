"""Triangle Gauss rules and closed-form static potential integrals.

Symmetric Gauss rules are given in barycentric coordinates with weights
normalized to sum to 1, so an integral over a physical triangle of area A is
A * sum(w_q * f(r_q)).

The closed forms evaluate, for an arbitrary observation point r and a flat
source triangle T,

    I0   = integral over T of 1/|r - r'| dS'
    Ivec = integral over T of (r' - r)/|r - r'| dS'

which are the building blocks of the singularity-extracted 1/(4*pi*R)
kernel integrals (line-integral reduction along the triangle edges).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureFailure

# Dunavant symmetric rules, (barycentric points, weights summing to 1).
_RULES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _perm3(groups):
    pts, wts = [], []
    for bary, w, kind in groups:
        a, b, c = bary
        if kind == "center":
            perms = [(a, b, c)]
        elif kind == "3":  # (a, b, b) orbit
            perms = [(a, b, b), (b, a, b), (b, b, a)]
        else:  # all 6 permutations of distinct (a, b, c)
            perms = [
                (a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)
            ]
        for p in perms:
            pts.append(p)
            wts.append(w)
    return np.array(pts), np.array(wts)


_RULES[1] = (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0]))

_RULES[3] = _perm3([((2 / 3, 1 / 6, 1 / 6), 1 / 3, "3")])

_RULES[4] = (
    np.array(
        [
            [1 / 3, 1 / 3, 1 / 3],
            [0.6, 0.2, 0.2],
            [0.2, 0.6, 0.2],
            [0.2, 0.2, 0.6],
        ]
    ),
    np.array([-27 / 48, 25 / 48, 25 / 48, 25 / 48]),
)

_RULES[6] = _perm3(
    [
        ((0.108103018168070, 0.445948490915965, 0.445948490915965),
         0.223381589678011, "3"),
        ((0.816847572980459, 0.091576213509771, 0.091576213509771),
         0.109951743655322, "3"),
    ]
)

_RULES[7] = _perm3(
    [
        ((1 / 3, 1 / 3, 1 / 3), 0.225, "center"),
        ((0.059715871789770, 0.470142064105115, 0.470142064105115),
         0.132394152788506, "3"),
        ((0.797426985353087, 0.101286507323456, 0.101286507323456),
         0.125939180544827, "3"),
    ]
)

_RULES[12] = _perm3(
    [
        ((0.873821971016996, 0.063089014491502, 0.063089014491502),
         0.050844906370207, "3"),
        ((0.501426509658179, 0.249286745170910, 0.249286745170910),
         0.116786275726379, "3"),
        ((0.636502499121399, 0.310352451033785, 0.053145049844816),
         0.082851075618374, "6"),
    ]
)

ALLOWED_ORDERS = tuple(sorted(_RULES))

# Polynomial degree integrated exactly by each rule.
RULE_DEGREE = {1: 1, 3: 2, 4: 3, 6: 4, 7: 5, 12: 6}


@dataclass(frozen=True)
class QuadratureConfig:
    """Assembly quadrature knobs.

    order: points per triangle (symmetric Gauss rule, one of ALLOWED_ORDERS).
    near_ratio: pairs with centroid distance below near_ratio * h use
        singularity extraction (self/adjacent pairs always do).
    adjacent_refine: quadrisection levels of the test triangle for pairs
        sharing a vertex; the analytic inner integral leaves an edge-singular
        derivative in the outer integrand, so plain Gauss converges slowly
        on those pairs without refinement.
    """

    order: int = 7
    near_ratio: float = 3.0
    adjacent_refine: int = 4

    def __post_init__(self):
        if self.order not in _RULES:
            raise ValueError(
                f"quadrature order {self.order} not in {ALLOWED_ORDERS}"
            )
        if self.near_ratio < 0:
            raise ValueError("near_ratio must be nonnegative")
        if not 0 <= self.adjacent_refine <= 6:
            raise ValueError("adjacent_refine must be in 0..6")


def rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (barycentric points (Q, 3), weights (Q,)) for a rule order."""
    bary, w = _RULES[order]
    return bary.copy(), w.copy()


def triangle_points(vertices: np.ndarray, order: int) -> np.ndarray:
    """Map a rule onto physical triangles.

    vertices: (..., 3, 3) triangle corner coordinates.
    Returns points of shape (..., Q, 3).
    """
    bary, _ = _RULES[order]
    return np.einsum("qb,...bx->...qx", bary, vertices)


def refined_rule(order: int, levels: int):
    """Rule composed over 4^levels quadrisection cells of the triangle.

    Returns (barycentric points (4^levels * Q, 3), weights summing to 1).
    """
    bary, w = _RULES[order]
    cells = [np.eye(3)]
    for _ in range(levels):
        new = []
        for c in cells:
            m01, m12, m20 = (c[0] + c[1]) / 2, (c[1] + c[2]) / 2, (c[2] + c[0]) / 2
            new += [
                np.array([c[0], m01, m20]),
                np.array([c[1], m12, m01]),
                np.array([c[2], m20, m12]),
                np.array([m01, m12, m20]),
            ]
        cells = new
    pts = np.concatenate([bary @ c for c in cells])
    wts = np.tile(w, len(cells)) / len(cells)
    return pts, wts


# ---------------------------------------------------------------------------
# Closed-form static integrals
# ---------------------------------------------------------------------------

_EDGE_GUARD = 1e-12


def static_potential_integrals(obs: np.ndarray, tri: np.ndarray):
    """Exact 1/R integrals of a flat triangle at arbitrary observation points.

    Parameters
    ----------
    obs : (B, 3) observation points.
    tri : (B, 3, 3) source triangle vertices (tri[b, i] is corner i).

    Returns
    -------
    I0 : (B,) with I0[b] = int_T 1/|obs[b] - r'| dS'
    Ivec : (B, 3) with Ivec[b] = int_T (r' - obs[b])/|obs[b] - r'| dS'

    Notes
    -----
    Line-integral reduction over the three edges; each edge term combines a
    log of endpoint distances and an arctangent solid-angle part. When the
    observation point lies on an edge's supporting line both terms vanish in
    the limit and are guarded to zero. Observation points exactly in the
    interior of an edge segment are rejected (QuadratureFailure) since the
    1/R edge limit is not defined there for the log term.
    """
    obs = np.asarray(obs, dtype=float)
    i0, ivec = static_potential_integrals_batched(
        obs[:, None, :], np.asarray(tri, dtype=float)
    )
    return i0[:, 0], ivec[:, 0]


def static_potential_integrals_batched(obs: np.ndarray, tri: np.ndarray):
    """As static_potential_integrals, for many points per source triangle.

    obs: (B, Q, 3) observation points; tri: (B, 3, 3). The per-triangle
    edge frames are computed once per triangle and broadcast over Q.
    Returns (I0 (B, Q), Ivec (B, Q, 3)).
    """
    obs = np.asarray(obs, dtype=float)
    tri = np.asarray(tri, dtype=float)
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    nvec = np.cross(e1, e2)
    nn = np.linalg.norm(nvec, axis=1)
    nhat = nvec / nn[:, None]

    d = np.einsum("bqx,bx->bq", obs - tri[:, None, 0], nhat)
    rho = obs - d[..., None] * nhat[:, None, :]

    nb, nq = d.shape
    I0 = np.zeros((nb, nq))
    Iplane = np.zeros((nb, nq, 3))
    guard_sq = _EDGE_GUARD**2 * nn  # (edge-length scale)^2 for line guards

    for i in range(3):
        a = tri[:, i]
        b = tri[:, (i + 1) % 3]
        ev = b - a
        el = np.linalg.norm(ev, axis=1)
        shat = ev / el[:, None]
        mhat = np.cross(shat, nhat)  # outward in-plane edge normal

        am_rho = a[:, None, :] - rho
        lm = np.einsum("bqx,bx->bq", am_rho, shat)
        lp = lm + el[:, None]
        p0 = np.einsum("bqx,bx->bq", am_rho, mhat)
        r0sq = p0 * p0 + d * d
        rm = np.sqrt(r0sq + lm * lm)
        rp = np.sqrt(r0sq + lp * lp)

        on_line = r0sq < guard_sq[:, None]
        if np.any(on_line & (lm < 0) & (lp > 0)):
            raise QuadratureFailure(
                "observation point on a source-triangle edge segment"
            )

        # log term, stabilized: (rp + lp)(rp - lp) = r0^2 = (rm + lm)(rm - lm)
        use_neg = (lp + lm) < 0
        num = np.where(use_neg, rm - lm, rp + lp)
        den = np.where(use_neg, rp - lp, rm + lm)
        with np.errstate(divide="ignore", invalid="ignore"):
            f2 = np.log(num / den)
        f2 = np.where(on_line, 0.0, f2)

        ad = np.abs(d)
        with np.errstate(invalid="ignore"):
            beta = np.arctan(p0 * lp / (r0sq + ad * rp)) - np.arctan(
                p0 * lm / (r0sq + ad * rm)
            )
        beta = np.where(on_line, 0.0, beta)

        I0 += p0 * f2 - ad * beta
        edge_R = 0.5 * (lp * rp - lm * rm + r0sq * f2)
        Iplane += mhat[:, None, :] * edge_R[..., None]

    Ivec = Iplane - (d * I0)[..., None] * nhat[:, None, :]
    return I0, Ivec
