"""Dense Galerkin assembly of the EFIE operator blocks and excitation.

The tested operator splits as T = jk*Ta + Tphi/(jk) with

    Ta[m, n]   = intint f_m(r) . f_n(r') G(r, r') dS' dS
    Tphi[m, n] = intint (div f_m)(r) (div f_n)(r') G(r, r') dS' dS

and kernel G(r, r') = exp(jk|r - r'|) / (4 pi |r - r'|); the jk prefactors
are never folded into the stored matrices. The excitation is
e_m = <f_m, -E_inc>.

Near pairs (centroid distance below near_ratio * h, and all pairs sharing a
vertex) use static-kernel extraction: (exp(jkR) - 1)/(4 pi R) by Gauss
quadrature plus the analytic 1/(4 pi R) triangle integrals. Every pair
contribution is scattered half at (m, n) and half transposed at (n, m), so
the assembled matrices are symmetric by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import (
    QuadratureConfig,
    refined_rule,
    rule,
    static_potential_integrals_batched,
    triangle_points,
)
from .rwg import PhysicsParams, PlaneWave, RwgSpace

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class OperatorSet:
    """Assembled Galerkin blocks and excitation at one frequency."""

    ta: np.ndarray
    tphi: np.ndarray
    e: np.ndarray
    params: PhysicsParams

    def __post_init__(self):
        self.ta.setflags(write=False)
        self.tphi.setflags(write=False)
        self.e.setflags(write=False)

    @property
    def size(self) -> int:
        return self.ta.shape[0]

    def system_matrix(self) -> np.ndarray:
        """Dense T = jk*Ta + Tphi/(jk)."""
        jk = 1j * self.params.k
        return jk * self.ta + self.tphi / jk

    def system_matvec(self, x: np.ndarray) -> np.ndarray:
        jk = 1j * self.params.k
        return jk * (self.ta @ x) + (self.tphi @ x) / jk


def assemble_operators(
    space: RwgSpace,
    params: PhysicsParams,
    quad: QuadratureConfig = QuadratureConfig(),
    wave: PlaneWave | None = None,
) -> OperatorSet:
    """Assemble Ta, Tphi (one shared kernel pass) and optionally e."""
    ta, tphi = _assemble_pair(space, params, quad)
    if wave is not None:
        e = assemble_excitation(space, wave, params, quad)
    else:
        e = np.zeros(space.size, dtype=complex)
    return OperatorSet(ta=ta, tphi=tphi, e=e, params=params)


def assemble_Ta(space, params, quad=QuadratureConfig()):
    """Vector-potential Galerkin block (see module docstring)."""
    return _assemble_pair(space, params, quad)[0]


def assemble_Tphi(space, params, quad=QuadratureConfig()):
    """Scalar-potential (div-div) Galerkin block."""
    return _assemble_pair(space, params, quad)[1]


def _near_pair_masks(mesh, near_ratio):
    """(near, adjacent) bool (F, F) masks; adjacent = shares a vertex."""
    c = mesh.centroids
    d2 = np.sum((c[:, None, :] - c[None, :, :]) ** 2, axis=2)
    mask = d2 < (near_ratio * mesh.h) ** 2
    import scipy.sparse as sp

    nf = mesh.num_triangles
    nv = mesh.num_vertices
    rows = np.repeat(np.arange(nf), 3)
    cols = mesh.triangles.ravel()
    inc = sp.csr_matrix(
        (np.ones(3 * nf), (rows, cols)), shape=(nf, nv)
    )
    adj = (inc @ inc.T).toarray() > 0
    return mask | adj, adj


def _assemble_pair(space, params, quad):
    mesh = space.mesh
    k = params.k
    nf = mesh.num_triangles
    ne = space.size
    bary, w = rule(quad.order)
    nq = len(w)

    pts = triangle_points(mesh.vertices[mesh.triangles], quad.order)  # (F,Q,3)
    areas = mesh.areas
    signs = space.tri_signs.astype(float)          # (F, 3)
    dofs = space.tri_dofs                          # (F, 3)
    pfree = mesh.vertices[space.tri_free]          # (F, 3, 3)

    near, adjacent = _near_pair_masks(mesh, quad.near_ratio)

    ta = np.zeros((ne, ne), dtype=complex)
    tphi = np.zeros((ne, ne), dtype=complex)

    pts_flat = pts.reshape(nf * nq, 3)
    sq_flat = np.einsum("ix,ix->i", pts_flat, pts_flat)

    # chunk size: keep the (C*Q, F*Q) kernel matrix around a few 10^6 entries
    chunk = max(1, int(4.0e6 / (nq * nq * nf)))

    for t0 in range(0, nf, chunk):
        t1 = min(t0 + chunk, nf)
        c = t1 - t0
        obs = pts[t0:t1].reshape(c * nq, 3)
        g = obs @ pts_flat.T
        r2 = (
            np.einsum("ix,ix->i", obs, obs)[:, None] + sq_flat[None, :] - 2.0 * g
        )
        np.maximum(r2, 0.0, out=r2)
        r = np.sqrt(r2)
        r[r == 0.0] = 1.0
        kern = np.exp(1j * k * r)
        kern /= FOUR_PI * r
        kern = kern.reshape(c, nq, nf, nq)
        keep = ~near[t0:t1]
        kern *= keep[:, None, :, None]

        s_pair = np.einsum("p,cqfp->cqf", w, kern) * areas[None, None, :]
        v_src = np.einsum("p,fpx,cqfp->cqfx", w, pts, kern) * areas[None, None, :, None]
        rq = pts[t0:t1]  # (c, Q, 3)
        v_pair = v_src - rq[:, :, None, :] * s_pair[..., None]

        _scatter_blocks(
            ta, tphi, np.arange(t0, t1), np.arange(nf),
            rq, s_pair, v_pair, signs, dofs, pfree, areas, w,
        )

    # singularity-extracted pairs: plain outer rule for merely-near pairs,
    # quadrisection-refined outer rule for vertex-sharing pairs
    t_n, s_n = np.nonzero(near & ~adjacent)
    _near_corrections(ta, tphi, space, params, t_n, s_n, bary, w, quad.order)
    t_a, s_a = np.nonzero(adjacent)
    bary_ref, w_ref = refined_rule(quad.order, quad.adjacent_refine)
    _near_corrections(ta, tphi, space, params, t_a, s_a, bary_ref, w_ref,
                      quad.order)
    return ta, tphi


def _scatter_blocks(ta, tphi, t_idx, s_idx, rq, s_pair, v_pair,
                    signs, dofs, pfree, areas, w):
    """Turn per-pair S/V integrals into DoF blocks and accumulate.

    rq: (C, Q, 3) observation points on test triangles t_idx.
    s_pair: (C, Q, Ns) complex, v_pair: (C, Q, Ns, 3) complex for source
    triangles s_idx. Scatters half the block and half its transpose so the
    result is symmetric regardless of quadrature asymmetries.
    """
    d = rq[:, None, :, :] - pfree[t_idx][:, :, None, :]       # (C, 3, Q, 3)
    t1 = np.einsum("q,caqx,cqfx->caf", w, d, v_pair)
    # t2[c,a,f,b] = sum_q w_q d[c,a,q].(rq[c,q] - pfree_s[f,b]) S[c,q,f]
    drq = np.einsum("caqx,cqx->caq", d, rq)
    term1 = np.einsum("q,caq,cqf->caf", w, drq, s_pair)
    ds = np.einsum("q,caqx,cqf->cafx", w, d, s_pair)
    term2 = np.einsum("cafx,fbx->cafb", ds, pfree[s_idx])
    t2 = term1[:, :, :, None] - term2
    sw = np.einsum("q,cqf->cf", w, s_pair)

    sgn_t = signs[t_idx]            # (C, 3)
    sgn_s = signs[s_idx]            # (Ns, 3)
    inv_a = 1.0 / areas[s_idx]      # (Ns,)

    block_a = (
        (t1[:, :, :, None] + t2)
        * sgn_t[:, :, None, None]
        * sgn_s[None, None, :, :]
        * (0.25 * inv_a)[None, None, :, None]
    )
    block_phi = (
        sw[:, None, :, None]
        * sgn_t[:, :, None, None]
        * sgn_s[None, None, :, :]
        * inv_a[None, None, :, None]
    )

    rows = dofs[t_idx]  # (C, 3)
    cols = dofs[s_idx]  # (Ns, 3)
    for ci in range(len(t_idx)):
        r_ix = rows[ci][:, None, None]
        c_ix = cols[None, :, :]
        np.add.at(ta, (r_ix, c_ix), 0.5 * block_a[ci])
        np.add.at(ta, (cols[:, :, None], rows[ci][None, None, :]),
                  0.5 * block_a[ci].transpose(1, 2, 0))
        np.add.at(tphi, (r_ix, c_ix), 0.5 * block_phi[ci])
        np.add.at(tphi, (cols[:, :, None], rows[ci][None, None, :]),
                  0.5 * block_phi[ci].transpose(1, 2, 0))


def _pair_contract(space, ts, ss, obs, w, s_pair, v_pair):
    """Contract per-pair S/V integrals into 3x3 DoF blocks (batched)."""
    mesh = space.mesh
    pfree = mesh.vertices[space.tri_free]
    signs = space.tri_signs.astype(float)
    areas = mesh.areas

    d = obs[:, None, :, :] - pfree[ts][:, :, None, :]       # (B, 3, Q, 3)
    t1 = np.einsum("q,baqx,bqx->ba", w, d, v_pair)
    drq = np.einsum("baqx,bqx->baq", d, obs)
    term1 = np.einsum("q,baq,bq->ba", w, drq, s_pair)
    ds = np.einsum("q,baqx,bq->bax", w, d, s_pair)
    term2 = np.einsum("bax,bcx->bac", ds, pfree[ss])
    t2 = term1[:, :, None] - term2
    sw = np.einsum("q,bq->b", w, s_pair)

    block_a = (
        (t1[:, :, None] + t2)
        * signs[ts][:, :, None]
        * signs[ss][:, None, :]
        * (0.25 / areas[ss])[:, None, None]
    )
    block_phi = (
        sw[:, None, None]
        * signs[ts][:, :, None]
        * signs[ss][:, None, :]
        / areas[ss][:, None, None]
    )
    return block_a, block_phi


def _near_corrections(ta, tphi, space, params, t_near, s_near,
                      bary_static, w_static, inner_order):
    """Singularity-extracted contributions for one list of pairs.

    The smooth kernel part (exp(jkR)-1)/(4 pi R) integrates accurately on
    the plain outer rule; only the analytic static part, whose outer
    integrand has edge-singular derivatives, uses bary_static/w_static
    (possibly composed over quadrisection cells of the test triangle).
    """
    mesh = space.mesh
    k = params.k
    if len(t_near) == 0:
        return

    dofs = space.tri_dofs
    areas = mesh.areas
    tv = mesh.vertices[mesh.triangles]
    bary_in, w_in = rule(inner_order)
    nq_st = len(w_static)

    batch = max(1, int(4.0e6 / (nq_st * 3)))
    for b0 in range(0, len(t_near), batch):
        b1 = min(b0 + batch, len(t_near))
        ts = t_near[b0:b1]
        ss = s_near[b0:b1]
        nb = b1 - b0

        # smooth part on the plain outer rule
        obs_sm = np.einsum("qb,Bbx->Bqx", bary_in, tv[ts])
        src = np.einsum("qb,Bbx->Bqx", bary_in, tv[ss])
        r = np.linalg.norm(obs_sm[:, :, None, :] - src[:, None, :, :], axis=-1)
        # (exp(jkR)-1)/(4 pi R) with the R -> 0 limit jk/(4 pi); the lost
        # -k^2 R/(8 pi) real part at tiny kR is far below assembly accuracy
        rsafe = np.where(r > 0.0, r, 1.0)
        smooth = (np.exp(1j * k * rsafe) - 1.0) / (FOUR_PI * rsafe)
        smooth = np.where(r > 0.0, smooth, 1j * k / FOUR_PI)
        s_sm = np.einsum("p,bqp->bq", w_in, smooth) * areas[ss][:, None]
        v_sm = (
            np.einsum("p,bpx,bqp->bqx", w_in, src, smooth)
            * areas[ss][:, None, None]
            - obs_sm * s_sm[..., None]
        )
        blk_a, blk_phi = _pair_contract(space, ts, ss, obs_sm, w_in, s_sm, v_sm)

        # static part on the (refined) outer rule
        obs_st = np.einsum("qb,Bbx->Bqx", bary_static, tv[ts])
        i0, ivec = static_potential_integrals_batched(obs_st, tv[ss])
        s_st = i0 / FOUR_PI
        v_st = ivec / FOUR_PI
        a2, phi2 = _pair_contract(space, ts, ss, obs_st, w_static, s_st, v_st)
        blk_a += a2
        blk_phi += phi2

        rows = dofs[ts]
        cols = dofs[ss]
        np.add.at(ta, (rows[:, :, None], cols[:, None, :]), 0.5 * blk_a)
        np.add.at(ta, (cols[:, :, None], rows[:, None, :]),
                  0.5 * blk_a.transpose(0, 2, 1))
        np.add.at(tphi, (rows[:, :, None], cols[:, None, :]), 0.5 * blk_phi)
        np.add.at(tphi, (cols[:, :, None], rows[:, None, :]),
                  0.5 * blk_phi.transpose(0, 2, 1))


def assemble_excitation(
    space: RwgSpace,
    wave: PlaneWave,
    params: PhysicsParams,
    quad: QuadratureConfig = QuadratureConfig(),
) -> np.ndarray:
    """Tested incident field, e_m = <f_m, -E_inc> (plain Gauss, no singularity)."""
    mesh = space.mesh
    bary, w = rule(quad.order)
    pts = triangle_points(mesh.vertices[mesh.triangles], quad.order)
    field = wave.field_at(pts, params.k)           # (F, Q, 3)
    pf = mesh.vertices[space.tri_free]             # (F, 3, 3)
    d = pts[:, None, :, :] - pf[:, :, None, :]     # (F, 3, Q, 3)
    contrib = -0.5 * space.tri_signs * np.einsum(
        "q,faqx,fqx->fa", w, d, field
    )
    e = np.zeros(space.size, dtype=complex)
    np.add.at(e, space.tri_dofs, contrib)
    return e


def far_field(
    space: RwgSpace,
    currents: np.ndarray,
    params: PhysicsParams,
    directions: np.ndarray,
    quad: QuadratureConfig = QuadratureConfig(),
) -> np.ndarray:
    """Far-zone scattered field pattern of an RWG current.

    E_scattered ~ (exp(jkr)/r) F(u) with
    F(u) = (jk / 4 pi) (I - uu) integral J(r') exp(-jk u.r') dS'.

    directions: (D, 3) unit vectors. Returns (D, 3) complex F values.
    Bistatic RCS = 4 pi |F|^2 / |E_inc|^2.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    norms = np.linalg.norm(directions, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        raise ValueError("directions must be unit vectors")
    mesh = space.mesh
    k = params.k
    bary, w = rule(quad.order)
    pts, jvals = space.eval_current(currents, quad.order)   # (F,Q,3) both
    phase = np.exp(-1j * k * np.einsum("dx,fqx->dfq", directions, pts))
    rad = np.einsum("f,q,dfq,fqx->dx", mesh.areas, w, phase, jvals)
    rad_t = rad - directions * np.einsum("dx,dx->d", directions, rad)[:, None]
    return (1j * k / FOUR_PI) * rad_t


def bistatic_rcs(
    space: RwgSpace,
    currents: np.ndarray,
    params: PhysicsParams,
    directions: np.ndarray,
    incident_amplitude: float = 1.0,
    quad: QuadratureConfig = QuadratureConfig(),
) -> np.ndarray:
    f = far_field(space, currents, params, directions, quad)
    return FOUR_PI * np.sum(np.abs(f) ** 2, axis=1) / incident_amplitude**2
