"""Test adaptive band normalizers: sigma_i = band-top of the operator block."""
import sys

sys.path.insert(0, "src")
import numpy as np

from efiefilt.mesh import generate_icosphere
from efiefilt.rwg import RwgSpace, PhysicsParams
from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps, make_scaled_system
from efiefilt.errors import SingularMatrix


def lowpass(w, i, n):
    return 1.0 / (1.0 + (w / 2.0**i) ** n)


def build_Q_adaptive(lap_dense, block, n=2):
    """Q = sum_i (P_i - P_{i-1}) / sqrt(sigma_i), sigma_i = ||Qhat_i B Qhat_i||."""
    w, u = np.linalg.eigh(lap_dense)
    w = np.clip(w, 0.0, None)
    lam_min = w[w > 1e-12 * w.max()].min()
    lam_max = w.max()
    i_min = int(np.floor(np.log2(lam_min)))
    i_max = int(np.ceil(np.log2(lam_max)))
    binfo = []
    q_total = np.zeros_like(lap_dense)
    b_rot = u.T @ block @ u
    for i in range(i_min, i_max + 1):
        if i == i_min:
            mult = lowpass(w, i, n)
        else:
            mult = lowpass(w, i, n) - lowpass(w, i - 1, n)
        qhat = (u * mult) @ u.T
        band_block = (qhat @ block) @ qhat
        sigma = np.linalg.norm(band_block, 2)
        binfo.append((i, sigma))
        if sigma > 1e-14:
            q_total += qhat / np.sqrt(sigma)
    return q_total, binfo


params = PhysicsParams(1.0)
print("n=2 sharpness, 1 Hz")
conds = []
for s in (1, 2, 3):
    mesh = generate_icosphere(s, 1.0)
    space = RwgSpace.from_mesh(mesh)
    maps = build_maps(mesh)
    ops = assemble_operators(space, params)
    k = params.k
    t_full = ops.system_matrix()

    # dense W with sigma-tilde
    wS, uS = np.linalg.eigh(maps.LapSigma.toarray())
    winv = np.where(wS > 1e-9 * wS.max(), 1 / np.where(wS > 0, wS, 1), 0.0)
    sig_tilde = maps.Sigma.toarray() @ ((uS * winv) @ uS.T)
    w_mat = np.hstack([
        np.sqrt(k) * sig_tilde[:, maps.star_cols],
        maps.Lambda[:, maps.loop_cols].toarray() / np.sqrt(k),
    ])
    m_blocks = w_mat.T @ t_full @ w_mat
    ns = maps.n_stars
    lap_s_red = maps.LapSigma[maps.star_cols][:, maps.star_cols].toarray()
    lap_l_red = maps.LapLambda[maps.loop_cols][:, maps.loop_cols].toarray()

    qS, infoS = build_Q_adaptive(lap_s_red, m_blocks[:ns, :ns])
    qL, infoL = build_Q_adaptive(lap_l_red, m_blocks[ns:, ns:])
    qb = np.zeros_like(m_blocks, dtype=float)
    qb[:ns, :ns] = qS
    qb[ns:, ns:] = qL
    m_pre = qb @ m_blocks @ qb
    sv = np.linalg.svd(m_pre, compute_uv=False)
    cond = sv[0] / sv[-1]
    conds.append(cond)
    print(f"s={s}: bands_S={[i for i,_ in infoS]} cond(spectral)={cond:.3e}")
    print(f"    sigmas_S={['%.1e' % x for _, x in infoS]}")
    print(f"    sigmas_L={['%.1e' % x for _, x in infoL]}")

print("growth 1->3:", conds[-1] / conds[0])
