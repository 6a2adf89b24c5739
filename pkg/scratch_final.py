"""Clean-block full-size formulation: the definitive conditioning study."""
import sys

sys.path.insert(0, "src")
import numpy as np

from efiefilt.mesh import generate_icosphere
from efiefilt.rwg import RwgSpace, PhysicsParams
from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps


def lowpass(w, i, n):
    return 1.0 / (1.0 + (w / 2.0**i) ** n)


def build_Q_adaptive(w, u, block, n):
    wc = np.clip(w, 0.0, None)
    nz = wc > 1e-9 * wc.max()
    lam_min, lam_max = wc[nz].min(), wc.max()
    i_min = int(np.floor(np.log2(lam_min)))
    i_max = int(np.ceil(np.log2(lam_max)))
    q_total = np.zeros((len(w), len(w)))
    for i in range(i_min, i_max + 1):
        mult = lowpass(wc, i, n)
        if i > i_min:
            mult -= lowpass(wc, i - 1, n)
        qhat = (u * mult) @ u.T
        sigma = np.linalg.norm(qhat @ block @ qhat, 2)
        q_total += qhat / np.sqrt(sigma)
    return q_total


def clean_blocks(ops, maps, k):
    """Block matrix of W^T T W with Tphi Lambda = 0 imposed, W = [rk S~ | L/rk]."""
    wS, uS = np.linalg.eigh(maps.LapSigma.toarray())
    winv = np.where(wS > 1e-9 * wS.max(), 1 / np.where(wS > 0, wS, 1), 0.0)
    st = maps.Sigma.toarray() @ ((uS * winv) @ uS.T)   # sigma-tilde (E, F)
    lam = maps.Lambda.toarray()
    ta, tphi = ops.ta, ops.tphi
    ss = 1j * k**2 * (st.T @ ta @ st) - 1j * (st.T @ tphi @ st)
    sl = 1j * k * (st.T @ ta @ lam)
    ll = 1j * (lam.T @ ta @ lam)
    nf, nv = st.shape[1], lam.shape[1]
    m = np.zeros((nf + nv, nf + nv), dtype=complex)
    m[:nf, :nf] = ss
    m[:nf, nf:] = sl
    m[nf:, :nf] = sl.T
    m[nf:, nf:] = ll
    return m


def clean_tls(ops, maps, k):
    """Rectangular-Upsilon loop-star blocks (loop first), clean."""
    lam = maps.Lambda.toarray()
    sig = maps.Sigma.toarray()
    ta, tphi = ops.ta, ops.tphi
    ll = 1j * (lam.T @ ta @ lam)
    ls = 1j * k * (lam.T @ ta @ sig)
    ss = 1j * k**2 * (sig.T @ ta @ sig) - 1j * (sig.T @ tphi @ sig)
    nv, nf = lam.shape[1], sig.shape[1]
    m = np.zeros((nv + nf, nv + nf), dtype=complex)
    m[:nv, :nv] = ll
    m[:nv, nv:] = ls
    m[nv:, :nv] = ls.T
    m[nv:, nv:] = ss
    return m


params = PhysicsParams(1.0)
results = {}
for s in (1, 2, 3):
    mesh = generate_icosphere(s, 1.0)
    space = RwgSpace.from_mesh(mesh)
    maps = build_maps(mesh)
    ops = assemble_operators(space, params)
    k = params.k
    nf, nv, ne = mesh.num_triangles, mesh.num_vertices, mesh.num_edges

    m_tls = clean_tls(ops, maps, k)
    sv = np.linalg.svd(m_tls, compute_uv=False)
    cond_tls_full = sv[0] / sv[ne - 1]   # rank = E (two exact zeros: V+F-2 ... comps)

    # square dropped version
    keepL = np.r_[np.arange(nv - 1), ]
    keepS = nv + np.arange(nf - 1)
    idx = np.r_[keepL, keepS]
    sv2 = np.linalg.svd(m_tls[np.ix_(idx, idx)], compute_uv=False)
    cond_tls_sq = sv2[0] / sv2[-1]

    m_blocks = clean_blocks(ops, maps, k)
    wS, uS = np.linalg.eigh(maps.LapSigma.toarray())
    wL, uL = np.linalg.eigh(maps.LapLambda.toarray())
    for n in (2, 4):
        qS = build_Q_adaptive(wS, uS, m_blocks[:nf, :nf], n)
        qL = build_Q_adaptive(wL, uL, m_blocks[nf:, nf:], n)
        qb = np.zeros((nf + nv, nf + nv))
        qb[:nf, :nf] = qS
        qb[nf:, nf:] = qL
        m_pre = qb @ m_blocks @ qb
        svp = np.linalg.svd(m_pre, compute_uv=False)
        cond_sp = svp[0] / svp[ne - 1]
        results.setdefault(n, []).append(cond_sp)
    print(f"s={s} h={mesh.h:.4f}: TLS(full)={cond_tls_full:.4e} "
          f"TLS(square-drop)={cond_tls_sq:.4e} "
          f"spectral n=2: {results[2][-1]:.4e}  n=4: {results[4][-1]:.4e}")

hs = np.array([0.5823, 0.2993, 0.1507])
x = np.log(1 / hs)
print()
for n in (2, 4):
    c = np.array(results[n])
    print(f"spectral n={n}: slope {np.polyfit(x, np.log(c), 1)[0]:+.2f} "
          f"growth {c[-1]/c[0]:.2f}x")
