"""Where does q(lam)^2 * m(lam) deviate from flat?"""
import sys

sys.path.insert(0, "src")
import numpy as np

from efiefilt.mesh import generate_icosphere
from efiefilt.rwg import RwgSpace, PhysicsParams
from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps


def lowpass(w, i, n):
    return 1.0 / (1.0 + (w / 2.0**i) ** n)


def q_scalar(wc, block_diag, n):
    nz = wc > 1e-9 * wc.max()
    lam_min, lam_max = wc[nz].min(), wc.max()
    i_min = int(np.floor(np.log2(lam_min)))
    i_max = int(np.ceil(np.log2(lam_max)))
    q = np.zeros_like(wc)
    sig = []
    for i in range(i_min, i_max + 1):
        mult = lowpass(wc, i, n)
        if i > i_min:
            mult = mult - lowpass(wc, i - 1, n)
        # sharp-band normalizer: max diag response among eigs in (2^{i-1}, 2^i]
        lo = -np.inf if i == i_min else 2.0 ** (i - 1)
        band = (wc > lo) & (wc <= 2.0**i) & nz
        sigma_sharp = block_diag[band].max() if band.any() else np.nan
        sig.append((i, sigma_sharp, band.sum()))
        if np.isfinite(sigma_sharp):
            q += mult / np.sqrt(sigma_sharp)
    return q, sig


params = PhysicsParams(1.0)
n = 2
for s in (2, 3):
    mesh = generate_icosphere(s, 1.0)
    space = RwgSpace.from_mesh(mesh)
    maps = build_maps(mesh)
    ops = assemble_operators(space, params)
    k = params.k
    t_full = ops.system_matrix()

    wS, uS = np.linalg.eigh(maps.LapSigma.toarray())
    winv = np.where(wS > 1e-9 * wS.max(), 1 / np.where(wS > 0, wS, 1), 0.0)
    sig_tilde = maps.Sigma.toarray() @ ((uS * winv) @ uS.T)
    star = k * (sig_tilde.T @ t_full @ sig_tilde)
    mS = np.abs(np.diag(uS.T @ star @ uS))

    wL, uL = np.linalg.eigh(maps.LapLambda.toarray())
    loop = (uL.T @ (maps.Lambda.T @ t_full @ maps.Lambda).toarray() if False else
            uL.T @ (maps.Lambda.T @ (t_full @ maps.Lambda.toarray())) @ uL / k)
    mL = np.abs(np.diag(loop))

    wSc = np.clip(wS, 0, None)
    wLc = np.clip(wL, 0, None)
    qS, sigS = q_scalar(wSc, mS, n)
    qL, sigL = q_scalar(wLc, mL, n)

    nzS = wSc > 1e-9 * wSc.max()
    nzL = wLc > 1e-9 * wLc.max()
    prodS = (qS**2 * mS)[nzS]
    prodL = (qL**2 * mL)[nzL]
    print(f"s={s}:")
    print(f"  star q^2*m range [{prodS.min():.3e}, {prodS.max():.3e}] spread {prodS.max()/prodS.min():.1f}")
    print(f"  loop q^2*m range [{prodL.min():.3e}, {prodL.max():.3e}] spread {prodL.max()/prodL.min():.1f}")
    lamSmin = wSc[nzS][np.argmin(prodS)]
    lamSmax = wSc[nzS][np.argmax(prodS)]
    lamLmin = wLc[nzL][np.argmin(prodL)]
    lamLmax = wLc[nzL][np.argmax(prodL)]
    print(f"  star extremes at lam {lamSmin:.3e} (min) {lamSmax:.3e} (max); lam2={wSc[nzS].min():.3e}")
    print(f"  loop extremes at lam {lamLmin:.3e} (min) {lamLmax:.3e} (max); lam2={wLc[nzL].min():.3e}")
    print(f"  star band sigmas: {[('%d' % i, '%.2e' % x, int(c)) for i, x, c in sigS]}")
    print(f"  loop band sigmas: {[('%d' % i, '%.2e' % x, int(c)) for i, x, c in sigL]}")
