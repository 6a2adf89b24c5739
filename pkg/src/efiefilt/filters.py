"""Dyadic low-pass/band filters on graph Laplacians and the filter-sandwiched
block system.

For a sparse SPSD Laplacian the bank holds dyadic bands with cutoffs 2^i,
i running from floor(log2(lambda_min_nonzero)) up to ceil(log2(lambda_max)),
so the bands tile the whole nonzero spectrum. The low-pass member at cutoff
2^i has spectral multiplier

    p_i(lam) = 1 / (1 + (lam / 2^i)^n),

with even sharpness exponent n. Band filters are first differences,

    Qhat_lowest = P_lowest,   Qhat_i = P_i - P_{i-1},

and the plain band filters Q_i divide by the dyadic normalizer sqrt(2^i)
(the lowest band by 1). The preconditioner instead weights each band by the
inverse square root of the band-top response of the operator block it acts
on, which renormalizes every dyadic sub-interval of the block spectrum to
unit size; those weights are calibrated per system in SpectralSystem.

Low-pass applications solve I + (D/2^i)^n. Bands whose shifted Laplacian is
mildly conditioned use Jacobi-preconditioned CG with the Laplacian power
applied matrix-free (n repeated sparse products); low cutoffs make that
system stiff (condition ~ (lambda_max/2^i)^n), and those bands switch to a
cached sparse LU factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError
from .loopstar import (
    QuasiHelmholtzMaps,
    ScaledSystem,
    dense_sigma_tilde,
    pinv_laplacian_apply,
    symmetric_operator,
)

DEFAULT_SHARPNESS = 2
DEFAULT_FILTER_TOL = 1e-10
_CG_CONDITION_LIMIT = 64.0  # (lambda_max / 2^i)^n above this -> sparse LU


def estimate_lambda_max(laplacian, tol: float = 1e-3, max_iter: int = 10000) -> float:
    """Largest eigenvalue of a symmetric nonnegative sparse matrix.

    Deterministic power iteration from the normalized all-ones vector,
    restarting from the first canonical basis vector if that start is
    (numerically) in the nullspace or orthogonal to the dominant eigenvector.
    """
    n = laplacian.shape[0]
    scale = abs(laplacian).sum(axis=1).max()  # Gershgorin bound
    if scale == 0.0:
        return 0.0
    v = np.ones(n) / np.sqrt(n)
    restarted = False
    lam = lam_old = 0.0
    for it in range(max_iter):
        w = laplacian @ v
        nw = np.linalg.norm(w)
        if nw <= 1e-14 * scale:
            if restarted:
                raise ConvergenceError("power iteration found only nullspace")
            v = np.zeros(n)
            v[0] = 1.0
            restarted = True
            continue
        lam = float(v @ w)
        v = w / nw
        # run well past the requested accuracy; Rayleigh quotients converge
        # twice as fast as the iterates
        if it > 2 and abs(lam - lam_old) <= 1e-5 * tol * max(lam, 1e-300):
            return lam
        lam_old = lam
    if abs(lam - lam_old) <= tol * max(lam, 1e-300):
        return lam
    raise ConvergenceError("power iteration did not converge")


def estimate_lambda_min(laplacian, nullspace=None, tol: float = 2e-2,
                        max_iter: int = 200) -> float:
    """Smallest nonzero eigenvalue via deflated inverse power iteration.

    Only band-resolution accuracy is needed (the result feeds floor(log2)),
    so the tolerance is loose. nullspace: optional (n, c) orthonormal basis
    of the exact nullspace to deflate (e.g. component indicators).
    """
    n = laplacian.shape[0]
    if nullspace is None:
        nullspace = np.zeros((n, 0))

    def project(v):
        if nullspace.shape[1] == 0:
            return v
        return v - nullspace @ (nullspace.T @ v)

    lam_max = estimate_lambda_max(laplacian)
    if lam_max == 0.0:
        raise ConvergenceError("zero matrix has no nonzero eigenvalues")
    v = project(np.linspace(1.0, 2.0, n))
    v /= np.linalg.norm(v)
    lam = lam_old = 0.0
    for it in range(max_iter):
        w = _cg_spsd(laplacian, v, project, tol=1e-8, max_iter=200 * n)
        nw = np.linalg.norm(w)
        lam = 1.0 / float(v @ w)
        v = project(w / nw)
        v /= np.linalg.norm(v)
        if it > 1 and abs(lam - lam_old) <= tol * lam:
            return lam
        lam_old = lam
    return lam  # loose estimate is acceptable; bands only need floor(log2)


def _cg_spsd(mat, rhs, project, tol, max_iter):
    x = np.zeros_like(rhs)
    r = project(rhs.copy())
    bnorm = np.linalg.norm(r)
    if bnorm == 0.0:
        return x
    p = r.copy()
    rs = float(r @ r)
    for _ in range(max_iter):
        if np.sqrt(rs) <= tol * bnorm:
            return x
        ap = project(mat @ p)
        alpha = rs / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise ConvergenceError("inner CG for inverse iteration stalled")


@dataclass
class FilterBank:
    """Dyadic filter family for one SPSD Laplacian.

    Band indices run i_min .. n_bands (i_min may be negative so the bands
    tile the nonzero spectrum down to lambda_min). For matrices whose
    spectrum starts at or above 1, i_min == 0 and the indexing reduces to
    bands 0 .. N with N = ceil(log2(lambda_max)).
    """

    laplacian: sp.csr_matrix
    sharpness: int = DEFAULT_SHARPNESS
    solver_tol: float = DEFAULT_FILTER_TOL
    lambda_max: float = 0.0
    lambda_min: float = 1.0
    i_min: int = 0
    n_bands: int = 0
    _lap_power: sp.csr_matrix | None = field(default=None, repr=False)
    _jacobi: dict = field(default_factory=dict, repr=False)
    _lu: dict = field(default_factory=dict, repr=False)
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.laplacian.shape[0]

    @property
    def band_indices(self) -> range:
        return range(self.i_min, self.n_bands + 1)

    def band_cutoff(self, i: int) -> float:
        return float(2.0**i)

    def band_normalizer(self, i: int) -> float:
        """Dyadic normalizer sigma_max^i: band upper edge (1 for the lowest)."""
        return 1.0 if i == self.i_min else float(2.0**i)

    def eigendecomposition(self):
        """Cached dense eigendecomposition (dense paths and calibration)."""
        if self._eig is None:
            w, u = np.linalg.eigh(self.laplacian.toarray())
            self._eig = (np.clip(w, 0.0, None), u)
        return self._eig


def build_filter_bank(
    laplacian,
    sharpness: int = DEFAULT_SHARPNESS,
    solver_tol: float = DEFAULT_FILTER_TOL,
    n_bands: int | None = None,
    nullspace=None,
    lambda_min: float | None = None,
) -> FilterBank:
    """Build a bank; lambda extremes are estimated by (inverse) power iteration."""
    if sharpness < 2 or sharpness % 2 != 0:
        raise ValueError("sharpness must be an even integer >= 2")
    lap = sp.csr_matrix(laplacian).astype(float)
    lam_max = estimate_lambda_max(lap)
    if lam_max <= 0.0:
        raise ValueError("Laplacian has no positive eigenvalues")
    if lambda_min is None:
        lambda_min = estimate_lambda_min(lap, nullspace)
    if n_bands is None:
        n_bands = int(np.ceil(np.log2(lam_max)))
    # bands tile [lambda_min, lambda_max]; never start above the classic
    # band-0 cutoff so banks on spectra >= 1 keep the plain 0..N indexing
    i_min = min(0, int(np.floor(np.log2(lambda_min))), n_bands)

    bank = FilterBank(
        laplacian=lap,
        sharpness=sharpness,
        solver_tol=solver_tol,
        lambda_max=lam_max,
        lambda_min=lambda_min,
        i_min=i_min,
        n_bands=n_bands,
    )
    power = lap
    for _ in range(sharpness - 1):
        power = (power @ lap).tocsr()
    bank._lap_power = power
    diag_n = power.diagonal()
    for i in bank.band_indices:
        bank._jacobi[i] = 1.0 + diag_n / (2.0**i) ** sharpness
    return bank


# Spectral multipliers (shared by dense paths and tests).

def lowpass_multiplier(lam, i: int, sharpness: int):
    lam = np.asarray(lam, dtype=float)
    return 1.0 / (1.0 + (lam / 2.0**i) ** sharpness)


def band_multiplier(lam, i: int, sharpness: int, i_min: int = 0):
    """Multiplier of Q_i; the lowest band is the plain low-pass."""
    if i == i_min:
        return lowpass_multiplier(lam, i_min, sharpness)
    return (
        lowpass_multiplier(lam, i, sharpness)
        - lowpass_multiplier(lam, i - 1, sharpness)
    ) / np.sqrt(2.0**i)


def total_multiplier(lam, n_bands: int, sharpness: int, i_min: int = 0):
    """Multiplier of Q = sum of all dyadically normalized bands."""
    out = lowpass_multiplier(lam, i_min, sharpness)
    for i in range(i_min + 1, n_bands + 1):
        out = out + band_multiplier(lam, i, sharpness, i_min)
    return out


def _solve_shifted(bank: FilterBank, i: int, x: np.ndarray) -> np.ndarray:
    """Solve (I + (D/2^i)^n) y = x; CG for mild bands, cached LU for stiff ones."""
    n = bank.sharpness
    stiffness = (bank.lambda_max / 2.0**i) ** n
    if stiffness > _CG_CONDITION_LIMIT:
        if i not in bank._lu:
            m = (sp.identity(bank.size, format="csc")
                 + bank._lap_power * (2.0**i) ** (-n)).tocsc()
            bank._lu[i] = spla.splu(m)
        lu = bank._lu[i]
        if np.iscomplexobj(x):
            return lu.solve(x.real) + 1j * lu.solve(x.imag)
        return lu.solve(x)

    lap = bank.laplacian
    inv_cut = 1.0 / 2.0**i

    def op(v):
        y = v
        for _ in range(n):
            y = (lap @ y) * inv_cut
        return v + y

    jac = bank._jacobi[i]
    bnorm = np.linalg.norm(x)
    if bnorm == 0.0:
        return np.zeros_like(x)
    dtype = complex if np.iscomplexobj(x) else float
    y = np.zeros_like(x, dtype=dtype)
    r = x.astype(dtype)
    z = r / jac
    p = z.copy()
    rz = np.vdot(r, z).real
    max_iter = 200 * bank.size + 200
    for _ in range(max_iter):
        if np.linalg.norm(r) <= bank.solver_tol * bnorm:
            return y
        ap = op(p)
        alpha = rz / np.vdot(p, ap).real
        y += alpha * p
        r -= alpha * ap
        z = r / jac
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(r) <= bank.solver_tol * bnorm:
        return y
    raise ConvergenceError(
        f"filter CG stalled (band {i}, residual {np.linalg.norm(r) / bnorm:.2e})"
    )


def apply_lowpass(bank: FilterBank, i: int, x: np.ndarray) -> np.ndarray:
    """Apply P_i = (I + (D/2^i)^n)^(-1)."""
    if not bank.i_min <= i <= bank.n_bands:
        raise ValueError(f"band index {i} outside {bank.i_min}..{bank.n_bands}")
    return _solve_shifted(bank, i, np.asarray(x))


def apply_band(bank: FilterBank, i: int, x: np.ndarray) -> np.ndarray:
    """Apply Q_i = (P_i - P_{i-1}) / sqrt(2^i); the lowest band is P_{i_min}."""
    if i == bank.i_min:
        return apply_lowpass(bank, i, x)
    if not bank.i_min < i <= bank.n_bands:
        raise ValueError(f"band index {i} outside {bank.i_min}..{bank.n_bands}")
    return (
        apply_lowpass(bank, i, x) - apply_lowpass(bank, i - 1, x)
    ) / np.sqrt(2.0**i)


def apply_Q(bank: FilterBank, x: np.ndarray) -> np.ndarray:
    """Total dyadically normalized filter: Q_lowest + sum of higher bands."""
    weights = np.array(
        [1.0 / np.sqrt(bank.band_normalizer(i)) for i in bank.band_indices]
    )
    return apply_Q_weighted(bank, weights, x)


def apply_Q_weighted(bank: FilterBank, weights: np.ndarray, x: np.ndarray
                     ) -> np.ndarray:
    """Weighted band sum: w_0 P_lowest + sum_j w_j (P_j - P_{j-1})."""
    idx = list(bank.band_indices)
    if len(weights) != len(idx):
        raise ValueError(f"expected {len(idx)} band weights, got {len(weights)}")
    plist = [apply_lowpass(bank, i, x) for i in idx]
    out = weights[0] * plist[0]
    for j in range(1, len(idx)):
        out = out + weights[j] * (plist[j] - plist[j - 1])
    return out


def dense_Q(bank: FilterBank, weights: np.ndarray | None = None) -> np.ndarray:
    """Dense Q via eigendecomposition (dense condition studies and oracles)."""
    w, u = bank.eigendecomposition()
    idx = list(bank.band_indices)
    if weights is None:
        weights = np.array(
            [1.0 / np.sqrt(bank.band_normalizer(i)) for i in idx]
        )
    mult = np.zeros_like(w)
    prev = None
    for j, i in enumerate(idx):
        cur = lowpass_multiplier(w, i, bank.sharpness)
        mult += weights[j] * (cur if prev is None else cur - prev)
        prev = cur
    return (u * mult) @ u.T


@dataclass(frozen=True)
class BlockPreconditioner:
    """Filter banks for the star (Sigma) and loop (Lambda) sides; applied
    two-sided as diag(Q_Sigma, Q_Lambda) around the block system."""

    star_bank: FilterBank
    loop_bank: FilterBank


def build_preconditioner(
    maps: QuasiHelmholtzMaps,
    sharpness: int = DEFAULT_SHARPNESS,
    solver_tol: float = DEFAULT_FILTER_TOL,
    n_bands: int | None = None,
) -> BlockPreconditioner:
    """Banks on the full dual/primal Laplacians (constants deflated)."""
    return BlockPreconditioner(
        star_bank=build_filter_bank(
            maps.LapSigma, sharpness, solver_tol, n_bands,
            nullspace=maps.nullspace_basis("sigma"),
        ),
        loop_bank=build_filter_bank(
            maps.LapLambda, sharpness, solver_tol, n_bands,
            nullspace=maps.nullspace_basis("lambda"),
        ),
    )


@dataclass
class SpectralSystem:
    """Filter-sandwiched block system (star block first):

        M = diag(Q_S, Q_L) W^T T W diag(Q_S, Q_L),
        W = [sqrt(k) SigmaTilde | Lambda / sqrt(k)],

    with SigmaTilde = Sigma (Sigma^T Sigma)^+ and the full column sets
    (nullity 2 per connected component; the nullspace never reaches the
    currents). Band weights renormalize each dyadic sub-interval of the
    diagonal blocks by its largest response, which is what keeps the
    condition number flat under refinement; they are calibrated once at
    construction. Tphi contributions to loop rows/columns are dropped
    exactly (the loops are divergence-free), which avoids amplifying the
    rounding-level residual of that identity by 1/k^2 at low frequency.

    Solving M y = make_rhs(e) and mapping back with recover_currents(y)
    reproduces the RWG solution of T j = e.
    """

    ops: object
    maps: QuasiHelmholtzMaps
    precond: BlockPreconditioner
    star_weights: np.ndarray
    loop_weights: np.ndarray
    pinv_tol: float = 1e-12

    @property
    def n_stars_full(self) -> int:
        return self.maps.Sigma.shape[1]

    @property
    def size(self) -> int:
        return self.maps.Sigma.shape[1] + self.maps.Lambda.shape[1]

    @property
    def nullity(self) -> int:
        return 2 * self.maps.mesh.n_components

    def _q_star(self, x):
        return apply_Q_weighted(self.precond.star_bank, self.star_weights, x)

    def _q_loop(self, x):
        return apply_Q_weighted(self.precond.loop_bank, self.loop_weights, x)

    def _qblock(self, y):
        ns = self.n_stars_full
        return np.concatenate([self._q_star(y[:ns]), self._q_loop(y[ns:])])

    def matvec(self, y: np.ndarray) -> np.ndarray:
        k = self.ops.params.k
        maps = self.maps
        ns = self.n_stars_full
        yq = self._qblock(y)
        ys, yl = yq[:ns], yq[ns:]
        st_ys = maps.Sigma @ pinv_laplacian_apply(maps, ys, "sigma", self.pinv_tol)
        u = np.sqrt(k) * st_ys + (maps.Lambda @ yl) / np.sqrt(k)
        ta_u = self.ops.ta @ u
        phi_s = self.ops.tphi @ st_ys
        # star rows: sqrt(k) SigmaTilde^T (jk Ta u + (1/jk) Tphi u_star)
        star_in = 1j * k**1.5 * ta_u - 1j * np.sqrt(k) * phi_s
        zs = pinv_laplacian_apply(
            maps, maps.Sigma.T @ star_in, "sigma", self.pinv_tol
        )
        zl = 1j * np.sqrt(k) * (maps.Lambda.T @ ta_u)
        return self._qblock(np.concatenate([zs, zl]))

    @property
    def operator(self) -> spla.LinearOperator:
        return symmetric_operator(self.matvec, self.size)

    def make_rhs(self, e: np.ndarray) -> np.ndarray:
        k = self.ops.params.k
        maps = self.maps
        zs = np.sqrt(k) * pinv_laplacian_apply(
            maps, maps.Sigma.T @ e, "sigma", self.pinv_tol
        )
        zl = (maps.Lambda.T @ e) / np.sqrt(k)
        return self._qblock(np.concatenate([zs, zl]))

    def recover_currents(self, y: np.ndarray) -> np.ndarray:
        k = self.ops.params.k
        maps = self.maps
        ns = self.n_stars_full
        yq = self._qblock(y)
        st_ys = maps.Sigma @ pinv_laplacian_apply(
            maps, yq[:ns], "sigma", self.pinv_tol
        )
        return np.sqrt(k) * st_ys + (maps.Lambda @ yq[ns:]) / np.sqrt(k)

    # ---- dense paths -------------------------------------------------

    def dense_blocks(self) -> np.ndarray:
        """Dense W^T T W (star first) with loop Tphi terms dropped exactly."""
        k = self.ops.params.k
        st = dense_sigma_tilde(self.maps)
        lam = self.maps.Lambda.toarray()
        ta, tphi = self.ops.ta, self.ops.tphi
        ta_st = ta @ st
        ta_lam = ta @ lam
        ss = 1j * k**2 * (st.T @ ta_st) - 1j * (st.T @ (tphi @ st))
        sl = 1j * k * (st.T @ ta_lam)
        ll = 1j * (lam.T @ ta_lam)
        ns = st.shape[1]
        out = np.empty((self.size, self.size), dtype=complex)
        out[:ns, :ns] = ss
        out[:ns, ns:] = sl
        out[ns:, :ns] = sl.T
        out[ns:, ns:] = ll
        return out

    def dense_qblock(self) -> np.ndarray:
        ns = self.n_stars_full
        out = np.zeros((self.size, self.size))
        out[:ns, :ns] = dense_Q(self.precond.star_bank, self.star_weights)
        out[ns:, ns:] = dense_Q(self.precond.loop_bank, self.loop_weights)
        return out

    def to_dense(self) -> np.ndarray:
        q = self.dense_qblock()
        return q @ self.dense_blocks() @ q


def _weights_from_sigmas(sigmas):
    """1/sqrt weights with a relative floor against degenerate bands."""
    sig = np.asarray(sigmas, dtype=float)
    floor = 1e-12 * sig.max() if sig.max() > 0 else 1e-300
    return 1.0 / np.sqrt(np.maximum(sig, floor))


def _band_weights_dense(bank: FilterBank, block: np.ndarray) -> np.ndarray:
    """1/sqrt of each band's top response, from the rotated dense block."""
    w, u = bank.eigendecomposition()
    rot = u.T @ block @ u
    sigmas = []
    prev = None
    for i in bank.band_indices:
        cur = lowpass_multiplier(w, i, bank.sharpness)
        mult = cur if prev is None else cur - prev
        prev = cur
        banded = (mult[:, None] * rot) * mult[None, :]
        sigmas.append(_dense_2norm(banded))
    return _weights_from_sigmas(sigmas)


def _dense_2norm(a, tol=1e-3, max_iter=200):
    """Deterministic power-iteration estimate of the matrix 2-norm."""
    n = a.shape[1]
    v = np.ones(n) / np.sqrt(n)
    s_old = 0.0
    for _ in range(max_iter):
        w = a.conj().T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        s = np.sqrt(nw)
        v = (w / nw).real if not np.iscomplexobj(a) else w / nw
        if abs(s - s_old) <= 0.5 * tol * s:
            return float(s)
        s_old = s
    return float(s)


def _band_weights_matfree(bank, apply_block, m, tol=1e-2, iters=60):
    """Band weights via power iteration on Qhat B Qhat (no dense block)."""
    weights = []
    idx = list(bank.band_indices)
    for j, i in enumerate(idx):
        def qhat(x, i=i, j=j):
            if j == 0:
                return apply_lowpass(bank, i, x)
            return apply_lowpass(bank, i, x) - apply_lowpass(bank, i - 1, x)

        def av(x):
            return qhat(apply_block(qhat(x)))

        v = np.ones(m, dtype=complex) / np.sqrt(m)
        s = s_old = 0.0
        for _ in range(iters):
            w = av(v)
            w = np.conj(av(np.conj(w)))  # A^H (A v) for complex-symmetric A
            nw = np.linalg.norm(w)
            if nw == 0.0:
                break
            s = np.sqrt(nw)
            v = w / nw
            if abs(s - s_old) <= 0.5 * tol * s:
                break
            s_old = s
        weights.append(1.0 / np.sqrt(max(s, 1e-30)))
    return np.array(weights)


def precondition_system(
    scaled: ScaledSystem,
    precond: BlockPreconditioner | None = None,
    sharpness: int = DEFAULT_SHARPNESS,
    solver_tol: float = DEFAULT_FILTER_TOL,
    n_bands: int | None = None,
    calibrate: str = "auto",
) -> SpectralSystem:
    """Build the filter-sandwiched block system from a loop-star system.

    calibrate: "dense" rotates the dense diagonal blocks through the
    Laplacian eigenbases (exact band responses; the default at desk scale),
    "iterative" runs matrix-free power iterations per band, "auto" picks by
    problem size.
    """
    maps = scaled.maps
    ops = scaled.ops
    if precond is None:
        precond = build_preconditioner(maps, sharpness, solver_tol, n_bands)
    expected = (maps.Sigma.shape[1], maps.Lambda.shape[1])
    got = (precond.star_bank.size, precond.loop_bank.size)
    if expected != got:
        raise ValueError(f"filter bank sizes {got} do not match maps {expected}")

    system = SpectralSystem(
        ops=ops,
        maps=maps,
        precond=precond,
        star_weights=np.array([]),
        loop_weights=np.array([]),
    )
    if calibrate == "auto":
        calibrate = "dense" if system.size <= 6000 else "iterative"
    k = ops.params.k
    if calibrate == "dense":
        blocks = system.dense_blocks()
        ns = system.n_stars_full
        system.star_weights = _band_weights_dense(precond.star_bank,
                                                  blocks[:ns, :ns])
        system.loop_weights = _band_weights_dense(precond.loop_bank,
                                                  blocks[ns:, ns:])
    elif calibrate == "iterative":
        def star_block(x):
            st_x = maps.Sigma @ pinv_laplacian_apply(maps, x, "sigma")
            out = 1j * k**2 * (ops.ta @ st_x) - 1j * (ops.tphi @ st_x)
            return pinv_laplacian_apply(maps, maps.Sigma.T @ out, "sigma")

        def loop_block(x):
            return 1j * (maps.Lambda.T @ (ops.ta @ (maps.Lambda @ x)))

        system.star_weights = _band_weights_matfree(
            precond.star_bank, star_block, precond.star_bank.size
        )
        system.loop_weights = _band_weights_matfree(
            precond.loop_bank, loop_block, precond.loop_bank.size
        )
    else:
        raise ValueError(f"unknown calibration mode {calibrate!r}")
    return system
