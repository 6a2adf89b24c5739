"""Loop/star incidence maps, graph Laplacians, and the scaled system.

Sign conventions (fixed for reproducibility; a global flip is harmless):
  Lambda[e, v] = +1 if v is the smaller-index endpoint of edge e, -1 for
      the larger one. Columns are exactly divergence-free +/-1 loop
      combinations of the (unnormalized) RWG functions.
  Sigma[e, f] = +1 if f is the plus triangle of edge e, -1 if minus.

With these, Lambda^T Lambda is the vertex graph Laplacian and
Sigma^T Sigma the face-adjacency (dual) Laplacian with diagonal 3.

The frequency-scaled system keeps the full column sets,
Upsilon = [Lambda/sqrt(k) | Sigma*sqrt(k)], which is rank-deficient by one
loop and one star per connected component (the constant vectors). The
transformed operator is applied with the identity Tphi Lambda = 0 imposed
algebraically: forming Upsilon^T (jk Ta + Tphi/(jk)) Upsilon literally
would amplify the rounding-level residual of that identity by 1/k^2,
which at hertz-range frequencies swamps the loop block. Condition numbers
are taken over the nonzero singular values (rank = E). A reduced square
variant (per-component highest-index loop and star columns dropped) is
available but introduces spurious grounding modes at the bottom of the
spectrum, so the full form is the default everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import OperatorSet
from .errors import ConvergenceError, SingularMatrix
from .mesh import TriangleMesh

DENSE_COND_LIMIT = 6000


@dataclass(frozen=True)
class QuasiHelmholtzMaps:
    """Sparse loop/star transformation matrices and their Laplacians."""

    mesh: TriangleMesh
    Lambda: sp.csr_matrix          # (E, V)
    Sigma: sp.csr_matrix           # (E, F)
    LapLambda: sp.csr_matrix       # (V, V)
    LapSigma: sp.csr_matrix        # (F, F)
    dropped_loop: np.ndarray       # per-component highest vertex index
    dropped_star: np.ndarray       # per-component highest face index
    loop_cols: np.ndarray          # vertex columns kept by the reduced variant
    star_cols: np.ndarray          # face columns kept by the reduced variant

    @property
    def n_loops(self) -> int:
        return len(self.loop_cols)

    @property
    def n_stars(self) -> int:
        return len(self.star_cols)

    def nullspace_basis(self, side: str) -> np.ndarray:
        """Orthonormal Laplacian nullspace (per-component indicator vectors)."""
        if side == "sigma":
            labels = self.mesh.face_component
        elif side == "lambda":
            labels = self.mesh.vertex_component
        else:
            raise ValueError("side must be 'sigma' or 'lambda'")
        ncomp = self.mesh.n_components
        basis = np.zeros((len(labels), ncomp))
        for c in range(ncomp):
            m = labels == c
            basis[m, c] = 1.0 / np.sqrt(m.sum())
        return basis


def build_maps(mesh: TriangleMesh) -> QuasiHelmholtzMaps:
    """Assemble Lambda, Sigma and the two graph Laplacians."""
    ne = mesh.num_edges
    nv = mesh.num_vertices
    nf = mesh.num_triangles
    rows = np.repeat(np.arange(ne), 2)

    lam = sp.csr_matrix(
        (np.tile([1.0, -1.0], ne), (rows, mesh.edges.ravel())),
        shape=(ne, nv),
    )
    sig = sp.csr_matrix(
        (np.tile([1.0, -1.0], ne), (rows, mesh.edge_tris.ravel())),
        shape=(ne, nf),
    )
    lap_lambda = (lam.T @ lam).tocsr()
    lap_sigma = (sig.T @ sig).tocsr()

    ncomp = mesh.n_components
    dropped_loop = np.array(
        [np.max(np.nonzero(mesh.vertex_component == c)[0]) for c in range(ncomp)],
        dtype=np.int64,
    )
    dropped_star = np.array(
        [np.max(np.nonzero(mesh.face_component == c)[0]) for c in range(ncomp)],
        dtype=np.int64,
    )
    loop_cols = np.setdiff1d(np.arange(nv), dropped_loop)
    star_cols = np.setdiff1d(np.arange(nf), dropped_star)

    return QuasiHelmholtzMaps(
        mesh=mesh,
        Lambda=lam,
        Sigma=sig,
        LapLambda=lap_lambda,
        LapSigma=lap_sigma,
        dropped_loop=dropped_loop,
        dropped_star=dropped_star,
        loop_cols=loop_cols,
        star_cols=star_cols,
    )


def _deflated_cg(lap, rhs, nullbasis, tol, max_iter):
    """CG on a singular SPSD Laplacian with the nullspace projected out.

    Iterates are re-projected every step so roundoff cannot drift into the
    nullspace.
    """

    def project(v):
        if nullbasis.shape[1] == 0:
            return v
        return v - nullbasis @ (nullbasis.T @ v)

    b = project(np.asarray(rhs, dtype=complex if np.iscomplexobj(rhs) else float))
    bnorm = np.linalg.norm(b)
    # inputs (numerically) inside the nullspace map to zero
    if bnorm <= 1e-14 * max(np.linalg.norm(rhs), 1e-300):
        return np.zeros_like(b)
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = np.vdot(r, r).real
    for _ in range(max_iter):
        if np.sqrt(rs) <= tol * bnorm:
            return x
        ap = project(lap @ p)
        alpha = rs / np.vdot(p, ap).real
        x += alpha * p
        r -= alpha * ap
        rs_new = np.vdot(r, r).real
        p = r + (rs_new / rs) * p
        rs = rs_new
    if np.sqrt(rs) <= tol * bnorm:
        return x
    raise ConvergenceError(
        f"deflated CG stalled at relative residual {np.sqrt(rs) / bnorm:.2e}"
    )


def pinv_laplacian_apply(maps, x, side="sigma", tol=1e-12):
    """Moore-Penrose pseudo-inverse of a graph Laplacian applied to x."""
    lap = maps.LapSigma if side == "sigma" else maps.LapLambda
    basis = maps.nullspace_basis(side)
    u = _deflated_cg(lap, x, basis, tol, 10 * lap.shape[0])
    return u - basis @ (basis.T @ u)


def apply_sigma_tilde(maps: QuasiHelmholtzMaps, x: np.ndarray,
                      tol: float = 1e-12) -> np.ndarray:
    """Sigma (Sigma^T Sigma)^+ x via deflated CG (length F in, length E out)."""
    return maps.Sigma @ pinv_laplacian_apply(maps, x, "sigma", tol)


def apply_sigma_tilde_t(maps: QuasiHelmholtzMaps, y: np.ndarray,
                        tol: float = 1e-12) -> np.ndarray:
    """(Sigma (Sigma^T Sigma)^+)^T y = (Sigma^T Sigma)^+ Sigma^T y."""
    return pinv_laplacian_apply(maps, maps.Sigma.T @ y, "sigma", tol)


def dense_sigma_tilde(maps: QuasiHelmholtzMaps) -> np.ndarray:
    """Dense Sigma (Sigma^T Sigma)^+ via eigendecomposition (small meshes)."""
    w, u = np.linalg.eigh(maps.LapSigma.toarray())
    winv = np.where(w > 1e-9 * w.max(), 1.0 / np.where(w > 0, w, 1.0), 0.0)
    return maps.Sigma.toarray() @ ((u * winv) @ u.T)


@dataclass(frozen=True)
class ScaledSystem:
    """Loop-star frequency-scaled system T_LS = Upsilon^T T Upsilon.

    Upsilon = [Lambda/sqrt(k) | Sigma*sqrt(k)] with the full column sets
    (loop block first), size E x (V + F). The operator has a 2C-dimensional
    nullspace (C connected components) spanned by the per-component constant
    loop/star coefficient vectors; it never reaches the RWG currents, which
    are recovered through Upsilon.
    """

    ops: OperatorSet
    maps: QuasiHelmholtzMaps

    @property
    def n_loops_full(self) -> int:
        return self.maps.Lambda.shape[1]

    @property
    def size(self) -> int:
        return self.maps.Lambda.shape[1] + self.maps.Sigma.shape[1]

    @property
    def nullity(self) -> int:
        return 2 * self.maps.mesh.n_components

    @property
    def k(self) -> float:
        return self.ops.params.k

    def matvec(self, y: np.ndarray) -> np.ndarray:
        """Apply T_LS with Tphi Lambda = 0 imposed algebraically."""
        k = self.k
        nv = self.n_loops_full
        maps = self.maps
        yl, ys = y[:nv], y[nv:]
        u = (maps.Lambda @ yl) / np.sqrt(k) + np.sqrt(k) * (maps.Sigma @ ys)
        ta_u = self.ops.ta @ u
        phi_s = self.ops.tphi @ (maps.Sigma @ ys)
        out_l = 1j * np.sqrt(k) * (maps.Lambda.T @ ta_u)
        out_s = 1j * k ** 1.5 * (maps.Sigma.T @ ta_u) - 1j * np.sqrt(k) * (
            maps.Sigma.T @ phi_s
        )
        return np.concatenate([out_l, out_s])

    @property
    def operator(self) -> spla.LinearOperator:
        return symmetric_operator(self.matvec, self.size)

    def to_rwg(self, y: np.ndarray) -> np.ndarray:
        """Map loop/star coefficients back to RWG coefficients (j = Upsilon y)."""
        k = self.k
        nv = self.n_loops_full
        return (self.maps.Lambda @ y[:nv]) / np.sqrt(k) + np.sqrt(k) * (
            self.maps.Sigma @ y[nv:]
        )

    def project_rhs(self, e: np.ndarray) -> np.ndarray:
        k = self.k
        return np.concatenate(
            [(self.maps.Lambda.T @ e) / np.sqrt(k),
             np.sqrt(k) * (self.maps.Sigma.T @ e)]
        )

    def to_dense(self) -> np.ndarray:
        """Dense block matrix (loop first), Tphi loop terms dropped exactly."""
        k = self.k
        lam = self.maps.Lambda.toarray()
        sig = self.maps.Sigma.toarray()
        ta, tphi = self.ops.ta, self.ops.tphi
        ta_lam = ta @ lam
        ta_sig = ta @ sig
        ll = 1j * (lam.T @ ta_lam)
        ls = 1j * k * (lam.T @ ta_sig)
        ss = 1j * k**2 * (sig.T @ ta_sig) - 1j * (sig.T @ (tphi @ sig))
        nv = lam.shape[1]
        out = np.empty((self.size, self.size), dtype=complex)
        out[:nv, :nv] = ll
        out[:nv, nv:] = ls
        out[nv:, :nv] = ls.T
        out[nv:, nv:] = ss
        return out

    def reduced_upsilon(self) -> sp.csr_matrix:
        """Square invertible Upsilon over the retained columns (E x E)."""
        k = self.k
        return sp.hstack(
            [
                self.maps.Lambda[:, self.maps.loop_cols] / np.sqrt(k),
                self.maps.Sigma[:, self.maps.star_cols] * np.sqrt(k),
            ]
        ).tocsr()


def make_scaled_system(ops: OperatorSet, maps: QuasiHelmholtzMaps) -> ScaledSystem:
    return ScaledSystem(ops=ops, maps=maps)


def symmetric_operator(matvec, n) -> spla.LinearOperator:
    """LinearOperator for a complex-symmetric map: A^H x = conj(A conj(x))."""

    def rmatvec(x):
        return np.conj(matvec(np.conj(x)))

    return spla.LinearOperator((n, n), matvec=matvec, rmatvec=rmatvec, dtype=complex)


def condition_number(op, size: int | None = None, nullity: int = 0,
                     estimate: bool = False) -> float:
    """2-norm condition number over the nonzero spectrum.

    op: dense array, an object with .to_dense()/.size/.nullity (scaled or
    preconditioned systems), or a LinearOperator (size required). nullity
    exact zero singular values are excluded (systems built on the full
    loop/star column sets carry 2 per connected component). Dense SVD up to
    DENSE_COND_LIMIT rows; beyond that, or with estimate=True, a Lanczos
    bidiagonalization estimate is returned.

    Raises SingularMatrix when the smallest retained singular value is below
    1e-14 of the largest; the exception carries both values.
    """
    if isinstance(op, np.ndarray):
        mat, n = op, op.shape[0]
    elif hasattr(op, "to_dense"):
        mat, n = None, op.size if size is None else size
        if nullity == 0:
            nullity = getattr(op, "nullity", 0)
    else:
        if size is None:
            raise ValueError("size required for matrix-free handles")
        mat, n = None, size

    if not estimate and n <= DENSE_COND_LIMIT:
        if mat is None:
            mat = op.to_dense() if hasattr(op, "to_dense") else _materialize(op, n)
        s = np.linalg.svd(mat, compute_uv=False)
        smax, smin = float(s[0]), float(s[n - 1 - nullity])
        if smin < 1e-14 * smax:
            raise SingularMatrix(smax, smin)
        return smax / smin

    from .krylov import estimate_extremal_singular_values

    if nullity != 0:
        raise ValueError("iterative estimates require a trivial nullspace")
    handle = op.operator if hasattr(op, "operator") else op
    smax, smin = estimate_extremal_singular_values(handle, n)
    if smin < 1e-14 * smax:
        raise SingularMatrix(smax, smin)
    return smax / smin


def _materialize(op, n):
    mat = np.empty((n, n), dtype=complex)
    basis = np.zeros(n)
    for j in range(n):
        basis[j] = 1.0
        mat[:, j] = op.matvec(basis)
        basis[j] = 0.0
    return mat
