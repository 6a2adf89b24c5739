"""Iterative solvers and singular-value estimation for dense/matrix-free
complex operators.

GMRES (full recurrence, no restarts) is the default and is safe for the
complex symmetric systems here; CG on the normal equations is provided to
mirror conjugate-gradient usage on these systems, with the usual caveat
that it squares the condition number. Non-convergence is reported through
SolveReport.converged rather than an exception.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConvergenceError


@dataclass
class SolveReport:
    iterations: int
    residual: float
    wall_time: float
    matvec_count: int
    converged: bool
    residual_history: list | None = None


class _OpAdapter:
    """Uniform matvec/rmatvec over ndarrays, LinearOperators, and handles."""

    def __init__(self, op):
        if isinstance(op, np.ndarray):
            self.n = op.shape[0]
            self._mv = lambda x: op @ x
            self._rmv = lambda x: op.conj().T @ x
        elif isinstance(op, spla.LinearOperator):
            self.n = op.shape[0]
            self._mv = op.matvec
            self._rmv = op.rmatvec
        elif hasattr(op, "operator"):
            inner = op.operator
            self.n = inner.shape[0]
            self._mv = inner.matvec
            self._rmv = inner.rmatvec
        else:
            raise TypeError(f"unsupported operator type {type(op)!r}")
        self.count = 0

    def mv(self, x):
        self.count += 1
        return self._mv(x)

    def rmv(self, x):
        self.count += 1
        return self._rmv(x)


def solve(op, rhs, method: str = "gmres", tol: float = 1e-6,
          max_iter: int | None = None):
    """Solve op x = rhs to a relative residual; returns (x, SolveReport).

    method: "gmres" (default) or "cg-normal-equations". max_iter defaults
    to the operator size. On failure to reach tol the report comes back
    with converged=False and the best iterate is returned.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must be in (0, 1)")
    a = _OpAdapter(op)
    rhs = np.asarray(rhs, dtype=complex)
    if rhs.shape != (a.n,):
        raise ValueError(f"rhs shape {rhs.shape} does not match operator {a.n}")
    if max_iter is None:
        max_iter = a.n
    t0 = time.perf_counter()
    if method == "gmres":
        x, its, res, hist, ok = _gmres(a, rhs, tol, max_iter)
    elif method == "cg-normal-equations":
        x, its, res, hist, ok = _cgnr(a, rhs, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    report = SolveReport(
        iterations=its,
        residual=res,
        wall_time=time.perf_counter() - t0,
        matvec_count=a.count,
        converged=ok,
        residual_history=hist,
    )
    return x, report


def _gmres(a, b, tol, max_iter):
    n = a.n
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n, dtype=complex), 0, 0.0, [], True
    m = min(max_iter, n)
    q = np.zeros((m + 1, n), dtype=complex)
    h = np.zeros((m + 1, m), dtype=complex)
    cs = np.zeros(m, dtype=complex)
    sn = np.zeros(m, dtype=complex)
    g = np.zeros(m + 1, dtype=complex)

    q[0] = b / bnorm
    g[0] = bnorm
    hist = []
    k = 0
    for k in range(m):
        w = a.mv(q[k])
        for j in range(k + 1):  # modified Gram-Schmidt
            h[j, k] = np.vdot(q[j], w)
            w -= h[j, k] * q[j]
        h[k + 1, k] = np.linalg.norm(w)
        if abs(h[k + 1, k]) > 1e-300:
            q[k + 1] = w / h[k + 1, k]
        for j in range(k):  # apply stored Givens rotations
            t = cs[j] * h[j, k] + sn[j] * h[j + 1, k]
            h[j + 1, k] = -np.conj(sn[j]) * h[j, k] + np.conj(cs[j]) * h[j + 1, k]
            h[j, k] = t
        denom = np.sqrt(abs(h[k, k]) ** 2 + abs(h[k + 1, k]) ** 2)
        if denom == 0.0:
            cs[k], sn[k] = 1.0, 0.0
        else:
            cs[k] = np.conj(h[k, k]) / denom
            sn[k] = np.conj(h[k + 1, k]) / denom
        h[k, k] = cs[k] * h[k, k] + sn[k] * h[k + 1, k]
        h[k + 1, k] = 0.0
        g[k + 1] = -np.conj(sn[k]) * g[k]
        g[k] = cs[k] * g[k]
        res = abs(g[k + 1]) / bnorm
        hist.append(res)
        if res <= tol:
            k += 1
            break
    else:
        k = m
    y = np.linalg.solve(h[:k, :k], g[:k]) if k > 0 else np.zeros(0, dtype=complex)
    x = q[:k].T @ y
    res = hist[-1] if hist else 1.0
    return x, k, res, hist, res <= tol


def _cgnr(a, b, tol, max_iter):
    """CG on A^H A x = A^H b, tracking the true residual r = b - A x."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(a.n, dtype=complex), 0, 0.0, [], True
    x = np.zeros(a.n, dtype=complex)
    r = b.copy()
    s = a.rmv(r)
    p = s.copy()
    ss = np.vdot(s, s).real
    hist = []
    for it in range(1, max_iter + 1):
        q = a.mv(p)
        alpha = ss / np.vdot(q, q).real
        x += alpha * p
        r -= alpha * q
        res = np.linalg.norm(r) / bnorm
        hist.append(res)
        if res <= tol:
            return x, it, res, hist, True
        s = a.rmv(r)
        ss_new = np.vdot(s, s).real
        p = s + (ss_new / ss) * p
        ss = ss_new
    return x, max_iter, hist[-1], hist, False


def estimate_extremal_singular_values(op, size: int | None = None,
                                      tol: float = 1e-2,
                                      max_iter: int | None = None):
    """Golub-Kahan-Lanczos estimates of (sigma_max, sigma_min).

    Full reorthogonalization; deterministic start vector. The returned
    values are estimates (flagged as such by callers); they stabilize to
    the requested relative tolerance or run up to min(size, max_iter)
    steps.
    """
    a = _OpAdapter(op)
    n = a.n if size is None else size
    if max_iter is None:
        max_iter = n
    m = min(max_iter, n)

    u = np.ones(n, dtype=complex)
    u /= np.linalg.norm(u)
    us = [u]
    vs = []
    alphas, betas = [], []
    prev = (None, None)
    for j in range(m):
        v = a.rmv(us[j])
        for vv in vs:  # full reorthogonalization
            v -= np.vdot(vv, v) * vv
        alpha = np.linalg.norm(v)
        if alpha <= 1e-300:
            break
        v /= alpha
        vs.append(v)
        alphas.append(alpha)

        w = a.mv(v)
        for uu in us:
            w -= np.vdot(uu, w) * uu
        beta = np.linalg.norm(w)
        if j >= 4 or beta <= 1e-300:
            bmat = np.zeros((len(alphas) + 1, len(alphas)))
            for i, al in enumerate(alphas):
                bmat[i, i] = al
            for i, be in enumerate(betas):
                bmat[i + 1, i] = be
            svals = np.linalg.svd(bmat, compute_uv=False)
            smax, smin = svals[0], svals[-1]
            pmax, pmin = prev
            if pmax is not None and abs(smax - pmax) <= tol * smax and (
                abs(smin - pmin) <= tol * max(smin, 1e-300)
            ):
                return float(smax), float(smin)
            prev = (smax, smin)
        if beta <= 1e-300:
            break
        w /= beta
        us.append(w)
        betas.append(beta)

    if not alphas:
        raise ConvergenceError("Lanczos bidiagonalization broke down at start")
    bmat = np.zeros((len(alphas) + 1, len(alphas)))
    for i, al in enumerate(alphas):
        bmat[i, i] = al
    for i, be in enumerate(betas):
        bmat[i + 1, i] = be
    svals = np.linalg.svd(bmat, compute_uv=False)
    return float(svals[0]), float(svals[-1])
