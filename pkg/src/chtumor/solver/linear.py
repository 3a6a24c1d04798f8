"""Sparse operators and Krylov solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class LinearSolverError(RuntimeError):
    """Krylov breakdown or iteration cap; carries the best iterate."""

    def __init__(self, kind: str, x: np.ndarray, residual: float, iters: int):
        super().__init__(f"linear solver {kind} after {iters} iterations, relative residual {residual:.3e}")
        self.kind = kind
        self.x = x
        self.residual = residual
        self.iters = iters


@dataclass
class SparseOperator:
    """CSR matrix on interior unknowns plus a symmetry flag."""

    matrix: sp.csr_matrix
    symmetric: bool = False

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix)

    def __matmul__(self, v):
        return self.matrix @ v

    @property
    def shape(self):
        return self.matrix.shape

    def symmetry_probe(self, trials: int = 3, seed: int = 0) -> float:
        """Largest relative |<Au, v> - <u, Av>| over random vectors."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            u = rng.standard_normal(self.shape[0])
            v = rng.standard_normal(self.shape[0])
            a, b = (self.matrix @ u) @ v, u @ (self.matrix @ v)
            worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
        return worst


def ilu_preconditioner(a) -> spla.LinearOperator:
    ilu = spla.spilu(sp.csc_matrix(a), drop_tol=1e-12, fill_factor=30)
    return spla.LinearOperator(a.shape, matvec=ilu.solve)


def jacobi_preconditioner(a) -> spla.LinearOperator:
    d = np.asarray(a.diagonal(), dtype=float)
    if np.any(d == 0):
        raise LinearSolverError("breakdown", np.zeros(a.shape[0]), np.inf, 0)
    inv = 1.0 / d
    return spla.LinearOperator(a.shape, matvec=lambda r: inv * r)


def pcg(a, b, tol: float = 1e-12, max_iter: int = 1000, precond=None, x0=None, callback=None):
    """Preconditioned conjugate gradients for symmetric positive definite ``a``.

    Stops when ``||b - a x|| <= tol ||b||``.  ``callback(x)`` sees every iterate.
    Returns ``(x, iterations)``.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0
    apply_m = (lambda r: r) if precond is None else precond.matvec
    r = b - a @ x
    z = apply_m(r)
    p = z.copy()
    rz = r @ z
    for k in range(max_iter + 1):
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, k
        if k == max_iter:
            break
        ap = a @ p
        pap = p @ ap
        if not pap > 0 or not np.isfinite(pap):
            raise LinearSolverError("breakdown", x, res, k)
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        if callback is not None:
            callback(x)
        z = apply_m(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise LinearSolverError("max_iter", x, np.linalg.norm(r) / bnorm, max_iter)


def linear_solve(a, b, tol: float = 1e-12, max_iter: int = 1000, symmetric: bool | None = None,
                 preconditioner: str = "ilu") -> np.ndarray:
    """Solve ``a x = b`` to relative residual ``tol``.

    Symmetric operators go through :func:`pcg`; others through
    ILU-preconditioned BiCGSTAB.
    """
    if isinstance(a, SparseOperator):
        symmetric = a.symmetric if symmetric is None else symmetric
        a = a.matrix
    elif sp.issparse(a):
        a = sp.csr_matrix(a)
    else:
        a = sp.csr_matrix(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float)
    if np.linalg.norm(b) == 0.0:
        return np.zeros_like(b)
    precond = ilu_preconditioner(a) if preconditioner == "ilu" else jacobi_preconditioner(a)
    if symmetric:
        x, _ = pcg(a, b, tol=tol, max_iter=max_iter, precond=precond)
        return x
    x, info = spla.bicgstab(a, b, rtol=tol, atol=0.0, maxiter=max_iter, M=precond)
    res = np.linalg.norm(b - a @ x) / np.linalg.norm(b)
    if info != 0 or not np.all(np.isfinite(x)):
        kind = "max_iter" if info > 0 else "breakdown"
        raise LinearSolverError(kind, x, res, max_iter if info > 0 else 0)
    return x
