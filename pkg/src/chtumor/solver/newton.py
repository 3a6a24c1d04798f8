"""Damped Newton iteration for nonlinear systems with sparse Jacobians."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linear import linear_solve


class NonConvergence(RuntimeError):
    def __init__(self, residual: float, iters: int, x=None):
        super().__init__(f"Newton did not converge: residual {residual:.3e} after {iters} iterations")
        self.residual = residual
        self.iters = iters
        self.x = x


class JacobianMismatch(RuntimeError):
    pass


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual: float
    initial_residual: float
    stalled: bool = False


def jacobian_probe(F, J, x0, delta: float = 1e-6, seed: int = 0) -> float:
    """Relative gap between J(x0) v and the forward difference (F(x0 + delta v) - F(x0)) / delta."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(np.size(x0))
    v /= np.linalg.norm(v)
    jv = J(x0) @ v
    fd = (F(x0 + delta * v) - F(x0)) / delta
    return float(np.linalg.norm(jv - fd) / max(np.linalg.norm(jv), 1e-300))


def newton_solve(F, J, x0, tol: float = 1e-10, max_iter: int = 25, linear_tol: float = 1e-12,
                 linear_max_iter: int = 1000, check_jacobian: bool = False,
                 probe_tol: float = 1e-4) -> NewtonResult:
    """Solve ``F(x) = 0`` starting from ``x0``.

    Converged when ``||F(x)|| <= tol * (1 + ||F(x0)||)``.  Each update is
    damped by halving (at most 20 times) until the residual decreases.  If
    no damped step decreases the residual but the full update is already
    below ``tol * (1 + ||x||)``, the residual sits at the rounding floor of
    ``F`` and the iterate is returned with ``stalled=True``.
    ``J(x)`` returns a sparse matrix or a dense array.

    Raises
    ------
    JacobianMismatch
        ``check_jacobian`` is set and the directional probe at ``x0`` is off by
        more than ``probe_tol`` relative.
    NonConvergence
        No convergence within ``max_iter`` iterations or the line search stalls.
    """
    x = np.array(x0, dtype=float)
    if check_jacobian:
        gap = jacobian_probe(F, J, x)
        if gap > probe_tol:
            raise JacobianMismatch(f"Jacobian probe off by {gap:.2e} (relative)")
    fx = F(x)
    r0 = float(np.linalg.norm(fx))
    target = tol * (1.0 + r0)
    r = r0
    for it in range(max_iter + 1):
        if r <= target:
            return NewtonResult(x, it, r, r0)
        if it == max_iter:
            break
        dx = linear_solve(J(x), -fx, tol=linear_tol, max_iter=linear_max_iter, symmetric=False)
        alpha = 1.0
        for _ in range(21):
            x_try = x + alpha * dx
            f_try = F(x_try)
            r_try = float(np.linalg.norm(f_try))
            if np.isfinite(r_try) and r_try < (1.0 - 1e-4 * alpha) * r:
                break
            alpha *= 0.5
        else:
            if np.linalg.norm(dx) <= tol * (1.0 + np.linalg.norm(x)):
                return NewtonResult(x, it, r, r0, stalled=True)
            raise NonConvergence(r, it, x)
        x, fx, r = x_try, f_try, r_try
    raise NonConvergence(r, max_iter, x)
