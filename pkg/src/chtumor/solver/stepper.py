"""Time stepping for the tumor-growth system.

One step from ``t`` to ``t + tau``:

1. nutrient: ``kappa (s+ - s)/tau = div(D(phi)(grad s+ - eta grad phi)) - lambda_c s+ h(phi)``
   (linear, symmetric positive definite; ``kappa = 0`` gives the quasi-static solve);
2. Cahn-Hilliard: ``(phi+ - phi)/tau = lap mu+ + (lambda_p s+ - lambda_a) h(phi)`` with
   ``mu+ = gamma/eps (convex'(phi+) + explicit'(phi)) - gamma eps lap phi+ - chi s+``,
   reduced to an equation in ``phi+`` and solved by Newton.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ..grid import Field, Grid, l2_inner
from ..model import Problem
from ..potential import SingularPotential
from .linear import SparseOperator, linear_solve
from .newton import NonConvergence, newton_solve


@dataclass
class State:
    t: float
    phi: Field
    mu: Field
    sigma: Field
    step_index: int = 0


@dataclass(frozen=True)
class StepperConfig:
    tau: float = 1e-3
    t_end: float = 1.0
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    linear_tol: float = 1e-12
    linear_max_iter: int = 2000
    picard: int = 1

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not (self.newton_tol > 0 and self.linear_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.picard < 1:
            raise ValueError("picard iterations must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.tau))


@lru_cache(maxsize=32)
def _laplacian_ops(grid: Grid):
    lap = grid.laplacian_matrix
    return lap, (lap @ lap).tocsr(), grid.flux_divergence(grid.face_weights(), grid.pad(np.zeros(grid.size), -1.0))


def inverse_dirichlet_laplacian(f, grid: Grid, tol: float = 1e-14) -> np.ndarray:
    """N(f): zero-trace solution of -lap u = f, so that G(N f, v) = <f, v> for zero-trace v."""
    f = f.values if isinstance(f, Field) else np.asarray(f, dtype=float).ravel()
    if f.size != grid.size:
        raise ValueError(f"expected {grid.size} values, got {f.size}")
    return linear_solve(SparseOperator(-grid.laplacian_matrix, symmetric=True), f, tol=tol,
                        max_iter=10 * grid.size)


def star_norm(f, grid: Grid) -> float:
    """Discrete H^-1 norm sqrt(<f, N f>)."""
    f = f.values if isinstance(f, Field) else np.asarray(f, dtype=float).ravel()
    return float(np.sqrt(max(l2_inner(grid, f, inverse_dirichlet_laplacian(f, grid)), 0.0)))


class Stepper:
    """Owns the cached operators for one problem and advances states."""

    def __init__(self, problem: Problem, cfg: StepperConfig):
        self.problem = problem
        self.cfg = cfg
        self.grid = problem.grid
        self.lap, self.lap2, self.lift_phi = _laplacian_ops(self.grid)
        self._ones = self.grid.face_weights()
        self._probed = False
        self.last_newton = None
        self.sigma_phi = None

    # -- helpers ---------------------------------------------------------------

    def _lift(self, trace, t, faces=None):
        g = self.grid
        return g.flux_divergence(faces or self._ones, g.pad(np.zeros(g.size), trace, t))

    def _forcing(self, name, t):
        f = self.problem.forcing
        if f is None:
            return 0.0
        return self.grid.evaluate(getattr(f, name), t)

    def diffusion_faces(self, phi_vals):
        p = self.problem.params
        w = self.grid.pad(p.D(phi_vals), float(p.D(np.array(-1.0))))
        return self.grid.face_weights(w)

    def chemical_potential(self, phi_new, phi_old, sigma, t):
        """mu from the implicit/explicit split (interior values)."""
        p, pot = self.problem.params, self.problem.potential
        lap_phi = self.lap @ phi_new + self.lift_phi
        return (p.gamma / p.eps * (pot.convex_prime(phi_new) + pot.explicit_prime(phi_old))
                - p.gamma * p.eps * lap_phi - p.chi * sigma + self._forcing("mu", t))

    def initial_state(self) -> State:
        pr = self.problem
        phi, sigma = pr.idata.fields(self.grid, pr.bdata)
        if pr.quasistatic:
            sigma = sigma.with_values(self.sigma_solve(phi.values, sigma.values, 0.0, kappa=0.0))
        mu_vals = self.chemical_potential(phi.values, phi.values, sigma.values, 0.0)
        mu = Field(self.grid, mu_vals, pr.bdata.mu_inf)
        return State(0.0, phi, mu, sigma, 0)

    # -- sub-steps -------------------------------------------------------------

    def sigma_operator(self, phi_vals, kappa):
        p = self.problem.params
        faces = self.diffusion_faces(phi_vals)
        k = self.grid.flux_matrix(faces)
        diag = kappa / self.cfg.tau + p.lambda_c * p.h(phi_vals)
        return SparseOperator(sp.diags(diag) - k, symmetric=True), faces

    def sigma_solve(self, phi_vals, sigma_old, t_new, kappa=None):
        p = self.problem.params
        kappa = p.kappa if kappa is None else kappa
        op, faces = self.sigma_operator(phi_vals, kappa)
        phi_pad = self.grid.pad(phi_vals, -1.0)
        rhs = (kappa / self.cfg.tau * sigma_old
               + self._lift(self.problem.bdata.sigma_inf, t_new, faces)
               - p.eta * self.grid.flux_divergence(faces, phi_pad)
               + self._forcing("sigma", t_new))
        return linear_solve(op, rhs, tol=self.cfg.linear_tol, max_iter=self.cfg.linear_max_iter)

    def ch_residual(self, phi_old, sigma_new, t_new):
        """Reduced residual R(phi+) and Jacobian for the Cahn-Hilliard sub-step."""
        p, pot, tau = self.problem.params, self.problem.potential, self.cfg.tau
        source = (p.lambda_p * sigma_new - p.lambda_a) * p.h(phi_old) + self._forcing("phi", t_new)
        lift_mu = self._lift(self.problem.bdata.mu_inf, t_new)
        f_mu = self._forcing("mu", t_new)
        n = self.grid.size
        eye = sp.identity(n, format="csr")
        base = eye + tau * p.gamma * p.eps * self.lap2

        def F(x, pot=pot):
            mu = (p.gamma / p.eps * (pot.convex_prime(x) + pot.explicit_prime(phi_old))
                  - p.gamma * p.eps * (self.lap @ x + self.lift_phi) - p.chi * sigma_new
                  + f_mu)
            return x - phi_old - tau * (self.lap @ mu + lift_mu) - tau * source

        def J(x, pot=pot):
            return base - tau * p.gamma / p.eps * (self.lap @ sp.diags(pot.convex_second(x)))

        return F, J

    def ch_solve(self, phi_old, sigma_new, t_new):
        cfg = self.cfg
        pot = self.problem.potential
        F, J = self.ch_residual(phi_old, sigma_new, t_new)
        kw = dict(tol=cfg.newton_tol, max_iter=cfg.newton_max_iter, linear_tol=cfg.linear_tol,
                  linear_max_iter=cfg.linear_max_iter)
        check = pot.smooth and not self._probed
        self._probed = True
        try:
            res = newton_solve(F, J, phi_old, check_jacobian=check, **kw)
        except NonConvergence:
            if not isinstance(pot, SingularPotential):
                raise
            res = self._continuation(phi_old, sigma_new, t_new, kw)
        self.last_newton = res
        return res.x

    def _continuation(self, phi_old, sigma_new, t_new, kw):
        """Yosida ladder: solve at 2^k n, warm-start 2^(k-1) n, ..., n."""
        pot = self.problem.potential
        ladder = [pot.n * 2.0**k for k in range(10, -1, -1) if pot.n * 2.0**k <= 1.0] or [pot.n]
        if ladder[-1] != pot.n:
            ladder.append(pot.n)
        x = phi_old
        res = None
        for n in ladder:
            F, J = self.ch_residual(phi_old, sigma_new, t_new)
            relaxed = pot.with_n(n)
            F_n = lambda v, F=F, q=relaxed: F(v, pot=q)  # noqa: E731
            J_n = lambda v, J=J, q=relaxed: J(v, pot=q)  # noqa: E731
            res = newton_solve(F_n, J_n, x, **kw)
            x = res.x
        return res

    # -- full steps ------------------------------------------------------------

    def step(self, state: State) -> State:
        pr, cfg = self.problem, self.cfg
        t_new = state.t + cfg.tau
        phi_old = state.phi.values
        kappa = 0.0 if pr.quasistatic else pr.params.kappa
        phi_iter = phi_old
        for _ in range(cfg.picard):
            self.sigma_phi = phi_iter
            sigma_new = self.sigma_solve(phi_iter, state.sigma.values, t_new, kappa)
            phi_iter = self.ch_solve(phi_old, sigma_new, t_new)
        mu_new = self.chemical_potential(phi_iter, phi_old, sigma_new, t_new)
        out = State(
            t_new,
            Field(self.grid, phi_iter, -1.0),
            Field(self.grid, mu_new, pr.bdata.mu_inf),
            Field(self.grid, sigma_new, pr.bdata.sigma_inf),
            state.step_index + 1,
        )
        for f in (out.phi, out.mu, out.sigma):
            if not f.is_finite:
                raise FloatingPointError(f"non-finite values at t = {t_new:.6g}")
        return out

    def weak_residuals(self, old: State, new: State) -> dict:
        """Max-norm residuals of the discrete equations tested with unit vectors."""
        p, pot, tau = self.problem.params, self.problem.potential, self.cfg.tau
        g = self.grid
        t = new.t
        kappa = 0.0 if self.problem.quasistatic else p.kappa
        phi, phi0 = new.phi.values, old.phi.values
        lap_mu = g.flux_divergence(self._ones, new.mu.padded(t))
        src = (p.lambda_p * new.sigma.values - p.lambda_a) * p.h(phi0) + self._forcing("phi", t)
        r_phi = phi - phi0 - tau * (lap_mu + src)
        r_mu = new.mu.values - self.chemical_potential(phi, phi0, new.sigma.values, t)
        # the nutrient solve froze phi at the last Picard iterate
        phi_s = phi0 if self.sigma_phi is None else self.sigma_phi
        faces = self.diffusion_faces(phi_s)
        flux = g.flux_divergence(faces, new.sigma.padded(t) - p.eta * g.pad(phi_s, -1.0))
        r_sigma = (kappa * (new.sigma.values - old.sigma.values)
                   - tau * (flux - p.lambda_c * new.sigma.values * p.h(phi_s) + self._forcing("sigma", t)))
        return {k: float(np.max(np.abs(v))) for k, v in
                (("phi", r_phi), ("mu", r_mu), ("sigma", r_sigma))}

    def run(self, state: State | None = None, callback=None, n_steps: int | None = None) -> State:
        """Advance to ``t_end``; ``callback(old, new)`` after every step."""
        state = self.initial_state() if state is None else state
        for _ in range(self.cfg.n_steps if n_steps is None else n_steps):
            new = self.step(state)
            if callback is not None:
                callback(state, new)
            state = new
        return state


def step(state: State, problem: Problem, cfg: StepperConfig) -> State:
    """Advance one step of the dynamic (or, for quasi-static problems, elliptic-nutrient) system."""
    return Stepper(problem, cfg).step(state)


def quasistatic_sigma_solve(phi: Field, problem: Problem, cfg: StepperConfig, t: float) -> Field:
    """Elliptic nutrient solve with Dirichlet data sigma_inf(., t)."""
    st = Stepper(problem, cfg)
    vals = st.sigma_solve(phi.values, np.zeros(phi.grid.size), t, kappa=0.0)
    return Field(phi.grid, vals, problem.bdata.sigma_inf)


def quasistatic_step(state: State, problem: Problem, cfg: StepperConfig) -> State:
    if not problem.quasistatic:
        problem = replace(problem, quasistatic=True)
    return Stepper(problem, cfg).step(state)
