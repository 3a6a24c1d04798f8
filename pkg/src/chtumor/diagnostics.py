"""Energy functionals, the discrete energy budget, and norms.

The budget is the discrete counterpart of testing the phase equation with
``v = mu - mu_inf + chi (sigma - sigma_inf)``, the chemical-potential equation
with the phase increment, and the nutrient equation with ``X (sigma - sigma_inf)``.
Every term uses the grid pairings for which summation by parts is exact, so
the only mismatch left is the numerical dissipation of the time splitting,
which is O(tau) summed over a run.

Per step, with ``w = sigma - sigma_inf`` and ``b = mu_inf + chi sigma_inf``::

    E(t+) + tau [G(mu+) + X G_D(w+) + X lambda_c <h w+, w+>]
        = E(t) + I1a + I1b + I2a + I2b + X (I3a + I3b) + I_forcing

    I1a = <phi+, b+> - <phi, b>               I1b = -<phi, b+ - b>
    I2a = tau [G(mu+, mu_inf+) - chi G(mu+, w+)]
    I2b = tau <(lambda_p sigma+ - lambda_a) h, mu+ - mu_inf+ + chi w+>
    I3a = tau eta G_D(phi, w+) - kappa <sigma_inf+ - sigma_inf, w+>
    I3b = -tau [G_D(sigma_inf+, w+) + lambda_c <h sigma_inf+, w+>]

where ``E = gamma/eps <Psi(phi)> + gamma eps/2 G(phi) + X kappa/2 ||w||^2``.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .grid import Field, Grid, l2_inner
from .model import ModelParams, Problem
from .solver.stepper import State, Stepper, star_norm


def chi_constant(params: ModelParams, grid: Grid | None = None, poincare: float | None = None) -> float:
    """Weight X of the nutrient test function.

    The Poincaré constant is ``poincare`` when given, else the discrete one of ``grid``.
    """
    cp2 = (grid.poincare_constant if poincare is None else poincare) ** 2
    hinf = params.h_inf
    return 4.0 / params.D0 * (2.0 * params.chi**2 * (1.0 + cp2)
                              + 2.0 * cp2 * hinf**2 * params.lambda_p**2 * (4.0 * cp2 + 1.0))


def budget_weight(params: ModelParams, grid: Grid) -> float:
    """X floored at 1 so a nutrient budget is shown even when chi = lambda_p = 0."""
    return max(chi_constant(params, grid), 1.0)


@dataclass
class EnergyBudget:
    energy_old: float
    energy_new: float
    dissipation: float
    I1a: float
    I1b: float
    I2a: float
    I2b: float
    I3a: float
    I3b: float
    forcing: float = 0.0

    @property
    def I4(self) -> float:
        return self.energy_old

    @property
    def lhs(self) -> float:
        return self.energy_new + self.dissipation

    @property
    def rhs(self) -> float:
        return self.I1a + self.I1b + self.I2a + self.I2b + self.I3a + self.I3b + self.I4 + self.forcing

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def free_energy(problem: Problem, state: State, weight: float) -> float:
    p, g = problem.params, problem.grid
    kappa = 0.0 if problem.quasistatic else p.kappa
    t = state.t
    w = state.sigma.values - g.evaluate(problem.bdata.sigma_inf, t)
    pp = state.phi.padded(t)
    return (p.gamma / p.eps * float(np.sum(problem.potential.energy_density(state.phi.values))) * g.cell_volume
            + 0.5 * p.gamma * p.eps * g.gradient_pairing(pp, pp)
            + weight * 0.5 * kappa * l2_inner(g, w, w))


def energy_budget(old: State, new: State, problem: Problem, weight: float,
                  sigma_phi: np.ndarray | None = None) -> EnergyBudget:
    """Every term of the per-step budget between two consecutive states.

    ``sigma_phi`` is the phase field the nutrient solve was frozen at (the
    old phase for a single Picard sweep).
    """
    p, g, bd = problem.params, problem.grid, problem.bdata
    kappa = 0.0 if problem.quasistatic else p.kappa
    t0, t1 = old.t, new.t
    tau = t1 - t0
    phi_s = old.phi.values if sigma_phi is None else sigma_phi
    h = p.h(old.phi.values)
    h_s = p.h(phi_s)

    # padded arrays; boundary rows carry the Dirichlet data
    mu1 = new.mu.padded(t1)
    mi0 = g.evaluate(bd.mu_inf, t0, padded=True)
    mi1 = g.evaluate(bd.mu_inf, t1, padded=True)
    si0 = g.evaluate(bd.sigma_inf, t0, padded=True)
    si1 = g.evaluate(bd.sigma_inf, t1, padded=True)
    w1 = new.sigma.padded(t1) - si1
    inner = g.interior
    w1i = w1[inner].ravel()
    si1i = si1[inner].ravel()

    wd = g.pad(p.D(phi_s), float(p.D(np.array(-1.0))))
    faces_d = g.face_weights(wd)

    b0 = (mi0 + p.chi * si0)[inner].ravel()
    b1 = (mi1 + p.chi * si1)[inner].ravel()
    phi0, phi1 = old.phi.values, new.phi.values
    v = (mu1 - mi1)[inner].ravel() + p.chi * w1i
    source = (p.lambda_p * new.sigma.values - p.lambda_a) * h

    dissipation = tau * (g.gradient_pairing(mu1, mu1)
                         + weight * g.gradient_pairing(w1, w1, faces_d)
                         + weight * p.lambda_c * l2_inner(g, h_s * w1i, w1i))
    I1a = l2_inner(g, phi1, b1) - l2_inner(g, phi0, b0)
    I1b = -l2_inner(g, phi0, b1 - b0)
    I2a = tau * (g.gradient_pairing(mu1, mi1) - p.chi * g.gradient_pairing(mu1, w1))
    I2b = tau * l2_inner(g, source, v)
    I3a = (tau * p.eta * g.gradient_pairing(g.pad(phi_s, -1.0), w1, faces_d)
           - kappa * l2_inner(g, (si1 - si0)[inner].ravel(), w1i))
    I3b = -tau * (g.gradient_pairing(si1, w1, faces_d) + p.lambda_c * l2_inner(g, h_s * si1i, w1i))

    forcing = 0.0
    f = problem.forcing
    if f is not None:
        f_phi = g.evaluate(f.phi, t1)
        f_mu = g.evaluate(f.mu, t1)
        f_sigma = g.evaluate(f.sigma, t1)
        forcing = (tau * l2_inner(g, f_phi, v) - l2_inner(g, f_mu, phi1 - phi0)
                   + weight * tau * l2_inner(g, f_sigma, w1i))

    return EnergyBudget(
        energy_old=free_energy(problem, old, weight),
        energy_new=free_energy(problem, new, weight),
        dissipation=dissipation,
        I1a=I1a, I1b=I1b, I2a=I2a, I2b=I2b,
        I3a=weight * I3a, I3b=weight * I3b,
        forcing=forcing,
    )


@dataclass
class DiagnosticsRecord:
    """One CSV row.  Norm columns are plain norms (not squared)."""

    t: float
    step: int
    psi_integral: float
    grad_phi_energy: float
    free_energy: float
    sigma_l2: float
    mu_h1: float
    sigma_h1: float
    energy_lhs: float
    energy_rhs_bound: float
    identity_residual: float
    star_norm_phi: float
    obstacle_violation: float


COLUMNS = [f.name for f in fields(DiagnosticsRecord)]


def _h1(grid: Grid, field_: Field, t: float) -> float:
    p = field_.padded(t)
    return float(np.sqrt(l2_inner(grid, field_.values, field_.values) + grid.gradient_pairing(p, p)))


def norms(state: State, grid: Grid) -> dict:
    """(L2, H1 seminorm with trace, star norm) of each field of ``state``."""
    out = {}
    for name in ("phi", "mu", "sigma"):
        f = getattr(state, name)
        p = f.padded(state.t)
        out[name] = (float(np.sqrt(l2_inner(grid, f.values, f.values))),
                     float(np.sqrt(grid.gradient_pairing(p, p))),
                     star_norm(f.values, grid))
    return out


@dataclass
class EnergyMonitor:
    """Step callback accumulating records and budgets for one run.

    ``energy_lhs`` tracks the running left side of the energy inequality
    (sup of the pointwise terms plus the time integrals), ``energy_rhs_bound``
    the running data bracket it is compared against.
    """

    stepper: Stepper
    weight: float | None = None
    records: list = field(default_factory=list)
    budgets: list = field(default_factory=list)

    def __post_init__(self):
        pr = self.stepper.problem
        if self.weight is None:
            self.weight = budget_weight(pr.params, pr.grid)
        self._kappa = 0.0 if pr.quasistatic else pr.params.kappa
        self._sup = 0.0
        self._integral = 0.0
        self._dt_sigma_inf = 0.0
        self._sup_sigma_inf = 0.0
        self._mismatch = 0.0
        self._initial_bracket = None

    def _pointwise(self, s: State):
        pr = self.stepper.problem
        g = pr.grid
        psi = float(np.sum(np.abs(pr.potential.energy_density(s.phi.values)))) * g.cell_volume
        return psi + _h1(g, s.phi, s.t) ** 2 + self._kappa * l2_inner(g, s.sigma.values, s.sigma.values)

    def _sigma_inf_sq(self, t):
        g = self.stepper.problem.grid
        v = g.evaluate(self.stepper.problem.bdata.sigma_inf, t)
        return l2_inner(g, v, v)

    def _record(self, s: State, residual: float) -> DiagnosticsRecord:
        pr = self.stepper.problem
        g = pr.grid
        p = pr.params
        pp = s.phi.padded(s.t)
        psi_int = float(np.sum(pr.potential.energy_density(s.phi.values))) * g.cell_volume
        k = self._kappa
        bracket = 1.0 + self._initial_bracket + k**2 * self._dt_sigma_inf + k * self._sup_sigma_inf
        rec = DiagnosticsRecord(
            t=s.t,
            step=s.step_index,
            psi_integral=psi_int,
            grad_phi_energy=0.5 * g.gradient_pairing(pp, pp),
            free_energy=free_energy(pr, s, self.weight),
            sigma_l2=float(np.sqrt(l2_inner(g, s.sigma.values, s.sigma.values))),
            mu_h1=_h1(g, s.mu, s.t),
            sigma_h1=_h1(g, s.sigma, s.t),
            energy_lhs=self._sup + self._integral,
            energy_rhs_bound=bracket,
            identity_residual=residual,
            star_norm_phi=star_norm(s.phi.values, g),
            obstacle_violation=float(np.max(np.maximum(np.abs(s.phi.values) - 1.0, 0.0))),
        )
        self.records.append(rec)
        return rec

    def start(self, s: State) -> DiagnosticsRecord:
        pr = self.stepper.problem
        g = pr.grid
        w0 = s.sigma.values - g.evaluate(pr.bdata.sigma_inf, s.t)
        self._initial_bracket = self._kappa * l2_inner(g, w0, w0)
        self._sup_sigma_inf = self._sigma_inf_sq(s.t)
        self._sup = self._pointwise(s)
        return self._record(s, 0.0)

    def __call__(self, old: State, new: State):
        if self._initial_bracket is None:
            self.start(old)
        st = self.stepper
        pr = st.problem
        g = pr.grid
        tau = new.t - old.t
        budget = energy_budget(old, new, pr, self.weight, st.sigma_phi)
        self.budgets.append(budget)
        # E(t+) of one step is I4 of the next, so the per-step gaps telescope
        self._mismatch += budget.lhs - budget.rhs
        residual = abs(self._mismatch)
        self._sup = max(self._sup, self._pointwise(new))
        self._integral += tau * (_h1(g, new.mu, new.t) ** 2 + _h1(g, new.sigma, new.t) ** 2)
        dt = g.evaluate(pr.bdata.sigma_inf_dt, new.t)
        self._dt_sigma_inf += tau * l2_inner(g, dt, dt)
        self._sup_sigma_inf = max(self._sup_sigma_inf, self._sigma_inf_sq(new.t))
        self._record(new, residual)

    @property
    def identity_residual(self) -> float:
        return self.records[-1].identity_residual if self.records else 0.0


@dataclass
class InequalityReport:
    ok: bool
    constant: float
    worst_ratio: float
    lhs: float
    rhs: float

    def __str__(self):
        state = "PASS" if self.ok else "FAIL"
        return (f"energy inequality {state}: lhs {self.lhs:.6g} <= C {self.constant:.6g} x bracket "
                f"(worst lhs/bracket {self.worst_ratio:.6g})")


def inequality_ratio(history: list) -> float:
    """Largest lhs/bracket over a run; the smallest constant for which the bound holds."""
    return max(r.energy_lhs / r.energy_rhs_bound for r in history)


def energy_inequality_check(history: list, constant: float) -> InequalityReport:
    """Check ``energy_lhs <= constant * energy_rhs_bound`` at every recorded time."""
    worst = inequality_ratio(history)
    last = history[-1]
    return InequalityReport(worst <= constant, constant, worst, last.energy_lhs,
                            constant * last.energy_rhs_bound)


def write_csv(records: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in records:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in asdict(r).values()])


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [DiagnosticsRecord(**{k: (int(v) if k == "step" else float(v)) for k, v in row.items()})
            for row in rows]
