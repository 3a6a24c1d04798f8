import numpy as np
import pytest

from chtumor.config import load
from chtumor.diagnostics import (COLUMNS, EnergyMonitor, budget_weight, chi_constant,
                                 energy_inequality_check, inequality_ratio, norms, read_csv, write_csv)
from chtumor.grid import Field, Grid
from chtumor.model import BoundaryData, ConstantD, InitialData, ModelParams, Problem
from chtumor.potential import RegularPotential
from chtumor.solver import State, Stepper, StepperConfig


def run_monitored(problem, cfg, n_steps=None):
    st = Stepper(problem, cfg)
    mon = EnergyMonitor(st)
    s = st.initial_state()
    mon.start(s)
    st.run(s, callback=mon, n_steps=n_steps)
    return mon


def test_chi_constant_examples():
    assert chi_constant(ModelParams(chi=0.0, lambda_p=0.0), poincare=0.3) == 0.0
    assert chi_constant(ModelParams(chi=1.0, lambda_p=0.0, D=ConstantD(1.0)), poincare=1.0) == pytest.approx(16.0)
    one = chi_constant(ModelParams(chi=1.0, lambda_p=0.7, D=ConstantD(1.0)), poincare=0.4)
    two = chi_constant(ModelParams(chi=1.0, lambda_p=0.7, D=ConstantD(2.0)), poincare=0.4)
    assert two == pytest.approx(one / 2)
    g = Grid((1.0,), (63,))
    assert budget_weight(ModelParams(), g) == 1.0
    assert chi_constant(ModelParams(chi=1.0), g) == chi_constant(ModelParams(chi=1.0), poincare=g.poincare_constant)


def test_stationary_state_budget_is_zero():
    g = Grid((1.0,), (15,))
    pr = Problem(g, ModelParams(kappa=1.0), RegularPotential.quartic(), BoundaryData(0, 0), InitialData(-1, 0))
    mon = run_monitored(pr, StepperConfig(tau=0.01), n_steps=5)
    for b in mon.budgets:
        terms = [b.energy_old, b.energy_new, b.dissipation, b.I1a, b.I1b, b.I2a, b.I2b, b.I3a, b.I3b]
        assert all(v == 0.0 for v in terms)
        assert b.residual == 0.0
    assert all(r.free_energy == 0.0 for r in mon.records)


def test_source_free_budget_reduces_to_initial_energy():
    # a long box and eps = 1 keep the slowest mode's relaxation time (about 0.2) resolved by every tau
    g = Grid((4.0,), (63,))
    pr = Problem(g, ModelParams(eps=1.0, kappa=1.0), RegularPotential.quartic(), BoundaryData(0, 0),
                 InitialData("-1 + 0.3*sin(pi*x/4)", 0))
    residuals = []
    for tau in (0.02, 0.01, 0.005):
        mon = run_monitored(pr, StepperConfig(tau=tau, t_end=0.2))
        for b in mon.budgets:
            assert b.rhs == b.I4
        residuals.append(mon.identity_residual)
    ratios = [a / b for a, b in zip(residuals, residuals[1:])]
    assert all(1.7 <= r <= 2.3 for r in ratios), ratios


def test_psi_integral_non_negative_for_quartic_runs():
    sc = load("default", ["time.t_end=0.05", "grid.n=63"])
    mon = run_monitored(sc.problem, sc.stepper)
    assert all(r.psi_integral >= 0 for r in mon.records)
    assert all(np.isfinite([getattr(r, c) for c in COLUMNS]).all() for r in mon.records)


def test_default_scenario_residual_small_relative_to_lhs():
    sc = load("default")
    mon = run_monitored(sc.problem, sc.stepper)
    last = mon.records[-1]
    assert last.identity_residual / last.energy_lhs <= 0.1


def test_inequality_with_zero_data_and_bracket_arithmetic():
    g = Grid((1.0,), (31,))
    pr = Problem(g, ModelParams(eps=0.1, kappa=1.0), RegularPotential.quartic(), BoundaryData(0, 0),
                 InitialData(-1, 0))
    mon = run_monitored(pr, StepperConfig(tau=1e-2, t_end=0.1))
    assert all(r.energy_rhs_bound == 1.0 for r in mon.records)
    assert energy_inequality_check(mon.records, 1.0).ok

    def first_bracket(sigma0):
        p = Problem(g, ModelParams(eps=0.1, kappa=1.0), RegularPotential.quartic(), BoundaryData(0, 0.5),
                    InitialData(-1, sigma0))
        st = Stepper(p, StepperConfig())
        return EnergyMonitor(st).start(st.initial_state()).energy_rhs_bound

    # sigma0 - sigma_inf(0) doubles from 0.25 to 0.5; kappa |sigma_inf|^2 = 0.25 * |Omega|_h in both
    vol = g.size * g.cell_volume
    b1, b2 = first_bracket(0.75), first_bracket(1.0)
    assert b2 - b1 == pytest.approx((0.5**2 - 0.25**2) * vol, rel=1e-12)
    assert b1 == pytest.approx(1.0 + 0.25**2 * vol + 0.25 * vol, rel=1e-12)


def test_inequality_ratio_is_smallest_constant():
    sc = load("default", ["time.t_end=0.02", "grid.n=31"])
    mon = run_monitored(sc.problem, sc.stepper)
    c = inequality_ratio(mon.records)
    assert energy_inequality_check(mon.records, c).ok
    assert not energy_inequality_check(mon.records, 0.99 * c).ok


def test_norms_examples():
    g = Grid((1.0,), (255,))
    zero = State(0.0, Field(g, np.zeros(g.size), 0.0), Field(g, np.zeros(g.size), 0.0),
                 Field(g, np.zeros(g.size), 0.0))
    assert all(v == (0.0, 0.0, 0.0) for v in norms(zero, g).values())
    # f = 1 with zero trace: only the two boundary faces contribute, each (1/h)^2 h
    one = State(0.0, Field(g, np.ones(g.size), 0.0), zero.mu, zero.sigma)
    semi = norms(one, g)["phi"][1]
    assert semi == pytest.approx(np.sqrt(2 / g.spacing[0]), rel=1e-12)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(g.size)
    l2, grad, star = norms(State(0.0, Field(g, v, 0.0), zero.mu, zero.sigma), g)["phi"]
    assert l2**2 <= star * grad * (1 + 1e-12)


def test_csv_round_trip(tmp_path):
    sc = load("default", ["time.t_end=0.005", "grid.n=15"])
    mon = run_monitored(sc.problem, sc.stepper)
    path = tmp_path / "d.csv"
    write_csv(mon.records, path)
    assert path.read_text().splitlines()[0] == ",".join(COLUMNS)
    assert read_csv(path) == mon.records
