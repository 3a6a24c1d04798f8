import numpy as np
import pytest
import scipy.sparse as sp

from chtumor.grid import Field, Grid, l2_inner
from chtumor.model import BoundaryData, ConstantD, InitialData, ModelParams, Problem
from chtumor.potential import RegularPotential, SingularPotential
from chtumor.solver import (JacobianMismatch, LinearSolverError, NonConvergence, SparseOperator,
                            State, Stepper, StepperConfig, inverse_dirichlet_laplacian, linear_solve,
                            newton_solve, pcg, quasistatic_sigma_solve, quasistatic_step, star_norm,
                            step)
from chtumor.solver.newton import jacobian_probe

TUMOR = "-1 + 1.8*exp(-((x-0.5)/0.15)^4)*sin(pi*x)"


def tumor_problem(n=63, potential=None, quasistatic=False, **kw):
    params = dict(gamma=1.0, eps=0.05, kappa=0.0 if quasistatic else 1.0, lambda_p=1.0, lambda_a=0.1,
                  lambda_c=1.0, chi=0.5, eta=0.2)
    params.update(kw)
    return Problem(Grid((1.0,), (n,)), ModelParams(**params), potential or RegularPotential.quartic(),
                   BoundaryData("0.1*cos(t)", 1.0), InitialData(TUMOR, 0.5), quasistatic=quasistatic)


# -- linear algebra ---------------------------------------------------------------

def test_identity_operator_returns_rhs():
    b = np.random.default_rng(0).standard_normal(20)
    np.testing.assert_allclose(linear_solve(SparseOperator(sp.identity(20), True), b), b, atol=1e-14)
    np.testing.assert_allclose(linear_solve(sp.identity(20), b, symmetric=False), b, atol=1e-14)


@pytest.mark.parametrize("symmetric", [True, False])
def test_laplacian_solve_recovers_known_vector(symmetric):
    g = Grid((1.0,), (200,))
    a = -g.laplacian_matrix
    u = np.sin(3 * g.coords[0].ravel()) + 0.1
    b = a @ u
    x = linear_solve(SparseOperator(a, symmetric), b, tol=1e-12)
    assert np.linalg.norm(b - a @ x) <= 1e-12 * np.linalg.norm(b)


def test_cg_error_decreases_in_energy_norm():
    g = Grid((1.0,), (60,))
    a = (-g.laplacian_matrix).tocsr()
    u = np.random.default_rng(1).standard_normal(g.size)
    b = a @ u
    errors = []
    pcg(a, b, tol=1e-13, max_iter=500, callback=lambda x: errors.append((x - u) @ (a @ (x - u))))
    assert all(e1 <= e0 * (1 + 1e-12) for e0, e1 in zip(errors, errors[1:]))


def test_symmetry_probe_and_breakdown():
    g = Grid((1.0, 1.0), (6, 7))
    assert SparseOperator(g.laplacian_matrix, True).symmetry_probe() < 1e-12
    with pytest.raises(LinearSolverError):
        pcg(sp.csr_matrix(-np.eye(4)), np.ones(4))


# -- Newton -----------------------------------------------------------------------

def test_newton_identity_in_one_iteration():
    res = newton_solve(lambda x: x, lambda x: sp.identity(x.size), np.full(5, 3.0))
    assert res.iterations == 1 and np.all(res.x == 0)


def test_newton_cubic_root():
    res = newton_solve(lambda x: x**3 - 8, lambda x: np.diag(3 * x**2), np.array([3.0]), tol=1e-14)
    assert res.x[0] == pytest.approx(2.0, abs=1e-10)


def test_newton_rejects_wrong_jacobian_and_reports_failure():
    with pytest.raises(JacobianMismatch):
        newton_solve(lambda x: x**3 - 8, lambda x: np.diag(x**2), np.array([3.0]), check_jacobian=True)
    assert jacobian_probe(lambda x: x**3, lambda x: np.diag(3 * x**2), np.array([1.0, 2.0])) < 1e-5
    with pytest.raises(NonConvergence):
        newton_solve(lambda x: x**2 + 1, lambda x: np.diag(2 * x), np.array([0.5]), max_iter=5)


# -- inverse Laplacian and star norm ----------------------------------------------

def test_inverse_laplacian_of_one():
    errs = []
    for n in (31, 63):
        g = Grid((1.0,), (n,))
        x = g.coords[0].ravel()
        u = inverse_dirichlet_laplacian(np.ones(g.size), g)
        errs.append(np.max(np.abs(u - x * (1 - x) / 2)))
    # the 3-point stencil is exact on quadratics
    assert max(errs) < 1e-11
    g = Grid((1.0,), (63,))
    assert np.all(inverse_dirichlet_laplacian(np.zeros(g.size), g) == 0)


def test_inverse_laplacian_is_symmetric_and_inverts():
    rng = np.random.default_rng(2)
    g = Grid((1.0, 1.3), (12, 15))
    f, h = rng.standard_normal(g.size), rng.standard_normal(g.size)
    a, b = l2_inner(g, f, inverse_dirichlet_laplacian(h, g)), l2_inner(g, h, inverse_dirichlet_laplacian(f, g))
    assert abs(a - b) <= 1e-12 * abs(a)
    u = inverse_dirichlet_laplacian(f, g)
    assert g.gradient_pairing(g.pad(u, 0.0), g.pad(h, 0.0)) == pytest.approx(l2_inner(g, f, h), rel=1e-10)


def test_star_norm_examples():
    g = Grid((1.0,), (255,))
    assert star_norm(np.zeros(g.size), g) == 0.0
    # sum_i h x_i(1 - x_i)/2 equals 1/12 - h^2/12 exactly
    h = g.spacing[0]
    assert star_norm(np.ones(g.size), g) == pytest.approx(np.sqrt(1 / 12 - h**2 / 12), rel=1e-10)
    assert star_norm(np.ones(g.size), g) == pytest.approx(np.sqrt(1 / 12), rel=1e-4)


def test_interpolation_inequality_on_random_fields():
    rng = np.random.default_rng(4)
    violations = 0
    for k in range(100):
        g = Grid((1.0,), (40,)) if k % 2 else Grid((1.0, 1.0), (9, 11))
        v = rng.standard_normal(g.size) * rng.uniform(0.1, 10)
        grad = np.sqrt(g.gradient_pairing(g.pad(v, 0.0), g.pad(v, 0.0)))
        violations += l2_inner(g, v, v) > star_norm(v, g) * grad * (1 + 1e-12)
    assert violations == 0


# -- stepping ---------------------------------------------------------------------

def test_stepper_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(tau=0.0)
    with pytest.raises(ValueError):
        StepperConfig(newton_tol=-1.0)
    assert StepperConfig(tau=1e-3, t_end=0.25).n_steps == 250


def test_stationary_healthy_tissue_is_unchanged():
    g = Grid((1.0,), (31,))
    pr = Problem(g, ModelParams(kappa=1.0), RegularPotential.quartic(), BoundaryData(0, 0), InitialData(-1, 0))
    st = Stepper(pr, StepperConfig(tau=1e-2))
    s0 = st.initial_state()
    s = st.run(s0, n_steps=10)
    assert np.all(s.phi.values == -1) and np.all(s.sigma.values == 0)
    assert np.max(np.abs(s.mu.values)) == 0
    qs = quasistatic_step(s0, pr, StepperConfig(tau=1e-2))
    assert np.all(qs.phi.values == -1)


def test_pure_cahn_hilliard_energy_non_increasing():
    from chtumor.diagnostics import free_energy
    g = Grid((1.0,), (63,))
    pr = Problem(g, ModelParams(eps=0.05, kappa=1.0), RegularPotential.quartic(), BoundaryData(0, 0),
                 InitialData("-1 + 1.8*exp(-((x-0.45)/0.2)^4)*sin(pi*x)", 0))
    st = Stepper(pr, StepperConfig(tau=1e-3))
    energies = []
    st.run(callback=lambda old, new: energies.append(free_energy(pr, new, 1.0)), n_steps=100)
    assert all(b <= a for a, b in zip(energies, energies[1:]))


def test_step_satisfies_discrete_equations():
    pr = tumor_problem()
    cfg = StepperConfig(tau=1e-3, newton_tol=1e-11)
    st = Stepper(pr, cfg)
    s0 = st.initial_state()
    s1 = st.step(s0)
    res = st.weak_residuals(s0, s1)
    assert res["mu"] < 1e-10 and res["sigma"] < 1e-10
    assert res["phi"] <= 10 * cfg.newton_tol
    assert s1.step_index == 1 and s1.t == pytest.approx(1e-3)
    s1b = step(s0, pr, cfg)
    np.testing.assert_array_equal(s1b.phi.values, s1.phi.values)


def test_picard_iterations_keep_residuals_small():
    pr = tumor_problem()
    st = Stepper(pr, StepperConfig(tau=1e-3, picard=3))
    s0 = st.initial_state()
    s1 = st.step(s0)
    assert max(st.weak_residuals(s0, s1).values()) < 1e-8
    assert not np.array_equal(st.sigma_phi, s0.phi.values)


def test_quasistatic_sigma_examples():
    g = Grid((1.0,), (63,))
    x = g.coords[0].ravel()
    cfg = StepperConfig()
    phi = Field(g, np.full(g.size, -1.0), -1.0)
    pr = Problem(g, ModelParams(kappa=0.0), RegularPotential.quartic(), BoundaryData(0, 2.5), InitialData(),
                 quasistatic=True)
    np.testing.assert_allclose(quasistatic_sigma_solve(phi, pr, cfg, 0.0).values, 2.5, rtol=1e-12)
    pr = Problem(g, ModelParams(kappa=0.0), RegularPotential.quartic(), BoundaryData(0, "x"), InitialData(),
                 quasistatic=True)
    np.testing.assert_allclose(quasistatic_sigma_solve(phi, pr, cfg, 0.0).values, x, atol=1e-10)


def test_quasistatic_sigma_with_active_transport_solves_assembled_system():
    g = Grid((1.0,), (63,))
    pr = Problem(g, ModelParams(kappa=0.0, eta=1.0, D=ConstantD(1.0)), RegularPotential.quartic(),
                 BoundaryData(0, "1 + x"), InitialData(), quasistatic=True)
    phi = Field(g, np.sin(np.pi * g.coords[0].ravel()) - 1.0, -1.0)
    sigma = quasistatic_sigma_solve(phi, pr, StepperConfig(linear_tol=1e-13), 0.0)
    # div(grad sigma - grad phi) = 0 at every node: tested against every unit vector
    flux = g.flux_divergence(g.face_weights(), sigma.padded(0.0) - phi.padded(0.0))
    assert np.max(np.abs(flux)) < 1e-8 * np.max(np.abs(g.laplacian_matrix @ phi.values))


def test_obstacle_run_stays_near_interval():
    pr = tumor_problem(n=63, potential=SingularPotential(1e-3))
    st = Stepper(pr, StepperConfig(tau=1e-3))
    s = st.run(n_steps=20)
    assert np.max(np.abs(s.phi.values)) < 1.0 + 5e-3


def test_state_traces():
    pr = tumor_problem()
    s = Stepper(pr, StepperConfig()).initial_state()
    assert isinstance(s, State)
    p = s.phi.padded(0.0)
    assert p[0] == -1.0 and p[-1] == -1.0
    assert s.mu.padded(0.0)[0] == pytest.approx(0.1)
    assert s.sigma.padded(0.0)[-1] == 1.0
