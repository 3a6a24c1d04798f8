from .linear import LinearSolverError, SparseOperator, linear_solve, pcg
from .newton import JacobianMismatch, NewtonResult, NonConvergence, jacobian_probe, newton_solve
from .stepper import (
    State,
    Stepper,
    StepperConfig,
    inverse_dirichlet_laplacian,
    quasistatic_sigma_solve,
    quasistatic_step,
    star_norm,
    step,
)

__all__ = [
    "LinearSolverError",
    "SparseOperator",
    "linear_solve",
    "pcg",
    "JacobianMismatch",
    "NewtonResult",
    "NonConvergence",
    "jacobian_probe",
    "newton_solve",
    "State",
    "Stepper",
    "StepperConfig",
    "inverse_dirichlet_laplacian",
    "quasistatic_sigma_solve",
    "quasistatic_step",
    "star_norm",
    "step",
]
