"""Problem definition: parameters, coefficient functions, data, assumption checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .expr import SpaceTimeFunction
from .grid import Field, Grid
from .potential import RegularPotential, SingularPotential

_SAMPLES = np.linspace(-10.0, 10.0, 10_001)


@dataclass(frozen=True)
class ClampedH:
    """h(y) = clamp((1 + y)/2, 0, 1): h(-1) = 0, h(1) = 1, globally bounded."""

    kind = "clamped"
    bound = 1.0
    lipschitz = 0.5

    def __call__(self, y):
        return np.clip(0.5 * (1.0 + np.asarray(y, dtype=float)), 0.0, 1.0)


@dataclass(frozen=True)
class LinearH:
    """Unclamped interpolant (1 + y)/2; unbounded, kept to exercise validation."""

    kind = "linear"
    bound = 1.0
    lipschitz = 0.5

    def __call__(self, y):
        return 0.5 * (1.0 + np.asarray(y, dtype=float))


@dataclass(frozen=True)
class ConstantD:
    D0: float = 1.0

    kind = "constant"

    @property
    def D1(self):
        return self.D0

    def __call__(self, y):
        return np.full_like(np.asarray(y, dtype=float), self.D0)


@dataclass(frozen=True)
class InterpolatedD:
    """D(y) = D0 + (D1 - D0) * clamp((1 + y)/2, 0, 1): healthy value D0, tumor value D1."""

    D0: float = 1.0
    D1: float = 2.0

    kind = "interp"

    def __call__(self, y):
        s = np.clip(0.5 * (1.0 + np.asarray(y, dtype=float)), 0.0, 1.0)
        return self.D0 + (self.D1 - self.D0) * s


def _lower(D):
    return min(D.D0, D.D1)


def _upper(D):
    return max(D.D0, D.D1)


@dataclass(frozen=True)
class ModelParams:
    gamma: float = 1.0
    eps: float = 0.1
    kappa: float = 1.0
    lambda_p: float = 0.0
    lambda_a: float = 0.0
    lambda_c: float = 0.0
    chi: float = 0.0
    eta: float = 0.0
    D: object = field(default_factory=ConstantD)
    h: object = field(default_factory=ClampedH)

    @property
    def D0(self) -> float:
        return _lower(self.D)

    @property
    def D1(self) -> float:
        return _upper(self.D)

    @property
    def h_inf(self) -> float:
        return self.h.bound

    @property
    def L_h(self) -> float:
        return self.h.lipschitz


def _as_function(f) -> SpaceTimeFunction:
    return f if isinstance(f, SpaceTimeFunction) else SpaceTimeFunction(f)


class BoundaryData:
    """Dirichlet data mu_inf, sigma_inf as space-time functions on the whole box.

    ``sigma_inf_dt`` comes from symbolic differentiation when possible;
    otherwise a centered difference with step ``fd_step`` is used and
    ``dt_is_approximate`` is set.
    """

    def __init__(self, mu_inf=0.0, sigma_inf=0.0, sigma_inf_dt=None, fd_step: float = 1e-5):
        self.mu_inf = _as_function(mu_inf)
        self.sigma_inf = _as_function(sigma_inf)
        self.fd_step = fd_step
        if sigma_inf_dt is not None:
            self._dt = _as_function(sigma_inf_dt)
        else:
            self._dt = self.sigma_inf.time_derivative()
        self.dt_is_approximate = self._dt is None

    def sigma_inf_dt(self, x, y=0.0, t=0.0):
        if self._dt is not None:
            return self._dt(x, y, t)
        d = self.fd_step
        return (self.sigma_inf(x, y, t + d) - self.sigma_inf(x, y, t - d)) / (2.0 * d)


class InitialData:
    """phi0 and sigma0 as space expressions (``t`` is ignored)."""

    def __init__(self, phi0=-1.0, sigma0=0.0):
        self.phi0 = _as_function(phi0)
        self.sigma0 = _as_function(sigma0)

    def fields(self, grid: Grid, bdata: BoundaryData) -> tuple:
        phi = Field(grid, grid.evaluate(self.phi0, 0.0), -1.0)
        sigma = Field(grid, grid.evaluate(self.sigma0, 0.0), bdata.sigma_inf)
        return phi, sigma


@dataclass
class Forcing:
    """Optional volume forcing added to the three equations (manufactured solutions)."""

    phi: Callable
    mu: Callable
    sigma: Callable


@dataclass
class Problem:
    grid: Grid
    params: ModelParams
    potential: object
    bdata: BoundaryData
    idata: InitialData
    quasistatic: bool = False
    forcing: Optional[Forcing] = None

    @property
    def singular(self) -> bool:
        return isinstance(self.potential, SingularPotential)

    @property
    def mode(self) -> str:
        if self.quasistatic:
            return "quasistatic"
        return "singular" if self.singular else "dynamic"


@dataclass(frozen=True)
class Check:
    label: str
    ok: bool
    detail: str = ""

    def __str__(self):
        state = "PASS" if self.ok else "FAIL"
        return f"{self.label} {state}" + (f": {self.detail}" if self.detail else "")


def check_assumptions(params: ModelParams, potential, bdata: BoundaryData, idata: InitialData,
                      mode: str = "dynamic", grid: Grid | None = None, t_end: float = 1.0,
                      ctsdep: bool = False) -> list:
    """Evaluate every applicable assumption; one :class:`Check` per failure or per passed label."""
    grid = grid or Grid((1.0,), (32,))
    quasistatic = mode == "quasistatic"
    failures: list = []

    def fail(label, msg):
        failures.append(Check(label, False, msg))

    # (A1)
    p = params
    for name in ("gamma", "eps"):
        if not getattr(p, name) > 0:
            fail("(A1)", f"{name} = {getattr(p, name)} must be positive")
    for name in ("lambda_p", "lambda_a", "lambda_c", "chi", "eta"):
        if not getattr(p, name) >= 0:
            fail("(A1)", f"{name} = {getattr(p, name)} must be non-negative")
    if quasistatic:
        if p.kappa != 0:
            fail("(A1)", f"quasi-static mode requires kappa = 0, got {p.kappa}")
    elif not p.kappa > 0:
        fail("(A1)", f"kappa = {p.kappa} must be positive in the dynamic model")

    # (A2)
    d = np.asarray(p.D(_SAMPLES))
    if not p.D0 > 0:
        fail("(A2)", f"D0 = {p.D0} must be positive")
    if np.min(d) < p.D0 - 1e-12 or np.max(d) > p.D1 + 1e-12:
        fail("(A2)", f"D outside [{p.D0}, {p.D1}]: range [{np.min(d):.4g}, {np.max(d):.4g}]")
    hv = np.asarray(p.h(_SAMPLES))
    if np.min(hv) < 0 or np.max(hv) > p.h_inf + 1e-12:
        k = int(np.argmin(hv)) if np.min(hv) < 0 else int(np.argmax(hv))
        fail("(A2)", f"h({_SAMPLES[k]:.4g}) = {hv[k]:.4g} outside [0, {p.h_inf}]")

    # potential structure
    for label, msg in potential.validate():
        fail(label, msg)

    # (A4) data
    ts = np.linspace(0.0, t_end, 11)
    for name, func in (("mu_inf", bdata.mu_inf), ("sigma_inf", bdata.sigma_inf)):
        for t in ts:
            vals = grid.evaluate(func, t, padded=True)
            if not np.all(np.isfinite(vals)):
                fail("(A4)", f"{name} not finite at t = {t:.4g}")
                break
    for t in ts:
        vals = grid.evaluate(bdata.sigma_inf_dt, t, padded=True)
        if not np.all(np.isfinite(vals)):
            fail("(A4)", f"d/dt sigma_inf not finite at t = {t:.4g}")
            break
    phi0_full = grid.evaluate(idata.phi0, 0.0, padded=True)
    sigma0 = grid.evaluate(idata.sigma0, 0.0)
    trace = phi0_full[grid.boundary_mask]
    if not np.all(np.isfinite(phi0_full)) or not np.all(np.isfinite(sigma0)):
        fail("(A4)", "initial data not finite")
    elif np.max(np.abs(trace + 1.0)) > 1e-8:
        fail("(A4)", f"phi0 trace must equal -1, max deviation {np.max(np.abs(trace + 1.0)):.3g}")
    phi0 = phi0_full[grid.interior]
    if isinstance(potential, SingularPotential):
        if np.any(~np.isfinite(potential.beta_hat(phi0))):
            bad = phi0[(phi0 < potential.lo) | (phi0 > potential.hi)]
            fail("(S3)", f"phi0 outside obstacle [{potential.lo}, {potential.hi}], e.g. {bad.flat[0]:.4g}")
    elif not np.all(np.isfinite(potential.psi(phi0))):
        fail("(A4)", "psi(phi0) not integrable")

    if ctsdep:
        if p.D.kind != "constant":
            fail("(C1)", f"D must be constant, got {p.D.kind}")
        if not np.isfinite(p.L_h):
            fail("(C2)", "h not Lipschitz")
        for label, msg in potential.validate_uniqueness():
            fail(label, msg)

    labels = ["(A1)", "(A2)"]
    labels += ["(S1)", "(S2)", "(S3)"] if isinstance(potential, SingularPotential) else ["(A3)"]
    labels += ["(A4)"]
    if ctsdep:
        labels += ["(C1)", "(C2)"] + ([] if isinstance(potential, SingularPotential) else ["(C3)"])
    failed = {c.label for c in failures}
    passed = [Check(lab, True) for lab in labels if lab not in failed]
    return passed + failures


def validate_model(params, potential, bdata, idata, mode: str = "dynamic", **kw) -> list:
    """Violated assumptions as :class:`Check` records (empty when everything passes)."""
    return [c for c in check_assumptions(params, potential, bdata, idata, mode, **kw) if not c.ok]


def eval_sources(params: ModelParams, phi, sigma) -> tuple:
    """Nodewise ((lambda_p sigma - lambda_a) h(phi), -lambda_c sigma h(phi))."""
    if isinstance(phi, Field) and isinstance(sigma, Field):
        if phi.grid.n != sigma.grid.n:
            raise ValueError("phi and sigma live on different grids")
    pv = phi.values if isinstance(phi, Field) else np.asarray(phi, dtype=float)
    sv = sigma.values if isinstance(sigma, Field) else np.asarray(sigma, dtype=float)
    if pv.shape != sv.shape:
        raise ValueError("phi and sigma have different shapes")
    h = params.h(pv)
    return (params.lambda_p * sv - params.lambda_a) * h, -params.lambda_c * sv * h
