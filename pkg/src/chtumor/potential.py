"""Free-energy densities for the order parameter.

Two families share one stepping interface: the stepper treats
``convex_prime`` implicitly and ``explicit_prime`` explicitly, and uses
``convex_second`` for the Newton Jacobian.

* :class:`RegularPotential` -- polynomial ``psi = psi1 + psi2`` with ``psi1``
  convex and ``psi2`` quadratic (constant second derivative).
* :class:`SingularPotential` -- box obstacle indicator on ``[lo, hi]`` plus a
  smooth perturbation ``Lambda``; evolved through its Yosida regularisation
  with parameter ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial

_SAMPLES = np.linspace(-10.0, 10.0, 10_001)


def _poly(coefs) -> Polynomial:
    return coefs if isinstance(coefs, Polynomial) else Polynomial(np.asarray(coefs, dtype=float))


def _degree(p: Polynomial) -> int:
    c = np.trim_zeros(np.asarray(p.coef, dtype=float), "b")
    return max(len(c) - 1, 0)


@dataclass(frozen=True)
class RegularPotential:
    """Polynomial double-well split into convex and quadratic parts.

    Coefficients are in ascending order.  ``growth_s`` is the exponent in
    ``|psi'|^s <= k1 (1 + psi)``; it is only checked for compatibility with
    the polynomial degrees.
    """

    psi1_coefs: tuple
    psi2_coefs: tuple
    growth_s: float = 4.0 / 3.0
    name: str = "custom"

    smooth = True

    def __post_init__(self):
        object.__setattr__(self, "psi1_coefs", tuple(float(c) for c in np.atleast_1d(self.psi1_coefs)))
        object.__setattr__(self, "psi2_coefs", tuple(float(c) for c in np.atleast_1d(self.psi2_coefs)))

    @classmethod
    def quartic(cls) -> "RegularPotential":
        """(s^2 - 1)^2 with psi1 = s^4 + 1 and psi2 = -2 s^2."""
        return cls((1.0, 0.0, 0.0, 0.0, 1.0), (0.0, 0.0, -2.0), growth_s=4.0 / 3.0, name="quartic")

    @property
    def psi1(self) -> Polynomial:
        return _poly(self.psi1_coefs)

    @property
    def psi2(self) -> Polynomial:
        return _poly(self.psi2_coefs)

    def psi(self, y):
        return self.psi1(y) + self.psi2(y)

    def psi1_prime(self, y):
        return self.psi1.deriv()(y)

    def psi2_prime(self, y):
        return self.psi2.deriv()(y)

    def psi_prime(self, y):
        return self.psi1_prime(y) + self.psi2_prime(y)

    # stepping interface
    def energy_density(self, y):
        return self.psi(y)

    def convex_prime(self, y):
        return self.psi1_prime(y)

    def convex_second(self, y):
        return self.psi1.deriv(2)(np.asarray(y, dtype=float)) * np.ones_like(y, dtype=float)

    def explicit_prime(self, y):
        return self.psi2_prime(y)

    def validate(self) -> list:
        """Sampled checks of the structural assumptions; returns (label, message) pairs."""
        out = []
        y = _SAMPLES
        psi = self.psi(y)
        if np.min(psi) < -1e-12:
            k = int(np.argmin(psi))
            out.append(("(A3)", f"potential negative: psi({y[k]:.4g}) = {psi[k]:.4g}"))
        d2 = self.psi1.deriv(2)(y) * np.ones_like(y)
        if np.min(d2) < -1e-12:
            k = int(np.argmin(d2))
            out.append(("(A3)", f"psi1 not convex: psi1''({y[k]:.4g}) = {d2[k]:.4g}"))
        if _degree(self.psi2) > 2:
            out.append(("(A3)", f"psi2'' not constant (degree {_degree(self.psi2)})"))
        if not 1.0 < self.growth_s <= 2.0:
            out.append(("(A3)", f"growth exponent s = {self.growth_s} outside (1, 2]"))
        else:
            deg_psi = _degree(self.psi1 + self.psi2)
            deg_dpsi = _degree((self.psi1 + self.psi2).deriv())
            if deg_dpsi * self.growth_s > deg_psi + 1e-12:
                out.append(("(A3)", f"|psi'|^s grows faster than psi (deg {deg_dpsi}*{self.growth_s} > {deg_psi})"))
        return out

    def validate_uniqueness(self) -> list:
        """Local Lipschitz bound on psi' of order 4 needed for continuous dependence."""
        deg = _degree((self.psi1 + self.psi2).deriv())
        if deg > 5:
            return [("(C3)", f"psi' has degree {deg} > 5")]
        return []


@dataclass(frozen=True)
class SingularPotential:
    """Box obstacle on ``[lo, hi]`` plus polynomial ``Lambda``, Yosida parameter ``n``.

    ``Lambda`` defaults to ``(1 - y^2)/2`` (coefficients ascending).
    """

    n: float = 0.01
    lo: float = -1.0
    hi: float = 1.0
    lambda_coefs: tuple = (0.5, 0.0, -0.5)

    smooth = False
    name = "obstacle"

    def __post_init__(self):
        object.__setattr__(self, "lambda_coefs", tuple(float(c) for c in self.lambda_coefs))

    def with_n(self, n: float) -> "SingularPotential":
        return replace(self, n=float(n))

    @property
    def lam(self) -> Polynomial:
        return _poly(self.lambda_coefs)

    def beta_hat(self, y):
        """Indicator of the obstacle interval: 0 inside, +inf outside."""
        y = np.asarray(y, dtype=float)
        return np.where((y >= self.lo) & (y <= self.hi), 0.0, np.inf)

    def resolvent(self, y):
        return np.clip(y, self.lo, self.hi)

    def yosida_beta(self, y):
        return (np.asarray(y, dtype=float) - self.resolvent(y)) / self.n

    def yosida_beta_hat(self, y):
        d = np.asarray(y, dtype=float) - self.resolvent(y)
        return d * d / (2.0 * self.n)

    def yosida_beta_prime(self, y):
        y = np.asarray(y, dtype=float)
        return np.where((y < self.lo) | (y > self.hi), 1.0 / self.n, 0.0)

    def lambda_(self, y):
        return self.lam(y)

    def lambda_prime(self, y):
        return self.lam.deriv()(y)

    def lambda_second_bound(self) -> float:
        d2 = self.lam.deriv(2)
        return float(np.max(np.abs(d2(_SAMPLES) * np.ones_like(_SAMPLES))))

    def psi(self, y):
        """Regularised density beta_hat_n + Lambda."""
        return self.yosida_beta_hat(y) + self.lambda_(y)

    def psi_prime(self, y):
        return self.yosida_beta(y) + self.lambda_prime(y)

    # stepping interface
    def energy_density(self, y):
        return self.psi(y)

    def convex_prime(self, y):
        return self.yosida_beta(y)

    def convex_second(self, y):
        return self.yosida_beta_prime(y)

    def explicit_prime(self, y):
        return self.lambda_prime(y)

    def validate(self) -> list:
        out = []
        if not self.n > 0:
            out.append(("(S1)", f"Yosida parameter n = {self.n} must be positive"))
        elif self.n > 1:
            out.append(("(S1)", f"Yosida parameter n = {self.n} outside (0, 1]"))
        if not self.lo < self.hi:
            out.append(("(S1)", f"empty obstacle interval [{self.lo}, {self.hi}]"))
        if not self.lo <= -1.0 <= self.hi:
            out.append(("(S1)", f"-1 not in domain of beta: interval [{self.lo}, {self.hi}]"))
        if not self.lo <= 0.0 <= self.hi:
            out.append(("(S1)", f"beta_hat(0) = inf: interval [{self.lo}, {self.hi}]"))
        if _degree(self.lam) > 2:
            out.append(("(S2)", f"Lambda'' unbounded (degree {_degree(self.lam)})"))
        inside = np.linspace(self.lo, self.hi, 1001) if self.lo < self.hi else np.array([self.lo])
        lam = self.lambda_(inside)
        if np.min(lam) < -1e-12:
            k = int(np.argmin(lam))
            out.append(("(S2)", f"Lambda negative on obstacle interval: Lambda({inside[k]:.4g}) = {lam[k]:.4g}"))
        return out

    def validate_uniqueness(self) -> list:
        return []


def psi(pot, y):
    return pot.psi(y)


def psi_prime(pot, y):
    return pot.psi_prime(y)


def psi1_prime(pot: RegularPotential, y):
    return pot.psi1_prime(y)


def psi2_prime(pot: RegularPotential, y):
    return pot.psi2_prime(y)


def yosida_beta(pot: SingularPotential, y):
    return pot.yosida_beta(y)


def yosida_beta_hat(pot: SingularPotential, y):
    return pot.yosida_beta_hat(y)


def lambda_prime(pot: SingularPotential, y):
    return pot.lambda_prime(y)


def validate(pot) -> list:
    """Human-readable list of violated assumptions (empty when all pass)."""
    return [f"{label} {msg}" for label, msg in pot.validate()]
