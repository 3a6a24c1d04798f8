"""Continuous dependence on initial and boundary data.

A baseline run is compared with runs whose data are shifted by ``delta``
times fixed shapes.  ``lhs`` is the solution-difference functional and
``rhs`` the data-difference functional of the stability estimate for the
chosen mode; ``R = lhs / rhs`` should stay below one calibrated cap.

==============  ===========================================  ======================================
mode            lhs                                           rhs
==============  ===========================================  ======================================
dynamic         sup(|dphi|^2 + k|dsigma|^2) + |dmu|_L2L2^2    |dphi0|^2 + |dmu_inf|_L2H1^2
                + |dsigma|_L2H1^2 + |dphi|_L2H1^2             + |dsigma_inf|_L2H1^2
                                                              + k(|dsigma_inf|_LinfL2^2 + |dsigma0|^2)
                                                              + k^2 |d/dt dsigma_inf|_L2L2^2
quasistatic     sup |dphi|^2 + |dmu|_L2L2^2                   |dphi0|^2 + |dmu_inf|_L2H1^2
                + |dsigma|_L2H1^2 + |dphi|_L2H1^2             + |dsigma_inf|_L2H1^2
singular        sup(|dphi|_*^2 + k|dsigma|^2)                 |dphi0|_*^2 + |dsigma_inf|_L2H1^2
                + |dsigma|_L2H1^2 + |dphi|_L2H1^2             + k^2 |dsigma_inf|_H1(L2)^2
                                                              + k(|dsigma_inf|_LinfL2^2 + |dsigma0|^2)
==============  ===========================================  ======================================
"""

from __future__ import annotations

import copy
from pathlib import Path

import numpy as np

from ..config import ConfigError
from ..expr import SpaceTimeFunction
from ..grid import l2_inner
from ..solver.stepper import star_norm
from .common import SweepReport, SweepSpec, config_hash, run_members

MODES = ("dynamic", "quasistatic", "singular")
DATA = ("phi0", "sigma0", "mu_inf", "sigma_inf")

# perturbation shapes; phi0 is shifted by delta * (1 - phi0^2)/2 * bump so it keeps
# its trace and stays inside [-1, 1]
SHAPES = {
    "sigma0": "1",
    "mu_inf": "0.5*cos(pi*x/{L})*(1 + t)",
    "sigma_inf": "(1 + 0.5*x/{L})*(1 + t)",
}


class PreconditionError(ConfigError):
    pass


def default_perturbed(mode: str) -> tuple:
    if mode == "singular":
        return ("phi0", "sigma0", "sigma_inf")
    if mode == "quasistatic":
        return ("phi0", "mu_inf", "sigma_inf")
    return DATA


def mode_config(cfg: dict, mode: str) -> dict:
    out = copy.deepcopy(cfg)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "quasistatic":
        out["params"]["kappa"] = "0.0"
        out["mode"]["model"] = "quasistatic"
        if out["potential"]["kind"] == "obstacle":
            out["potential"]["kind"] = "quartic"
    else:
        out["mode"]["model"] = "dynamic"
        if mode == "singular":
            out["potential"]["kind"] = "obstacle"
        elif out["potential"]["kind"] == "obstacle":
            out["potential"]["kind"] = "quartic"
    return out


def _bump(cfg):
    extent = [float(v) for v in cfg["grid"]["extent"].split(",")]
    L = extent[0]
    b = f"sin(pi*x/{L!r})"
    dims = len(cfg["grid"]["n"].split(","))
    if max(dims, len(extent)) == 2:
        Ly = extent[-1]
        b += f"*sin(pi*y/{Ly!r})"
    return b, L


def perturb(cfg: dict, delta: float, which) -> dict:
    """Shift the selected data of ``cfg`` by ``delta`` times the fixed shapes."""
    if delta == 0.0:
        return copy.deepcopy(cfg)
    out = copy.deepcopy(cfg)
    bump, L = _bump(cfg)
    d = repr(float(delta))
    for name in which:
        if name == "phi0":
            base = out["initial"]["phi0"]
            out["initial"]["phi0"] = f"({base}) + {d}*0.5*(1 - ({base})^2)*{bump}"
        elif name == "sigma0":
            out["initial"]["sigma0"] = f"({out['initial']['sigma0']}) + {d}*{SHAPES['sigma0']}"
        elif name in ("mu_inf", "sigma_inf"):
            shape = SHAPES[name].format(L=repr(L))
            out["boundary"][name] = f"({out['boundary'][name]}) + {d}*{shape}"
            if name == "sigma_inf":
                out["boundary"]["sigma_inf_dt"] = ""
        else:
            raise ConfigError(f"unknown datum {name!r}; choose from {DATA}")
    return out


def _data_arrays(traj, section, key, padded):
    f = SpaceTimeFunction(traj.config[section][key])
    g = traj.grid
    return np.array([g.evaluate(f, t, padded=padded) for t in traj.times])


def _sq(g, v):
    return l2_inner(g, v, v)


def data_difference(a, b, mode: str) -> dict:
    """Norms of the data differences between two member configs."""
    g = a.grid
    tau = a.tau
    kappa = float(a.config["params"]["kappa"])
    inner = g.interior
    dphi0 = a.phi[0] - b.phi[0]
    out = {"phi0": star_norm(dphi0, g) ** 2 if mode == "singular" else _sq(g, dphi0)}
    for key in ("mu_inf", "sigma_inf"):
        da = _data_arrays(a, "boundary", key, True) - _data_arrays(b, "boundary", key, True)
        l2h1 = sum(tau * (_sq(g, d[inner].ravel()) + g.gradient_pairing(d, d)) for d in da[1:])
        out[f"{key}_l2h1"] = float(l2h1)
        if key == "sigma_inf":
            di = [d[inner].ravel() for d in da]
            out["sigma_inf_linfl2"] = float(max(_sq(g, d) for d in di))
            out["sigma_inf_l2l2"] = float(sum(tau * _sq(g, d) for d in di[1:]))
            out["sigma_inf_dt_l2l2"] = float(sum(tau * _sq(g, (d1 - d0) / tau) for d0, d1 in zip(di, di[1:])))
    ds0 = _data_arrays(a, "initial", "sigma0", False)[0].ravel() - _data_arrays(b, "initial", "sigma0", False)[0].ravel()
    out["sigma0"] = _sq(g, ds0)
    out["kappa"] = kappa
    return out


def data_functional(d: dict, mode: str) -> float:
    k = d["kappa"]
    if mode == "dynamic":
        return (d["phi0"] + d["mu_inf_l2h1"] + d["sigma_inf_l2h1"]
                + k * (d["sigma_inf_linfl2"] + d["sigma0"]) + k**2 * d["sigma_inf_dt_l2l2"])
    if mode == "quasistatic":
        return d["phi0"] + d["mu_inf_l2h1"] + d["sigma_inf_l2h1"]
    return (d["phi0"] + d["sigma_inf_l2h1"] + k**2 * (d["sigma_inf_l2l2"] + d["sigma_inf_dt_l2l2"])
            + k * (d["sigma_inf_linfl2"] + d["sigma0"]))


def solution_functional(a, b, mode: str) -> float:
    g = a.grid
    tau = a.tau
    kappa = 0.0 if mode == "quasistatic" else float(a.config["params"]["kappa"])
    dphi = a.phi - b.phi
    dmu = a.mu - b.mu
    dsig = a.sigma - b.sigma
    sig_inf_a = _data_arrays(a, "boundary", "sigma_inf", True)
    sig_inf_b = _data_arrays(b, "boundary", "sigma_inf", True)

    def sigma_h1(k):
        trace_diff = sig_inf_a[k] - sig_inf_b[k]
        p = trace_diff.copy()
        p[g.interior] = dsig[k].reshape(g.shape)
        return _sq(g, dsig[k]) + g.gradient_pairing(p, p)

    def phi_h1(k):
        p = g.pad(dphi[k], 0.0)
        return _sq(g, dphi[k]) + g.gradient_pairing(p, p)

    steps = range(1, len(a.times))
    if mode == "singular":
        sup = max(star_norm(dphi[k], g) ** 2 + kappa * _sq(g, dsig[k]) for k in steps)
        mu_part = 0.0
    else:
        sup = max(_sq(g, dphi[k]) + kappa * _sq(g, dsig[k]) for k in steps)
        mu_part = sum(tau * _sq(g, dmu[k]) for k in steps)
    return float(sup + mu_part + sum(tau * (sigma_h1(k) + phi_h1(k)) for k in steps))


def check_preconditions(mode: str, which) -> None:
    if mode == "singular" and "mu_inf" in which:
        raise PreconditionError("singular-mode continuous dependence needs identical mu_inf for both "
                                "runs (the estimate is in the star norm); drop mu_inf from the perturbed data")


def continuous_dependence(spec: SweepSpec, mode: str = "dynamic", caps: dict | None = None,
                          perturbed=None, outdir=None, jobs: int = 1) -> SweepReport:
    """``caps`` may hold ``ratio_cap_<mode>``, the single bound for R(delta)."""
    if spec.parameter != "perturbation_delta":
        raise ValueError("continuous_dependence needs a perturbation_delta ladder")
    which = tuple(perturbed) if perturbed else default_perturbed(mode)
    check_preconditions(mode, which)
    base = mode_config(spec.config(), mode)
    caps = caps or {}
    ladder = sorted(spec.values, reverse=True)
    configs = [base, copy.deepcopy(base)] + [perturb(base, d, which) for d in ladder]
    names = ["baseline", "baseline_repeat"] + [f"delta_{d:g}" for d in ladder]
    dirs = [Path(outdir) / n for n in names] if outdir else None
    results = run_members(configs, dirs, jobs)

    report = SweepReport(f"ctsdep_{mode}", "perturbation_delta", tuple(ladder), config_hash=config_hash(base))
    report.notes.append(f"perturbed data: {', '.join(which)}")
    for name, res in zip(names, results):
        if isinstance(res, Exception):
            report.failures.append(f"{name}: {type(res).__name__}: {res}")
    if report.failures:
        return report

    ref, repeat = results[0], results[1]
    identical = all(np.array_equal(getattr(ref, f), getattr(repeat, f)) for f in ("phi", "mu", "sigma"))
    report.verdicts["delta = 0 runs bit-identical"] = identical
    ratios = []
    for d, traj in zip(ladder, results[2:]):
        lhs = solution_functional(traj, ref, mode)
        data = data_difference(traj, ref, mode)
        rhs = data_functional(data, mode)
        ratio = lhs / rhs
        ratios.append(ratio)
        report.metrics.append({"delta": d, "lhs": lhs, "rhs": rhs, "ratio": ratio})
    cap = caps.get(f"ratio_cap_{mode}")
    if cap is not None:
        report.verdicts["ratio bounded by one cap"] = all(r <= cap for r in ratios)
    return report
