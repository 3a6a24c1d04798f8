"""Singular limit: obstacle runs for a decreasing ladder of Yosida parameters."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..grid import l2_inner
from ..potential import SingularPotential
from .common import SweepReport, SweepSpec, config_hash, loglog_fit, run_members, set_value, strictly_decreasing


def yosida_metrics(traj) -> dict:
    n = float(traj.config["potential"]["yosida_n"])
    pot = SingularPotential(n)
    g = traj.grid
    violation = float(np.max(np.maximum(np.abs(traj.phi) - 1.0, 0.0)))
    beta_sq = sum(traj.tau * l2_inner(g, pot.yosida_beta(p), pot.yosida_beta(p)) for p in traj.phi[1:])
    beta_hat_T = float(np.sum(pot.yosida_beta_hat(traj.phi[-1]))) * g.cell_volume
    return {"yosida_n": n, "obstacle_violation": violation, "beta_l2l2": float(np.sqrt(beta_sq)),
            "beta_hat_integral_T": beta_hat_T}


def yosida_sweep(spec: SweepSpec, caps: dict | None = None, outdir=None, jobs: int = 1) -> SweepReport:
    """``caps`` may hold ``beta_cap``, the single bound for ||beta_n(phi)||_{L2 L2}."""
    if spec.parameter != "yosida_n":
        raise ValueError("yosida_sweep needs a yosida_n ladder")
    base = spec.config()
    if base["potential"]["kind"] != "obstacle":
        raise ValueError("yosida_sweep needs an obstacle potential")
    caps = caps or {}
    ladder = sorted(spec.values, reverse=True)
    configs = [set_value(base, "yosida_n", n) for n in ladder]
    dirs = [Path(outdir) / f"n_{n:g}" for n in ladder] if outdir else None
    results = run_members(configs, dirs, jobs)

    report = SweepReport("yosida", "yosida_n", tuple(ladder), config_hash=config_hash(base))
    for n, res in zip(ladder, results):
        if isinstance(res, Exception):
            report.failures.append(f"n = {n:g}: {type(res).__name__}: {res}")
    if report.failures:
        return report
    report.metrics = [yosida_metrics(t) for t in results]
    v = [m["obstacle_violation"] for m in report.metrics]
    report.verdicts["obstacle violation decreasing"] = strictly_decreasing(v)
    # the penalty overshoot is O(n); allow a factor 5 at the finest member
    report.verdicts[f"violation at n = {ladder[-1]:g} below {5 * ladder[-1]:g}"] = v[-1] < 5 * ladder[-1]
    if all(x > 0 for x in v):
        report.rates["obstacle violation vs n"] = loglog_fit(ladder, v)
    if "beta_cap" in caps:
        report.verdicts["beta bounded by one constant"] = all(
            m["beta_l2l2"] <= caps["beta_cap"] for m in report.metrics)
    return report
