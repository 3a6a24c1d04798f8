"""Sweep specifications, member runs, reports and the work queue."""

from __future__ import annotations

import copy
import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..config import build, config_hash, dumps, resolve
from ..diagnostics import EnergyMonitor, write_csv
from ..grid import Grid, l2_inner
from ..solver.stepper import Stepper

PARAMETERS = ("kappa", "yosida_n", "perturbation_delta", "mesh_h", "time_step")


@dataclass
class SweepSpec:
    """A ladder of values for one parameter applied to a base scenario.

    ``base`` is a scenario name, a path, or an already resolved config.
    """

    parameter: str
    values: tuple
    base: object = "default"
    overrides: tuple = ()
    norms: tuple = ()

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}; choose from {PARAMETERS}")
        self.values = tuple(float(v) for v in self.values)
        if len(self.values) < 3:
            raise ValueError("a ladder needs at least 3 values")
        d = np.diff(self.values)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError(f"ladder must be strictly monotone, got {self.values}")

    def config(self) -> dict:
        if isinstance(self.base, dict):
            return resolve(self.base, self.overrides)
        return resolve(self.base, self.overrides)


@dataclass
class SweepReport:
    kind: str
    parameter: str
    values: tuple
    metrics: list = field(default_factory=list)
    pairwise: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    rates: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    config_hash: str = ""

    @property
    def passed(self) -> bool:
        return not self.failures and bool(self.verdicts) and all(self.verdicts.values())

    def verdict_text(self) -> str:
        lines = [f"{self.kind} sweep over {self.parameter}: {'PASS' if self.passed else 'FAIL'}",
                 f"config sha256 {self.config_hash}"]
        lines += [f"  {name}: {'PASS' if ok else 'FAIL'}" for name, ok in self.verdicts.items()]
        for name, (rate, resid) in self.rates.items():
            lines.append(f"  fitted rate {name}: {rate:.4f} (log-log fit residual {resid:.2e})")
        lines += [f"  note: {n}" for n in self.notes]
        lines += [f"  failure: {f}" for f in self.failures]
        return "\n".join(lines) + "\n"


@dataclass
class Trajectory:
    """Everything a sweep needs from one run, as plain arrays (picklable)."""

    config: dict
    extent: tuple
    n: tuple
    times: np.ndarray
    phi: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    records: list
    final_errors: dict | None = None

    @property
    def grid(self) -> Grid:
        return Grid(self.extent, self.n)

    @property
    def tau(self) -> float:
        return float(self.times[1] - self.times[0])


def set_value(cfg: dict, parameter: str, value: float) -> dict:
    out = copy.deepcopy(cfg)
    if parameter == "kappa":
        out["params"]["kappa"] = repr(value)
    elif parameter == "yosida_n":
        out["potential"]["yosida_n"] = repr(value)
    elif parameter == "time_step":
        out["time"]["tau"] = repr(value)
    elif parameter == "mesh_h":
        extent = float(out["grid"]["extent"].split(",")[0])
        out["grid"]["n"] = str(int(round(extent / value)) - 1)
    else:
        raise ValueError(f"{parameter} is not a direct config value")
    return out


def run_member(cfg: dict, outdir=None) -> Trajectory:
    """Run one resolved config to its end time, keeping the trajectory."""
    sc = build(cfg)
    st = Stepper(sc.problem, sc.stepper)
    mon = EnergyMonitor(st)
    state = st.initial_state()
    mon.start(state)
    phis, mus, sigmas, times = [state.phi.values], [state.mu.values], [state.sigma.values], [state.t]

    def keep(old, new):
        mon(old, new)
        phis.append(new.phi.values)
        mus.append(new.mu.values)
        sigmas.append(new.sigma.values)
        times.append(new.t)

    final = st.run(state, callback=keep)
    errors = None
    if sc.problem.forcing is not None:
        from .mms import errors_at
        errors = errors_at(final, sc.problem.grid)
    traj = Trajectory(cfg, sc.problem.grid.extent, sc.problem.grid.n, np.array(times),
                      np.array(phis), np.array(mus), np.array(sigmas), mon.records, errors)
    if outdir is not None:
        write_member(traj, final, outdir)
    return traj


def write_member(traj: Trajectory, final_state, outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved.ini").write_text(dumps(traj.config))
    write_csv(traj.records, out / "diagnostics.csv")
    write_snapshot(final_state, out / "snapshot_final.csv")


def write_snapshot(state, path) -> None:
    g = state.phi.grid
    cols = [c.ravel() for c in g.coords]
    names = ["x", "y"][: g.dim]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["phi", "mu", "sigma"])
        for row in zip(*cols, state.phi.values, state.mu.values, state.sigma.values):
            w.writerow([repr(float(v)) for v in row])


def _member_job(args):
    cfg, outdir = args
    try:
        return run_member(cfg, outdir)
    except Exception as exc:  # attributed to the member by the caller
        return exc


def run_members(configs: list, outdirs: list | None = None, jobs: int = 1) -> list:
    """Run configs serially or on a process pool; failures come back as exceptions."""
    outdirs = outdirs or [None] * len(configs)
    args = list(zip(configs, outdirs))
    if jobs <= 1:
        return [_member_job(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_member_job, args))


# -- trajectory norms -------------------------------------------------------------

def _sq_l2(grid, v):
    return l2_inner(grid, v, v)


def _sq_grad(grid, v, trace=0.0):
    p = grid.pad(v, trace)
    return grid.gradient_pairing(p, p)


def diff_l2h1_sq(a: Trajectory, b: Trajectory, name: str) -> float:
    """sum_k tau ||a_k - b_k||_H1^2 over steps 1..N (zero trace differences)."""
    g = a.grid
    da = getattr(a, name) - getattr(b, name)
    return float(sum(a.tau * (_sq_l2(g, d) + _sq_grad(g, d)) for d in da[1:]))


def diff_linf_l2_sq(a: Trajectory, b: Trajectory, name: str) -> float:
    g = a.grid
    da = getattr(a, name) - getattr(b, name)
    return float(max(_sq_l2(g, d) for d in da[1:]))


def loglog_fit(x, y) -> tuple:
    """Slope of log y against log x and the rms residual of the fit."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    coef, res, *_ = np.polyfit(lx, ly, 1, full=True)
    rms = float(np.sqrt(res[0] / len(lx))) if len(res) else 0.0
    return float(coef[0]), rms


def strictly_decreasing(seq) -> bool:
    return all(b < a for a, b in zip(seq, seq[1:]))


def non_increasing(seq) -> bool:
    return all(b <= a for a, b in zip(seq, seq[1:]))


# -- report directory -------------------------------------------------------------

def write_report(report: SweepReport, outdir, figures: bool = True) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    keys = []
    for m in report.metrics:
        keys += [k for k in m if k not in keys]
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for m in report.metrics:
            w.writerow([repr(float(m[k])) if isinstance(m.get(k), float) else m.get(k, "") for k in keys])
    if report.pairwise:
        pkeys = list(report.pairwise[0])
        with open(out / "pairwise.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(pkeys)
            for m in report.pairwise:
                w.writerow([repr(float(m[k])) if isinstance(m[k], float) else m[k] for k in pkeys])
    (out / "verdict.txt").write_text(report.verdict_text())
    (out / "manifest.json").write_text(json.dumps(
        {"kind": report.kind, "parameter": report.parameter, "values": list(report.values),
         "config_hash": report.config_hash, "version": __version__}, indent=2))
    if figures and report.metrics:
        from ..plotting import sweep_figure
        sweep_figure(report, out / f"{report.kind}.png")
    return out
