"""Phase-field tumor growth solver: single runs, experiment sweeps and calibration.

Exit codes: 0 success, 1 a sweep verdict failed, 2 configuration or
precondition problem, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import (ConfigError, build, config_hash, dumps, read_calibration, resolve,
                     snapshot_times)
from .model import check_assumptions
from .solver.linear import LinearSolverError
from .solver.newton import JacobianMismatch, NonConvergence

OK, VERDICT_FAILED, CONFIG_ERROR, NUMERICS_ERROR = 0, 1, 2, 3
NUMERIC_ERRORS = (NonConvergence, LinearSolverError, JacobianMismatch, FloatingPointError)

DEFAULT_LADDERS = {
    "kappa": ("kappa", (1.0, 0.25, 0.0625)),
    "yosida": ("yosida_n", (1e-1, 1e-2, 1e-3)),
    "ctsdep": ("perturbation_delta", (1e-1, 1e-2, 1e-3)),
}
MMS_LADDERS = {
    "mesh_h": ((1 / 32, 1 / 64, 1 / 128), ("time.t_end=0.1",)),
    "time_step": ((0.02, 0.01, 0.005), ("time.t_end=0.4",)),
}
DEFAULT_CONFIG = {"kappa": "default", "yosida": "obstacle", "ctsdep": "ctsdep", "mms": "mms"}


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _assumption_checks(scenario, ctsdep: bool = False) -> list:
    p = scenario.problem
    return check_assumptions(p.params, p.potential, p.bdata, p.idata, "quasistatic" if p.quasistatic else "dynamic",
                             grid=p.grid, t_end=scenario.stepper.t_end, ctsdep=ctsdep)


def _load(args):
    overrides = list(args.set or [])
    if getattr(args, "snapshot_times", None):
        overrides.append(f"mode.snapshot_times={args.snapshot_times}")
    cfg = resolve(args.config, overrides)
    return cfg, build(cfg)


def write_manifest(cfg: dict, mode: str, outdir: Path) -> None:
    (outdir / "resolved.ini").write_text(dumps(cfg))
    (outdir / "manifest.json").write_text(json.dumps({
        "config": cfg, "config_hash": config_hash(cfg), "mode": mode,
        "output_dir": str(outdir.resolve()), "version": __version__}, indent=2))


def cmd_simulate(args) -> int:
    from .diagnostics import EnergyMonitor, write_csv
    from .experiments.common import write_snapshot
    from .solver.stepper import Stepper

    try:
        cfg, sc = _load(args)
    except ConfigError as exc:
        _err(str(exc))
        return CONFIG_ERROR
    failed = [c for c in _assumption_checks(sc) if not c.ok]
    if failed:
        for c in failed:
            _err(str(c))
        return CONFIG_ERROR

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(cfg, sc.mode, out)

    stepper = Stepper(sc.problem, sc.stepper)
    monitor = EnergyMonitor(stepper)
    pending = snapshot_times(cfg)
    tau = sc.stepper.tau

    def snap(state):
        while pending and state.t >= pending[0] - 0.5 * tau:
            target = pending.pop(0)
            write_snapshot(state, out / f"snapshot_t{target:g}.csv")

    def on_step(old, new):
        monitor(old, new)
        snap(new)

    try:
        state = stepper.initial_state()
        monitor.start(state)
        snap(state)
        final = stepper.run(state, callback=on_step)
    except NUMERIC_ERRORS as exc:
        write_csv(monitor.records, out / "diagnostics.csv")
        _err(f"solver failed: {type(exc).__name__}: {exc}")
        return NUMERICS_ERROR
    write_csv(monitor.records, out / "diagnostics.csv")
    write_snapshot(final, out / "snapshot_final.csv")
    if args.figures:
        from .plotting import diagnostics_figure, snapshot_figure
        diagnostics_figure(monitor.records, out / "diagnostics.png")
        snapshot_figure(sc.problem.grid, final, out / "snapshot_final.png")
    last = monitor.records[-1]
    print(f"{sc.mode} run to t = {final.t:.6g} in {final.step_index} steps; "
          f"free energy {last.free_energy:.6g}, budget residual {last.identity_residual:.3e}")
    print(f"wrote {out}")
    return OK


def _caps(args, kind: str) -> dict:
    try:
        cal = read_calibration(args.config, args.calibration)
    except ConfigError as exc:
        print(f"note: {exc}; calibrated verdicts skipped")
        return {}
    if kind == "kappa":
        caps = {}
        if "kappa" in cal and "tolerance" in cal["kappa"]:
            caps["tolerance"] = cal["kappa"]["tolerance"]
        if "energy" in cal and "constant" in cal["energy"]:
            caps["energy_constant"] = cal["energy"]["constant"]
        return caps
    return dict(cal.get(kind, {}))


def _finish_report(report, args) -> int:
    from .experiments.common import write_report
    if args.out:
        write_report(report, Path(args.out) / report.kind, figures=args.figures)
    print(report.verdict_text(), end="")
    if report.failures:
        return NUMERICS_ERROR
    return OK if report.passed else VERDICT_FAILED


def cmd_sweep(args) -> int:
    from .experiments import (SweepSpec, continuous_dependence, kappa_sweep, mms_convergence,
                              yosida_sweep)
    from .experiments.ctsdep import PreconditionError

    kind = args.kind
    args.config = args.config or DEFAULT_CONFIG[kind]
    overrides = tuple(args.set or ())
    try:
        sc = build(resolve(args.config, overrides))
        if kind == "mms":
            params = [args.parameter] if args.parameter else list(MMS_LADDERS)
            specs = []
            for p in params:
                values, extra = MMS_LADDERS[p]
                values = _floats(args.values) if args.values else values
                specs.append(SweepSpec(p, values, args.config, extra + overrides))
        else:
            failed = [c for c in _assumption_checks(sc, ctsdep=kind == "ctsdep") if not c.ok]
            if failed:
                for c in failed:
                    _err(str(c))
                return CONFIG_ERROR
            param, values = DEFAULT_LADDERS[kind]
            values = _floats(args.values) if args.values else values
            spec = SweepSpec(param, values, args.config, overrides)
    except (ConfigError, ValueError) as exc:
        _err(str(exc))
        return CONFIG_ERROR

    if kind == "kappa":
        return _finish_report(kappa_sweep(spec, _caps(args, "kappa"), args.out and Path(args.out) / "kappa",
                                          args.jobs), args)
    if kind == "yosida":
        try:
            report = yosida_sweep(spec, _caps(args, "yosida"), args.out and Path(args.out) / "yosida", args.jobs)
        except ValueError as exc:
            _err(str(exc))
            return CONFIG_ERROR
        return _finish_report(report, args)
    if kind == "ctsdep":
        perturbed = tuple(v.strip() for v in args.perturbed.split(",")) if args.perturbed else None
        modes = [args.mode] if args.mode else ["dynamic", "quasistatic", "singular"]
        caps = _caps(args, "ctsdep")
        codes = []
        for mode in modes:
            try:
                report = continuous_dependence(spec, mode, caps, perturbed,
                                               args.out and Path(args.out) / f"ctsdep_{mode}", args.jobs)
            except (PreconditionError, ConfigError) as exc:
                _err(str(exc))
                return CONFIG_ERROR
            codes.append(_finish_report(report, args))
        return max(codes)
    codes = []
    for s in specs:
        kind = "mms_space" if s.parameter == "mesh_h" else "mms_time"
        codes.append(_finish_report(mms_convergence(s, args.out and Path(args.out) / kind, args.jobs), args))
    return max(codes)


def cmd_validate(args) -> int:
    try:
        _, sc = _load(args)
    except ConfigError as exc:
        _err(str(exc))
        return CONFIG_ERROR
    checks = _assumption_checks(sc, ctsdep=args.ctsdep)
    for c in checks:
        print(c)
    return OK if all(c.ok for c in checks) else CONFIG_ERROR


def cmd_calibrate(args) -> int:
    from .experiments.calibration import calibrate
    args.config = args.config or DEFAULT_CONFIG[args.kind]
    try:
        caps = calibrate(args.kind, args.config, tuple(args.set or ()), args.calibration, args.jobs)
    except ConfigError as exc:
        _err(str(exc))
        return CONFIG_ERROR
    except (RuntimeError, *NUMERIC_ERRORS) as exc:
        _err(f"calibration run failed: {exc}")
        return NUMERICS_ERROR
    for section, kv in caps.items():
        for k, v in kv.items():
            print(f"[{section}] {k} = {v!r}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chtumor", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, default=None,
                       help="scenario file or builtin scenario name")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override (repeatable)")

    p = sub.add_parser("simulate", help="run one scenario to its end time")
    common(p)
    p.add_argument("--out", default="run", help="output directory")
    p.add_argument("--snapshot-times", metavar="T1,T2,...")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run an experiment ladder and print the verdict")
    p.add_argument("kind", choices=["kappa", "yosida", "ctsdep", "mms"])
    common(p, config_required=False)
    p.add_argument("--out", default=None, help="report directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--values", metavar="V1,V2,V3", help="ladder (default depends on the sweep)")
    p.add_argument("--calibration", default=None, help="calibration file (default: next to the scenario)")
    p.add_argument("--mode", choices=["dynamic", "quasistatic", "singular"], help="ctsdep only")
    p.add_argument("--perturbed", metavar="NAMES", help="ctsdep only: phi0,sigma0,mu_inf,sigma_inf")
    p.add_argument("--parameter", choices=list(MMS_LADDERS), help="mms only (default: both)")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check the model assumptions of a scenario")
    common(p)
    p.add_argument("--ctsdep", action="store_true", help="also check the uniqueness assumptions")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("calibrate", help="measure the caps used by sweep verdicts")
    p.add_argument("kind", choices=["kappa", "yosida", "ctsdep"])
    common(p, config_required=False)
    p.add_argument("--calibration", default=None, help="output file (default: next to the scenario)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_calibrate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
