"""Scenario files: INI sections [params], [potential], [boundary], [initial],
[grid], [time], [mode].  Unknown sections or keys are errors."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .expr import ExpressionError, SpaceTimeFunction
from .grid import Grid
from .model import (BoundaryData, ClampedH, ConstantD, InitialData, InterpolatedD, LinearH,
                    ModelParams, Problem)
from .potential import RegularPotential, SingularPotential
from .solver.stepper import StepperConfig

DEFAULTS = {
    "params": {
        "gamma": "1.0",
        "eps": "0.1",
        "kappa": "1.0",
        "lambda_p": "0.0",
        "lambda_a": "0.0",
        "lambda_c": "0.0",
        "chi": "0.0",
        "eta": "0.0",
        "diffusivity": "constant",
        "D0": "1.0",
        "D1": "1.0",
        "interpolation": "clamped",
    },
    "potential": {
        "kind": "quartic",
        "psi1": "1, 0, 0, 0, 1",
        "psi2": "0, 0, -2",
        "growth_s": "1.3333333333333333",
        "yosida_n": "0.01",
        "lo": "-1.0",
        "hi": "1.0",
        "lambda": "0.5, 0, -0.5",
    },
    "boundary": {
        "mu_inf": "0",
        "sigma_inf": "0",
        "sigma_inf_dt": "",
    },
    "initial": {
        "phi0": "-1",
        "sigma0": "0",
    },
    "grid": {
        "extent": "1.0",
        "n": "63",
    },
    "time": {
        "tau": "1e-3",
        "t_end": "1.0",
        "newton_tol": "1e-10",
        "newton_max_iter": "25",
        "linear_tol": "1e-12",
        "linear_max_iter": "2000",
        "picard": "1",
    },
    "mode": {
        "model": "dynamic",
        "manufactured": "none",
        "snapshot_times": "",
    },
}

SCENARIO_DIR = "scenarios"


class ConfigError(ValueError):
    pass


def builtin_scenarios() -> list:
    root = resources.files("chtumor") / SCENARIO_DIR
    return sorted(p.name[:-4] for p in root.iterdir()
                  if p.name.endswith(".ini") and not p.name.endswith(".calibration.ini"))


def scenario_path(name_or_path) -> Path:
    """A file path as given, or a builtin scenario by name."""
    p = Path(name_or_path)
    if p.exists():
        return p
    builtin = resources.files("chtumor") / SCENARIO_DIR / f"{name_or_path}.ini"
    if builtin.is_file():
        return Path(str(builtin))
    raise ConfigError(f"no config file or builtin scenario named {name_or_path!r} "
                      f"(builtins: {', '.join(builtin_scenarios())})")


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep key case (D0, D1)
    return cp


def _merge(base: dict, section: str, key: str, value: str):
    if section not in DEFAULTS:
        raise ConfigError(f"unknown section [{section}]")
    if key not in DEFAULTS[section]:
        raise ConfigError(f"unknown key {key!r} in [{section}]")
    base[section][key] = value.strip()


def resolve(source=None, overrides=()) -> dict:
    """Defaults, then the file (or mapping), then ``section.key=value`` overrides."""
    cfg = {s: dict(kv) for s, kv in DEFAULTS.items()}
    if source is not None:
        if isinstance(source, dict):
            items = [(s, k, str(v)) for s, kv in source.items() for k, v in kv.items()]
        else:
            cp = _parser()
            path = scenario_path(source)
            try:
                with open(path) as fh:
                    cp.read_file(fh)
            except (OSError, configparser.Error) as exc:
                raise ConfigError(f"cannot read {path}: {exc}") from exc
            items = [(s, k, v) for s in cp.sections() for k, v in cp.items(s)]
        for s, k, v in items:
            _merge(cfg, s, k, v)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        section, key = lhs.split(".", 1)
        _merge(cfg, section.strip(), key.strip(), value)
    return cfg


def dumps(cfg: dict) -> str:
    lines = []
    for section in DEFAULTS:
        lines.append(f"[{section}]")
        lines += [f"{k} = {cfg[section][k]}" for k in DEFAULTS[section]]
        lines.append("")
    return "\n".join(lines)


def config_hash(cfg: dict) -> str:
    """sha256 of the resolved config with sorted sections and keys."""
    canonical = json.dumps({s: dict(sorted(kv.items())) for s, kv in sorted(cfg.items())},
                           sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _float(cfg, section, key) -> float:
    try:
        return float(cfg[section][key])
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {cfg[section][key]!r} is not a number") from exc


def _int(cfg, section, key) -> int:
    try:
        return int(cfg[section][key])
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {cfg[section][key]!r} is not an integer") from exc


def _floats(cfg, section, key) -> tuple:
    try:
        return tuple(float(v) for v in cfg[section][key].split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} must be comma-separated numbers") from exc


def _function(cfg, section, key) -> SpaceTimeFunction:
    try:
        return SpaceTimeFunction(cfg[section][key])
    except ExpressionError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def snapshot_times(cfg: dict) -> list:
    return sorted(float(v) for v in cfg["mode"]["snapshot_times"].split(",") if v.strip())


@dataclass
class Scenario:
    """A resolved config turned into solver objects."""

    config: dict
    problem: Problem
    stepper: StepperConfig

    @property
    def mode(self) -> str:
        return self.problem.mode

    @property
    def hash(self) -> str:
        return config_hash(self.config)


def build(cfg: dict) -> Scenario:
    p = cfg["params"]
    diff = p["diffusivity"]
    if diff == "constant":
        D = ConstantD(_float(cfg, "params", "D0"))
    elif diff == "interp":
        D = InterpolatedD(_float(cfg, "params", "D0"), _float(cfg, "params", "D1"))
    else:
        raise ConfigError(f"[params] diffusivity must be constant or interp, got {diff!r}")
    interp = {"clamped": ClampedH, "linear": LinearH}.get(p["interpolation"])
    if interp is None:
        raise ConfigError(f"[params] interpolation must be clamped or linear, got {p['interpolation']!r}")
    params = ModelParams(
        **{k: _float(cfg, "params", k) for k in
           ("gamma", "eps", "kappa", "lambda_p", "lambda_a", "lambda_c", "chi", "eta")},
        D=D, h=interp(),
    )

    kind = cfg["potential"]["kind"]
    if kind == "quartic":
        potential = RegularPotential.quartic()
    elif kind == "polynomial":
        potential = RegularPotential(_floats(cfg, "potential", "psi1"), _floats(cfg, "potential", "psi2"),
                                     growth_s=_float(cfg, "potential", "growth_s"))
    elif kind == "obstacle":
        potential = SingularPotential(_float(cfg, "potential", "yosida_n"), _float(cfg, "potential", "lo"),
                                      _float(cfg, "potential", "hi"), _floats(cfg, "potential", "lambda"))
    else:
        raise ConfigError(f"[potential] kind must be quartic, polynomial or obstacle, got {kind!r}")

    dt = cfg["boundary"]["sigma_inf_dt"]
    bdata = BoundaryData(_function(cfg, "boundary", "mu_inf"), _function(cfg, "boundary", "sigma_inf"),
                         _function(cfg, "boundary", "sigma_inf_dt") if dt else None)
    idata = InitialData(_function(cfg, "initial", "phi0"), _function(cfg, "initial", "sigma0"))

    extent = _floats(cfg, "grid", "extent")
    try:
        n = tuple(int(v) for v in cfg["grid"]["n"].split(","))
    except ValueError as exc:
        raise ConfigError("[grid] n must be comma-separated integers") from exc
    if len(n) == 1 and len(extent) == 2:
        n = n * 2
    if len(extent) == 1 and len(n) == 2:
        extent = extent * 2
    try:
        grid = Grid(extent, n)
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from exc

    model = cfg["mode"]["model"]
    if model not in ("dynamic", "quasistatic"):
        raise ConfigError(f"[mode] model must be dynamic or quasistatic, got {model!r}")
    forcing = None
    manufactured = cfg["mode"]["manufactured"]
    if manufactured not in ("none", "mms"):
        raise ConfigError(f"[mode] manufactured must be none or mms, got {manufactured!r}")

    try:
        stepper = StepperConfig(
            tau=_float(cfg, "time", "tau"), t_end=_float(cfg, "time", "t_end"),
            newton_tol=_float(cfg, "time", "newton_tol"), newton_max_iter=_int(cfg, "time", "newton_max_iter"),
            linear_tol=_float(cfg, "time", "linear_tol"), linear_max_iter=_int(cfg, "time", "linear_max_iter"),
            picard=_int(cfg, "time", "picard"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[time] {exc}") from exc
    try:
        snapshot_times(cfg)
    except ValueError as exc:
        raise ConfigError("[mode] snapshot_times must be comma-separated numbers") from exc

    problem = Problem(grid, params, potential, bdata, idata, quasistatic=model == "quasistatic")
    if manufactured == "mms":
        from .experiments.mms import manufactured_problem
        problem = manufactured_problem(problem)
    return Scenario(cfg, problem, stepper)


def load(source=None, overrides=()) -> Scenario:
    return build(resolve(source, overrides))


def calibration_path(source) -> Path:
    """Caps live next to the scenario: ``name.ini`` -> ``name.calibration.ini``."""
    p = scenario_path(source)
    return p.with_name(p.stem + ".calibration.ini")


def read_calibration_file(path) -> dict:
    cp = _parser()
    cp.read(path)
    return {s: {k: float(v) for k, v in cp.items(s)} for s in cp.sections()}


def read_calibration(source, path=None) -> dict:
    path = Path(path) if path else calibration_path(source)
    if not path.is_file():
        raise ConfigError(f"no calibration file {path}; run `chtumor calibrate <kind> --config {source}`")
    return read_calibration_file(path)


def write_calibration(caps: dict, path, header: str = "") -> None:
    cp = _parser()
    for section, kv in caps.items():
        cp[section] = {k: repr(float(v)) for k, v in kv.items()}
    with open(path, "w") as fh:
        if header:
            fh.write("".join(f"# {line}\n" for line in header.splitlines()))
        cp.write(fh)
