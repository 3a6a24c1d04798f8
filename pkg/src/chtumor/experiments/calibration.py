"""One-time calibration of the caps used by sweep verdicts.

Every cap is ``SAFETY`` times a value measured on a single reference member;
the other ladder members are then checked against it.

* ``[energy] constant``: the energy inequality constant, from the largest
  running left side of the kappa = 1 run divided by the kappa-free floor 1 of
  the data bracket.  Dividing by the reference bracket instead would credit
  the run with data terms (kappa |sigma_0 - sigma_inf|^2, ...) that vanish as
  kappa -> 0, although the left side does not.
* ``[kappa] tolerance``: regression bound for the error at the smallest kappa
  of the calibration ladder.
* ``[yosida] beta_cap``: from ||beta_n(phi)||_{L2 L2} at the largest n.
* ``[ctsdep] ratio_cap_<mode>``: from R at the largest delta.
"""

from __future__ import annotations

from pathlib import Path

from ..config import calibration_path, read_calibration_file, write_calibration
from .common import SweepSpec, run_members, set_value
from .ctsdep import MODES, continuous_dependence
from .kappa import kappa_sweep
from .yosida import yosida_metrics

SAFETY = 2.0
KAPPA_LADDER = (1.0, 0.25, 0.0625)
YOSIDA_LADDER = (1e-1, 1e-2, 1e-3)
DELTA_LADDER = (1e-1, 1e-2, 1e-3)


def calibrate_energy(source, overrides=(), safety: float = SAFETY) -> dict:
    spec = SweepSpec("kappa", KAPPA_LADDER, source, overrides)
    cfg = set_value(spec.config(), "kappa", 1.0)
    cfg["mode"]["model"] = "dynamic"
    (traj,) = run_members([cfg])
    if isinstance(traj, Exception):
        raise traj
    return {"constant": safety * max(r.energy_lhs for r in traj.records)}


def calibrate_kappa(source, overrides=(), safety: float = SAFETY, jobs: int = 1) -> dict:
    rep = kappa_sweep(SweepSpec("kappa", KAPPA_LADDER, source, overrides), jobs=jobs)
    if rep.failures:
        raise RuntimeError("; ".join(rep.failures))
    return {"tolerance": safety * rep.metrics[len(KAPPA_LADDER) - 1]["sigma_error_l2h1"]}


def calibrate_yosida(source, overrides=(), safety: float = SAFETY) -> dict:
    spec = SweepSpec("yosida_n", YOSIDA_LADDER, source, overrides)
    cfg = set_value(spec.config(), "yosida_n", max(YOSIDA_LADDER))
    (traj,) = run_members([cfg])
    if isinstance(traj, Exception):
        raise traj
    return {"beta_cap": safety * yosida_metrics(traj)["beta_l2l2"]}


def calibrate_ctsdep(source, overrides=(), safety: float = SAFETY, jobs: int = 1) -> dict:
    caps = {}
    for mode in MODES:
        # the full ladder is cheap enough; only the largest delta sets the cap
        rep = continuous_dependence(SweepSpec("perturbation_delta", DELTA_LADDER, source, overrides),
                                    mode, jobs=jobs)
        if rep.failures:
            raise RuntimeError("; ".join(rep.failures))
        ref = next(m for m in rep.metrics if m["delta"] == max(DELTA_LADDER))
        caps[f"ratio_cap_{mode}"] = safety * ref["ratio"]
    return caps


def calibrate(kind: str, source, overrides=(), path=None, jobs: int = 1, safety: float = SAFETY) -> dict:
    """Measure the caps for ``kind`` and merge them into the calibration file."""
    if kind == "kappa":
        new = {"energy": calibrate_energy(source, overrides, safety),
               "kappa": calibrate_kappa(source, overrides, safety, jobs)}
    elif kind == "yosida":
        new = {"yosida": calibrate_yosida(source, overrides, safety)}
    elif kind == "ctsdep":
        new = {"ctsdep": calibrate_ctsdep(source, overrides, safety, jobs)}
    else:
        raise ValueError(f"nothing to calibrate for {kind!r}")
    path = Path(path) if path else calibration_path(source)
    caps = read_calibration_file(path) if path.is_file() else {}
    caps.update(new)
    write_calibration(caps, path, header=(
        f"caps = {safety:g} x value on the reference member; regenerate with\n"
        f"chtumor calibrate {{kappa,yosida,ctsdep}} --config <scenario>"))
    return caps
