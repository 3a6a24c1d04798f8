from .common import SweepReport, SweepSpec, run_member, write_report
from .ctsdep import continuous_dependence
from .kappa import kappa_sweep
from .mms import mms_convergence
from .yosida import yosida_sweep

__all__ = [
    "SweepReport",
    "SweepSpec",
    "continuous_dependence",
    "kappa_sweep",
    "mms_convergence",
    "run_member",
    "write_report",
    "yosida_sweep",
]
