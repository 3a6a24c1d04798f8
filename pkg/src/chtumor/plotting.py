"""Figures written next to CSV output (Agg backend, files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def diagnostics_figure(records, path) -> None:
    t = np.array([r.t for r in records])
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4))
    axes[0].plot(t, [r.free_energy for r in records])
    axes[0].set_title("free energy")
    axes[1].plot(t, [r.energy_lhs for r in records], label="running lhs")
    axes[1].plot(t, [r.energy_rhs_bound for r in records], label="data bracket")
    axes[1].set_yscale("log")
    axes[1].legend()
    axes[1].set_title("energy inequality")
    axes[2].semilogy(t, np.maximum([r.identity_residual for r in records], 1e-300))
    axes[2].set_title("budget residual")
    for ax in axes:
        ax.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def snapshot_figure(grid, state, path) -> None:
    if grid.dim == 1:
        x = grid.coords[0].ravel()
        fig, ax = plt.subplots(figsize=(6, 3.4))
        for name in ("phi", "mu", "sigma"):
            ax.plot(x, getattr(state, name).values, label=name)
        ax.legend()
        ax.set_xlabel("x")
        ax.set_title(f"t = {state.t:.4g}")
    else:
        fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
        for ax, name in zip(axes, ("phi", "mu", "sigma")):
            im = ax.imshow(getattr(state, name).values.reshape(grid.shape).T, origin="lower",
                           extent=(0, grid.extent[0], 0, grid.extent[1]))
            fig.colorbar(im, ax=ax)
            ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def sweep_figure(report, path) -> None:
    """Every numeric metric column against the swept parameter on log-log axes."""
    key = report.parameter if report.parameter in report.metrics[0] else next(iter(report.metrics[0]))
    rows = [m for m in report.metrics if m.get(key, 0) > 0]
    if not rows:
        return
    x = np.array([m[key] for m in rows])
    cols = [k for k in rows[0] if k not in (key, "tau") and isinstance(rows[0][k], float)]
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in cols:
        y = np.array([m[c] for m in rows])
        if np.all(y > 0):
            ax.loglog(x, y, "o-", label=c)
    ax.set_xlabel(key)
    ax.legend(fontsize=7)
    ax.set_title(f"{report.kind}: {'PASS' if report.passed else 'FAIL'}")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
