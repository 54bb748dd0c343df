"""Static figures of a run, rendered off-screen next to the CSV outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _measure_image(result):
    """``(x edges, xi edges, mass image)`` of the first phase component (other components summed)."""
    grid = result.grid
    F = result.F.reshape(grid.n_space, result.n_omega, *grid.phase.N_xi).sum(axis=1)
    while F.ndim > 2:
        F = F.sum(axis=-1)
    x_edges = np.linspace(grid.space_lower[0], grid.space_upper[0], grid.N_x + 1)
    xi_edges = np.linspace(grid.phase.lower[0], grid.phase.upper[0], grid.phase.N_xi[0] + 1)
    return x_edges, xi_edges, F


def plot_run(result, out_dir, ref=None, names=None):
    """Measure, mean field, energy and total energy/defect histories as PNG files."""
    out = Path(out_dir)
    grid = result.grid
    x = grid.space_centers()
    names = names or [f"u{i}" for i in range(grid.n)]

    fig, ax = plt.subplots(figsize=(6, 4))
    xe, ye, img = _measure_image(result)
    mesh = ax.pcolormesh(xe, ye, img.T, shading="flat", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="cell mass")
    ax.set_xlabel("x")
    ax.set_ylabel(r"$\xi_1$" if grid.n > 1 else r"$\xi$")
    ax.set_title(f"{result.config.name}: measure at t = {result.t[-1]:.4g}")
    fig.tight_layout()
    fig.savefig(out / "measure.png", dpi=120)
    plt.close(fig)

    fig, axes = plt.subplots(1, grid.n + 1, figsize=(4.5 * (grid.n + 1), 3.6))
    for i in range(grid.n):
        ax = axes[i]
        ax.plot(x, result.u_final[:, i], ".-", ms=3, label="LP")
        if ref is not None:
            ax.plot(x, ref[:, i], "k-", lw=1, label="reference")
        ax.set_xlabel("x")
        ax.set_title(names[i])
        ax.legend(fontsize=8)
    axes[-1].plot(x, result.E_hat[-1], ".-", ms=3)
    axes[-1].set_xlabel("x")
    axes[-1].set_title(r"$\hat E$")
    fig.tight_layout()
    fig.savefig(out / "solution.png", dpi=120)
    plt.close(fig)

    totals = result.totals()
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.6))
    a1.plot(result.t, totals["E_hat"])
    a1.set_xlabel("t")
    a1.set_title(r"total energy $\int \hat E\,dx$")
    a2.plot(result.t, totals["defect"], label="defect")
    for key in ("ac_defect_RE", "ac_defect_RE_grad_u"):
        if key in totals:
            a2.plot(result.t, totals[key], label=key[3:])
    a2.set_xlabel("t")
    a2.set_title("total energy defect")
    a2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "totals.png", dpi=120)
    plt.close(fig)


def plot_convergence(rows, path, title=""):
    res = [r.resolution[1] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.8))
    ax.loglog(res, [r.L1 for r in rows], "o-", label="L1")
    ax.loglog(res, [r.L2 for r in rows], "s-", label="L2")
    ax.set_xlabel("N_x")
    ax.set_ylabel("error")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
