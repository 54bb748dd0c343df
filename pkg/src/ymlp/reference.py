"""Exact Riemann solutions, finite-volume reference solvers and error tables."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import OUTFLOW, PERIODIC


class StabilityError(ValueError):
    """Time step violates the CFL or diffusion stability limit."""


def burgers_exact(kind, x, t):
    """Entropy solution of the Burgers Riemann problems at time ``t > 0``.

    ``rarefaction``: ``u_L = -1, u_R = 2``; ``shock``: ``u_L = 2, u_R = -1``
    with speed 1/2.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    if kind == "rarefaction":
        return np.where(x <= -t, -1.0, np.where(x >= 2.0 * t, 2.0, x / t))
    if kind == "shock":
        return np.where(x < 0.5 * t, 2.0, -1.0)
    raise ValueError(f"unknown Riemann problem {kind!r}")


@dataclass
class FvSolution:
    x: np.ndarray          # (N_x,) cell centers
    u: np.ndarray          # (N_x, n) at final time
    t: float

    def sample(self, x_new, periodic=False, period=None):
        """Linear interpolation of every component at ``x_new``."""
        x_new = np.asarray(x_new, dtype=float)
        cols = []
        for i in range(self.u.shape[1]):
            if periodic:
                cols.append(np.interp(x_new, self.x, self.u[:, i], period=period))
            else:
                cols.append(np.interp(x_new, self.x, self.u[:, i]))
        return np.stack(cols, axis=-1)


def _ghost(u, bc):
    if bc == PERIODIC:
        return np.concatenate([u[-1:], u, u[:1]])
    if bc == OUTFLOW:
        return np.concatenate([u[:1], u, u[-1:]])
    raise ValueError(f"unknown boundary condition {bc!r}")


def fv_reference(model, u0, T, lower, upper, N_t, N_x, bc=PERIODIC, cfl_check=True):
    """First-order finite-volume solution on a fine 1-D grid.

    Hyperbolic models use the Lax-Friedrichs flux
    ``F = (f_L + f_R)/2 - a/2 (u_R - u_L)`` with ``a`` the global maximum
    characteristic speed of the current state. Allen-Cahn uses explicit
    central diffusion plus the reaction term.

    Parameters
    ----------
    u0 : callable
        ``u0(x) -> (N_x, n)`` (or ``(N_x,)`` for scalar models).
    """
    if model.d != 1:
        raise ValueError("fv_reference is one-dimensional")
    h = (upper - lower) / N_x
    dt = T / N_t
    x = lower + h * (np.arange(N_x) + 0.5)
    u = np.asarray(u0(x), dtype=float).reshape(N_x, model.n)
    if model.has_laplacian:
        if cfl_check and dt > 0.5 * h * h:
            raise StabilityError(f"explicit diffusion needs dt <= h^2/2, got dt={dt:.3g}, h={h:.3g}")
        g = np.empty((N_x + 2, model.n))
        r = dt / (h * h)
        for _ in range(N_t):
            g[1:-1] = u
            g[0], g[-1] = (u[-1], u[0]) if bc == PERIODIC else (u[0], u[-1])
            u = u + r * (g[2:] - 2.0 * u + g[:-2]) - dt * model.reaction(u)
        return FvSolution(x, u, T)

    for _ in range(N_t):
        speed = float(np.max(model.char_speed(u)))
        if cfl_check and dt * speed > h * (1.0 + 1e-12):
            raise StabilityError(
                f"CFL violated: dt*max speed = {dt * speed:.4g} > h = {h:.4g}")
        g = _ghost(u, bc)
        f = model.flux(g)[..., 0]
        flux = 0.5 * (f[1:] + f[:-1]) - 0.5 * speed * (g[1:] - g[:-1])
        u = u - dt / h * (flux[1:] - flux[:-1])
    return FvSolution(x, u, T)


def error_norms(u, u_ref, grid=None, h=None, normalize=False):
    """``L1 = h sum |u - u_ref|`` and ``L2 = (h sum (u - u_ref)^2)^(1/2)``.

    With ``normalize=True`` both are divided by the domain measure (``L1``)
    or its square root (``L2``), i.e. mean-over-cells norms.
    """
    u = np.asarray(u, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    if u.shape != u_ref.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {u_ref.shape}")
    if h is None:
        if grid is None:
            raise ValueError("give either grid or h")
        h = float(np.prod(grid.hx))
    e = np.abs(u - u_ref)
    L1 = h * e.sum()
    L2 = np.sqrt(h * (e**2).sum())
    if normalize:
        size = h * e.size
        L1, L2 = L1 / size, L2 / np.sqrt(size)
    return float(L1), float(L2)


@dataclass
class ConvergenceRow:
    resolution: tuple
    L1: float
    L2: float
    L1_rate: Optional[float] = None
    L2_rate: Optional[float] = None


def convergence_table(runs):
    """Rates ``log(e_prev/e)/log(ratio)``, ratio taken from the spatial resolution.

    ``runs`` is a sequence of ``(resolution, L1, L2)`` with ``resolution[1]``
    the spatial cell count.
    """
    runs = list(runs)
    if len(runs) < 2:
        raise ValueError("need at least two runs")
    rows = []
    for i, (res, e1, e2) in enumerate(runs):
        row = ConvergenceRow(tuple(res), float(e1), float(e2))
        if i > 0:
            prev_res, p1, p2 = runs[i - 1]
            ratio = res[1] / prev_res[1]
            if ratio == 1.0:
                row.L1_rate = row.L2_rate = 0.0 if (p1 == e1 and p2 == e2) else float("nan")
            else:
                row.L1_rate = float(np.log(p1 / e1) / np.log(ratio))
                row.L2_rate = float(np.log(p2 / e2) / np.log(ratio))
        rows.append(row)
    return rows


def write_convergence_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N_t", "N_x", "N_xi", "L1", "L1_rate", "L2", "L2_rate"])
        for r in rows:
            w.writerow(list(r.resolution[:3]) + [
                repr(r.L1), "" if r.L1_rate is None else repr(r.L1_rate),
                repr(r.L2), "" if r.L2_rate is None else repr(r.L2_rate)])
