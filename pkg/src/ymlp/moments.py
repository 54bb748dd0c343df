"""Observables of a discrete Young measure: mean, energy and energy defect.

Fields are arrays whose last axis runs over phase cells; any leading axes
(time levels, spatial cells, collocation nodes) are carried through.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .grid import PERIODIC

TOL_NUMERIC = 1e-10


def _nodes_last(F, n_omega):
    F = np.asarray(F, dtype=float)
    if n_omega > 1:
        F = F.reshape(F.shape[:-1] + (n_omega, -1))
    return F


def mean_field(F, coeffs, n_omega=1):
    """``u = sum_l u_bar_l F_l``; with collocation nodes the node axis is summed too.

    Returns an array of shape ``F.shape[:-1] + (n,)``.
    """
    F = _nodes_last(F, n_omega)
    u = F @ coeffs.u_bar
    return u.sum(axis=-2) if n_omega > 1 else u


def energy_defect(F, coeffs, model, n_omega=1):
    """``E_hat = sum_l e_bar_l F_l`` and ``defect = E_hat - e(u)``."""
    E_hat = _nodes_last(F, n_omega) @ coeffs.energy_bar
    if n_omega > 1:
        E_hat = E_hat.sum(axis=-1)
    u = mean_field(F, coeffs, n_omega)
    return E_hat, E_hat - model.energy(u)


def totals(field_values, grid):
    """``h_x^d sum_k`` over the spatial axis (the last one)."""
    return float(np.prod(grid.hx)) * np.asarray(field_values, dtype=float).sum(axis=-1)


def _central_gradient(v, h, axis=0):
    return (np.roll(v, -1, axis=axis) - np.roll(v, 1, axis=axis)) / (2.0 * h)


@dataclass
class AllenCahnEnergies:
    """Allen-Cahn energies per spatial cell.

    ``E_hat`` and ``E_hat_RE`` use the gradient term ``1/2 int (d_x f)^2 dxi``
    of the phase density ``f = F / h_xi``. The ``*_grad_u`` variants replace
    it with ``1/2 |d_x u|^2``, the same term that enters ``E``.
    """

    E: np.ndarray
    E_hat: np.ndarray
    E_RE: np.ndarray
    E_hat_RE: np.ndarray
    defect: np.ndarray
    defect_RE: np.ndarray
    E_hat_grad_u: np.ndarray
    E_hat_RE_grad_u: np.ndarray
    defect_grad_u: np.ndarray
    defect_RE_grad_u: np.ndarray


def allen_cahn_energies(F, coeffs, grid, alpha, potential_bar=None):
    """Energies of an Allen-Cahn measure ``F`` of shape ``(K, L)`` (periodic grid).

    ``potential_bar`` is the cell average of ``G``; the regularized average
    is recovered as ``potential_bar + alpha/2 * avg(xi^2)``.
    """
    from .model import cell_average, double_well

    if grid.bc != PERIODIC:
        raise ValueError("Allen-Cahn energies use periodic central differences")
    F = np.asarray(F, dtype=float)
    lo, hi = grid.phase.cells()
    if potential_bar is None:
        potential_bar = cell_average(lambda x: double_well(x[..., 0]), lo, hi)
    square_bar = cell_average(lambda x: x[..., 0] ** 2, lo, hi)
    h = grid.hx[0]
    h_xi = grid.phase.h[0]

    u = (F @ coeffs.u_bar)[:, 0]
    grad_u = _central_gradient(u, h)
    grad_F = _central_gradient(F, h, axis=0)
    grad_term = 0.5 * (grad_F**2).sum(axis=-1) / h_xi
    grad_u_term = 0.5 * grad_u**2

    G_u = double_well(u)
    G_mix = F @ potential_bar
    reg_mix = G_mix + 0.5 * alpha * (F @ square_bar)
    E = G_u + grad_u_term
    E_RE = G_u + 0.5 * alpha * u**2 + grad_u_term
    E_hat = G_mix + grad_term
    E_hat_RE = reg_mix + grad_term
    E_hat_g = G_mix + grad_u_term
    E_hat_RE_g = reg_mix + grad_u_term
    return AllenCahnEnergies(E, E_hat, E_RE, E_hat_RE, E_hat - E, E_hat_RE - E_RE,
                             E_hat_g, E_hat_RE_g, E_hat_g - E, E_hat_RE_g - E_RE)


@dataclass
class MomentReport:
    """Per-level observables; ``u`` has shape ``(J, K, n)``, scalar fields ``(J, K)``."""

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    E_hat: np.ndarray
    defect: np.ndarray
    extras: dict = field(default_factory=dict)

    def totals(self, grid):
        out = {"E_hat": totals(self.E_hat, grid), "defect": totals(self.defect, grid)}
        for i in range(self.u.shape[-1]):
            out[f"u{i}"] = totals(self.u[..., i], grid)
        for key, val in self.extras.items():
            out[key] = totals(val, grid)
        return out


def write_field_csv(path, t, x, values, name="value"):
    """One row per ``(t, x)`` with columns ``t, x..., value``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    values = np.asarray(values, dtype=float)
    xcols = [f"x{i}" for i in range(x.shape[1])] if x.shape[1] > 1 else ["x"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + xcols + [name])
        for j, tj in enumerate(np.atleast_1d(t)):
            for k in range(x.shape[0]):
                w.writerow([repr(float(tj))] + [repr(float(v)) for v in x[k]]
                           + [repr(float(values[j, k]))])


def write_totals_csv(path, t, series):
    names = list(series)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + names)
        for j, tj in enumerate(t):
            w.writerow([repr(float(tj))] + [repr(float(series[nm][j])) for nm in names])
