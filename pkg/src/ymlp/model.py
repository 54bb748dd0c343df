"""PDE families and phase-space cell averages.

Every model callable is vectorized over leading axes: a state array has
shape ``(..., n)`` and the returned array keeps the leading shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class DomainError(ValueError):
    """A model function was evaluated outside its domain (e.g. vacuum)."""


class ParameterError(ValueError):
    """Invalid model parameter."""


ENTROPY_MAX = "entropy_max"
POTENTIAL_MIN = "regularized_potential_min"


@dataclass(frozen=True)
class PdeModel:
    """One PDE family.

    ``flux`` maps ``(..., n) -> (..., n, d)``, ``entropy`` and ``char_speed``
    map ``(..., n) -> (...)``. ``energy`` is the density whose cell averages
    feed the moment diagnostics; ``objective`` is the integrand that the LP
    minimizes (negated entropy, or the regularized potential for
    Allen-Cahn).
    """

    name: str
    n: int
    d: int
    flux: Callable[[np.ndarray], np.ndarray]
    entropy: Callable[[np.ndarray], np.ndarray]
    char_speed: Callable[[np.ndarray], np.ndarray]
    energy: Callable[[np.ndarray], np.ndarray]
    reaction: Optional[Callable[[np.ndarray], np.ndarray]] = None
    has_laplacian: bool = False
    objective_kind: str = ENTROPY_MAX
    params: tuple = ()

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ParameterError("n and d must be >= 1")
        if self.objective_kind not in (ENTROPY_MAX, POTENTIAL_MIN):
            raise ParameterError(f"unknown objective kind {self.objective_kind!r}")

    def objective(self, xi):
        """Integrand minimized by the LP."""
        if self.objective_kind == ENTROPY_MAX:
            return -self.entropy(xi)
        return self.entropy(xi)

    def param(self, key, default=None):
        return dict(self.params).get(key, default)


def _state(xi, n):
    xi = np.asarray(xi, dtype=float)
    if n == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
        xi = xi[..., None]
    if xi.shape[-1] != n:
        raise ValueError(f"state must have trailing dimension {n}, got {xi.shape}")
    return xi


def burgers_model(d=1):
    """Inviscid Burgers, ``f(u) = u^2/2`` along every axis, ``eta = -u^2``."""

    def flux(xi):
        u = _state(xi, 1)
        return np.repeat((0.5 * u * u)[..., None], d, axis=-1)

    def entropy(xi):
        u = _state(xi, 1)[..., 0]
        return -u * u

    def char_speed(xi):
        return np.abs(_state(xi, 1)[..., 0])

    def energy(xi):
        u = _state(xi, 1)[..., 0]
        return u * u

    return PdeModel("burgers", 1, d, flux, entropy, char_speed, energy)


def barotropic_euler_model(gamma=2.0):
    """1-D barotropic Euler in conservative variables ``(rho, m)``, ``p = rho^gamma``."""
    gamma = float(gamma)
    if not gamma > 1.0:
        raise ParameterError(f"gamma must exceed 1, got {gamma}")

    def _split(xi):
        xi = _state(xi, 2)
        rho, m = xi[..., 0], xi[..., 1]
        if np.any(rho <= 0.0):
            raise DomainError("barotropic Euler evaluated at rho <= 0 (vacuum)")
        return rho, m

    def flux(xi):
        rho, m = _split(xi)
        out = np.stack([m, m * m / rho + rho**gamma], axis=-1)
        return out[..., None]

    def energy(xi):
        rho, m = _split(xi)
        return 0.5 * m * m / rho + rho**gamma / (gamma - 1.0)

    def entropy(xi):
        return -energy(xi)

    def char_speed(xi):
        rho, m = _split(xi)
        return np.abs(m / rho) + np.sqrt(gamma * rho ** (gamma - 1.0))

    return PdeModel("barotropic-euler", 2, 1, flux, entropy, char_speed, energy,
                    params=(("gamma", gamma),))


def double_well(u):
    """``G(u) = (1 - u^2)^2 / 4``."""
    u = np.asarray(u, dtype=float)
    return 0.25 * (1.0 - u * u) ** 2


def double_well_prime(u):
    u = np.asarray(u, dtype=float)
    return u * u * u - u


def allen_cahn_model(alpha=1.1):
    """Allen-Cahn ``u_t = u_xx - G'(u)`` with convexified potential.

    The LP objective is ``G(u) + alpha/2 u^2``, convex only for ``alpha > 1``.
    """
    alpha = float(alpha)
    if not alpha > 1.0:
        raise ParameterError(f"alpha must exceed 1 for a convex potential, got {alpha}")

    def zero_flux(xi):
        u = _state(xi, 1)
        return np.zeros(u.shape + (1,))

    def regularized(xi):
        u = _state(xi, 1)[..., 0]
        return double_well(u) + 0.5 * alpha * u * u

    def reaction(xi):
        return double_well_prime(_state(xi, 1))

    def potential(xi):
        return double_well(_state(xi, 1)[..., 0])

    def no_speed(xi):
        return np.zeros(_state(xi, 1).shape[:-1])

    return PdeModel("allen-cahn", 1, 1, zero_flux, regularized, no_speed, potential,
                    reaction=reaction, has_laplacian=True, objective_kind=POTENTIAL_MIN,
                    params=(("alpha", alpha),))


def make_model(name, **params):
    """Look a model up by its config name."""
    if name == "burgers":
        return burgers_model(d=params.get("d", 1))
    if name == "barotropic-euler":
        return barotropic_euler_model(params.get("gamma", 2.0))
    if name == "allen-cahn":
        return allen_cahn_model(params.get("alpha", 1.1))
    raise ParameterError(f"unknown model {name!r}")


def gauss_rule(nodes=3):
    """Gauss-Legendre nodes/weights mapped to ``[0, 1]`` (weights sum to 1)."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def _tensor_points(lower, upper, nodes):
    lower = np.atleast_2d(np.asarray(lower, dtype=float))
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    n = lower.shape[-1]
    x, w = gauss_rule(nodes)
    grids = np.meshgrid(*([x] * n), indexing="ij")
    ref = np.stack([g.ravel() for g in grids], axis=-1)           # (Q, n)
    wts = np.ones(len(ref))
    for g in np.meshgrid(*([w] * n), indexing="ij"):
        wts = wts * g.ravel()
    pts = lower[:, None, :] + (upper - lower)[:, None, :] * ref[None]
    return pts, wts


def cell_average(g, lower, upper, nodes=3):
    """Mean of ``g`` over the box ``[lower, upper]``.

    ``lower``/``upper`` may be a single box of shape ``(n,)`` or a stack of
    boxes ``(L, n)``; ``g`` receives quadrature points of shape ``(..., n)``.
    Exact for polynomials of degree ``2*nodes - 1`` per axis.
    """
    single = np.ndim(lower) <= 1
    lo = np.asarray(lower, dtype=float).reshape(-1, np.size(lower) if single else np.shape(lower)[-1])
    hi = np.asarray(upper, dtype=float).reshape(lo.shape)
    if np.any(hi <= lo):
        raise ValueError("cell must have upper > lower componentwise")
    pts, wts = _tensor_points(lo, hi, nodes)
    try:
        vals = np.asarray(g(pts), dtype=float)
    except DomainError as exc:
        raise DomainError(f"{exc} on phase cell(s) {lo.tolist()}..{hi.tolist()}"[:300]) from exc
    avg = np.einsum("lq...,q->l...", vals, wts)
    return avg[0] if single else avg


def cell_max(g, lower, upper, nodes=3):
    """Maximum of ``g`` over the quadrature nodes of each cell."""
    lo = np.atleast_2d(np.asarray(lower, dtype=float))
    hi = np.atleast_2d(np.asarray(upper, dtype=float))
    pts, _ = _tensor_points(lo, hi, nodes)
    return np.asarray(g(pts), dtype=float).max(axis=1)
