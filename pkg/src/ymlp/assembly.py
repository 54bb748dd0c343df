"""Sparse LP data for the discretized measure-valued problem.

Per time step the unknown is ``F^{j+1}`` (flattened spatial cell, optional
collocation node, phase cell). Constraints::

    A~ F^{j+1} = mass            (probability normalization)
    B~ F^{j+1} = -D~ F^j         (moment transport, Lax-Friedrichs stencil)

and the objective ``Xi~ F^{j+1}`` is minimized (negated entropy, or the
regularized potential for Allen-Cahn).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .grid import OUTFLOW, PERIODIC, GridSpec
from .model import PdeModel, cell_average, cell_max


class AssemblyError(ValueError):
    pass


@dataclass
class PhaseCoefficients:
    """Cell-averaged phase data and the three-point stencil weights.

    Shapes: ``u_bar (L, n)``, ``f_bar (L, n, d)``, ``eps (L, d)``,
    ``a, b, c (d, L, n)``. ``objective`` is what the LP minimizes.
    """

    u_bar: np.ndarray
    f_bar: np.ndarray
    eta_bar: np.ndarray
    objective: np.ndarray
    energy_bar: np.ndarray
    eps: np.ndarray
    reaction_bar: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    ratio_dt_h: np.ndarray = field(default=None)

    @property
    def n_phase(self):
        return self.u_bar.shape[0]


def phase_coefficients(model: PdeModel, grid: GridSpec, nodes=3, eps_rule="max"):
    """Cell averages over the phase grid and the stencil weights ``a, b, c``.

    ``eps_l = h_x/2 * rho(K_l)`` with ``rho`` the characteristic speed taken
    as its maximum over the quadrature nodes of the cell (``eps_rule="max"``)
    or its cell average (``"mean"``).
    """
    if model.n != grid.n:
        raise AssemblyError(f"model has n={model.n}, phase box has n={grid.n}")
    if model.d != grid.d:
        raise AssemblyError(f"model has d={model.d}, grid has d={grid.d}")
    lo, hi = grid.phase.cells()
    n, d = model.n, model.d
    u_bar = cell_average(lambda x: x, lo, hi, nodes)
    f_bar = cell_average(model.flux, lo, hi, nodes).reshape(-1, n, d)
    eta_bar = cell_average(model.entropy, lo, hi, nodes)
    objective = cell_average(model.objective, lo, hi, nodes)
    energy_bar = cell_average(model.energy, lo, hi, nodes)
    if eps_rule == "max":
        speed = cell_max(model.char_speed, lo, hi, nodes)
    elif eps_rule == "mean":
        speed = cell_average(model.char_speed, lo, hi, nodes)
    else:
        raise AssemblyError(f"unknown eps rule {eps_rule!r}")
    if model.reaction is not None:
        reaction_bar = cell_average(model.reaction, lo, hi, nodes).reshape(-1, n)
    else:
        reaction_bar = np.zeros_like(u_bar)

    dt, hx = grid.dt, grid.hx
    eps = 0.5 * speed[:, None] * hx[None, :]                      # (L, d)
    nu = eps + (1.0 if model.has_laplacian else 0.0)
    L = u_bar.shape[0]
    a = np.empty((d, L, n))
    b = np.empty((d, L, n))
    c = np.empty((d, L, n))
    for i in range(d):
        adv = f_bar[:, :, i] * dt / (2.0 * hx[i])
        visc = nu[:, i:i + 1] * u_bar * dt / hx[i] ** 2
        a[i] = -adv - visc
        c[i] = adv - visc
        # the -u_bar and reaction parts are shared across axes
        b[i] = (-u_bar + dt * reaction_bar) / d + 2.0 * visc
    return PhaseCoefficients(u_bar, f_bar, eta_bar, objective, energy_bar, eps,
                             reaction_bar, a, b, c, dt / hx)


@dataclass
class LpStepProblem:
    """One time step: minimize ``Xi F`` s.t. ``A F = mass``, ``B F = -D F_prev``, ``F >= 0``."""

    Xi: np.ndarray
    A: sp.csr_matrix
    B: sp.csr_matrix
    D: sp.csr_matrix
    mass: np.ndarray
    n_blocks: int
    n_omega: int = 1

    @property
    def M(self):
        return sp.vstack([self.A, self.B], format="csr")

    @property
    def n_vars(self):
        return self.A.shape[1]

    def rhs(self, F_prev):
        return np.concatenate([self.mass, -(self.D @ F_prev)])

    def block_rows(self):
        """Dense per-block constraint matrix shared by all spatial cells.

        Constraints never couple different spatial cells, so the step LP is
        ``n_blocks`` copies of one small LP that differ only in their
        right-hand sides.
        """
        width = self.n_vars // self.n_blocks
        a_rows = self.A.shape[0] // self.n_blocks
        b_rows = self.B.shape[0] // self.n_blocks
        top = self.A[:a_rows, :width].toarray()
        bot = self.B[:b_rows, :width].toarray()
        return np.vstack([top, bot])

    def block_rhs(self, F_prev):
        rhs = self.rhs(F_prev)
        na = self.A.shape[0]
        top = rhs[:na].reshape(self.n_blocks, -1)
        bot = rhs[na:].reshape(self.n_blocks, -1)
        return np.hstack([top, bot])


@dataclass
class LpGlobalProblem:
    Xi: np.ndarray
    M: sp.csr_matrix
    c: np.ndarray

    @property
    def shape(self):
        return self.M.shape


def _clean(mat):
    mat = sp.csr_matrix(mat)
    mat.sum_duplicates()
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def shift_operator(N, d, axis):
    """``K^i = I (x) .. (x) J (x) .. (x) I`` with ``J`` the nilpotent Jordan block."""
    J = sp.diags([np.ones(N - 1)], [1], shape=(N, N), format="csr")
    return _axis_kron(J, N, d, axis)


def _axis_kron(op, N, d, axis):
    out = sp.identity(1, format="csr")
    for k in range(d):
        out = sp.kron(out, op if k == axis else sp.identity(N, format="csr"), format="csr")
    return out


def boundary_operators(N, d, axis, bc):
    """Matrices placing the missing ``k-1`` / ``k+1`` neighbours of edge cells.

    Periodic wraps around; outflow copies the edge cell (zero-gradient ghost).
    """
    lo = sp.lil_matrix((N, N))
    hi = sp.lil_matrix((N, N))
    if bc == PERIODIC:
        lo[0, N - 1] = 1.0
        hi[N - 1, 0] = 1.0
    elif bc == OUTFLOW:
        lo[0, 0] = 1.0
        hi[N - 1, N - 1] = 1.0
    else:
        raise AssemblyError(f"unknown boundary condition {bc!r}")
    return _axis_kron(lo.tocsr(), N, d, axis), _axis_kron(hi.tocsr(), N, d, axis)


def _assemble(grid, coeffs, n_omega=1, weights=None, normalization="joint"):
    N, d = grid.N_x, grid.d
    K = grid.n_space
    L = coeffs.n_phase
    Iw = sp.identity(n_omega, format="csr")
    u_row = sp.csr_matrix(coeffs.u_bar.T)                         # (n, L)

    if normalization == "joint":
        A = sp.kron(sp.identity(K, format="csr"), np.ones((1, n_omega * L)), format="csr")
        mass = np.ones(K)
    elif normalization == "per_node":
        A = sp.kron(sp.identity(K * n_omega, format="csr"), np.ones((1, L)), format="csr")
        w = np.ones(n_omega) if weights is None else np.asarray(weights, dtype=float)
        mass = np.tile(w, K)
    else:
        raise AssemblyError(f"unknown normalization {normalization!r}")

    B = sp.kron(sp.identity(K * n_omega, format="csr"), u_row, format="csr")
    D = sp.csr_matrix((K * n_omega * grid.n, K * n_omega * L))
    for i in range(d):
        Ki = shift_operator(N, d, i)
        Rlo, Rhi = boundary_operators(N, d, i, grid.bc)
        a = sp.csr_matrix(coeffs.a[i].T)
        b = sp.csr_matrix(coeffs.b[i].T)
        c = sp.csr_matrix(coeffs.c[i].T)
        term = (sp.kron(sp.kron(Ki.T, Iw), a) + sp.kron(sp.identity(K * n_omega), b)
                + sp.kron(sp.kron(Ki, Iw), c)
                + sp.kron(sp.kron(Rlo, Iw), a) + sp.kron(sp.kron(Rhi, Iw), c))
        D = D + term
    Xi = np.kron(np.ones(K * n_omega), coeffs.objective)
    return LpStepProblem(Xi, _clean(A), _clean(B), _clean(D), mass, K, n_omega)


def assemble_step(model, grid, coeffs):
    """Per-step matrices ``Xi~, A~, B~, D~`` for a deterministic problem."""
    if coeffs.n_phase != grid.n_phase:
        raise AssemblyError("coefficients were built for a different phase grid")
    return _assemble(grid, coeffs)


def assemble_allen_cahn_step(model, grid, coeffs):
    """Per-step matrices for Allen-Cahn: diffusion stencil times ``u_bar`` plus reaction at level j."""
    if not model.has_laplacian or model.reaction is None:
        raise AssemblyError("assemble_allen_cahn_step needs the Allen-Cahn model")
    if grid.bc != PERIODIC:
        raise AssemblyError("Allen-Cahn assembly expects periodic boundaries")
    return _assemble(grid, coeffs)


def assemble_global(model, grid, coeffs, F0, max_vars=5_000_000):
    """All-time-levels LP: ``Xi = 1 (x) Xi~``, ``A = I (x) A~``, ``B = J^T (x) D~ + I (x) B~``."""
    step = assemble_step(model, grid, coeffs)
    Nt = grid.N_t
    s = Nt * step.n_vars
    if s > max_vars:
        raise AssemblyError(
            f"global LP would have {s} variables (cap {max_vars}); use the per-step solver")
    It = sp.identity(Nt, format="csr")
    Jt = sp.diags([np.ones(Nt - 1)], [1], shape=(Nt, Nt), format="csr")
    A = sp.kron(It, step.A, format="csr")
    B = sp.kron(Jt.T, step.D, format="csr") + sp.kron(It, step.B, format="csr")
    M = _clean(sp.vstack([A, B]))
    rhs_b = np.zeros(B.shape[0])
    rhs_b[:step.B.shape[0]] = -(step.D @ np.asarray(F0).ravel())
    c = np.concatenate([np.tile(step.mass, Nt), rhs_b])
    Xi = np.kron(np.ones(Nt), step.Xi)
    return LpGlobalProblem(Xi, M, c)


@dataclass(frozen=True)
class CollocationSpec:
    """Collocation nodes in the random space and their probability weights."""

    nodes: np.ndarray          # (Q, m)
    weights: np.ndarray        # (Q,)
    family: str = "uniform"
    n_per_axis: int = 1

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        if nodes.shape[0] == 1 and np.size(self.weights) > 1:
            nodes = nodes.T
        weights = np.asarray(self.weights, dtype=float).ravel()
        if len(weights) != nodes.shape[0]:
            raise AssemblyError("one weight per collocation node is required")
        if np.any(weights <= 0):
            raise AssemblyError("collocation weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-13:
            raise AssemblyError(f"collocation weights sum to {weights.sum()!r}, expected 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self):
        return self.nodes.shape[1]

    @property
    def size(self):
        return len(self.weights)


def collocation_rule(m, n_per_axis, family="uniform", lower=-1.0, upper=1.0, mean=0.0, std=1.0):
    """Tensor Gauss rule for a uniform (Legendre) or Gaussian (Hermite) random vector."""
    if family == "uniform":
        x, w = np.polynomial.legendre.leggauss(n_per_axis)
        x = lower + 0.5 * (x + 1.0) * (upper - lower)
        w = 0.5 * w
    elif family == "gaussian":
        x, w = np.polynomial.hermite_e.hermegauss(n_per_axis)
        x = mean + std * x
        w = w / w.sum()
    else:
        raise AssemblyError(f"unknown density family {family!r}")
    mesh = np.meshgrid(*([x] * m), indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=-1)
    wts = np.ones(len(nodes))
    for g in np.meshgrid(*([w] * m), indexing="ij"):
        wts = wts * g.ravel()
    wts = wts / wts.sum()
    return CollocationSpec(nodes, wts, family, n_per_axis)


def assemble_collocation_step(model, grid, colloc, coeffs=None, normalization="joint"):
    """Per-step matrices with a collocation axis between space and phase.

    ``normalization="joint"`` sums mass over nodes and phase cells per spatial
    cell. ``"per_node"`` pins the mass of node ``q`` to its weight ``w_q``.
    """
    if coeffs is None:
        coeffs = phase_coefficients(model, grid)
    return _assemble(grid, coeffs, colloc.size, colloc.weights, normalization)


def collocation_init(u0, grid, colloc, mode="mean_preserving"):
    """``F0[k, q, l] = w_q * dirac(u0(x_k, omega_q))`` flattened to ``(K*Q*L,)``."""
    from .grid import dirac_init
    x = grid.space_points()
    blocks = []
    for q in range(colloc.size):
        vals = np.asarray(u0(x, colloc.nodes[q]), dtype=float)
        blocks.append(colloc.weights[q] * dirac_init(vals, grid.phase, mode))
    F0 = np.stack(blocks, axis=1)                                 # (K, Q, L)
    return F0.reshape(-1)


def write_triplets(path, M, c, Xi):
    """Plain-text LP export: ``rows cols nnz`` header, ``i j value`` lines, rhs, objective."""
    M = sp.coo_matrix(M)
    with open(path, "w") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]} {M.nnz}\n")
        order = np.lexsort((M.col, M.row))
        for i, j, v in zip(M.row[order], M.col[order], M.data[order]):
            fh.write(f"{i} {j} {float(v)!r}\n")
        fh.write("rhs\n")
        fh.write(" ".join(repr(float(v)) for v in c) + "\n")
        fh.write("objective\n")
        fh.write(" ".join(repr(float(v)) for v in Xi) + "\n")


def read_triplets(path):
    with open(path) as fh:
        rows, cols, nnz = (int(v) for v in fh.readline().split())
        trip = [fh.readline().split() for _ in range(nnz)]
        assert fh.readline().strip() == "rhs"
        c = np.array([float(v) for v in fh.readline().split()])
        assert fh.readline().strip() == "objective"
        Xi = np.array([float(v) for v in fh.readline().split()])
    i = np.array([int(t[0]) for t in trip], dtype=int)
    j = np.array([int(t[1]) for t in trip], dtype=int)
    v = np.array([float(t[2]) for t in trip])
    return sp.csr_matrix((v, (i, j)), shape=(rows, cols)), c, Xi
