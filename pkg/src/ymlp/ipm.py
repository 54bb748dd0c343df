"""Primal-dual interior-point method for ``min Xi.F  s.t.  M F = c, F >= 0``.

Newton directions come from the Schur-complement (normal equations)
reduction of the perturbed KKT system::

    [0  M^T  I] [dF]     [r_d]       r_p = M F - c
    [M  0    0] [dT] = - [r_p]       r_d = M^T T + s - Xi
    [S  0    F] [ds]     [r_c]       r_c = F s - tau

    (M D M^T) dT = -r_p - M D r_d + M S^{-1} r_c,    D = F / s
    ds = -r_d - M^T dT
    dF = -(r_c + F ds) / s

with ``tau = sigma * F.s / (number of variables)``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible_suspected"
ITERATION_LIMIT = "iteration_limit"


class NumericalError(RuntimeError):
    pass


@dataclass
class IpmOptions:
    sigma: float = 0.1
    tol_p: float = 1e-8
    tol_d: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 200
    ftb: float = 0.995
    reg: float = 1e-10
    reg_max: float = 1e-6
    predictor_corrector: bool = False
    start: str = "scaled_ones"
    equal_steps: bool = True
    verbose: bool = False

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError("sigma must lie in (0, 1)")
        if not 0.0 < self.ftb < 1.0:
            raise ValueError("fraction-to-boundary factor must lie in (0, 1)")
        if min(self.tol_p, self.tol_d, self.tol_gap) <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.start not in ("scaled_ones", "mehrotra"):
            raise ValueError(f"unknown starting point rule {self.start!r}")


@dataclass
class IpmState:
    F: np.ndarray
    Theta: np.ndarray
    s: np.ndarray
    iter: int = 0

    @property
    def mu(self):
        return float(self.F @ self.s) / self.F.size


@dataclass
class LpSolution:
    F: np.ndarray
    Theta: np.ndarray
    s: np.ndarray
    objective: float
    iterations: int
    rp_norm: float
    rd_norm: float
    mu: float
    status: str
    positivity_violations: int = 0
    log: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == OPTIMAL


def residuals(state, Xi, M, c, sigma=None):
    """``(r_p, r_d, r_c)``; ``r_c`` targets ``tau = sigma * mu`` (``sigma=None`` -> tau = 0)."""
    r_p = M @ state.F - c
    r_d = M.T @ state.Theta + state.s - Xi
    tau = 0.0 if sigma is None else sigma * state.mu
    r_c = state.F * state.s - tau
    return r_p, r_d, r_c


class _NormalSolver:
    """Factorizes ``M D M^T``, adding ``reg I`` (escalating) only when that fails."""

    def __init__(self, M, D, reg, reg_max):
        self.M = M
        self.D = D
        N = (M @ sp.diags(D) @ M.T).tocsc()
        self.N = N
        eye = sp.identity(N.shape[0], format="csc")
        scale = max(1.0, float(np.abs(N.diagonal()).max()) if N.shape[0] else 1.0)
        self.reg = 0.0
        while True:
            try:
                self.lu = spla.splu(N + (self.reg * scale) * eye, permc_spec="MMD_AT_PLUS_A",
                                    diag_pivot_thresh=0.0,
                                    options={"SymmetricMode": True})
                probe = self.lu.solve(np.ones(N.shape[0]))
                if not np.all(np.isfinite(probe)):
                    raise RuntimeError("non-finite solve")
                break
            except RuntimeError as exc:
                self.reg = reg if self.reg == 0.0 else 10.0 * self.reg
                if self.reg > reg_max:
                    raise NumericalError(f"normal-equation factorization failed: {exc}") from exc

    def solve(self, rhs, refine=2):
        x = self.lu.solve(rhs)
        for _ in range(refine):
            res = rhs - self.N @ x
            if not np.all(np.isfinite(res)):
                break
            x = x + self.lu.solve(res)
        return x


def newton_step(state, r_p, r_d, r_c, M, reg=1e-10, reg_max=1e-6, solver=None):
    """Solve the block Newton system through the normal equations.

    Returns ``(dF, dTheta, ds)`` and the solver (reusable for a corrector).
    """
    F, s = state.F, state.s
    if solver is None:
        solver = _NormalSolver(M, F / s, reg, reg_max)
    D = solver.D
    rhs = -r_p - M @ (D * r_d) + M @ (r_c / s)
    dT = solver.solve(rhs)
    ds = -r_d - M.T @ dT
    dF = -(r_c + F * ds) / s
    # restore M dF = -r_p, which the back-substitution loses when F/s is large
    gap = -r_p - M @ dF
    if gap.size:
        fixed = dF + D * (M.T @ solver.solve(gap))
        if np.abs(-r_p - M @ fixed).max() < np.abs(gap).max():
            dF = fixed
    return (dF, dT, ds), solver


def step_length(x, dx, ftb=0.995):
    """Largest ``alpha <= 1`` keeping ``x + alpha dx`` positive, shortened by ``ftb``."""
    x = np.asarray(x, dtype=float)
    dx = np.asarray(dx, dtype=float)
    neg = dx < 0
    if not np.any(neg):
        return 1.0
    alpha_max = float(np.min(-x[neg] / dx[neg]))
    return min(1.0, ftb * alpha_max)


def _start(Xi, M, c, options):
    m, n = M.shape
    if options.start == "scaled_ones":
        bp = max(1.0, float(np.abs(c).max()) if c.size else 1.0)
        bd = max(1.0, float(np.abs(Xi).max()) if Xi.size else 1.0)
        return IpmState(np.full(n, bp), np.zeros(m), np.full(n, bd))
    # Mehrotra's heuristic
    solver = _NormalSolver(M, np.ones(n), options.reg, options.reg_max)
    F = M.T @ solver.solve(c)
    T = solver.solve(M @ Xi)
    s = Xi - M.T @ T
    F = F + max(-1.5 * F.min(), 0.0)
    s = s + max(-1.5 * s.min(), 0.0)
    F = np.maximum(F, 1e-12)
    s = np.maximum(s, 1e-12)
    fs = float(F @ s)
    F = F + 0.5 * fs / s.sum()
    s = s + 0.5 * fs / F.sum()
    return IpmState(F, T, s)


def solve_lp(Xi, M, c, options=None):
    """Sparse primal-dual interior-point solve.

    Stops when ``|r_p|_inf <= tol_p (1 + |c|_inf)``, ``|r_d|_inf <= tol_d
    (1 + |Xi|_inf)`` and ``mu <= tol_gap``.
    """
    opts = options or IpmOptions()
    M = sp.csr_matrix(M)
    Xi = np.asarray(Xi, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    if M.shape != (c.size, Xi.size):
        raise ValueError(f"shape mismatch: M {M.shape}, c {c.size}, Xi {Xi.size}")
    st = _start(Xi, M, c, opts)
    scale_p = 1.0 + (np.abs(c).max() if c.size else 0.0)
    scale_d = 1.0 + np.abs(Xi).max()
    history = []
    violations = 0
    status = ITERATION_LIMIT
    best_rp = np.inf
    stall = 0
    for it in range(opts.max_iter + 1):
        st.iter = it
        r_p, r_d, _ = residuals(st, Xi, M, c)
        rp = float(np.abs(r_p).max()) / scale_p if r_p.size else 0.0
        rd = float(np.abs(r_d).max()) / scale_d
        mu = st.mu
        if rp <= opts.tol_p and rd <= opts.tol_d and mu <= opts.tol_gap:
            status = OPTIMAL
            break
        if it == opts.max_iter:
            break
        if rp < 0.5 * best_rp or rp <= opts.tol_p:
            best_rp, stall = min(rp, best_rp), 0
        else:
            stall += 1
        # complementarity gone while the primal residual no longer improves
        if (mu < opts.tol_gap * 1e-2 and rp > opts.tol_p and stall >= 3) or stall > 30 \
                or np.abs(st.F).max() > 1e14:
            status = INFEASIBLE
            break

        if opts.predictor_corrector:
            r_c = st.F * st.s
            (dF, dT, ds), solver = newton_step(st, r_p, r_d, r_c, M, opts.reg, opts.reg_max)
            ap = step_length(st.F, dF, 1.0)
            ad = step_length(st.s, ds, 1.0)
            mu_aff = float((st.F + ap * dF) @ (st.s + ad * ds)) / st.F.size
            sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
            r_c = st.F * st.s + dF * ds - sigma * mu
            (dF, dT, ds), _ = newton_step(st, r_p, r_d, r_c, M, solver=solver)
        else:
            r_c = st.F * st.s - opts.sigma * mu
            (dF, dT, ds), _ = newton_step(st, r_p, r_d, r_c, M, opts.reg, opts.reg_max)

        ap = step_length(st.F, dF, opts.ftb)
        ad = step_length(st.s, ds, opts.ftb)
        if opts.equal_steps:
            ap = ad = min(ap, ad)
        st.F = st.F + ap * dF
        st.Theta = st.Theta + ad * dT
        st.s = st.s + ad * ds
        if not (np.all(st.F > 0) and np.all(st.s > 0)):
            violations += 1
            st.F = np.maximum(st.F, np.finfo(float).tiny)
            st.s = np.maximum(st.s, np.finfo(float).tiny)
        history.append({"iter": it + 1, "mu": st.mu, "rp": rp, "rd": rd,
                        "alpha_p": ap, "alpha_d": ad})
        if opts.verbose:
            log.info("ipm %3d mu=%.3e rp=%.3e rd=%.3e ap=%.3f ad=%.3f",
                     it + 1, st.mu, rp, rd, ap, ad)
    r_p, r_d, _ = residuals(st, Xi, M, c)
    return LpSolution(st.F, st.Theta, st.s, float(Xi @ st.F), st.iter,
                      float(np.abs(r_p).max()) if r_p.size else 0.0,
                      float(np.abs(r_d).max()), st.mu, status, violations, history)


@dataclass
class BlockSolution:
    F: np.ndarray              # (K, w)
    Theta: np.ndarray          # (K, r)
    s: np.ndarray              # (K, w)
    iterations: int
    status: np.ndarray         # per block
    rp_norm: np.ndarray
    rd_norm: np.ndarray
    mu: np.ndarray
    positivity_violations: int = 0
    log: list = field(default_factory=list)

    @property
    def ok(self):
        return bool(np.all(self.status == OPTIMAL))


def _batched_step_length(x, dx, ftb):
    """Per-row ``min(1, ftb * max alpha)`` keeping ``x + alpha dx > 0``."""
    worst = (dx / x).min(axis=1)          # most negative relative change
    with np.errstate(divide="ignore"):
        alpha = np.where(worst < 0, -1.0 / worst, np.inf)
    return np.minimum(1.0, ftb * alpha)


class _BlockData:
    """Constraint rows shared by all blocks ``(r, w)`` or given per block ``(K, r, w)``."""

    def __init__(self, Xi, P, K):
        self.P = np.asarray(P, dtype=float)
        self.Xi = np.asarray(Xi, dtype=float)
        self.shared = self.P.ndim == 2
        if not self.shared and self.P.shape[0] != K:
            raise ValueError("per-block constraint rows need one block per right-hand side")
        self.r, self.w = self.P.shape[-2:]
        if self.Xi.shape[-1] != self.w or (self.Xi.ndim == 2 and self.Xi.shape[0] != K):
            raise ValueError("inconsistent block LP shapes")

    def rows(self, idx):
        return self.P if self.shared else self.P[idx]

    def cost(self, idx):
        return self.Xi if self.Xi.ndim == 1 else self.Xi[idx]

    def times(self, X, idx):
        """``P X`` per block: ``(k, w) -> (k, r)``."""
        return X @ self.P.T if self.shared else np.einsum("kw,krw->kr", X, self.P[idx])

    def transpose_times(self, Y, idx):
        """``P^T Y`` per block: ``(k, r) -> (k, w)``."""
        return Y @ self.P if self.shared else np.einsum("kr,krw->kw", Y, self.P[idx])

    def columns(self, idx):
        """``P^T`` per block, broadcastable to ``(k, w, r)``."""
        return self.P.T[None] if self.shared else np.swapaxes(self.P[idx], 1, 2)


def solve_lp_blocks(Xi, P, rhs, options=None):
    """Solve ``K`` independent LPs ``min Xi.F  s.t.  P F = rhs_k, F >= 0``.

    ``P`` is either shared, shape ``(r, w)``, or given per block, shape
    ``(K, r, w)``; ``Xi`` is ``(w,)`` or ``(K, w)`` accordingly and ``rhs``
    is ``(K, r)``. The iteration is the one of :func:`solve_lp`, applied
    blockwise with per-block step lengths.
    """
    opts = options or IpmOptions()
    rhs = np.atleast_2d(np.asarray(rhs, dtype=float))
    K, r = rhs.shape
    data = _BlockData(Xi, P, K)
    if data.r != r:
        raise ValueError("inconsistent block LP shapes")
    w = data.w
    everyone = np.arange(K)

    Xi_all = np.broadcast_to(data.cost(everyone), (K, w))
    if opts.start == "scaled_ones":
        bp = np.maximum(1.0, np.abs(rhs).max(axis=1))
        bd = max(1.0, float(np.abs(data.Xi).max()))
        F = np.repeat(bp[:, None], w, axis=1)
        s = np.full((K, w), bd)
        T = np.zeros((K, r))
    else:
        Pt = np.broadcast_to(data.columns(everyone), (K, w, r))
        G = np.einsum("kwr,kws->krs", Pt, Pt)
        F = data.transpose_times(np.linalg.solve(G, rhs[..., None])[..., 0], everyone)
        T = np.linalg.solve(G, np.einsum("kwr,kw->kr", Pt, Xi_all)[..., None])[..., 0]
        s = Xi_all - data.transpose_times(T, everyone)
        F = F + np.maximum(-1.5 * F.min(axis=1), 0.0)[:, None]
        s = s + np.maximum(-1.5 * s.min(axis=1), 0.0)[:, None]
        F = np.maximum(F, 1e-12)
        s = np.maximum(s, 1e-12)
        fs = np.einsum("kw,kw->k", F, s)
        F = F + (0.5 * fs / s.sum(axis=1))[:, None]
        s = s + (0.5 * fs / F.sum(axis=1))[:, None]

    scale_p = 1.0 + np.abs(rhs).max(axis=1)
    scale_d = 1.0 + np.abs(Xi_all).max(axis=1)
    status = np.full(K, ITERATION_LIMIT, dtype=object)
    active = np.ones(K, dtype=bool)
    best_rp = np.full(K, np.inf)
    stall = np.zeros(K, dtype=int)
    violations = 0
    history = []
    eye = np.eye(r)[None]
    it = 0
    while True:
        rp_vec = data.times(F, everyone) - rhs
        rd_vec = data.transpose_times(T, everyone) + s - Xi_all
        rp = np.abs(rp_vec).max(axis=1) / scale_p
        rd = np.abs(rd_vec).max(axis=1) / scale_d
        mu = np.einsum("kw,kw->k", F, s) / w
        done = (rp <= opts.tol_p) & (rd <= opts.tol_d) & (mu <= opts.tol_gap)
        status[active & done] = OPTIMAL
        improving = (rp < 0.5 * best_rp) | (rp <= opts.tol_p)
        best_rp = np.where(improving, np.minimum(rp, best_rp), best_rp)
        stall = np.where(improving, 0, stall + 1)
        # complementarity gone while the primal residual no longer improves
        bad = active & ~done & (((mu < opts.tol_gap * 1e-2) & (rp > opts.tol_p) & (stall >= 3))
                                | (stall > 30) | (F.max(axis=1) > 1e14))
        status[bad] = INFEASIBLE
        active &= ~done & ~bad
        if not active.any() or it >= opts.max_iter:
            break
        it += 1
        full = bool(active.all())
        idx = everyone if full else np.flatnonzero(active)
        take = (lambda X: X) if full else (lambda X: X[idx])
        Fa, sa, Ta = take(F), take(s), take(T)
        rpa, rda, mua = take(rp_vec), take(rd_vec), take(mu)
        Dg = Fa / sa
        # QR of D^{1/2} P^T avoids squaring the condition number of P D P^T
        root = np.sqrt(Dg)
        A = root[:, :, None] * data.columns(idx)
        Q, R = np.linalg.qr(A)
        diag = np.abs(np.diagonal(R, axis1=1, axis2=2))
        weak = diag.min(axis=1) <= 1e-14 * np.maximum(diag.max(axis=1), 1.0)
        if weak.any():
            # rank-deficient blocks: refactor with sqrt(reg) I rows appended
            Aw = np.concatenate([A[weak], np.sqrt(opts.reg) * np.repeat(eye, weak.sum(), 0)], axis=1)
            Qw, R[weak] = np.linalg.qr(Aw)
            Q[weak] = Qw[:, :w]
        Rt = np.swapaxes(R, 1, 2)

        def normal_solve(rhs_n):
            return np.linalg.solve(R, np.linalg.solve(Rt, rhs_n[..., None]))[..., 0]

        def direction(rc):
            v = root * (rc / Fa - rda)
            z = np.einsum("kwr,kw->kr", Q, v) - np.linalg.solve(Rt, rpa[..., None])[..., 0]
            dT = np.linalg.solve(R, z[..., None])[..., 0]
            ds = -rda - data.transpose_times(dT, idx)
            dF = -(rc + Fa * ds) / sa
            # restore P dF = -r_p, which the back-substitution loses when F/s is large
            gap = -rpa - data.times(dF, idx)
            fixed = dF + Dg * data.transpose_times(normal_solve(gap), idx)
            better = (np.abs(-rpa - data.times(fixed, idx)).max(axis=1)
                      < np.abs(gap).max(axis=1))
            dF = np.where(better[:, None], fixed, dF)
            return dF, dT, ds

        if opts.predictor_corrector:
            dF, dT, ds = direction(Fa * sa)
            ap = _batched_step_length(Fa, dF, 1.0)
            ad = _batched_step_length(sa, ds, 1.0)
            mu_aff = np.einsum("kw,kw->k", Fa + ap[:, None] * dF, sa + ad[:, None] * ds) / w
            sig = np.minimum(1.0, (mu_aff / mua) ** 3)
            dF, dT, ds = direction(Fa * sa + dF * ds - (sig * mua)[:, None])
        else:
            dF, dT, ds = direction(Fa * sa - (opts.sigma * mua)[:, None])
        ap = _batched_step_length(Fa, dF, opts.ftb)
        ad = _batched_step_length(sa, ds, opts.ftb)
        if opts.equal_steps:
            ap = ad = np.minimum(ap, ad)
        Fa = Fa + ap[:, None] * dF
        Ta = Ta + ad[:, None] * dT
        sa = sa + ad[:, None] * ds
        if not (np.all(Fa > 0) and np.all(sa > 0)):
            violations += 1
            Fa = np.maximum(Fa, np.finfo(float).tiny)
            sa = np.maximum(sa, np.finfo(float).tiny)
        if full:
            F, s, T = Fa, sa, Ta
        else:
            F[idx], s[idx], T[idx] = Fa, sa, Ta
        history.append({"iter": it, "mu": float(mua.max()), "rp": float(rp[idx].max()),
                        "rd": float(rd[idx].max()), "alpha_p": float(ap.min()),
                        "alpha_d": float(ad.min())})
    rp_vec = data.times(F, everyone) - rhs
    rd_vec = data.transpose_times(T, everyone) + s - Xi_all
    return BlockSolution(F, T, s, it, status, np.abs(rp_vec).max(axis=1),
                         np.abs(rd_vec).max(axis=1),
                         np.einsum("kw,kw->k", F, s) / w, violations, history)


def solve_lp_windowed(Xi, P, rhs, columns, options=None):
    """Block LPs solved on per-block column subsets, certified on all columns.

    Each block ``k`` is first solved using only ``columns[k]``. The result
    is optimal for the full LP when the reduced costs ``Xi - P^T Theta``
    are nonnegative on every column (to ``tol_d``); blocks failing that
    check, or not solved to optimality, are re-solved on all columns.

    Returns a :class:`BlockSolution` over all ``w`` columns plus the number
    of blocks that needed the full solve.
    """
    opts = options or IpmOptions()
    P = np.asarray(P, dtype=float)
    Xi = np.asarray(Xi, dtype=float)
    rhs = np.atleast_2d(np.asarray(rhs, dtype=float))
    columns = np.asarray(columns)
    K, w = rhs.shape[0], P.shape[1]
    sub = solve_lp_blocks(Xi[columns], np.moveaxis(P[:, columns], 1, 0), rhs, opts)
    F = np.zeros((K, w))
    np.put_along_axis(F, columns, sub.F, axis=1)
    reduced = Xi[None] - sub.Theta @ P
    s = np.maximum(reduced, 0.0)
    np.put_along_axis(s, columns, sub.s, axis=1)
    scale_d = 1.0 + np.abs(Xi).max()
    uncertified = (sub.status != OPTIMAL) | (reduced.min(axis=1) < -opts.tol_d * scale_d)
    status = sub.status.copy()
    Theta = sub.Theta.copy()
    violations = sub.positivity_violations
    iterations = sub.iterations
    if uncertified.any():
        idx = np.flatnonzero(uncertified)
        full = solve_lp_blocks(Xi, P, rhs[idx], opts)
        F[idx], s[idx], Theta[idx], status[idx] = full.F, full.s, full.Theta, full.status
        violations += full.positivity_violations
        iterations = max(iterations, full.iterations)
    rp = np.abs(F @ P.T - rhs).max(axis=1)
    rd = np.abs(Theta @ P + s - Xi[None]).max(axis=1)
    sol = BlockSolution(F, Theta, s, iterations, status, rp, rd,
                        np.einsum("kw,kw->k", F, s) / w, violations, sub.log)
    return sol, int(uncertified.sum())


def write_log(path, history):
    """Iteration log as CSV: iter, mu, rp, rd, alpha_p, alpha_d."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["iter", "mu", "rp", "rd", "alpha_p", "alpha_d"])
        writer.writeheader()
        for row in history:
            writer.writerow(row)
