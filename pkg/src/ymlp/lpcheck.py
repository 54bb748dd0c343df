"""Random LPs with a known unique optimum and a brute-force vertex oracle.

Used to cross-check :func:`ymlp.ipm.solve_lp` on small problems.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .ipm import IpmOptions, solve_lp


@dataclass
class RandomLp:
    Xi: np.ndarray
    M: np.ndarray
    c: np.ndarray
    F_opt: np.ndarray

    @property
    def objective(self):
        return float(self.Xi @ self.F_opt)


def random_lp(rng, r_max=8, s_max=24):
    """Feasible LP ``min Xi.F, M F = c, F >= 0`` with a unique, nondegenerate optimum.

    A random basis ``B`` gets ``F_B > 0``; the objective is built from a
    random dual ``y`` as ``Xi = M^T y + z`` with ``z_B = 0`` and ``z_N > 0``.
    Strict complementarity plus a nondegenerate basic solution makes the
    optimum unique.
    """
    r = int(rng.integers(1, r_max + 1))
    s = int(rng.integers(r + 1, s_max + 1))
    while True:
        M = rng.normal(size=(r, s))
        basis = np.sort(rng.choice(s, size=r, replace=False))
        if np.linalg.cond(M[:, basis]) < 1e3:
            break
    F = np.zeros(s)
    F[basis] = rng.uniform(0.5, 2.0, size=r)
    z = rng.uniform(0.1, 1.0, size=s)
    z[basis] = 0.0
    Xi = M.T @ rng.normal(size=r) + z
    return RandomLp(Xi, M, M @ F, F)


def vertex_enumeration(Xi, M, c, chunk=20000, tol=1e-9):
    """Optimal objective over all basic feasible solutions.

    Every set of ``r`` columns with a nonsingular submatrix is tried; the
    systems are solved in batches. Returns ``(objective, F)``; raises
    ``ValueError`` when no feasible vertex exists.
    """
    M = np.asarray(M, dtype=float)
    Xi = np.asarray(Xi, dtype=float)
    c = np.asarray(c, dtype=float)
    r, s = M.shape
    best, best_F = np.inf, None
    subsets = combinations(range(s), r)
    while True:
        batch = np.array([b for _, b in zip(range(chunk), subsets)], dtype=int)
        if batch.size == 0:
            break
        B = np.swapaxes(M[:, batch], 0, 1)                  # (k, r, r)
        ok = np.abs(np.linalg.det(B)) > 1e-12
        if not ok.any():
            continue
        batch, B = batch[ok], B[ok]
        x = np.linalg.solve(B, np.broadcast_to(c, (len(B), r))[..., None])[..., 0]
        feasible = (x >= -tol).all(axis=1) & (np.abs(np.einsum("krs,ks->kr", B, x) - c).max(axis=1) < 1e-8)
        if not feasible.any():
            continue
        obj = np.einsum("kr,kr->k", Xi[batch[feasible]], x[feasible])
        i = int(obj.argmin())
        if obj[i] < best:
            best = float(obj[i])
            best_F = np.zeros(s)
            best_F[batch[feasible][i]] = np.maximum(x[feasible][i], 0.0)
    if best_F is None:
        raise ValueError("no feasible vertex")
    return best, best_F


@dataclass
class OracleRecord:
    index: int
    r: int
    s: int
    ipm_objective: float
    vertex_objective: float
    status: str
    iterations: int
    positivity_violations: int

    @property
    def error(self):
        return abs(self.ipm_objective - self.vertex_objective)


def oracle_check(seed=0, count=100, options=None, r_max=8, s_max=24):
    """Solve ``count`` random LPs with the IPM and by vertex enumeration."""
    rng = np.random.default_rng(seed)
    opts = options or IpmOptions(tol_p=1e-10, tol_d=1e-10, tol_gap=1e-10,
                                 predictor_corrector=True, start="mehrotra")
    records = []
    for i in range(count):
        lp = random_lp(rng, r_max, s_max)
        sol = solve_lp(lp.Xi, lp.M, lp.c, opts)
        best, _ = vertex_enumeration(lp.Xi, lp.M, lp.c)
        records.append(OracleRecord(i, lp.M.shape[0], lp.M.shape[1], sol.objective, best,
                                    sol.status, sol.iterations, sol.positivity_violations))
    return records
