"""Discretization geometry, flat index ordering and Dirac initialization.

Flat ordering is lexicographic with time outermost, then the spatial
multi-index (axis 1 outermost), then the optional collocation index, then
the phase multi-index (component 1 outermost). This is the ordering that
makes ``I (x) row`` Kronecker factors act blockwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PERIODIC = "periodic"
OUTFLOW = "outflow"


class InitializationError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseBox:
    lower: tuple
    upper: tuple
    N_xi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        counts = np.atleast_1d(self.N_xi)
        if counts.size == 1 and len(lo) > 1:
            counts = np.repeat(counts, len(lo))
        counts = tuple(int(c) for c in counts)
        if not (len(lo) == len(hi) == len(counts)):
            raise ValueError("phase box bounds and counts disagree in dimension")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError("phase box needs lower < upper componentwise")
        if any(c < 1 for c in counts):
            raise ValueError("N_xi must be >= 1")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "N_xi", counts)

    @property
    def n(self):
        return len(self.lower)

    @property
    def h(self):
        return np.array([(hi - lo) / c for lo, hi, c in zip(self.lower, self.upper, self.N_xi)])

    @property
    def size(self):
        return int(np.prod(self.N_xi))

    def axis_centers(self, i):
        h = self.h[i]
        return self.lower[i] + h * (np.arange(self.N_xi[i]) + 0.5)

    def cells(self):
        """Lower and upper corners of every phase cell, shape ``(L, n)`` each."""
        idx = np.stack(np.unravel_index(np.arange(self.size), self.N_xi), axis=-1)
        lo = np.asarray(self.lower) + idx * self.h
        return lo, lo + self.h

    def centers(self):
        lo, hi = self.cells()
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class GridSpec:
    """Uniform time/space/phase grid. ``N_x`` is the cell count per spatial axis."""

    T: float
    N_t: int
    space_lower: tuple
    space_upper: tuple
    N_x: int
    phase: PhaseBox
    bc: str = PERIODIC

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.space_lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.space_upper))
        object.__setattr__(self, "space_lower", lo)
        object.__setattr__(self, "space_upper", hi)
        if len(lo) != len(hi):
            raise ValueError("space bounds disagree in dimension")
        if self.N_t < 1 or self.N_x < 1:
            raise ValueError("N_t and N_x must be >= 1")
        if not self.T > 0 or any(h <= l for l, h in zip(lo, hi)):
            raise ValueError("need T > 0 and space_lower < space_upper")
        if self.bc not in (PERIODIC, OUTFLOW):
            raise ValueError(f"unknown boundary condition {self.bc!r}")

    @property
    def d(self):
        return len(self.space_lower)

    @property
    def n(self):
        return self.phase.n

    @property
    def dt(self):
        return self.T / self.N_t

    @property
    def hx(self):
        return np.array([(b - a) / self.N_x for a, b in zip(self.space_lower, self.space_upper)])

    @property
    def n_space(self):
        return self.N_x ** self.d

    @property
    def n_phase(self):
        return self.phase.size

    @property
    def step_size(self):
        return self.n_space * self.n_phase

    @property
    def space_shape(self):
        return (self.N_x,) * self.d

    def space_centers(self, axis=0):
        return self.space_lower[axis] + self.hx[axis] * (np.arange(self.N_x) + 0.5)

    def space_points(self):
        """Cell centers of every spatial cell in flat order, shape ``(N_x^d, d)``."""
        axes = [self.space_centers(i) for i in range(self.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def time_interval(self, j):
        """Step ``j`` (1-based level) covers ``((j-1) dt, j dt]``."""
        if not 1 <= j <= self.N_t:
            raise IndexError(f"time level {j} out of range 1..{self.N_t}")
        return ((j - 1) * self.dt, j * self.dt)

    def with_resolution(self, N_t, N_x, N_xi):
        phase = PhaseBox(self.phase.lower, self.phase.upper, N_xi)
        return GridSpec(self.T, N_t, self.space_lower, self.space_upper, N_x, phase, self.bc)


def cell_center(lower, upper, count, index):
    """Midpoint of cell ``index`` of ``count`` uniform cells on ``[lower, upper]``."""
    if not 0 <= index < count:
        raise IndexError(f"cell index {index} out of range 0..{count - 1}")
    h = (upper - lower) / count
    return lower + h * (index + 0.5)


def flatten(grid, j, k, l, q=None, n_omega=1):
    """Flat index of ``F[j, k, (q,) l]``; ``k`` and ``l`` may be multi-indices."""
    k = tuple(np.atleast_1d(k))
    l = tuple(np.atleast_1d(l))
    if len(k) != grid.d or len(l) != grid.n:
        raise IndexError("multi-index length does not match grid dimensions")
    if not 0 <= j < grid.N_t:
        raise IndexError(f"time index {j} out of range")
    if any(not 0 <= v < grid.N_x for v in k):
        raise IndexError(f"space index {k} out of range")
    if any(not 0 <= v < c for v, c in zip(l, grid.phase.N_xi)):
        raise IndexError(f"phase index {l} out of range")
    kk = int(np.ravel_multi_index(k, grid.space_shape))
    ll = int(np.ravel_multi_index(l, grid.phase.N_xi))
    qq = 0
    if q is not None:
        if not 0 <= q < n_omega:
            raise IndexError(f"collocation index {q} out of range")
        qq = q
    return ((j * grid.n_space + kk) * n_omega + qq) * grid.n_phase + ll


def unflatten(grid, index, n_omega=1):
    """Inverse of :func:`flatten`; returns ``(j, k, q, l)`` with tuple multi-indices."""
    total = grid.N_t * grid.n_space * n_omega * grid.n_phase
    if not 0 <= index < total:
        raise IndexError(f"flat index {index} out of range")
    rest, ll = divmod(index, grid.n_phase)
    rest, qq = divmod(rest, n_omega)
    j, kk = divmod(rest, grid.n_space)
    k = tuple(int(v) for v in np.unravel_index(kk, grid.space_shape))
    l = tuple(int(v) for v in np.unravel_index(ll, grid.phase.N_xi))
    return j, k, qq, l


def _axis_weights(value, lower, h, count, mode):
    """Indices and weights on one phase axis for a point mass at ``value``."""
    s = (value - lower) / h - 0.5                 # position in center coordinates
    snapped = np.round(s)
    s = np.where(np.abs(s - snapped) < 1e-10, snapped, s)
    if mode == "nearest":
        # cell containing the value; boundaries go to the lower cell
        cell = np.ceil((value - lower) / h) - 1.0
        cell = np.clip(cell, 0, count - 1).astype(int)
        return cell[:, None], np.ones((len(value), 1))
    lo = np.floor(s).astype(int)
    frac = s - lo
    inside = (lo >= 0) & (lo < count - 1)
    lo_c = np.clip(lo, 0, max(count - 2, 0))
    hi_c = np.minimum(lo_c + 1, count - 1)
    w_hi = np.where(inside, frac, np.where(s >= count - 1, 1.0, 0.0))
    if count == 1:
        w_hi = np.zeros_like(w_hi)
    return np.stack([lo_c, hi_c], axis=-1), np.stack([1.0 - w_hi, w_hi], axis=-1)


def dirac_init(u0_values, phase, mode="mean_preserving"):
    """Project point masses onto the phase grid.

    Parameters
    ----------
    u0_values : array, shape ``(K, n)`` (or ``(K,)`` when ``n == 1``)
        Initial state at each spatial cell center.
    phase : PhaseBox
    mode : {"mean_preserving", "nearest"}
        ``nearest`` puts all mass on the containing cell (ties go to the lower
        index). ``mean_preserving`` splits the mass between the two nearest
        cell centers per axis so the discrete mean reproduces the value;
        values beyond the outermost centers fall back to the outermost cell.

    Returns
    -------
    F0 : ndarray, shape ``(K, L)``
    """
    u = np.asarray(u0_values, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    K, n = u.shape
    if n != phase.n:
        raise InitializationError(f"initial state has {n} components, phase box has {phase.n}")
    lo, hi = np.asarray(phase.lower), np.asarray(phase.upper)
    bad = (u < lo) | (u > hi)
    if np.any(bad):
        k, comp = np.argwhere(bad)[0]
        raise InitializationError(
            f"u0 at spatial cell {k} component {comp} = {u[k, comp]:.6g} lies outside "
            f"the phase box [{lo[comp]}, {hi[comp]}]")
    if mode not in ("mean_preserving", "nearest"):
        raise ValueError(f"unknown initialization mode {mode!r}")
    h = phase.h
    idx, wts = [], []
    for i in range(n):
        a, b = _axis_weights(u[:, i], lo[i], h[i], phase.N_xi[i], mode)
        idx.append(a)
        wts.append(b)
    F0 = np.zeros((K, phase.size))
    rows = np.arange(K)
    # tensor product of per-axis splits
    for combo in np.ndindex(*[a.shape[1] for a in idx]):
        cell = tuple(idx[i][:, c] for i, c in enumerate(combo))
        w = np.ones(K)
        for i, c in enumerate(combo):
            w = w * wts[i][:, c]
        flat = np.ravel_multi_index(cell, phase.N_xi)
        np.add.at(F0, (rows, flat), w)
    return F0


def window_columns(phase, centers, radius):
    """Flat indices of a ``(2 radius + 1)^n`` box of phase cells per block.

    Parameters
    ----------
    centers : int array, shape ``(K,)``
        Flat phase index each box is centered on. Boxes touching the edge of
        the phase grid are shifted inward so every box has the same size.

    Returns
    -------
    ndarray, shape ``(K, W)``, sorted along axis 1.
    """
    counts = np.asarray(phase.N_xi)
    width = np.minimum(2 * int(radius) + 1, counts)
    multi = np.stack(np.unravel_index(np.asarray(centers), phase.N_xi), axis=-1)
    start = np.clip(multi - int(radius), 0, counts - width)
    offsets = np.stack(np.unravel_index(np.arange(int(np.prod(width))), tuple(width)), axis=-1)
    cells = start[:, None, :] + offsets[None]
    return np.ravel_multi_index(tuple(np.moveaxis(cells, -1, 0)), phase.N_xi)
