import numpy as np
import pytest
from hypothesis import given, strategies as st

from ymlp.grid import (OUTFLOW, PERIODIC, GridSpec, InitializationError, PhaseBox, cell_center,
                       dirac_init, flatten, unflatten, window_columns)


def small_grid(N_t=2, N_x=4, N_xi=2, d=1, n=1, bc=PERIODIC):
    phase = PhaseBox((0.0,) * n, (1.0,) * n, (N_xi,) * n)
    return GridSpec(1.0, N_t, (-3.0,) * d, (3.0,) * d, N_x, phase, bc)


def test_flatten_examples():
    g = small_grid(N_t=2, N_x=3, N_xi=4)
    assert flatten(g, 0, 0, 0) == 0
    g2 = small_grid(N_t=2, N_x=3, N_xi=3)
    assert flatten(g2, 0, 1, 2) == 5
    g3 = small_grid(N_t=2, N_x=3, N_xi=4)
    assert flatten(g3, 1, 2, 3) == 23


def test_flatten_rejects_out_of_range():
    g = small_grid()
    with pytest.raises(IndexError):
        flatten(g, 2, 0, 0)
    with pytest.raises(IndexError):
        flatten(g, 0, 4, 0)
    with pytest.raises(IndexError):
        flatten(g, 0, 0, (0, 0))


@pytest.mark.parametrize("d,n,Q", [(1, 1, 1), (2, 1, 1), (1, 2, 1), (2, 2, 3)])
def test_flatten_bijection(d, n, Q):
    g = small_grid(N_t=2, N_x=3, N_xi=3, d=d, n=n)
    total = g.N_t * g.n_space * Q * g.n_phase
    seen = set()
    for idx in range(total):
        j, k, q, l = unflatten(g, idx, Q)
        back = flatten(g, j, k, l, q if Q > 1 else None, Q)
        assert back == idx
        seen.add(back)
    assert len(seen) == total


def test_cell_centers():
    assert [cell_center(-3, 3, 3, i) for i in range(3)] == [-2.0, 0.0, 2.0]
    np.testing.assert_allclose(PhaseBox((0.0,), (1.0,), (2,)).axis_centers(0), [0.25, 0.75])
    g = small_grid(N_x=3)
    np.testing.assert_allclose(g.space_centers(), [-2.0, 0.0, 2.0])
    g = small_grid(N_t=4)
    assert g.time_interval(1) == (0.0, 0.25)
    with pytest.raises(IndexError):
        cell_center(0, 1, 2, 2)


def test_phase_box_validation():
    with pytest.raises(ValueError):
        PhaseBox((1.0,), (0.0,), (4,))
    with pytest.raises(ValueError):
        PhaseBox((0.0,), (1.0,), (0,))
    box = PhaseBox((0.105, 0.205), (1.805, 1.805), 10)
    assert box.N_xi == (10, 10) and box.size == 100


@pytest.mark.parametrize("mode", ["nearest", "mean_preserving"])
def test_dirac_at_center(mode):
    box = PhaseBox((0.0,), (1.0,), (8,))
    u0 = np.full(5, box.axis_centers(0)[3])
    F = dirac_init(u0, box, mode)
    np.testing.assert_array_equal(F, np.tile(np.eye(8)[3], (5, 1)))


def test_dirac_tie_and_split():
    box = PhaseBox((0.0,), (1.0,), (2,))
    np.testing.assert_array_equal(dirac_init([0.5], box, "nearest"), [[1.0, 0.0]])
    np.testing.assert_allclose(dirac_init([0.4], box, "mean_preserving"), [[0.7, 0.3]], atol=1e-15)


def test_dirac_outside_box():
    box = PhaseBox((0.0,), (1.0,), (4,))
    with pytest.raises(InitializationError, match="cell 1"):
        dirac_init([0.5, 1.5], box)


@given(st.lists(st.tuples(st.floats(0.105, 1.805), st.floats(0.205, 1.805)), min_size=1, max_size=20),
       st.integers(2, 12), st.integers(2, 12))
def test_mean_preserving_invariants(vals, n1, n2):
    box = PhaseBox((0.105, 0.205), (1.805, 1.805), (n1, n2))
    u = np.array(vals)
    F = dirac_init(u, box)
    assert np.all(F >= 0)
    np.testing.assert_allclose(F.sum(axis=1), 1.0, atol=1e-15)
    centers = box.centers()
    inside = np.all((u >= centers.min(0)) & (u <= centers.max(0)), axis=1)
    np.testing.assert_allclose((F @ centers)[inside], u[inside], atol=1e-14)


def test_window_columns():
    box = PhaseBox((0.0, 0.0), (1.0, 1.0), (6, 5))
    cols = window_columns(box, np.array([0, np.ravel_multi_index((3, 2), (6, 5))]), 1)
    assert cols.shape == (2, 9)
    first = {tuple(int(v) for v in np.unravel_index(c, (6, 5))) for c in cols[0]}
    assert first == {(i, j) for i in range(3) for j in range(3)}
    second = {tuple(int(v) for v in np.unravel_index(c, (6, 5))) for c in cols[1]}
    assert second == {(i, j) for i in (2, 3, 4) for j in (1, 2, 3)}
    assert window_columns(box, np.array([7]), 10).shape == (1, 30)


def test_grid_resolution_change():
    g = small_grid(bc=OUTFLOW).with_resolution(3, 5, 7)
    assert (g.N_t, g.N_x, g.phase.N_xi, g.bc) == (3, 5, (7,), OUTFLOW)
