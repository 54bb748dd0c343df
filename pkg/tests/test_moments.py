import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ymlp.assembly import phase_coefficients
from ymlp.grid import PERIODIC, GridSpec, PhaseBox, dirac_init
from ymlp.model import allen_cahn_model, barotropic_euler_model, burgers_model, cell_average, double_well
from ymlp.moments import (MomentReport, allen_cahn_energies, energy_defect, mean_field, totals,
                          write_field_csv, write_totals_csv)


def burgers_setup(lo=-1.05, hi=2.05, N_xi=31, N_x=6):
    grid = GridSpec(1.0, 4, (-3.0,), (3.0,), N_x, PhaseBox((lo,), (hi,), (N_xi,)), PERIODIC)
    return grid, phase_coefficients(burgers_model(), grid)


def test_mean_field_examples():
    grid, co = burgers_setup()
    F = np.eye(31)[[0, 7, 30]]
    np.testing.assert_allclose(mean_field(F, co)[:, 0], co.u_bar[[0, 7, 30], 0])
    grid, co = burgers_setup(-1.5, 1.5, 3)
    F = np.array([[0.5, 0.0, 0.5]])
    assert mean_field(F, co)[0, 0] == pytest.approx(0.0, abs=1e-15)
    grid, co = burgers_setup(0.0, 1.0, 10)
    assert mean_field(np.full((1, 10), 0.1), co)[0, 0] == pytest.approx(0.5)


def test_point_mass_defect_is_cell_variance():
    grid, co = burgers_setup()
    h = grid.phase.h[0]
    _, defect = energy_defect(np.eye(31), co, burgers_model())
    np.testing.assert_allclose(defect, h * h / 12.0, rtol=1e-10)


def test_two_cell_defect():
    h = 0.2
    grid, co = burgers_setup(-1.0 - h / 2, 1.0 + h / 2, 11)
    F = np.zeros((1, 11))
    F[0, 0] = F[0, 10] = 0.5
    E_hat, defect = energy_defect(F, co, burgers_model())
    assert mean_field(F, co)[0, 0] == pytest.approx(0.0, abs=1e-14)
    assert E_hat[0] == pytest.approx(1.0 + h * h / 12.0)
    assert defect[0] == pytest.approx(1.0 + h * h / 12.0)


def test_euler_dirac_defect_bounded_by_curvature():
    phase = PhaseBox((0.105, 0.205), (1.805, 1.805), (17, 17))
    grid = GridSpec(0.06, 10, (0.0,), (1.0,), 4, phase, PERIODIC)
    model = barotropic_euler_model(2.0)
    co = phase_coefficients(model, grid)
    _, defect = energy_defect(np.eye(phase.size), co, model)
    lo, hi = phase.cells()
    # Hessian of e = m^2/(2 rho) + rho^2: diagonal entries bound the cell variance term
    rho_min = lo[:, 0]
    m_max = np.maximum(np.abs(lo[:, 1]), np.abs(hi[:, 1]))
    e_rr = m_max**2 / rho_min**3 + 2.0
    e_mm = 1.0 / rho_min
    h = phase.h
    bound = (e_rr * h[0] ** 2 + e_mm * h[1] ** 2) / 24.0 + np.abs(m_max / rho_min**2) * h[0] * h[1] / 12
    assert np.all(defect >= -1e-12)
    assert np.all(defect <= bound + 1e-12)


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1))
def test_defect_nonnegative_for_convex_energy(seed):
    rng = np.random.default_rng(seed)
    grid, co = burgers_setup()
    F = rng.dirichlet(np.full(31, 0.3), size=5)
    _, defect = energy_defect(F, co, burgers_model())
    assert np.all(defect >= -1e-10)
    phase = PhaseBox((0.105, 0.205), (1.805, 1.805), (6, 7))
    model = barotropic_euler_model(2.0)
    eco = phase_coefficients(model, GridSpec(0.06, 10, (0.0,), (1.0,), 5, phase, PERIODIC))
    G = rng.dirichlet(np.full(42, 0.3), size=5)
    _, d2 = energy_defect(G, eco, model)
    assert np.all(d2 >= -1e-10)


def test_energy_average_quadrature_orders_agree():
    e = barotropic_euler_model(2.0).energy
    errs = []
    for N in (10, 20):
        lo, hi = PhaseBox((0.105, 0.205), (1.805, 1.805), (N, N)).cells()
        errs.append(np.abs(cell_average(e, lo, hi, 3) / cell_average(e, lo, hi, 10) - 1).max())
    assert errs[0] < 1e-3
    # high-order rule; near the vacuum edge 1/rho keeps it pre-asymptotic
    assert errs[0] / errs[1] > 10
    lo, hi = PhaseBox((0.105, 0.205), (1.805, 1.805), (10, 10)).cells()
    b = burgers_model().energy
    np.testing.assert_allclose(cell_average(b, lo[:, :1], hi[:, :1], 2),
                               cell_average(b, lo[:, :1], hi[:, :1], 6), rtol=1e-14)


def ac_setup(N_x=8, N_xi=21):
    phase = PhaseBox((-1.05,), (1.05,), (N_xi,))
    grid = GridSpec(0.02, 100, (0.0,), (2 * np.pi,), N_x, phase, PERIODIC)
    return grid, phase_coefficients(allen_cahn_model(1.1), grid)


def test_allen_cahn_constant_field():
    grid, co = ac_setup()
    F = np.tile(dirac_init([0.3], grid.phase)[0], (8, 1))
    en = allen_cahn_energies(F, co, grid, 1.1)
    u = (F @ co.u_bar)[:, 0]
    np.testing.assert_allclose(en.E, double_well(u))
    np.testing.assert_allclose(en.E_hat - en.E_hat_grad_u, 0.0, atol=1e-15)


def test_allen_cahn_point_mass_at_one():
    grid, co = ac_setup()
    cell = int(np.argmin(np.abs(co.u_bar[:, 0] - 1.0)))
    F = np.tile(np.eye(21)[cell], (8, 1))
    en = allen_cahn_energies(F, co, grid, 1.1)
    lo, hi = grid.phase.cells()
    G_avg = cell_average(lambda x: double_well(x[..., 0]), lo[cell], hi[cell])
    np.testing.assert_allclose(en.E_hat, G_avg, atol=1e-15)
    assert np.all(np.abs(en.E) < 1e-15)


def test_allen_cahn_regularization_vanishes_at_zero():
    grid, co = ac_setup()
    F = np.tile(np.eye(21)[10], (8, 1))
    en = allen_cahn_energies(F, co, grid, 1.1)
    np.testing.assert_allclose(en.E_RE - en.E, 0.0, atol=1e-15)


def test_allen_cahn_gradient_terms():
    grid, co = ac_setup(N_x=16)
    x = grid.space_centers()
    F = dirac_init(0.5 * np.sin(x), grid.phase)
    en = allen_cahn_energies(F, co, grid, 1.1)
    u = (F @ co.u_bar)[:, 0]
    h = grid.hx[0]
    grad = (np.roll(u, -1) - np.roll(u, 1)) / (2 * h)
    np.testing.assert_allclose(en.E - double_well(u), 0.5 * grad**2)
    gF = (np.roll(F, -1, 0) - np.roll(F, 1, 0)) / (2 * h)
    np.testing.assert_allclose(en.E_hat - F @ cell_average(
        lambda z: double_well(z[..., 0]), *grid.phase.cells()), 0.5 * (gF**2).sum(1) / grid.phase.h[0])


def test_totals_examples():
    grid, _ = burgers_setup(N_x=30)
    assert totals(np.ones(30), grid) == pytest.approx(6.0)
    assert totals(np.zeros(30), grid) == 0.0
    v = np.random.default_rng(0).normal(size=(3, 30))
    np.testing.assert_allclose(totals(2 * v, grid), 2 * totals(v, grid))


def test_report_and_csv(tmp_path):
    grid, co = burgers_setup()
    F = dirac_init(np.linspace(-1, 2, 6), grid.phase)
    u = mean_field(F, co)
    E_hat, defect = energy_defect(F, co, burgers_model())
    rep = MomentReport(np.array([0.0]), grid.space_centers(), u[None], E_hat[None], defect[None],
                       {"extra": defect[None]})
    tot = rep.totals(grid)
    assert set(tot) == {"E_hat", "defect", "u0", "extra"}
    write_field_csv(tmp_path / "e.csv", [0.0], grid.space_centers(), E_hat[None], "E_hat")
    rows = (tmp_path / "e.csv").read_text().splitlines()
    assert rows[0] == "t,x,E_hat" and len(rows) == 7
    write_totals_csv(tmp_path / "t.csv", [0.0], tot)
    assert (tmp_path / "t.csv").read_text().startswith("t,E_hat,defect,u0,extra")
