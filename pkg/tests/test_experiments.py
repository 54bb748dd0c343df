import dataclasses
import json

import numpy as np
import pytest

from ymlp import experiments as ex
from ymlp.assembly import read_triplets
from ymlp.experiments import (ConfigError, ExperimentConfig, LpInfeasibleError, get_experiment,
                              initial_function, load_config, run_convergence, run_experiment)
from ymlp.model import PdeModel

PUBLISHED = {
    # name: (T, domain, phase lower, phase upper, resolution)
    "burgers-rarefaction": (1.0, (-3.0, 3.0), [-1.05], [2.05], (150, 200, 200)),
    "burgers-shock": (1.0, (-3.0, 3.0), [-1.05], [2.05], (150, 200, 200)),
    "burgers-compound": (0.4, (-3.0, 3.0), [-1.05], [3.05], (300, 400, 401)),
    "euler-degond-tang": (0.06, (0.0, 1.0), [0.105, 0.205], [1.805, 1.805], (200, 300, 151, 151)),
    "euler-acoustic": (0.01, (-1.0, 1.0), [0.805, -3.105], [1.205, 3.105], (50, 100, 51, 201)),
    "euler-riemann": (0.06, (0.0, 1.0), [0.505, -0.505], [3.505, 2.005], (180, 200, 201, 201)),
    "ac-interfaces": (0.02, (0.0, 1.0), [-0.75], [-0.55], (100, 50, 200)),
    "ac-square": (0.02, (-1.0, 1.0), [-1.05], [1.05], (150, 80, 100)),
}


def test_registry_matches_published_setups():
    assert set(ex.EXPERIMENTS) == set(PUBLISHED)
    for name, (T, dom, lo, hi, res) in PUBLISHED.items():
        c = get_experiment(name)
        assert c.T == T and (c.space_lower[0], c.space_upper[0]) == dom
        assert c.phase_lower == lo and c.phase_upper == hi
        assert c.resolution == res
    assert get_experiment("ac-square").model_params == {"alpha": 1.1}
    assert get_experiment("euler-degond-tang").initial["params"] == {"epsilon": 0.8}
    assert get_experiment("euler-degond-tang").scaled == [100, 150, 101, 101]


@pytest.mark.parametrize("name", sorted(PUBLISHED))
def test_initial_data_inside_phase_box(name):
    c = get_experiment(name)
    grid = c.build_grid()
    u = initial_function(c.initial, grid.n)(grid.space_points()[:, 0])
    assert np.all(u >= np.array(c.phase_lower)) and np.all(u <= np.array(c.phase_upper))


def test_initial_data_examples():
    dt = initial_function({"type": "named", "name": "euler-degond-tang", "params": {"epsilon": 0.8}}, 2)
    np.testing.assert_allclose(dt(np.array([0.1, 0.25, 0.5, 0.75])),
                               [[1.0, 0.68], [1.64, 1.0], [1.0, 1.32], [0.36, 1.0]])
    comp = initial_function({"type": "named", "name": "burgers-compound"}, 1)
    np.testing.assert_allclose(comp(np.array([-2.5, -0.75, -0.25, 0.25, 0.75, 1.5]))[:, 0],
                               [np.sin(-2.5 * np.pi), 3.0, 1.0, 3.0, 2.0, np.sin(1.5 * np.pi)])
    pw = initial_function({"type": "piecewise", "breaks": [0.0], "values": [1.0, 2.0]}, 1)
    np.testing.assert_array_equal(pw(np.array([-1.0, 0.0, 1.0]))[:, 0], [1.0, 2.0, 2.0])
    const = initial_function({"type": "constant", "value": [1.0, 0.5], "offset": 0.25}, 2)
    np.testing.assert_array_equal(const(np.zeros(3)), [[1.25, 0.75]] * 3)
    with pytest.raises(ConfigError):
        initial_function({"type": "spline"}, 1)
    with pytest.raises(ConfigError):
        initial_function({"type": "piecewise", "breaks": [1.0, 0.0], "values": [0, 1, 2]}, 1)


def test_config_roundtrip(tmp_path):
    c = get_experiment("euler-acoustic")
    path = tmp_path / "c.json"
    path.write_text(c.to_json())
    assert ExperimentConfig.from_json(path) == c
    path.write_text(json.dumps({"experiment": "burgers-shock", "N_t": 10, "N_x": 15, "N_xi": [10]}))
    d = load_config(str(path))
    assert d.resolution == (10, 15, 10) and d.name == "burgers-shock"


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        get_experiment("kdv")
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    base = get_experiment("burgers-shock").to_dict()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "colour": "red"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "solver": {"omega": 1}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "bc": "reflecting"})
    with pytest.raises(ConfigError):
        get_experiment("ac-square").level(1)


def _zero_flux_model():
    def flux(xi):
        xi = np.asarray(xi, dtype=float)
        return np.zeros(xi.shape + (1,))
    return PdeModel("still", 1, 1, flux, lambda xi: -np.asarray(xi)[..., 0] ** 2,
                    lambda xi: np.zeros(np.shape(xi)[:-1]), lambda xi: np.asarray(xi)[..., 0] ** 2)


def test_stationary_dirac(tmp_path):
    c = dataclasses.replace(get_experiment("burgers-shock"), N_t=1, N_x=5, N_xi=[10],
                            initial={"type": "constant", "value": -1.05 + 3.1 * 3.5 / 10},
                            reference=None)
    res = run_experiment(c, model=_zero_flux_model(), write=False)
    F0 = np.zeros((5, 10))
    F0[:, 3] = 1.0
    np.testing.assert_allclose(res.F, F0, atol=1e-7)


def test_infeasible_step_reports_step_and_box():
    c = dataclasses.replace(get_experiment("ac-interfaces"), N_t=3, N_x=4, N_xi=[20], reference=None,
                            initial={"type": "constant", "value": -0.745})
    with pytest.raises(LpInfeasibleError, match="time step 1.*phase box") as info:
        run_experiment(c, write=False)
    assert info.value.step == 1


def _small_shock():
    return get_experiment("burgers-shock").with_resolution(10, 15, 10)


def test_outputs_and_reproducibility(tmp_path):
    c = _small_shock()
    a = run_experiment(c, out_dir=tmp_path / "a")
    run_experiment(c, out_dir=tmp_path / "b")
    names = ["config.json", "F_final.csv", "u_final.csv", "E_hat_final.csv", "defect_final.csv",
             "totals.csv", "solver_log.csv", "errors.csv"]
    for nm in names:
        assert (tmp_path / "a" / nm).read_bytes() == (tmp_path / "b" / nm).read_bytes(), nm
    for fig in ("measure.png", "solution.png", "totals.png"):
        assert (tmp_path / "a" / fig).stat().st_size > 0
    header = (tmp_path / "a" / "u_final.csv").read_text().splitlines()[0]
    assert header == "t,x,u,u_ref"
    assert (tmp_path / "a" / "F_final.csv").read_text().startswith("x,xi,mass")
    assert a.F.shape == (15, 10)
    log = (tmp_path / "a" / "solver_log.csv").read_text().splitlines()
    assert len(log) == 11


def test_shock_first_level_error():
    res = run_experiment(_small_shock(), write=False)
    (L1, _), = res.errors(normalize=True)
    assert abs(L1 / 2.2612e-01 - 1) <= 0.3


def test_mass_and_positivity_every_step():
    res = run_experiment(get_experiment("burgers-compound").with_resolution(30, 40, 41), write=False)
    assert all(s["mass_error"] <= 1e-7 and s["balance_error"] <= 1e-7 for s in res.steps)
    assert all(s["min_F"] >= 0 and s["positivity_violations"] == 0 for s in res.steps)
    np.testing.assert_allclose(res.F.sum(axis=1), 1.0, atol=1e-12)
    tot = res.totals()["u0"]
    assert np.abs(tot - tot[0]).max() <= 1e-7


def test_window_does_not_change_result():
    c = get_experiment("burgers-rarefaction").with_resolution(20, 30, 20)
    a = run_experiment(c, write=False)
    b = run_experiment(dataclasses.replace(c, window=0), write=False)
    np.testing.assert_allclose(a.u_final, b.u_final, atol=1e-6)


def test_convergence_identical_levels(tmp_path):
    rows = run_convergence(_small_shock(), resolutions=[(10, 15, 10)] * 2, out_dir=tmp_path)
    assert rows[1].L1_rate == 0.0
    assert (tmp_path / "convergence.csv").exists() and (tmp_path / "convergence.png").exists()
    with pytest.raises(ConfigError):
        run_convergence(_small_shock(), levels=1)


def test_convergence_parallel_matches_serial():
    c = _small_shock()
    serial = run_convergence(c, levels=2, write=False)
    parallel = run_convergence(c, levels=2, jobs=2, write=False)
    assert [r.L1 for r in serial] == [r.L1 for r in parallel]


def test_export_lp(tmp_path):
    step = ex.export_lp(_small_shock(), tmp_path / "lp.txt")
    M, c, Xi = read_triplets(tmp_path / "lp.txt")
    assert M.shape == step.M.shape and len(c) == M.shape[0] and len(Xi) == M.shape[1]
