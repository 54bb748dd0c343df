"""Experiment configuration, the named experiments and the per-step LP chain.

A run marches ``F^0 -> F^1 -> ... -> F^{N_t}``, solving one block LP per
time level, and records the mean field, energies and conservation residuals
along the way.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import moments, reference
from .assembly import (CollocationSpec, assemble_collocation_step, assemble_step,
                       collocation_rule, phase_coefficients)
from .grid import OUTFLOW, PERIODIC, GridSpec, PhaseBox, dirac_init, window_columns
from .ipm import IpmOptions, solve_lp_blocks, solve_lp_windowed
from .model import PdeModel, make_model

log = logging.getLogger(__name__)

OUTPUT_ENV = "YMLP_OUTPUT_ROOT"

# solver settings used for every experiment unless a config overrides them
EXPERIMENT_SOLVER = {"tol_p": 1e-9, "tol_d": 1e-9, "tol_gap": 1e-9,
                     "predictor_corrector": True, "start": "mehrotra"}


class ConfigError(ValueError):
    pass


class LpInfeasibleError(RuntimeError):
    """The step LP had no acceptable solution."""

    def __init__(self, step, detail, phase):
        self.step = step
        box = ", ".join(f"[{lo}, {hi}]" for lo, hi in zip(phase.lower, phase.upper))
        super().__init__(
            f"LP at time step {step} failed ({detail}); the transported moments may have "
            f"left the phase box {box}. Try enlarging the phase box.")


# ---------------------------------------------------------------- initial data

def _rarefaction(x):
    return np.where(x < 0.0, -1.0, 2.0)


def _shock(x):
    return np.where(x < 0.0, 2.0, -1.0)


def _compound(x):
    u = np.sin(np.pi * x)
    u = np.where(((x > -1.0) & (x <= -0.5)) | ((x > 0.0) & (x <= 0.5)), 3.0, u)
    u = np.where((x > -0.5) & (x <= 0.0), 1.0, u)
    return np.where((x > 0.5) & (x <= 1.0), 2.0, u)


def _degond_tang(x, epsilon=0.8):
    e2 = epsilon**2
    rho = np.ones_like(x)
    m = np.full_like(x, 1.0 - 0.5 * e2)
    a = (x > 0.2) & (x <= 0.3)
    b = (x > 0.3) & (x <= 0.7)
    c = (x > 0.7) & (x < 0.8)
    rho = np.where(a, 1.0 + e2, np.where(c, 1.0 - e2, rho))
    m = np.where(a | c, 1.0, np.where(b, 1.0 + 0.5 * e2, m))
    return np.stack([rho, m], axis=-1)


def _acoustic(x, epsilon=0.1):
    wave = 1.0 - np.cos(2.0 * np.pi * x)
    rho = 0.955 + 0.5 * epsilon * wave
    vel = -np.sign(x) * np.sqrt(2.0) * wave
    return np.stack([rho, rho * vel], axis=-1)


def _euler_riemann(x):
    return np.stack([np.where(x < 0.5, 3.0, 1.0), np.zeros_like(x)], axis=-1)


def _interfaces(x):
    s = np.sqrt(2.0)
    return np.tanh((x - 0.25) / s) - np.tanh((x - 0.75) / s) - 1.0


def _square(x):
    return np.where(np.abs(x) < 0.5, 1.0, -1.0)


INITIAL_DATA = {
    "burgers-rarefaction": _rarefaction,
    "burgers-shock": _shock,
    "burgers-compound": _compound,
    "euler-degond-tang": _degond_tang,
    "euler-acoustic": _acoustic,
    "euler-riemann": _euler_riemann,
    "ac-interfaces": _interfaces,
    "ac-square": _square,
}


def initial_function(spec, n):
    """Callable ``u0(x) -> (K, n)`` from an initial-data spec.

    Spec types: ``named`` (``name``, optional ``params``), ``constant``
    (``value``), ``piecewise`` (``breaks`` ascending, ``values`` one per
    interval; a point on a break takes the value to its right). An optional
    ``offset`` is added to every component.
    """
    kind = spec.get("type")
    if kind == "named":
        fn = INITIAL_DATA.get(spec.get("name"))
        if fn is None:
            raise ConfigError(f"unknown initial data {spec.get('name')!r}")
        params = spec.get("params", {})
        raw = lambda x: fn(x, **params)
    elif kind == "constant":
        value = np.atleast_1d(np.asarray(spec["value"], dtype=float))
        raw = lambda x: np.broadcast_to(value, x.shape + (len(value),)).copy()
    elif kind == "piecewise":
        breaks = np.asarray(spec["breaks"], dtype=float)
        values = np.asarray(spec["values"], dtype=float).reshape(len(breaks) + 1, -1)
        if np.any(np.diff(breaks) <= 0):
            raise ConfigError("piecewise breaks must be strictly increasing")
        raw = lambda x: values[np.searchsorted(breaks, x, side="right")]
    else:
        raise ConfigError(f"unknown initial data type {kind!r}")

    def u0(x):
        vals = np.asarray(raw(np.asarray(x, dtype=float)), dtype=float)
        return vals.reshape(len(x), n) + offset
    offset = np.asarray(spec.get("offset", 0.0), dtype=float)
    return u0


# ---------------------------------------------------------------- configuration

@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run. Serialized as JSON (see :meth:`to_json`)."""

    name: str
    model: str
    T: float
    space_lower: list
    space_upper: list
    bc: str
    N_t: int
    N_x: int
    N_xi: list
    phase_lower: list
    phase_upper: list
    initial: dict
    model_params: dict = field(default_factory=dict)
    collocation: Optional[dict] = None
    solver: dict = field(default_factory=lambda: dict(EXPERIMENT_SOLVER))
    init_mode: str = "mean_preserving"
    eps_rule: str = "max"
    renormalize: bool = True
    reference: Optional[dict] = None
    convergence_base: Optional[list] = None
    scaled: Optional[list] = None
    record_every: int = 1
    window: int = 2
    output_dir: Optional[str] = None

    def __post_init__(self):
        self.N_xi = [int(v) for v in np.atleast_1d(self.N_xi)]
        self.phase_lower = [float(v) for v in np.atleast_1d(self.phase_lower)]
        self.phase_upper = [float(v) for v in np.atleast_1d(self.phase_upper)]
        self.space_lower = [float(v) for v in np.atleast_1d(self.space_lower)]
        self.space_upper = [float(v) for v in np.atleast_1d(self.space_upper)]
        if self.bc not in (PERIODIC, OUTFLOW):
            raise ConfigError(f"unknown boundary condition {self.bc!r}")
        if len(self.N_xi) == 1 and len(self.phase_lower) > 1:
            self.N_xi = self.N_xi * len(self.phase_lower)
        if not (len(self.N_xi) == len(self.phase_lower) == len(self.phase_upper)):
            raise ConfigError("phase box bounds and N_xi disagree in dimension")
        unknown = set(self.solver) - {f.name for f in dataclasses.fields(IpmOptions)}
        if unknown:
            raise ConfigError(f"unknown solver options {sorted(unknown)}")

    # -- resolution helpers
    @property
    def resolution(self):
        return (self.N_t, self.N_x) + tuple(self.N_xi)

    def with_resolution(self, N_t, N_x, *N_xi):
        N_xi = list(N_xi) if len(N_xi) > 1 else [N_xi[0]] * len(self.N_xi)
        return dataclasses.replace(self, N_t=int(N_t), N_x=int(N_x), N_xi=[int(v) for v in N_xi])

    def level(self, i):
        """Resolution ``convergence_base * 2^i``."""
        if self.convergence_base is None:
            raise ConfigError(f"experiment {self.name!r} has no convergence base resolution")
        return self.with_resolution(*(v * 2**i for v in self.convergence_base))

    # -- construction of the numerical objects
    def build_model(self):
        return make_model(self.model, **self.model_params)

    def build_grid(self):
        phase = PhaseBox(tuple(self.phase_lower), tuple(self.phase_upper), tuple(self.N_xi))
        return GridSpec(self.T, self.N_t, tuple(self.space_lower), tuple(self.space_upper),
                        self.N_x, phase, self.bc)

    def build_collocation(self):
        if not self.collocation:
            return None
        c = self.collocation
        return collocation_rule(c.get("m", 1), c.get("n_per_axis", 2), c.get("family", "uniform"),
                                c.get("lower", -1.0), c.get("upper", 1.0),
                                c.get("mean", 0.0), c.get("std", 1.0))

    def solver_options(self):
        return IpmOptions(**self.solver)

    # -- serialization
    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        if "experiment" in data:
            # a named experiment with overrides
            base = get_experiment(data.pop("experiment")).to_dict()
            base.update(data)
            data = base
        return cls.from_dict(data)


def _burgers(name, T, lower, upper, bc, N, box):
    kind = name.split("-")[1]
    ref = {"type": "exact", "problem": kind} if kind in ("rarefaction", "shock") else \
        {"type": "fv", "N_t": 2000, "N_x": 1000}
    return ExperimentConfig(
        name=name, model="burgers", T=T, space_lower=[lower], space_upper=[upper], bc=bc,
        N_t=N[0], N_x=N[1], N_xi=[N[2]], phase_lower=[box[0]], phase_upper=[box[1]],
        initial={"type": "named", "name": name}, reference=ref,
        convergence_base=[10, 15, 10] if kind in ("rarefaction", "shock") else None)


def _euler(name, T, lower, upper, bc, N, rho_box, m_box, params=None, scaled=None):
    return ExperimentConfig(
        name=name, model="barotropic-euler", model_params={"gamma": 2.0}, T=T,
        space_lower=[lower], space_upper=[upper], bc=bc, N_t=N[0], N_x=N[1], N_xi=[N[2], N[3]],
        phase_lower=[rho_box[0], m_box[0]], phase_upper=[rho_box[1], m_box[1]],
        initial={"type": "named", "name": name, "params": params or {}},
        reference={"type": "fv", "N_t": 2000, "N_x": 1000}, scaled=scaled)


def _allen_cahn(name, lower, upper, N, box):
    return ExperimentConfig(
        name=name, model="allen-cahn", model_params={"alpha": 1.1}, T=0.02,
        space_lower=[lower], space_upper=[upper], bc=PERIODIC, N_t=N[0], N_x=N[1], N_xi=[N[2]],
        phase_lower=[box[0]], phase_upper=[box[1]], initial={"type": "named", "name": name},
        reference={"type": "fv", "N_t": 100000, "N_x": 1000})


def _registry():
    return {
        "burgers-rarefaction": _burgers("burgers-rarefaction", 1.0, -3.0, 3.0, OUTFLOW,
                                        (150, 200, 200), (-1.05, 2.05)),
        "burgers-shock": _burgers("burgers-shock", 1.0, -3.0, 3.0, OUTFLOW,
                                  (150, 200, 200), (-1.05, 2.05)),
        "burgers-compound": _burgers("burgers-compound", 0.4, -3.0, 3.0, PERIODIC,
                                     (300, 400, 401), (-1.05, 3.05)),
        "euler-degond-tang": _euler("euler-degond-tang", 0.06, 0.0, 1.0, PERIODIC,
                                    (200, 300, 151, 151), (0.105, 1.805), (0.205, 1.805),
                                    {"epsilon": 0.8}, scaled=[100, 150, 101, 101]),
        "euler-acoustic": _euler("euler-acoustic", 0.01, -1.0, 1.0, PERIODIC,
                                 (50, 100, 51, 201), (0.805, 1.205), (-3.105, 3.105),
                                 {"epsilon": 0.1}),
        "euler-riemann": _euler("euler-riemann", 0.06, 0.0, 1.0, OUTFLOW,
                                (180, 200, 201, 201), (0.505, 3.505), (-0.505, 2.005)),
        "ac-interfaces": _allen_cahn("ac-interfaces", 0.0, 1.0, (100, 50, 200), (-0.75, -0.55)),
        "ac-square": _allen_cahn("ac-square", -1.0, 1.0, (150, 80, 100), (-1.05, 1.05)),
    }


EXPERIMENTS = tuple(_registry())


def get_experiment(name):
    """Fresh copy of a named experiment's configuration."""
    reg = _registry()
    if name not in reg:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(reg)}")
    return reg[name]


def load_config(name_or_path):
    if name_or_path in EXPERIMENTS:
        return get_experiment(name_or_path)
    if os.path.exists(name_or_path):
        return ExperimentConfig.from_json(name_or_path)
    raise ConfigError(f"{name_or_path!r} is neither a named experiment nor a config file")


def output_root():
    return Path(os.environ.get(OUTPUT_ENV, "results"))


# ---------------------------------------------------------------- the run

@dataclass
class RunResult:
    config: ExperimentConfig
    grid: GridSpec
    coeffs: object
    F: np.ndarray                 # (K, Q*L) at the final time
    t: np.ndarray                 # recorded time levels
    u: np.ndarray                 # (J, K, n)
    E_hat: np.ndarray             # (J, K)
    defect: np.ndarray            # (J, K)
    steps: list                   # per-step solver and conservation records
    extras: dict = field(default_factory=dict)
    n_omega: int = 1
    seconds: float = 0.0
    model: Optional[PdeModel] = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def u_final(self):
        return self.u[-1]

    def totals(self):
        return moments.MomentReport(self.t, self.grid.space_points(), self.u, self.E_hat,
                                    self.defect, self.extras).totals(self.grid)

    def reference_solution(self):
        if "reference" not in self._cache:
            self._cache["reference"] = reference_for(self.config, self.grid, self.model)
        return self._cache["reference"]

    def errors(self, normalize=False):
        """``(L1, L2)`` per component of ``u(T)`` against the configured reference."""
        ref = self.reference_solution()
        if ref is None:
            return None
        return [reference.error_norms(self.u_final[:, i], ref[:, i], self.grid, normalize=normalize)
                for i in range(self.grid.n)]


def _model_for(config, model):
    return model if model is not None else config.build_model()


def reference_for(config, grid, model=None):
    """Reference mean field at the final time, sampled at the LP cell centers."""
    spec = config.reference
    if not spec:
        return None
    x = grid.space_centers()
    if spec["type"] == "exact":
        return reference.burgers_exact(spec["problem"], x, config.T)[:, None]
    if spec["type"] == "fv":
        model = _model_for(config, model)
        u0 = initial_function(config.initial, model.n)
        sol = reference.fv_reference(model, u0, config.T, config.space_lower[0],
                                     config.space_upper[0], spec["N_t"], spec["N_x"], config.bc)
        period = config.space_upper[0] - config.space_lower[0]
        return sol.sample(x, periodic=config.bc == PERIODIC, period=period)
    raise ConfigError(f"unknown reference type {spec['type']!r}")


def _renormalize(F, P_mass, target):
    """Clip negatives and rescale each normalization group to its target mass."""
    F = np.maximum(F, 0.0)
    sums = F @ P_mass.T                                            # (K, groups)
    scale = np.divide(target, sums, out=np.ones_like(sums), where=sums > 0)
    return F * (scale @ P_mass)


def _windows(P_unit, rhs_unit, phase, radius):
    """Column windows around the phase cell whose column best matches each block's target."""
    mass = np.where(rhs_unit[:, :1] > 0, rhs_unit[:, :1], 1.0)
    point = rhs_unit / mass
    # squared distance |P_l - point|^2 without forming the (K, w, r) difference
    d2 = (P_unit * P_unit).sum(axis=0)[None] - 2.0 * point @ P_unit
    return window_columns(phase, d2.argmin(axis=1), radius)


def run_experiment(config, model=None, write=True, out_dir=None, progress=False):
    """Run the per-step LP chain of ``config``.

    Parameters
    ----------
    model : PdeModel, optional
        Overrides the model named in the config (e.g. for custom test models).
    write : bool
        Write CSV outputs and figures to ``out_dir`` (default
        ``$YMLP_OUTPUT_ROOT/<name>``).
    """
    t_start = time.perf_counter()
    model = _model_for(config, model)
    grid = config.build_grid()
    coeffs = phase_coefficients(model, grid, eps_rule=config.eps_rule)
    colloc = config.build_collocation()
    u0 = initial_function(config.initial, model.n)
    x = grid.space_points()
    if colloc is None:
        step = assemble_step(model, grid, coeffs)
        F = dirac_init(u0(x[:, 0]), grid.phase, config.init_mode)
    else:
        norm = config.collocation.get("normalization", "joint")
        amp = np.asarray(config.collocation.get("amplitude", 0.0), dtype=float)
        # u0(x, omega) = u0(x) + amplitude * omega
        u0_random = lambda xs, w: u0(xs[:, 0]) + amp * np.sum(w)
        step = assemble_collocation_step(model, grid, colloc, coeffs, norm)
        from .assembly import collocation_init
        F = collocation_init(u0_random, grid, colloc, config.init_mode)
        F = F.reshape(grid.n_space, -1)
    Q = step.n_omega
    K, w = F.shape
    P = step.block_rows()
    groups = step.A.shape[0] // step.n_blocks
    P_mass = P[:groups]
    target = step.mass[:groups][None, :]
    Xi = step.Xi[:w]
    opts = config.solver_options()
    # normalized column coordinates, used to place the column windows
    scale = np.ptp(P, axis=1)
    scale[scale == 0] = 1.0
    P_unit = P / scale[:, None]

    def observe(F):
        u = moments.mean_field(F, coeffs, Q)
        E_hat, defect = moments.energy_defect(F, coeffs, model, Q)
        return u, E_hat, defect

    ac = model.has_laplacian and grid.bc == PERIODIC and Q == 1
    ac_fields = ("E", "E_hat", "E_RE", "E_hat_RE", "defect", "defect_RE",
                 "E_hat_grad_u", "E_hat_RE_grad_u", "defect_grad_u", "defect_RE_grad_u")
    alpha = model.param("alpha")
    ts, us, Es, Ds = [], [], [], []
    extras = {}

    def record(j, F):
        u, E_hat, defect = observe(F)
        ts.append(j * grid.dt)
        us.append(u)
        Es.append(E_hat)
        Ds.append(defect)
        if ac:
            en = moments.allen_cahn_energies(F, coeffs, grid, alpha)
            for key in ac_fields:
                extras.setdefault(f"ac_{key}", []).append(getattr(en, key))

    record(0, F)
    h_tot = float(np.prod(grid.hx))
    steps = []
    for j in range(1, grid.N_t + 1):
        rhs = step.block_rhs(F.ravel())
        if config.window > 0 and Q == 1:
            cols = _windows(P_unit, rhs / scale, grid.phase, config.window)
            sol, fallbacks = solve_lp_windowed(Xi, P, rhs, cols, opts)
        else:
            sol, fallbacks = solve_lp_blocks(Xi, P, rhs, opts), 0
        if not sol.ok:
            bad = [s for s in sol.status if s != "optimal"]
            raise LpInfeasibleError(j, f"{len(bad)} of {K} cell LPs not optimal, e.g. {bad[0]}",
                                    grid.phase)
        mass_err = float(np.abs(sol.F @ P_mass.T - target).max())
        F_new = _renormalize(sol.F, P_mass, target) if config.renormalize else sol.F
        # discrete balance sum_k u^{j+1} = sum_k u^j - dt sum_k R.F^j (zero source without reaction)
        u_prev = moments.mean_field(F, coeffs, Q).sum(axis=0)
        source = grid.dt * (F.reshape(K, Q, -1) @ coeffs.reaction_bar).sum(axis=(0, 1)) \
            if model.reaction is not None else 0.0
        u_next = moments.mean_field(F_new, coeffs, Q).sum(axis=0)
        balance = float(np.abs(u_next - u_prev + source).max())
        steps.append({"step": j, "iterations": int(sol.iterations),
                      "rp": float(sol.rp_norm.max()), "rd": float(sol.rd_norm.max()),
                      "mu": float(sol.mu.max()), "mass_error": mass_err,
                      "balance_error": balance, "balance_error_h": balance * h_tot,
                      "min_F": float(sol.F.min()),
                      "positivity_violations": int(sol.positivity_violations),
                      "window_fallbacks": int(fallbacks)})
        F = F_new
        if j % config.record_every == 0 or j == grid.N_t:
            record(j, F)
        if progress and (j % max(1, grid.N_t // 10) == 0):
            log.info("%s: step %d/%d, %d IPM iterations", config.name, j, grid.N_t, sol.iterations)

    result = RunResult(config, grid, coeffs, F, np.array(ts), np.array(us), np.array(Es),
                       np.array(Ds), steps, {k: np.array(v) for k, v in extras.items()}, Q,
                       time.perf_counter() - t_start, model)
    if write:
        write_run(result, out_dir or output_root() / config.name)
    return result


# ---------------------------------------------------------------- outputs

def _fmt(v):
    return repr(float(v))


def write_run(result, out_dir, figures=True, threshold=1e-10):
    """CSV outputs of a run; figures go next to them when matplotlib is usable."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, cfg = result.grid, result.config
    x = grid.space_points()
    names = ["rho", "m"] if cfg.model == "barotropic-euler" else \
        [f"u{i}" for i in range(grid.n)] if grid.n > 1 else ["u"]

    with open(out / "config.json", "w") as fh:
        fh.write(cfg.to_json() + "\n")

    # F at the final time: (x, [node,] xi..., mass), entries above the threshold
    centers = grid.phase.centers()
    Q = result.n_omega
    Fk = result.F.reshape(grid.n_space, Q, -1)
    with open(out / "F_final.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        xi_cols = [f"xi{i}" for i in range(grid.n)] if grid.n > 1 else ["xi"]
        wr.writerow(["x"] + (["node"] if Q > 1 else []) + xi_cols + ["mass"])
        for k, q, l in zip(*np.nonzero(Fk > threshold)):
            wr.writerow([_fmt(x[k, 0])] + ([int(q)] if Q > 1 else [])
                        + [_fmt(v) for v in centers[l]] + [_fmt(Fk[k, q, l])])

    ref = result.reference_solution()
    with open(out / "u_final.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "x"] + names + ([f"{nm}_ref" for nm in names] if ref is not None else []))
        for k in range(grid.n_space):
            row = [_fmt(result.t[-1]), _fmt(x[k, 0])] + [_fmt(v) for v in result.u_final[k]]
            if ref is not None:
                row += [_fmt(v) for v in ref[k]]
            wr.writerow(row)
    moments.write_field_csv(out / "E_hat_final.csv", result.t[-1:], x, result.E_hat[-1:], "E_hat")
    moments.write_field_csv(out / "defect_final.csv", result.t[-1:], x, result.defect[-1:], "defect")

    series = result.totals()
    moments.write_totals_csv(out / "totals.csv", result.t, series)

    keys = ["step", "iterations", "rp", "rd", "mu", "mass_error", "balance_error",
            "balance_error_h", "min_F", "positivity_violations", "window_fallbacks"]
    with open(out / "solver_log.csv", "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=keys)
        wr.writeheader()
        for row in result.steps:
            wr.writerow({k: (_fmt(v) if isinstance(v, float) else v) for k, v in row.items()})

    if ref is not None:
        with open(out / "errors.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["component", "L1", "L2", "L1_mean", "L2_mean", "Linf"])
            raw, mean = result.errors(False), result.errors(True)
            for i, nm in enumerate(names):
                linf = float(np.abs(result.u_final[:, i] - ref[:, i]).max())
                wr.writerow([nm, _fmt(raw[i][0]), _fmt(raw[i][1]), _fmt(mean[i][0]),
                             _fmt(mean[i][1]), _fmt(linf)])
    if figures:
        from . import plotting
        plotting.plot_run(result, out, ref=ref, names=names)
    return out


# ---------------------------------------------------------------- convergence

def _error_at(config):
    res = run_experiment(config, write=False)
    (L1, L2), = res.errors(normalize=True)[:1]
    return config.resolution, L1, L2


def run_convergence(config, levels=5, resolutions=None, jobs=1, out_dir=None, write=True):
    """Error table over a doubling sequence (or explicit ``resolutions``).

    Errors are domain-averaged norms ``L1/|Omega|`` and ``L2/|Omega|^(1/2)``
    of the first solution component at the final time.
    """
    if resolutions is None:
        if levels < 2:
            raise ConfigError("a convergence study needs at least two levels")
        configs = [config.level(i) for i in range(levels)]
    else:
        if len(resolutions) < 2:
            raise ConfigError("a convergence study needs at least two resolutions")
        configs = [config.with_resolution(*r) for r in resolutions]
    if config.reference is None:
        raise ConfigError(f"experiment {config.name!r} has no reference solution")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_error_at, configs))
    else:
        runs = [_error_at(c) for c in configs]
    rows = reference.convergence_table(runs)
    if write:
        out = Path(out_dir or output_root() / config.name)
        out.mkdir(parents=True, exist_ok=True)
        reference.write_convergence_csv(out / "convergence.csv", rows)
        from . import plotting
        plotting.plot_convergence(rows, out / "convergence.png", config.name)
    return rows


def export_lp(config, path, model=None):
    """Write the step LP (matrix, right-hand side from ``F^0``, objective) as triplets."""
    from .assembly import write_triplets
    model = _model_for(config, model)
    grid = config.build_grid()
    coeffs = phase_coefficients(model, grid, eps_rule=config.eps_rule)
    step = assemble_step(model, grid, coeffs)
    u0 = initial_function(config.initial, model.n)
    F0 = dirac_init(u0(grid.space_points()[:, 0]), grid.phase, config.init_mode).ravel()
    write_triplets(path, step.M, step.rhs(F0), step.Xi)
    return step
