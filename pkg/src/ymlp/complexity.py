"""Asymptotic cost models for classical and quantum LP solvers on the Young-measure LP.

Costs are monomials with exact (sympy) exponents over a fixed set of base
symbols. Exponents may depend on the dimensions ``d``, ``n``, ``m``, which
stay symbolic until numbers are substituted. Logarithmic factors are kept
as flags, never as exponents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import sympy

d, n, m = sympy.symbols("d n m", positive=True, integer=True)
N = sympy.Symbol("N", positive=True)

BASES = ("r", "q", "s", "R1", "nnz", "s_M", "N_t", "N_x", "N_xi", "N_omega",
         "1/eps", "1/delta", "kappa")
SIPM_OMEGA = sympy.Rational(238, 100)

METHODS = ("IPM", "SIPM", "QIPM", "QZSG", "QCP_query", "QCP_gate", "QSDP",
           "direct_classical", "direct_collocation")
FAMILIES = {"burgers": sympy.Integer(1), "allen-cahn": sympy.Integer(1),
            "barotropic-euler": d + 1, "full-euler": d + 2, "nsf": d + 2}
TABLE_FAMILIES = ("burgers", "barotropic-euler", "full-euler")


class ComplexityError(ValueError):
    pass


@dataclass(frozen=True)
class CostExpr:
    """``coefficient * prod base**exponent`` with exact exponents."""

    exponents: dict
    flags: tuple = ()
    coefficient: object = sympy.Integer(1)

    def __post_init__(self):
        clean = {}
        for k, v in self.exponents.items():
            if k not in BASES:
                raise ComplexityError(f"unknown base symbol {k!r}")
            v = sympy.nsimplify(v) if isinstance(v, float) else sympy.sympify(v)
            v = sympy.simplify(v)
            if v != 0:
                clean[k] = v
        object.__setattr__(self, "exponents", clean)

    def __mul__(self, other):
        out = dict(self.exponents)
        for k, v in other.exponents.items():
            out[k] = out.get(k, 0) + v
        return CostExpr(out, tuple(dict.fromkeys(self.flags + other.flags)),
                        self.coefficient * other.coefficient)

    def __pow__(self, p):
        p = sympy.sympify(p)
        return CostExpr({k: v * p for k, v in self.exponents.items()}, self.flags,
                        self.coefficient ** p)

    def substitute(self, mapping):
        """Replace base symbols by other ``CostExpr`` (e.g. ``s -> r N_xi^n``)."""
        out = CostExpr({}, self.flags, self.coefficient)
        for k, v in self.exponents.items():
            out = out * (mapping[k] ** v if k in mapping else CostExpr({k: v}))
        return out

    def at(self, **dims):
        """Fix ``d``, ``n``, ``m`` to numbers."""
        subs = {sym: dims[str(sym)] for sym in (d, n, m) if str(sym) in dims}
        return CostExpr({k: sympy.sympify(v).subs(subs) for k, v in self.exponents.items()},
                        self.flags, sympy.sympify(self.coefficient).subs(subs))

    def total_degree(self, bases=("N_t", "N_x", "N_xi", "N_omega", "1/eps")):
        """Exponent of ``N`` when every listed base scales like ``N``."""
        return sympy.simplify(sum(self.exponents.get(b, 0) for b in bases))

    def evaluate(self, values):
        """Numeric value; ``values`` maps base names (and ``d``, ``n``, ``m``) to numbers."""
        dims = {k: values[k] for k in ("d", "n", "m") if k in values}
        expr = self.at(**dims)
        coef = sympy.sympify(expr.coefficient).subs({sym: dims[str(sym)] for sym in (d, n, m)
                                                      if str(sym) in dims})
        if coef.free_symbols:
            raise ComplexityError(f"coefficient {coef} needs values for {sorted(map(str, coef.free_symbols))}")
        total = float(coef)
        for k, v in expr.exponents.items():
            if k not in values:
                raise ComplexityError(f"missing value for {k!r}")
            total *= float(values[k]) ** float(v)
        return total

    def as_strings(self):
        return {k: str(v) for k, v in sorted(self.exponents.items())}

    def __str__(self):
        parts = [k if v == 1 else f"{k}^({v})" for k, v in sorted(self.exponents.items())]
        return " * ".join(parts) if parts else "1"


def _mono(**exps):
    return CostExpr({k.replace("inv_", "1/"): v for k, v in exps.items()})


@dataclass(frozen=True)
class CostParams:
    """Dimensions and resolutions; unspecified resolutions stay symbolic."""

    d: object = d
    n: object = n
    m: object = m
    representation: str = "grid"
    random: bool = False
    N_t: float = None
    N_x: float = None
    N_xi: float = None
    N_omega: float = None
    epsilon: float = None
    delta: float = None
    kappa_newt: float = None

    def __post_init__(self):
        if self.representation not in ("grid", "particle"):
            raise ComplexityError(f"unknown representation {self.representation!r}")
        if self.random and self.representation != "grid":
            raise ComplexityError("the random setting is tabulated for the grid representation only")
        for key in ("N_t", "N_x", "N_xi", "N_omega"):
            v = getattr(self, key)
            if v is not None and v < 1:
                raise ComplexityError(f"{key} must be >= 1")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ComplexityError("epsilon must lie in (0, 1)")

    def values(self):
        out = {"d": self.d, "n": self.n, "m": self.m}
        for key in ("N_t", "N_x", "N_xi", "N_omega"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.epsilon is not None:
            out["1/eps"] = 1.0 / self.epsilon
        if self.delta is not None:
            out["1/delta"] = 1.0 / self.delta
        if self.kappa_newt is not None:
            out["kappa"] = self.kappa_newt
        return out


def lp_shape(params, basis="resolution"):
    """LP size parameters ``r, s, R1, nnz, s_M`` as monomials.

    ``basis="resolution"`` expresses them through ``N_t, N_x, N_xi, N_omega``;
    ``basis="lp"`` keeps ``r`` (deterministic) or ``q = N_t N_x^d`` (random)
    as a base symbol, matching the per-algorithm comparison tables.
    """
    dd, nn, mm = params.d, params.n, params.m
    if params.representation == "particle":
        base = _mono(r=1) if basis == "lp" else _mono(N_t=1, N_x=1)
        xi = _mono(N_xi=1)
        return {"r": base, "s": base * xi, "R1": base, "nnz": base * xi, "s_M": xi}
    xi = _mono(N_xi=nn)
    if params.random:
        q = _mono(q=1) if basis == "lp" else _mono(N_t=1, N_x=dd)
        om = _mono(N_omega=mm)
        return {"r": q * om, "s": q * om * xi, "R1": q, "nnz": q * om * xi, "s_M": om * xi}
    r = _mono(r=1) if basis == "lp" else _mono(N_t=1, N_x=dd)
    return {"r": r, "s": r * xi, "R1": r, "nnz": r * xi, "s_M": xi}


def generic_cost(method):
    """Leading-order cost in terms of ``r, s, R1, nnz, s_M`` (``s >= r``, ``nnz = s``)."""
    half = sympy.Rational(1, 2)
    if method == "IPM":
        # sqrt(s) (nnz + s^2)
        return CostExpr({"s": sympy.Rational(5, 2)}, ("log(1/eps)",))
    if method == "SIPM":
        return CostExpr({"s": SIPM_OMEGA}, ("log(1/eps)",))
    if method == "QIPM":
        return CostExpr({"kappa": 3, "s": 2, "1/delta": 2}, ("tomography error delta",))
    if method == "QZSG":
        return CostExpr({"s_M": half, "R1": sympy.Rational(7, 2), "1/eps": sympy.Rational(7, 2)},
                        ("assumes inf |lambda|_1 = O~(1)",))
    if method == "QCP_query":
        # sqrt(r + s) R1 / eps
        return CostExpr({"s": half, "R1": 1, "1/eps": 1})
    if method == "QCP_gate":
        return generic_cost("QCP_query") * CostExpr({"nnz": 1})
    if method == "QSDP":
        return CostExpr({"r": 1, "R1": 2, "s": 1, "1/eps": 2}, ("outputs rho_F, preparation excluded",))
    raise ComplexityError(f"no generic LP cost for {method!r}")


def cost(method, params, basis="resolution"):
    """Cost of ``method`` on the LP described by ``params``."""
    if method not in METHODS:
        raise ComplexityError(f"unknown method {method!r}")
    if method == "direct_classical":
        if params.random:
            raise ComplexityError("direct_classical is the deterministic solver; use direct_collocation")
        base = _mono(r=1) if basis == "lp" else _mono(N_t=1, N_x=params.d)
        return CostExpr(base.exponents, ("factor n",), params.n)
    if method == "direct_collocation":
        q = _mono(q=1) if basis == "lp" else _mono(N_t=1, N_x=params.d)
        return CostExpr((q * _mono(N_omega=params.m)).exponents, ("factor n",), params.n)
    return generic_cost(method).substitute(lp_shape(params, basis))


def family_params(family, dim=d, **kw):
    if family not in FAMILIES:
        raise ComplexityError(f"unknown PDE family {family!r}")
    return CostParams(d=dim, n=FAMILIES[family].subs(d, dim), **kw)


@dataclass
class Advantage:
    method_a: str
    method_b: str
    degree_a: object
    degree_b: object
    difference: object            # degree_b - degree_a; positive favours method_a
    crossover: object = None      # condition on d, n, m for difference > 0

    def row(self):
        return {"method_a": self.method_a, "method_b": self.method_b,
                "degree_a": str(self.degree_a), "degree_b": str(self.degree_b),
                "advantage": str(self.difference),
                "crossover": "" if self.crossover is None else str(self.crossover)}


def advantage(method_a, method_b, params):
    """Exponent of ``N`` by which ``method_a`` beats ``method_b`` when
    ``N_t = N_x = N_xi = N_omega = 1/eps = N``."""
    bases = ("N_t", "N_x", "N_xi", "N_omega", "1/eps")
    ca, cb = cost(method_a, params), cost(method_b, params)
    for c in (ca, cb):
        extra = set(c.exponents) - set(bases)
        if extra:
            raise ComplexityError(f"cost depends on {sorted(extra)}, which do not scale with N")
    da, db = ca.total_degree(bases), cb.total_degree(bases)
    diff = sympy.simplify(db - da)
    cross = None
    if m in diff.free_symbols:
        # the difference is affine in m: isolate it
        slope = sympy.diff(diff, m)
        bound = sympy.simplify(-(diff - slope * m) / slope)
        cross = sympy.StrictGreaterThan(m, bound) if slope.is_positive else sympy.StrictLessThan(m, bound)
    elif diff.free_symbols:
        cross = sympy.StrictGreaterThan(diff, 0)
    return Advantage(method_a, method_b, da, db, diff, cross)


def load_golden():
    """Exponent tables transcribed from the published tables (strings)."""
    text = resources.files("ymlp").joinpath("data/complexity_golden.json").read_text()
    return json.loads(text)


_LOCALS = {"d": d, "n": n, "m": m, "N": N}


def parse(expr):
    """Parse an exponent or inequality string with the module's symbols."""
    return sympy.sympify(expr, locals=_LOCALS, rational=True)


def exprs_equal(a, b):
    return sympy.simplify(parse(a) - parse(b)) == 0


def exponents_equal(a, b):
    """Exact comparison of exponent maps given as strings or sympy expressions."""
    return all(exprs_equal(a.get(k, 0), b.get(k, 0)) for k in set(a) | set(b))


def emit_tables():
    """Reproduce every tabulated cell; keys mirror the golden file."""
    det, rnd = CostParams(), CostParams(random=True)
    out = {
        "table2": {rep: {k: v.as_strings() for k, v in lp_shape(CostParams(representation=rep)).items()}
                   for rep in ("grid", "particle")},
        "table_rsc": {k: v.as_strings() for k, v in lp_shape(rnd).items()},
        "table3": {meth: cost(meth, det, basis="lp").as_strings()
                   for meth in ("IPM", "SIPM", "QIPM", "QZSG", "QCP_query", "QCP_gate")},
        "uq_cost": {meth: cost(meth, rnd, basis="lp").as_strings()
                    for meth in ("IPM", "SIPM", "QIPM", "QZSG", "QCP_query", "QCP_gate")},
        "table4": {}, "table5": {}, "uq_direct": {}, "advantages_d3": {},
    }
    for fam in TABLE_FAMILIES:
        out["table4"][fam] = {meth: cost(meth, family_params(fam)).as_strings()
                              for meth in ("IPM", "SIPM", "QIPM", "QZSG", "QCP_query")}
        p3 = family_params(fam, dim=3)
        out["table5"][fam] = {meth: cost(meth, p3).as_strings()
                              for meth in ("IPM", "SIPM", "QZSG", "QCP_query", "QCP_gate")}
        out["advantages_d3"][fam] = {
            f"{a}_vs_SIPM": str(advantage(a, "SIPM", p3).difference) for a in ("QCP_query", "QCP_gate")}
        adv = advantage("QCP_query", "direct_collocation", family_params(fam, dim=3, random=True))
        out["uq_direct"][fam] = {"quantum": str(adv.degree_a), "classical": str(adv.degree_b)}
    general = advantage("QCP_query", "direct_collocation", CostParams(random=True))
    out["uq_direct_general"] = {"quantum": str(general.degree_a), "classical": str(general.degree_b)}
    out["crossover"] = str(general.crossover)
    return out


def compare_to_golden(emitted=None, golden=None):
    """List of ``(path, emitted, golden)`` for every mismatching cell (empty when all agree)."""
    emitted = emit_tables() if emitted is None else emitted
    golden = load_golden() if golden is None else golden
    bad = []

    def walk(path, e, g):
        if isinstance(g, dict) and g and all(isinstance(v, dict) for v in g.values()):
            for k in g:
                walk(path + (k,), e.get(k, {}) if isinstance(e, dict) else {}, g[k])
        elif isinstance(g, dict):
            if not isinstance(e, dict) or not exponents_equal(e, g):
                bad.append(("/".join(path), e, g))
        elif path[-1] == "crossover":
            if not sympy.simplify(parse(e).lhs - parse(g).lhs) == 0 or \
                    not sympy.simplify(parse(e).rhs - parse(g).rhs) == 0 or \
                    type(parse(e)) is not type(parse(g)):
                bad.append(("/".join(path), e, g))
        elif not exprs_equal(e, g):
            bad.append(("/".join(path), e, g))

    for key in golden:
        if key.startswith("_"):
            continue
        walk((key,), emitted.get(key), golden[key])
    return bad


def comparison_rows(methods, params):
    """Rows for a CLI table: method, exponents, flags, optional numeric value."""
    rows = []
    values = params.values()
    for meth in methods:
        c = cost(meth, params)
        try:
            val = c.evaluate(values)
        except (ComplexityError, TypeError):
            val = None
        rows.append({"method": meth, "cost": str(c),
                     "flags": "; ".join(c.flags), "value": "" if val is None else f"{val:.6g}"})
    return rows
