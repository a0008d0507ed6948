"""Closedness of the symplectic form and the closed-form solution cases.

The form omega_{f,a,h} is closed iff two residuals vanish:

    res1 = dh/dz - da/dw - w Gamma dh/dw
    res2 = df/dw + w Gamma dabar/dw - dabar/dz - wbar h dGamma/dzbar

Here each solution case fixes the dependence classes of (f, a, h) and the
compatible constant base curvature; cases are catalogued as data so the CLI
and the test-suite enumerate them uniformly.  Cases i..viii are the Kahler
solutions (f > 0, delta > 0), ix and x the pseudo-Kahler ones with h = 0
(delta < 0), and 'flat-example' is the explicitly flat family
(1 + |a|^2, a, 1) for holomorphic a on a flat chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from . import expr as _expr
from .bundle import r2_jet
from .errors import CurvatureMismatch, NotHolomorphic, PositivityViolation
from .jets import Jet2, Point4, wirtinger, wirtinger2
from .metric import Weight, WeightTriple, as_weight
from .surface import ConformalChart, constant_curvature, sample_points

CURVATURE_TOL = 1e-8
QUAD_TOL = 1e-10
_GATE_SEED = 90001


def closedness_residual(chart: ConformalChart, weights: WeightTriple, p: Point4):
    """The two closedness residuals at p; both vanish iff d(omega) = 0 there."""
    fj, aj, hj = weights.eval_jets(p, chart)
    lam = chart.lambda_jet(p)
    g = wirtinger(lam, "z") / lam.value
    dg_zbar = wirtinger2(lam.log(), "z", "zbar")
    w, wb = p.w, p.w.conjugate()
    abar = aj.conj()
    res1 = wirtinger(hj, "z") - wirtinger(aj, "w") - w * g * wirtinger(hj, "w")
    res2 = (wirtinger(fj, "w") + w * g * wirtinger(abar, "w")
            - wirtinger(abar, "z") - wb * hj.value * dg_zbar)
    return res1, res2


def closedness_max(chart, weights, points) -> float:
    worst = 0.0
    for p in points:
        r1, r2 = closedness_residual(chart, weights, p)
        worst = max(worst, abs(r1), abs(r2))
    return worst


# ---- radial weights defined by quadrature -------------------------------------


class RadialQuadratureWeight(Weight):
    """Radial weight from an integrated slope: value by adaptive quadrature.

    Given a radial profile slope(u) and value f0 at u = 0, represents
    f(r2) = f0 + integral_0^{r2} slope.  First and second derivatives come
    from the slope in closed form, so only the value needs quadrature.
    """

    dependence_class = "radial"

    def __init__(self, f0: float, slope_expr: _expr.Expression, description: str):
        if slope_expr.dependence_class not in ("constant", "radial"):
            raise ValueError("slope must be a radial expression")
        self.f0 = float(f0)
        self.slope = slope_expr
        self.description = description

    def _slope_jet(self, u: float) -> Jet2:
        env = {"r2": Jet2.variable(u, 0)}
        out = _expr._eval_node(self.slope.ast, env, _expr._JET_OPS)
        return out if isinstance(out, Jet2) else Jet2(out)

    def value_at(self, u: float) -> float:
        val, _ = quad(lambda x: self._slope_jet(x).value.real, 0.0, u,
                      epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
        return self.f0 + val

    def evaluate(self, p: Point4, chart) -> Jet2:
        u = r2_jet(chart, p)
        uval = u.value.real
        sj = self._slope_jet(uval)
        return u._compose(self.value_at(uval), sj.value, sj.grad[0])

    def __repr__(self):
        return f"RadialQuadratureWeight({self.description})"


# ---- case catalogue ------------------------------------------------------------


@dataclass
class CaseInstance:
    case_id: str
    weights: WeightTriple
    chart: ConformalChart
    r2_domain: tuple
    params: dict
    kahler_variant: str  # 'kahler' or 'pseudo-kahler'


@dataclass(frozen=True)
class CaseDefinition:
    id: str
    variant: str                       # kahler | pseudo-kahler
    summary: str
    required_curvature: Optional[Callable]   # params -> K, or None for any
    default_chart: str
    default_params: dict
    build: Callable                    # (params, chart, K) -> (WeightTriple, r2_domain)
    constraints: dict                  # slot -> spec used by satisfies_case
    perturb: Callable                  # params -> params violating one constraint


def _c(v) -> str:
    return _expr._literal_source(complex(v))


def _build_i(params, chart, K):
    return WeightTriple.make(params["f"], params["a"], params["h"]), (0.0, math.inf)


def _build_iv(params, chart, K):
    f0, f1 = float(params["f0"]), float(params["f1"])
    w = WeightTriple.make(f"{_c(f1)}*r2 + {_c(f0)}", params["a"], params["h"])
    hi = -f0 / f1 if f1 < 0 else math.inf
    return w, (0.0, hi)


def _build_vii(params, chart, K):
    h = float(params["h"])
    f1 = -h * K / 2.0
    f0 = float(params["f0"])
    w = WeightTriple.make(f"{_c(f1)}*r2 + {_c(f0)}", params["a"], params["h"])
    hi = -f0 / f1 if f1 < 0 else math.inf
    return w, (0.0, hi)


def _build_quadrature(params, chart, K):
    h_expr = _expr.parse(params["h"]) if isinstance(params["h"], str) else params["h"]
    slope = _expr.parse(f"({_c(-K / 2.0)}) * ({h_expr.source})")
    f = RadialQuadratureWeight(float(params["f0"]), slope,
                               f"f0={params['f0']}, slope=-(K/2)h, K={K}")
    w = WeightTriple(f, as_weight(params["a"]), as_weight(h_expr))
    return w, (0.0, float(params.get("r2_max", 1.0)))


def _perturb_a_antiholo(params):
    out = dict(params)
    out["a"] = f"({as_weight(params['a']).source}) + 0.01*zbar"
    return out


def _perturb_a_radial(params):
    out = dict(params)
    out["a"] = f"({as_weight(params['a']).source}) + 0.01*r2"
    return out


def _perturb_f1(params):
    out = dict(params)
    out["f1"] = float(params["f1"]) + 0.01
    return out


def _perturb_f_radial(params):
    out = dict(params)
    out["f_extra"] = "0.01*r2"
    return out


CASES = {}


def _register(case: CaseDefinition):
    CASES[case.id] = case


_register(CaseDefinition(
    id="i", variant="kahler",
    summary="base-only weights: flat base, holomorphic a, constant h",
    required_curvature=lambda params: 0.0,
    default_chart="flat",
    default_params={"f": "1 + abs2(z^2)", "a": "z^2", "h": "1"},
    build=_build_i,
    constraints={"f": "base-only", "a": "base-only holomorphic", "h": "constant", "K": 0.0},
    perturb=_perturb_a_antiholo,
))

_register(CaseDefinition(
    id="ii", variant="kahler",
    summary="base-only f, h and radial a: flat base, constant a and h",
    required_curvature=lambda params: 0.0,
    default_chart="flat",
    default_params={"f": "2", "a": "(0.5 + 0.25i)", "h": "1"},
    build=_build_i,
    constraints={"f": "base-only", "a": "constant", "h": "constant", "K": 0.0},
    perturb=_perturb_a_radial,
))

_register(CaseDefinition(
    id="iii", variant="kahler",
    summary="base-only f, a and radial h: flat base, holomorphic a",
    required_curvature=lambda params: 0.0,
    default_chart="flat",
    default_params={"f": "2 + abs2(z)", "a": "z/2", "h": "1/(1+r2)"},
    build=_build_i,
    constraints={"f": "base-only", "a": "base-only holomorphic", "h": "radial", "K": 0.0},
    perturb=_perturb_a_antiholo,
))

_register(CaseDefinition(
    id="iv", variant="kahler",
    summary="radial f = f1 r2 + f0 with base-only a, h; K = -2 f1 / h",
    required_curvature=lambda params: -2.0 * float(params["f1"]) / float(params["h"]),
    default_chart="hyperbolic",
    default_params={"f0": 1.0, "f1": 1.0, "a": "0.2*z", "h": "2"},
    build=_build_iv,
    constraints={"f": "radial linear", "a": "base-only holomorphic", "h": "constant",
                 "K": "-2f'/h"},
    perturb=_perturb_f1,
))

_register(CaseDefinition(
    id="v", variant="kahler",
    summary="base-only f with radial a, h: flat base, constant a",
    required_curvature=lambda params: 0.0,
    default_chart="flat",
    default_params={"f": "1 + abs2(z)/4", "a": "0.3", "h": "2/(1+r2)"},
    build=_build_i,
    constraints={"f": "base-only", "a": "constant", "h": "radial", "K": 0.0},
    perturb=_perturb_a_radial,
))

_register(CaseDefinition(
    id="vi", variant="kahler",
    summary="radial f, h with base-only a: K = -2 f'/h, f by quadrature",
    required_curvature=None,  # any constant K; f adapts through its slope
    default_chart="sphere",
    default_params={"f0": 3.0, "a": "0.1*z", "h": "2 + r2", "r2_max": 1.0},
    build=_build_quadrature,
    constraints={"f": "radial", "a": "base-only holomorphic", "h": "radial", "K": "-2f'/h"},
    perturb=_perturb_f_radial,
))

_register(CaseDefinition(
    id="vii", variant="kahler",
    summary="radial f, a with base-only h: all constants, f1 = -hK/2",
    required_curvature=None,  # f1 derives from the chart curvature
    default_chart="sphere",
    default_params={"f0": 1.0, "a": "0.05i", "h": "2"},
    build=_build_vii,
    constraints={"f": "radial linear", "a": "constant", "h": "constant", "K": "-2f'/h"},
    perturb=_perturb_a_radial,
))

_register(CaseDefinition(
    id="viii", variant="kahler",
    summary="all radial: constant a, K = -2 f'/h, f by quadrature",
    required_curvature=None,
    default_chart="hyperbolic",
    default_params={"f0": 0.5, "a": "0.2", "h": "1 + r2", "r2_max": 2.0},
    build=_build_quadrature,
    constraints={"f": "radial", "a": "constant", "h": "radial", "K": "-2f'/h"},
    perturb=_perturb_f_radial,
))

_register(CaseDefinition(
    id="ix", variant="pseudo-kahler",
    summary="h = 0 with base-only a: holomorphic a, base-only f, any K",
    required_curvature=None,
    default_chart="sphere",
    default_params={"f": "2 + abs2(z)", "a": "1 + z/2"},
    build=lambda params, chart, K: (WeightTriple.make(params["f"], params["a"], "0"),
                                    (0.0, math.inf)),
    constraints={"f": "base-only", "a": "base-only holomorphic", "h": "zero"},
    perturb=_perturb_a_antiholo,
))

_register(CaseDefinition(
    id="x", variant="pseudo-kahler",
    summary="h = 0 with radial a: constant f and a, any K",
    required_curvature=None,
    default_chart="hyperbolic",
    default_params={"f": "1.5", "a": "(0.5 + 0.5i)"},
    build=lambda params, chart, K: (WeightTriple.make(params["f"], params["a"], "0"),
                                    (0.0, math.inf)),
    constraints={"f": "constant", "a": "constant", "h": "zero"},
    perturb=_perturb_a_radial,
))


def case_ids():
    return list(CASES)


def instantiate_case(case_id: str, chart: ConformalChart, params: dict = None) -> CaseInstance:
    """Build the weights of a solution case on the chart, gating its hypotheses.

    Raises CurvatureMismatch when the chart's constant curvature is not the
    one the case requires, and PositivityViolation when a Kahler (not
    pseudo) case fails f > 0, delta > 0 on gate samples of its domain.
    """
    case = CASES[case_id]
    merged = dict(case.default_params)
    if params:
        merged.update(params)
    K = constant_curvature(chart)
    if case.required_curvature is not None:
        required = case.required_curvature(merged)
        if abs(K - required) > CURVATURE_TOL:
            raise CurvatureMismatch(
                f"case {case_id} needs K = {required}, chart '{chart.name}' has K = {K}")
    weights, domain = case.build(merged, chart, K)
    if "f_extra" in merged:  # perturbed variant used by the sharpness tests
        extra = _expr.parse(merged["f_extra"])
        base = weights.f
        weights = WeightTriple(_SumWeight(base, as_weight(extra)), weights.a, weights.h)

    gate_points = sample_points(chart, 40, _GATE_SEED,
                                r2_interval=_bounded(domain), r2_margin=1e-2)
    for p in gate_points:
        f, a, h = weights.eval_values(p, chart)
        delta = f * h - abs(a) ** 2
        if case.variant == "kahler" and (f <= 0 or delta <= 0):
            raise PositivityViolation(
                f"case {case_id}: f = {f:.4g}, delta = {delta:.4g} at {p} not positive")
        if case.variant == "pseudo-kahler" and delta >= 0:
            raise PositivityViolation(
                f"case {case_id}: delta = {delta:.4g} at {p} not negative")
    return CaseInstance(case_id, weights, chart, domain, merged, case.variant)


class _SumWeight(Weight):
    def __init__(self, a: Weight, b: Weight):
        self.parts = (a, b)
        classes = {a.dependence_class, b.dependence_class} - {"constant"}
        self.dependence_class = classes.pop() if len(classes) == 1 else (
            "constant" if not classes else "mixed")

    def evaluate(self, p, chart):
        a, b = self.parts
        return a.evaluate(p, chart) + b.evaluate(p, chart)


def _bounded(domain, cap=2.0):
    lo, hi = domain
    return (lo, min(hi, lo + cap) if math.isinf(hi) else hi)


def perturbed_instance(case_id: str, chart: ConformalChart, params: dict = None) -> CaseInstance:
    """The case with one constraint pushed off by 1e-2; closedness must fail."""
    case = CASES[case_id]
    merged = dict(case.default_params)
    if params:
        merged.update(params)
    bad = case.perturb(merged)
    weights, domain = case.build({k: v for k, v in bad.items() if k != "f_extra"}, chart,
                                 constant_curvature(chart))
    if "f_extra" in bad:
        weights = WeightTriple(_SumWeight(weights.f, as_weight(_expr.parse(bad["f_extra"]))),
                               weights.a, weights.h)
    return CaseInstance(case_id, weights, chart, domain, bad, case.variant)


# ---- constraint verification ---------------------------------------------------

_CLASS_OK = {
    "constant": {"constant"},
    "base-only": {"constant", "base-only"},
    "radial": {"constant", "radial"},
}


def satisfies_case(case_id: str, weights: WeightTriple, chart: ConformalChart,
                   points, tol: float = 1e-8) -> bool:
    """Whether the weights meet the constraint list of a case at the points.

    Checks dependence classes (constants count as both base-only and
    radial), holomorphy and constancy residuals, h = 0 for the pseudo
    cases, and the curvature relations, all sampled numerically.
    """
    case = CASES[case_id]
    cons = case.constraints
    K = constant_curvature(chart)

    def class_ok(slot, need):
        cls = getattr(weights, slot).dependence_class
        return cls in _CLASS_OK[need]

    for slot in ("f", "a", "h"):
        need = cons.get(slot, "")
        if need == "zero":
            if any(abs(getattr(weights, slot).evaluate_value(p, chart)) > tol for p in points):
                return False
            continue
        base = need.split()[0] if need else ""
        if base in ("constant", "base-only", "radial") and not class_ok(slot, base):
            return False
        if base == "radial" and not class_ok(slot, "radial"):
            return False
    if "holomorphic" in cons.get("a", ""):
        for p in points:
            aj = weights.a.evaluate(p, chart)
            if abs(wirtinger(aj, "zbar")) > tol:
                return False
    for slot in ("f", "a", "h"):
        if cons.get(slot, "").startswith("constant") or cons.get(slot) == "constant":
            vals = [getattr(weights, slot).evaluate_value(p, chart) for p in points]
            if max(abs(v - vals[0]) for v in vals) > tol:
                return False

    kc = cons.get("K")
    if kc == 0.0 and abs(K) > CURVATURE_TOL:
        return False
    if kc == "-2f'/h":
        for p in points:
            fj = weights.f.evaluate(p, chart)
            lam = chart.lambda_value(p.z)
            fprime = wirtinger(fj, "w") / (lam * p.w.conjugate())
            h = weights.h.evaluate_value(p, chart).real
            if abs(K + 2.0 * fprime.real / h) > 1e-6 or abs(fprime.imag) > 1e-8:
                return False
    if cons.get("f") == "radial linear":
        # f' must also be constant along the fibre direction.
        slopes = []
        for p in points:
            fj = weights.f.evaluate(p, chart)
            lam = chart.lambda_value(p.z)
            slopes.append(wirtinger(fj, "w") / (lam * p.w.conjugate()))
        if max(abs(s - slopes[0]) for s in slopes) > 1e-6:
            return False
    return True


# ---- the flat Kahler example ---------------------------------------------------


def flat_example(a_source, chart: ConformalChart = None, n_check: int = 60,
                 seed: int = 424243, tol: float = 1e-10):
    """Weights (1 + |a|^2, a, 1) for holomorphic a; Kahler and flat.

    The antiholomorphic derivative of a is sampled; NotHolomorphic when it
    exceeds tol anywhere.
    """
    from .surface import MODELS, sample_base

    chart = chart or MODELS["flat"]
    a_expr = _expr.parse(a_source) if isinstance(a_source, str) else a_source
    if a_expr.dependence_class not in ("constant", "base-only"):
        raise NotHolomorphic(f"a = '{a_expr.source}' is not a base-only expression")
    for z in sample_base(chart, n_check, seed):
        aj = a_expr.evaluate(Point4(z, 0j))
        res = wirtinger(aj, "zbar")
        if abs(res) > tol:
            raise NotHolomorphic(
                f"a = '{a_expr.source}' has dabar/dzbar = {res:.3e} at z = {z}")
    f_src = f"1 + abs2({a_expr.source})"
    return WeightTriple.make(f_src, a_expr.source, "1")
