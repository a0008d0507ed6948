"""Ricci form, Einstein residuals and the explicit Ricci-flat families.

The Ricci form of the Hermitian structure is rho = i dbar d log det H.  Two
independent computations are provided:

  * 'detH'  takes log of the determinant of the assembled 2x2 frame matrix,
  * 'split' uses rho = 2 K pi*omega + i dbar d log delta.

Both return the Hermitian coefficient matrix R with rho = i sum R_jk
dzeta^j ^ dzetabar^k on (z, w); agreement exercises det H = lambda^2 delta
together with the curvature formula.

The metric is Einstein with constant S/4 iff rho = (S/4) omega, equivalent
to the three local residuals returned by einstein_residuals.  Families with
f h - |a|^2 = 1/r^4 are Ricci-flat away from the zero-section; the four
complete families live on constant-curvature bases:

  cy-i   (K = 0):  f > 0, a != 0 constants, h = |a|^2/f + 1/(f r^4), r2 in (0, inf)
  cy-ii  (K = 1):  f = sqrt(1 - c0 r^2)/r, a = 0, c0 > 0,      r2 in (0, 1/c0)
  cy-iii (K = 1):  f = sqrt(1 - c0 r^2 - |a|^2 r^4)/r, a != 0, r2 in (0, beta+)
  cy-iv  (K = -1): f = sqrt(|a|^2 r^4 + c0 r^2 - 1)/r, a != 0, r2 in (beta+, inf)

with beta+ the positive root of |a|^2 x^2 + c0 x - 1.  In every family
psi = r^4 delta is identically 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as _expr
from .errors import CurvatureMismatch, NonPositiveDelta, ParameterGate
from .jets import Point4, wirtinger, wirtinger2
from .metric import WeightTriple, hermitian_entry_jets
from .surface import ConformalChart, constant_curvature

_WIRT_PAIRS = (("z", "zbar"), ("z", "wbar"), ("w", "zbar"), ("w", "wbar"))


def _hermitian_hessian(jet):
    """Matrix M_jk = d^2(jet)/dzeta^j dzetabar^k on (z, w)."""
    m = np.empty((2, 2), dtype=complex)
    m[0, 0] = wirtinger2(jet, "z", "zbar")
    m[0, 1] = wirtinger2(jet, "z", "wbar")
    m[1, 0] = wirtinger2(jet, "w", "zbar")
    m[1, 1] = wirtinger2(jet, "w", "wbar")
    return m


def ricci_form(chart: ConformalChart, weights: WeightTriple, p: Point4,
               route: str = "detH") -> np.ndarray:
    """Coefficients R with rho = i sum_jk R_jk dzeta^j ^ dzetabar^k at p.

    Requires delta > 0 (positive-definite regime).  R is Hermitian for any
    real weights; for an Einstein metric R = (S/8) H.
    """
    delta = weights.delta_jet(p, chart)
    if delta.value.real <= 0:
        raise NonPositiveDelta(f"delta = {delta.value} at {p}")
    if route == "detH":
        E = hermitian_entry_jets(chart, weights, p)
        det = E[0][0] * E[1][1] - E[0][1] * E[1][0]
        return -_hermitian_hessian(det.log())
    if route == "split":
        lam = chart.lambda_jet(p)
        K = -2.0 * wirtinger2(lam.log(), "z", "zbar") / lam.value
        R = -_hermitian_hessian(delta.log())
        R[0, 0] += K * lam.value
        return R
    raise ValueError(f"unknown ricci route '{route}'")


def ricci_route_deviation(chart, weights, p) -> float:
    a = ricci_form(chart, weights, p, "detH")
    b = ricci_form(chart, weights, p, "split")
    return float(np.max(np.abs(a - b)))


def ricci_real_form(R: np.ndarray) -> np.ndarray:
    """rho as a real antisymmetric matrix on the coordinate fields (x, y, s, t)."""
    from .bundle import DW, DZ

    basis = (DZ, DW)
    out = np.zeros((4, 4), dtype=complex)
    for j in range(2):
        for k in range(2):
            a, b = basis[j], basis[k].conj()
            out += 1j * R[j, k] * (np.outer(a, b) - np.outer(b, a))
    return out.real


@dataclass
class RicciReport:
    at: Point4
    rho: np.ndarray
    route_deviation: float
    einstein_residuals: tuple
    S: float

    @property
    def rho_max(self):
        return float(np.max(np.abs(self.rho)))

    @property
    def hermitian_residual(self):
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))


def einstein_residuals(chart: ConformalChart, weights: WeightTriple, p: Point4,
                       S: float = 0.0):
    """Residuals of the three Einstein equations at p; all zero iff rho = (S/4) omega."""
    fj, aj, hj = weights.eval_jets(p, chart)
    delta = fj * hj - aj.abs2()
    if delta.value.real <= 0:
        raise NonPositiveDelta(f"delta = {delta.value} at {p}")
    logd = delta.log()
    lam = chart.lambda_jet(p)
    lv = lam.value
    K = -2.0 * wirtinger2(lam.log(), "z", "zbar") / lv
    g = wirtinger(lam, "z") / lv
    w, wb = p.w, p.w.conjugate()
    f, a, h = fj.value, aj.value, hj.value
    wg = w * g
    e1 = wirtinger2(logd, "w", "wbar") + lv * S * h / 8.0
    e2 = wirtinger2(logd, "z", "wbar") + lv * S / 8.0 * (a + h * wg)
    e3 = (lv * K - wirtinger2(logd, "z", "zbar")
          - lv * S / 8.0 * (f + a.conjugate() * wg + a * wg.conjugate() + h * abs(wg) ** 2))
    return e1, e2, e3


def ricci_report(chart, weights, p, S: float = 0.0) -> RicciReport:
    R = ricci_form(chart, weights, p, "detH")
    dev = ricci_route_deviation(chart, weights, p)
    res = einstein_residuals(chart, weights, p, S)
    return RicciReport(p, R, dev, res, S)


# ---- solution families ---------------------------------------------------------

FAMILY_KINDS = ("ricci-flat-general", "cy-i", "cy-ii", "cy-iii", "cy-iv")

_FAMILY_CURVATURE = {
    "ricci-flat-general": None,
    "cy-i": 0.0,
    "cy-ii": 1.0,
    "cy-iii": 1.0,
    "cy-iv": -1.0,
}


@dataclass
class SolutionFamily:
    kind: str
    parameters: dict
    weights: WeightTriple
    r2_domain: tuple
    beta_plus: float = math.nan

    def psi_residual(self, chart, points) -> float:
        """Max deviation of psi = r^4 delta from 1 at the points."""
        worst = 0.0
        for p in points:
            r2 = chart.lambda_value(p.z) * abs(p.w) ** 2
            worst = max(worst, abs(r2 * r2 * self.weights.delta_value(p, chart) - 1.0))
        return worst

    def delta_identity_residual(self, chart, points) -> float:
        """Max relative deviation of f h - |a|^2 from 1/r^4 at the points."""
        worst = 0.0
        for p in points:
            r2 = chart.lambda_value(p.z) * abs(p.w) ** 2
            expect = 1.0 / r2**2
            worst = max(worst, abs(self.weights.delta_value(p, chart) - expect) / expect)
        return worst


def beta_plus(a: complex, c0: float) -> float:
    """Positive root of |a|^2 x^2 + c0 x - 1 (the validity-annulus boundary)."""
    a2 = abs(a) ** 2
    if a2 == 0:
        raise ParameterGate("beta+ undefined for a = 0")
    return (-c0 + math.sqrt(c0 * c0 + 4.0 * a2)) / (2.0 * a2)


def _lit(v) -> str:
    return _expr._literal_source(complex(v))


def make_family(kind: str, parameters: dict, chart: ConformalChart) -> SolutionFamily:
    """Construct a Ricci-flat family on the chart, gating curvature and parameters."""
    if kind not in FAMILY_KINDS:
        raise ParameterGate(f"unknown family kind '{kind}'")
    required = _FAMILY_CURVATURE[kind]
    if required is not None:
        K = constant_curvature(chart)
        if abs(K - required) > 1e-8:
            raise CurvatureMismatch(
                f"family {kind} needs K = {required}, chart '{chart.name}' has K = {K}")

    params = dict(parameters)
    a = complex(params.get("a", 0.0))
    c0 = float(params.get("c0", 0.0))
    a2 = abs(a) ** 2

    if kind == "ricci-flat-general":
        f_src = str(params.get("f", "1"))
        f_expr = _expr.parse(f_src)
        if f_expr.dependence_class not in ("constant", "radial", "base-only"):
            raise ParameterGate("general family needs a constant, radial or base-only f")
        h_src = f"(abs2({_lit(a)}) + 1/r2^2) / ({f_src})"
        weights = WeightTriple.make(f_src, _lit(a), h_src)
        return SolutionFamily(kind, params, weights, (0.0, math.inf))

    if kind == "cy-i":
        f = float(params.get("f", 1.0))
        if f <= 0:
            raise ParameterGate("cy-i needs f > 0")
        if a == 0:
            raise ParameterGate("cy-i needs a != 0 for completeness")
        h_src = f"{_lit(a2 / f)} + 1/({_lit(f)}*r2^2)"
        weights = WeightTriple.make(_lit(f), _lit(a), h_src)
        return SolutionFamily(kind, params, weights, (0.0, math.inf))

    if kind == "cy-ii":
        if c0 <= 0:
            raise ParameterGate("cy-ii needs c0 > 0")
        f_src = f"sqrt(1 - {_lit(c0)}*r2)/sqrt(r2)"
        h_src = f"1/(sqrt(r2)^3 * sqrt(1 - {_lit(c0)}*r2))"
        weights = WeightTriple.make(f_src, "0", h_src)
        return SolutionFamily(kind, params, weights, (0.0, 1.0 / c0))

    if kind == "cy-iii":
        if a == 0:
            raise ParameterGate("cy-iii needs a != 0")
        bp = beta_plus(a, c0)
        root = f"sqrt(1 - {_lit(c0)}*r2 - {_lit(a2)}*r2^2)"
        f_src = f"{root}/sqrt(r2)"
        h_src = f"({_lit(a2)}*r2^2 + 1)/(sqrt(r2)^3 * {root})"
        weights = WeightTriple.make(f_src, _lit(a), h_src)
        return SolutionFamily(kind, params, weights, (0.0, bp), beta_plus=bp)

    # cy-iv
    if a == 0:
        raise ParameterGate("cy-iv needs a != 0")
    bp = beta_plus(a, c0)
    root = f"sqrt({_lit(a2)}*r2^2 + {_lit(c0)}*r2 - 1)"
    f_src = f"{root}/sqrt(r2)"
    h_src = f"({_lit(a2)}*r2^2 + 1)/(sqrt(r2)^3 * {root})"
    weights = WeightTriple.make(f_src, _lit(a), h_src)
    return SolutionFamily(kind, params, weights, (bp, math.inf), beta_plus=bp)
