"""Four-dimensional Riemannian pipeline: curvature, geodesics, completeness.

This module never uses the complex structure; it treats the assembled
metric as a plain 4x4 field over (x, y, s, t) and derives everything from
jet-exact derivatives, serving as the independent oracle for the Hermitian
claims.

Index conventions (all indices coordinate indices in the fixed order):

    Gamma^a_{bc} = (1/2) g^{ad} (d_b g_{dc} + d_c g_{db} - d_d g_{bc})
    R^a_{bcd}    = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
                   + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}
    Ric_{bd}     = R^a_{bad},    scalar = g^{bd} Ric_{bd}

First derivatives of the Christoffel symbols are exact: the metric entries
are jets, so d(g), d2(g) and hence d(Gamma) come out of the same evaluation
with no differencing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import DegenerateMetric, ExponentFitUnstable, RealityError
from .jets import Point4
from .metric import WeightTriple, metric_entry_jets
from .surface import ConformalChart

_DET_TOL = 1e-10
_ENTRY_IMAG_TOL = 1e-8


@dataclass
class CurvatureAtPoint:
    at: Point4
    christoffel: np.ndarray   # (4,4,4), [a, b, c] = Gamma^a_{bc}
    riemann: np.ndarray       # (4,4,4,4), [a, b, c, d] = R^a_{bcd}
    ricci: np.ndarray         # (4,4)
    scalar: float
    metric: np.ndarray        # (4,4) for convenience

    @property
    def riemann_covariant(self):
        return np.einsum("ae,ebcd->abcd", self.metric, self.riemann)

    def bianchi_first_residual(self) -> float:
        R = self.riemann_covariant
        cyc = R + np.einsum("acdb->abcd", R) + np.einsum("adbc->abcd", R)
        return float(np.max(np.abs(cyc)))

    def antisymmetry_residual(self) -> float:
        R = self.riemann_covariant
        return float(max(np.max(np.abs(R + np.einsum("bacd->abcd", R))),
                         np.max(np.abs(R + np.einsum("abdc->abcd", R)))))


def _metric_derivatives(chart, weights, p):
    """G, dG[c,a,b] and d2G[c,d,a,b] from one jet evaluation of the entries."""
    jets = metric_entry_jets(chart, weights, p)
    G = np.empty((4, 4))
    dG = np.empty((4, 4, 4))
    d2G = np.empty((4, 4, 4, 4))
    for a in range(4):
        for b in range(4):
            j = jets[a][b]
            if abs(j.value.imag) > _ENTRY_IMAG_TOL:
                raise RealityError(f"metric entry ({a},{b}) at {p} not real: {j.value}")
            G[a, b] = j.value.real
            dG[:, a, b] = j.grad.real
            d2G[:, :, a, b] = j.hess.real
    return G, dG, d2G


def christoffel(chart: ConformalChart, weights: WeightTriple, p: Point4):
    """Christoffel values at p (no curvature work); used by the geodesic flow."""
    G, dG, _ = _metric_derivatives(chart, weights, p)
    det = np.linalg.det(G)
    if abs(det) < _DET_TOL:
        raise DegenerateMetric(f"|det G| = {abs(det):.2e} at {p}")
    ginv = np.linalg.inv(G)
    sym = np.einsum("bdc->dbc", dG) + np.einsum("cdb->dbc", dG) - dG
    return 0.5 * np.einsum("ad,dbc->abc", ginv, sym)


def curvature(chart: ConformalChart, weights: WeightTriple, p: Point4) -> CurvatureAtPoint:
    G, dG, d2G = _metric_derivatives(chart, weights, p)
    det = np.linalg.det(G)
    if abs(det) < _DET_TOL:
        raise DegenerateMetric(f"|det G| = {abs(det):.2e} at {p}")
    ginv = np.linalg.inv(G)
    dginv = -np.einsum("ae,cef,fb->cab", ginv, dG, ginv)

    sym = np.einsum("bdc->dbc", dG) + np.einsum("cdb->dbc", dG) - dG
    dsym = np.einsum("ebdc->edbc", d2G) + np.einsum("ecdb->edbc", d2G) - d2G
    Gamma = 0.5 * np.einsum("ad,dbc->abc", ginv, sym)
    dGamma = 0.5 * (np.einsum("ead,dbc->eabc", dginv, sym)
                    + np.einsum("ad,edbc->eabc", ginv, dsym))

    R = (np.einsum("cadb->abcd", dGamma) - np.einsum("dacb->abcd", dGamma)
         + np.einsum("ace,edb->abcd", Gamma, Gamma)
         - np.einsum("ade,ecb->abcd", Gamma, Gamma))
    ricci = np.einsum("abad->bd", R)
    scalar = float(np.einsum("bd,bd->", ginv, ricci))
    return CurvatureAtPoint(p, Gamma, R, ricci, scalar, G)


# ---- geodesics -----------------------------------------------------------------


@dataclass
class GeodesicResult:
    t: np.ndarray
    states: np.ndarray        # (n, 8): position then velocity
    energy: np.ndarray
    exit_reason: str          # completed | domain-exit | singularity-approach

    @property
    def energy_drift_per_unit(self) -> float:
        span = self.t[-1] - self.t[0]
        if span == 0:
            return 0.0
        return float(np.max(np.abs(self.energy - self.energy[0])) / span)


def _metric_value(chart, weights, p):
    from .metric import assemble

    return assemble(chart, weights, p).G


def geodesic(chart: ConformalChart, weights: WeightTriple, position, velocity,
             t_end: float, rtol: float = 1e-10, atol: float = 1e-12,
             r2_domain: Optional[tuple] = None, r2_guard: float = 1e-3,
             max_points: int = 400) -> GeodesicResult:
    """Integrate the geodesic flow from (position, velocity) up to t_end.

    position is a Point4, velocity a real 4-vector.  Integration stops at
    the chart or r2-domain boundary (exit_reason 'domain-exit') or when the
    adaptive solver gives up near a singular boundary
    ('singularity-approach').
    """
    y0 = np.concatenate([position.reals(), np.asarray(velocity, dtype=float)])

    def rhs(_, y):
        p = Point4.from_reals(y[:4])
        Gam = christoffel(chart, weights, p)
        v = y[4:]
        acc = -np.einsum("abc,b,c->a", Gam, v, v)
        return np.concatenate([v, acc])

    events = []

    def boundary_event(_, y):
        p = Point4.from_reals(y[:4])
        margin = _domain_margin(chart, p)
        if r2_domain is not None:
            lo, hi = r2_domain
            r2 = chart.lambda_value(p.z) * abs(p.w) ** 2 if chart.domain.contains(p.z) else lo
            margin = min(margin, r2 - (lo + r2_guard))
            if not math.isinf(hi):
                margin = min(margin, (hi - r2_guard) - r2)
        return margin

    boundary_event.terminal = True
    events.append(boundary_event)

    try:
        sol = solve_ivp(rhs, (0.0, t_end), y0, method="RK45", rtol=rtol, atol=atol,
                        events=events, dense_output=False,
                        t_eval=np.linspace(0.0, t_end, max_points))
    except (DegenerateMetric, RealityError):
        return GeodesicResult(np.array([0.0]), y0[None, :], np.array([_energy(chart, weights, y0)]),
                              "singularity-approach")

    if sol.status == 1:
        reason = "domain-exit"
        t = np.append(sol.t, sol.t_events[0])
        states = np.vstack([sol.y.T, sol.y_events[0]]) if len(sol.y_events[0]) else sol.y.T
    elif sol.status == 0:
        reason = "completed"
        t, states = sol.t, sol.y.T
    else:
        reason = "singularity-approach"
        t, states = sol.t, sol.y.T
    energy = np.array([_energy(chart, weights, y) for y in states])
    return GeodesicResult(t, states, energy, reason)


def _energy(chart, weights, y):
    p = Point4.from_reals(y[:4])
    G = _metric_value(chart, weights, p)
    v = y[4:]
    return float(v @ G @ v)


def _domain_margin(chart, p):
    d = chart.domain
    if d.kind in ("plane", "torus"):
        return 1.0
    if d.kind == "disk":
        return d.radius * (1.0 - 1e-6) - abs(p.z)
    if d.kind == "annulus":
        return min(d.radius - abs(p.z), abs(p.z) - d.inner_radius)
    if d.kind == "half-plane":
        return p.z.imag
    return 1.0


# ---- radial lengths and completeness -------------------------------------------


def sqrt_h_on_fibre(chart: ConformalChart, weights: WeightTriple, z: complex):
    """The radial length integrand r -> sqrt(h) on the fibre over z."""
    lam = chart.lambda_value(z)

    def integrand(r: float) -> float:
        w = complex(r / math.sqrt(lam), 0.0)
        h = weights.h.evaluate_value(Point4(z, w), chart)
        if abs(h.imag) > 1e-9:
            raise RealityError(f"h not real on fibre at r = {r}")
        if h.real < 0:
            raise ValueError(f"h negative on fibre at r = {r}")
        return math.sqrt(h.real)

    return integrand


@dataclass
class ExponentFit:
    alpha: float
    prefactor: float
    rel_residual: float
    window: tuple


def fit_endpoint_exponent(integrand, endpoint: float, side: str, scale: float,
                          nodes: int = 32, decades: float = 2.0,
                          max_rel_residual: float = 0.05) -> ExponentFit:
    """Fit integrand ~ C * d^alpha near an endpoint (log-log least squares).

    d is distance to a finite endpoint (side 'above' or 'below'), or r
    itself for the endpoint at infinity (side 'inf').  The window spans
    `decades` decades ending at `scale`.  ExponentFitUnstable when the fit
    misses any node by more than max_rel_residual.
    """
    ds = np.logspace(math.log10(scale) - decades, math.log10(scale), nodes)
    if side == "above":
        rs = endpoint + ds
    elif side == "below":
        rs = endpoint - ds
    elif side == "inf":
        rs = scale * np.logspace(0.0, decades, nodes)
        ds = rs
    else:
        raise ValueError(f"unknown side '{side}'")
    vals = np.array([integrand(r) for r in rs])
    if np.any(vals <= 0):
        raise ExponentFitUnstable("integrand not positive inside the fit window")
    coeffs = np.polyfit(np.log(ds), np.log(vals), 1)
    fit = np.exp(np.polyval(coeffs, np.log(ds)))
    rel = float(np.max(np.abs(fit - vals) / vals))
    if rel > max_rel_residual:
        raise ExponentFitUnstable(f"endpoint fit residual {rel:.3f} exceeds {max_rel_residual}")
    return ExponentFit(float(coeffs[0]), float(math.exp(coeffs[1])), rel, (float(ds[0]), float(ds[-1])))


@dataclass
class FibreLength:
    value: float
    divergent: bool
    inner_fit: Optional[ExponentFit] = None
    outer_fit: Optional[ExponentFit] = None


def fibre_length(chart: ConformalChart, weights: WeightTriple, z: complex,
                 r_a: float, r_b: float, singular=(False, False)) -> FibreLength:
    """Length of the radial fibre curve between g-radii r_a and r_b.

    singular marks which interval ends touch a singular boundary of the
    weights; those ends are classified by exponent fit first and the
    quadrature runs only when both are integrable.  The value is inf when
    either end diverges.
    """
    integrand = sqrt_h_on_fibre(chart, weights, z)
    width = r_b - r_a if not math.isinf(r_b) else 1.0
    inner_fit = outer_fit = None
    divergent = False
    if singular[0]:
        inner_fit = fit_endpoint_exponent(integrand, r_a, "above", 0.05 * width)
        divergent |= inner_fit.alpha <= -1.0
    if singular[1]:
        if math.isinf(r_b):
            outer_fit = fit_endpoint_exponent(integrand, math.inf, "inf", max(10.0, 4.0 * r_a))
            divergent |= outer_fit.alpha >= -1.0
        else:
            outer_fit = fit_endpoint_exponent(integrand, r_b, "below", 0.05 * width)
            divergent |= outer_fit.alpha <= -1.0
    if divergent:
        return FibreLength(math.inf, True, inner_fit, outer_fit)
    ub = r_b if not math.isinf(r_b) else 100.0 * max(1.0, r_a)
    value, _ = quad(integrand, r_a, ub, epsabs=1e-10, epsrel=1e-9, limit=400)
    return FibreLength(float(value), False, inner_fit, outer_fit)


@dataclass
class CompletenessReport:
    family_kind: str
    inner: str                 # infinite-distance | finite-distance
    outer: str
    inner_fit: ExponentFit
    outer_fit: ExponentFit
    verdict: str

    _VERDICTS = {
        ("infinite-distance", "infinite-distance"): "complete",
        ("infinite-distance", "finite-distance"): "complete-away-from-zero-section",
        ("finite-distance", "infinite-distance"): "complete-with-boundary-added",
        ("finite-distance", "finite-distance"): "completable-both-boundaries",
    }


def completeness_report(family, chart: ConformalChart, z: complex = None) -> CompletenessReport:
    """Classify each r^2-domain endpoint of the family by radial distance.

    For each endpoint the exponent of sqrt(h) is fitted; an endpoint is at
    infinite distance when the length integral toward it diverges
    (alpha <= -1 at a finite endpoint, alpha >= -1 at infinity).
    """
    if z is None:
        z = 0.5 + 0.25j if chart.domain.contains(0.5 + 0.25j) else 0.0j
    integrand = sqrt_h_on_fibre(chart, weights := family.weights, z)
    lo, hi = family.r2_domain
    r_lo = math.sqrt(lo)
    width = (math.sqrt(hi) - r_lo) if not math.isinf(hi) else 1.0

    inner_fit = fit_endpoint_exponent(integrand, r_lo, "above", 0.05 * width)
    inner = "infinite-distance" if inner_fit.alpha <= -1.0 else "finite-distance"
    if math.isinf(hi):
        outer_fit = fit_endpoint_exponent(integrand, math.inf, "inf", max(10.0, 4.0 * r_lo))
        outer = "infinite-distance" if outer_fit.alpha >= -1.0 else "finite-distance"
    else:
        outer_fit = fit_endpoint_exponent(integrand, math.sqrt(hi), "below", 0.05 * width)
        outer = "infinite-distance" if outer_fit.alpha <= -1.0 else "finite-distance"
    verdict = CompletenessReport._VERDICTS[(inner, outer)]
    return CompletenessReport(getattr(family, "kind", "custom"), inner, outer,
                              inner_fit, outer_fit, verdict)


def length_profile(chart, weights, z, r_values):
    """Rows (r, sqrt_h, cumulative length) for CSV export."""
    integrand = sqrt_h_on_fibre(chart, weights, z)
    rows = []
    total = 0.0
    prev = None
    for r in r_values:
        v = integrand(r)
        if prev is not None:
            seg, _ = quad(integrand, prev, r, epsabs=1e-10, epsrel=1e-9, limit=200)
            total += seg
        rows.append((r, v, total))
        prev = r
    return rows
