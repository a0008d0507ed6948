"""Conformal charts of the base Riemann surface.

A chart is a positive conformal factor lambda(z) on a domain, written in
isothermal gauge g = lambda dz dzbar.  Everything the base contributes to
the tangent-manifold geometry derives from lambda:

    Gamma = (1/lambda) dlambda/dz          (the only Christoffel datum)
    K     = -(2/lambda) d2(log lambda)/dz dzbar

Built-in models carry the standard constant-curvature factors: flat plane
and torus (lambda = 1, K = 0), round sphere (lambda = 4/(1+|z|^2)^2, K = 1)
and hyperbolic disk (lambda = 4/(1-|z|^2)^2, K = -1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from . import expr as _expr
from .errors import DomainError, RealityError
from .jets import Jet2, Point4, wirtinger, wirtinger2

_REALITY_TOL = 1e-12
_BOUNDARY_MARGIN = 1e-3


@dataclass(frozen=True)
class Domain:
    """Where a chart's coordinate lives: plane, disk, annulus or half-plane."""

    kind: str  # plane | disk | annulus | half-plane | torus
    radius: float = 2.0          # disk/annulus outer radius; plane sampling box half-width
    inner_radius: float = 0.0    # annulus only

    def contains(self, z: complex) -> bool:
        if self.kind in ("plane", "torus"):
            return True
        if self.kind == "disk":
            return abs(z) < self.radius
        if self.kind == "annulus":
            return self.inner_radius < abs(z) < self.radius
        if self.kind == "half-plane":
            return z.imag > 0
        raise ValueError(f"unknown domain kind '{self.kind}'")

    def map_unit_square(self, u, v):
        """Low-discrepancy unit-square points to domain points, margins kept."""
        if self.kind == "plane":
            b = self.radius * (1.0 - _BOUNDARY_MARGIN)
            return (2.0 * u - 1.0) * b + 1j * (2.0 * v - 1.0) * b
        if self.kind == "torus":
            return u + 1j * v
        if self.kind == "disk":
            r = self.radius * (1.0 - _BOUNDARY_MARGIN) * np.sqrt(u)
            return r * np.exp(2j * math.pi * v)
        if self.kind == "annulus":
            lo = self.inner_radius * (1.0 + _BOUNDARY_MARGIN)
            hi = self.radius * (1.0 - _BOUNDARY_MARGIN)
            r = np.sqrt(lo * lo + u * (hi * hi - lo * lo))
            return r * np.exp(2j * math.pi * v)
        if self.kind == "half-plane":
            b = self.radius
            return (2.0 * u - 1.0) * b + 1j * (_BOUNDARY_MARGIN + v * b)
        raise ValueError(f"unknown domain kind '{self.kind}'")


@dataclass(frozen=True)
class ConformalChart:
    name: str
    lambda_expr: _expr.Expression
    domain: Domain
    curvature: Optional[float] = None  # exact constant K for the built-in models

    def __post_init__(self):
        if self.lambda_expr.dependence_class not in ("constant", "base-only"):
            raise ValueError("conformal factor must depend on the base point only")

    def require_inside(self, z: complex):
        if not self.domain.contains(z):
            raise DomainError(f"z = {z} outside domain of chart '{self.name}'")

    def lambda_jet(self, p: Point4) -> Jet2:
        self.require_inside(p.z)
        lam = self.lambda_expr.evaluate(p)
        if abs(lam.value.imag) > _REALITY_TOL or lam.value.real <= 0:
            raise RealityError(f"lambda({p.z}) = {lam.value} is not a positive real")
        return lam

    def lambda_value(self, z: complex) -> float:
        self.require_inside(z)
        lam = self.lambda_expr.evaluate_value(Point4(z, 0j))
        if abs(lam.imag) > _REALITY_TOL or lam.real <= 0:
            raise RealityError(f"lambda({z}) = {lam} is not a positive real")
        return lam.real


def gamma(chart: ConformalChart, z: complex) -> complex:
    """Connection coefficient (1/lambda) dlambda/dz at z."""
    lam = chart.lambda_jet(Point4(z, 0j))
    return wirtinger(lam, "z") / lam.value


def gamma_jet(chart: ConformalChart, p: Point4) -> Jet2:
    """Gamma as a truncated jet: value and gradient exact, Hessian zero."""
    lam = chart.lambda_jet(p)
    g = lam.log()
    return Jet2(wirtinger(g, "z"), np.array([0.5, -0.5j, 0.0, 0.0]) @ g.hess)


def gauss_curvature(chart: ConformalChart, z: complex) -> float:
    """K = -(2/lambda) d2(log lambda)/dz dzbar; checked real."""
    lam = chart.lambda_jet(Point4(z, 0j))
    k = -2.0 * wirtinger2(lam.log(), "z", "zbar") / lam.value
    if abs(k.imag) > 1e-10:
        raise RealityError(f"curvature at {z} has imaginary part {k.imag}")
    return k.real


def sample_base(chart: ConformalChart, n: int, seed: int):
    """n low-discrepancy points of the chart domain (complex array)."""
    h = qmc.Halton(d=2, scramble=True, seed=seed)
    uv = h.random(n)
    return chart.domain.map_unit_square(uv[:, 0], uv[:, 1])


def sample_points(chart, n, seed, r2_interval=None, w_radius=(0.25, 1.5), r2_margin=1e-2):
    """Sample points of the tangent manifold over the chart.

    With r2_interval the fibre radius is chosen so r^2 = lambda |w|^2 lands
    in the interval, at least r2_margin away from each finite endpoint (an
    infinite upper endpoint is capped at lo + 10).  Otherwise |w| is drawn
    from w_radius, keeping points off the zero-section.
    """
    zs = sample_base(chart, n, seed)
    h = qmc.Halton(d=2, scramble=True, seed=seed + 104729)
    uv = h.random(n)
    points = []
    for z, (u, v) in zip(zs, uv):
        lam = chart.lambda_value(z)
        if r2_interval is not None:
            lo, hi = r2_interval
            lo = lo + r2_margin
            hi = (lo + 10.0) if math.isinf(hi) else hi - r2_margin
            if hi <= lo:
                raise ValueError(f"r2 interval {r2_interval} too narrow for margin {r2_margin}")
            r2 = lo + u * (hi - lo)
            radius = math.sqrt(r2 / lam)
        else:
            radius = w_radius[0] + u * (w_radius[1] - w_radius[0])
        points.append(Point4(complex(z), radius * complex(math.cos(2 * math.pi * v), math.sin(2 * math.pi * v))))
    return points


# ---- built-in models ---------------------------------------------------------


def _model(name, lam_src, domain, curvature):
    return ConformalChart(name, _expr.parse(lam_src), domain, curvature)


MODELS = {
    "flat": _model("flat", "1", Domain("plane", radius=2.0), 0.0),
    "torus": _model("torus", "1", Domain("torus"), 0.0),
    "sphere": _model("sphere", "4/(1+abs2(z))^2", Domain("plane", radius=2.0), 1.0),
    "hyperbolic": _model("hyperbolic", "4/(1-abs2(z))^2", Domain("disk", radius=1.0), -1.0),
}


def get_chart(name_or_chart, lambda_source=None, domain=None) -> ConformalChart:
    """Look up a model by name, or build a custom chart from an expression."""
    if isinstance(name_or_chart, ConformalChart):
        return name_or_chart
    if lambda_source is not None:
        return ConformalChart(name_or_chart, _expr.parse(lambda_source), domain or Domain("plane"))
    try:
        return MODELS[name_or_chart]
    except KeyError:
        raise DomainError(f"unknown chart model '{name_or_chart}'")


def constant_curvature(chart: ConformalChart, n=50, seed=7, tol=1e-8):
    """Sampled curvature of the chart, insisting it is constant within tol."""
    if chart.curvature is not None:
        return chart.curvature
    ks = [gauss_curvature(chart, z) for z in sample_base(chart, n, seed)]
    k = float(np.mean(ks))
    if float(np.std(ks)) > tol:
        raise RealityError(f"chart '{chart.name}' curvature not constant (std {np.std(ks):.2e})")
    return k


# ---- chart transitions -------------------------------------------------------


@dataclass(frozen=True)
class ChartTransition:
    """Holomorphic coordinate change z1(z) with inverse z(z1)."""

    forward: _expr.Expression   # z1 as a function of z
    inverse: _expr.Expression   # z as a function of z1

    def __post_init__(self):
        for e in (self.forward, self.inverse):
            if not e.identifiers <= {"z"}:
                raise ValueError("transition maps must be holomorphic expressions in z")


@dataclass
class TransitionReport:
    identity_residual: float
    lambda_residual: float
    gamma_residual: float
    w_residual: float
    eta_residual: float
    samples: int

    @property
    def max_residual(self):
        return max(self.identity_residual, self.lambda_residual,
                   self.gamma_residual, self.w_residual, self.eta_residual)


def verify_transition(t: ChartTransition, c1: ConformalChart, c2: ConformalChart,
                      samples, lambda_scale=1.0) -> TransitionReport:
    """Check the transition laws at sample points (z, w) of chart 1.

    Laws checked: lambda1 = |dz/dz1|^2 lambda, the Gamma transformation,
    w1 = (dz1/dz) w, and the eta transformation pulled back to chart-1
    coordinates.  lambda_scale deliberately mis-scales the target factor for
    negative controls; deviations are reported, never thrown.
    """
    id_res = lam_res = gam_res = w_res = eta_res = 0.0
    count = 0
    for p in samples:
        z, w = p.z, p.w
        fwd = t.forward.evaluate(Point4(z, 0j))
        z1 = fwd.value
        if not c2.domain.contains(z1):
            continue
        count += 1
        jac = wirtinger(fwd, "z")            # dz1/dz
        jac2 = wirtinger2(fwd, "z", "z")     # d2z1/dz2
        inv = t.inverse.evaluate(Point4(z1, 0j))
        id_res = max(id_res, abs(inv.value - z))
        inv_jac = wirtinger(inv, "z")        # dz/dz1 at z1
        inv_jac2 = wirtinger2(inv, "z", "z")

        lam = c1.lambda_value(z)
        lam1 = c2.lambda_value(z1) * lambda_scale
        lam_res = max(lam_res, abs(lam1 - lam * abs(inv_jac) ** 2))

        g = gamma(c1, z)
        g1 = gamma(c2, z1)
        gam_res = max(gam_res, abs(g1 - (inv_jac * g + jac * inv_jac2)))

        # w1 = (dz1/dz) w; its content is the invariance of r^2 = lambda |w|^2.
        w1 = jac * w
        w_res = max(w_res, abs(lam1 * abs(w1) ** 2 - lam * abs(w) ** 2))

        # eta1 pulled back along dz1 = jac dz, dw1 = w jac2 dz + jac dw,
        # compared with (dz1/dz) eta.
        eta1_dz = w1 * g1 * jac + w * jac2
        eta1_dw = jac
        eta_dz, eta_dw = w * g, 1.0
        eta_res = max(eta_res, abs(eta1_dz - jac * eta_dz), abs(eta1_dw - jac * eta_dw))
    return TransitionReport(id_res, lam_res, gam_res, w_res, eta_res, count)
