"""Assembly of ciconia metrics g_{f,a,h} from weight triples.

In coordinates the metric is (lambda/2)(f dz.dzbar + a dz.etabar
+ abar eta.dzbar + h eta.etabar) with alpha.beta the symmetrised tensor
product.  From one weight evaluation we produce:

  * G      real symmetric 4x4 matrix in the coordinate order (x, y, s, t),
  * H      the 2x2 Hermitian matrix on the holomorphic frame (d/dz, d/dw),
           with det H = lambda^2 * delta, delta = f h - |a|^2,
  * omega  the symplectic 2-form, as wedge coefficients and as the real
           antisymmetric matrix omega(e_a, e_b); omega = i/2 sum H_jk
           dzeta^j ^ dzetabar^k, and omega(u, v) = G(Ju, v) where J is the
           standard rotation (Jdx = dy, Jds = dt).

The signature classification follows the pointwise criteria on (f, delta):
riemannian for f > 0 < delta, negative-definite for f < 0 < delta, split
(2,2) for delta < 0, degenerate within threshold of the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import expr as _expr
from .bundle import DW, DZ, frame_at
from .errors import NotAnIsometry, RealityError
from .jets import Jet2, Point4, seed_complex, wirtinger
from .surface import ConformalChart

DEGENERACY_TOL = 1e-12
_REALITY_TOL = 1e-9

# J acts as multiplication by i on (z, w): Je_x = e_y, Je_y = -e_x, etc.
J_MATRIX = np.array([
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
])


class Weight:
    """Anything evaluable to a Jet2 at a point, with a dependence class."""

    dependence_class: str

    def evaluate(self, p: Point4, chart) -> Jet2:  # pragma: no cover - protocol
        raise NotImplementedError

    def evaluate_value(self, p: Point4, chart) -> complex:
        return self.evaluate(p, chart).value


class ExpressionWeight(Weight):
    def __init__(self, expression: _expr.Expression):
        self.expression = expression
        self.dependence_class = expression.dependence_class

    @property
    def source(self):
        return self.expression.source

    def evaluate(self, p, chart):
        return self.expression.evaluate(p, chart)

    def evaluate_value(self, p, chart):
        return self.expression.evaluate_value(p, chart)

    def __repr__(self):
        return f"ExpressionWeight({self.expression.source!r})"


def as_weight(w) -> Weight:
    if isinstance(w, Weight):
        return w
    if isinstance(w, _expr.Expression):
        return ExpressionWeight(w)
    if isinstance(w, str):
        return ExpressionWeight(_expr.parse(w))
    if isinstance(w, (int, float, complex)):
        return ExpressionWeight(_expr.parse(_expr._literal_source(complex(w))))
    raise TypeError(f"cannot interpret {w!r} as a weight")


@dataclass
class WeightTriple:
    f: Weight
    a: Weight
    h: Weight

    @staticmethod
    def make(f, a, h) -> "WeightTriple":
        return WeightTriple(as_weight(f), as_weight(a), as_weight(h))

    @property
    def classes(self):
        return (self.f.dependence_class, self.a.dependence_class, self.h.dependence_class)

    def eval_jets(self, p: Point4, chart):
        fj = self.f.evaluate(p, chart)
        aj = self.a.evaluate(p, chart)
        hj = self.h.evaluate(p, chart)
        for name, j in (("f", fj), ("h", hj)):
            if abs(j.value.imag) > _REALITY_TOL:
                raise RealityError(f"weight {name} at {p} has imaginary part {j.value.imag}")
        return fj, aj, hj

    def eval_values(self, p: Point4, chart):
        f = self.f.evaluate_value(p, chart)
        a = self.a.evaluate_value(p, chart)
        h = self.h.evaluate_value(p, chart)
        for name, v in (("f", f), ("h", h)):
            if abs(v.imag) > _REALITY_TOL:
                raise RealityError(f"weight {name} at {p} has imaginary part {v.imag}")
        return f.real, a, h.real

    def delta_jet(self, p: Point4, chart) -> Jet2:
        fj, aj, hj = self.eval_jets(p, chart)
        return fj * hj - aj.abs2()

    def delta_value(self, p: Point4, chart) -> float:
        f, a, h = self.eval_values(p, chart)
        return f * h - abs(a) ** 2


SASAKI = WeightTriple.make("1", "0", "1")


@dataclass
class MetricAtPoint:
    at: Point4
    G: np.ndarray                 # real symmetric 4x4
    H: np.ndarray                 # Hermitian 2x2 on (d/dz, d/dw)
    omega_matrix: np.ndarray      # real antisymmetric 4x4
    omega_wedge: dict             # coefficients on dz^dzbar, dz^dwbar, dw^dzbar, dw^dwbar
    signature: str
    f: float
    a: complex
    h: float
    delta: float
    lam: float
    gamma: complex


def _sym(alpha, beta):
    return np.outer(alpha, beta) + np.outer(beta, alpha)


def _wedge_matrix(pairs):
    """Real 4x4 matrix of a 2-form given as {(alpha, beta): coeff} wedge terms."""
    m = np.zeros((4, 4), dtype=complex)
    for (alpha, beta), c in pairs:
        m += c * (np.outer(alpha, beta) - np.outer(beta, alpha))
    return m


def assemble(chart: ConformalChart, weights: WeightTriple, p: Point4) -> MetricAtPoint:
    """Evaluate the metric at p: coordinate matrix, Hermitian frame matrix, omega."""
    f, a, h = weights.eval_values(p, chart)
    fd = frame_at(chart, p)
    lam = float(np.real(fd.lam))
    g = fd.gamma
    eta = fd.eta
    etabar = eta.conj()
    dzbar = DZ.conj()
    abar = a.conjugate()

    G_c = 0.5 * lam * (
        f * _sym(DZ, dzbar)
        + a * _sym(DZ, etabar)
        + abar * _sym(eta, dzbar)
        + h * _sym(eta, etabar)
    )
    if np.max(np.abs(G_c.imag)) > _REALITY_TOL:
        raise RealityError(f"assembled metric at {p} is not real")
    G = G_c.real

    wg = p.w * g
    H = lam * np.array([
        [f + h * abs(wg) ** 2 + 2.0 * (abar * wg).real, a + h * wg],
        [abar + h * wg.conjugate(), h],
    ])

    delta = f * h - abs(a) ** 2
    wedge = {
        ("dz", "dzbar"): 0.5j * H[0, 0],
        ("dz", "dwbar"): 0.5j * H[0, 1],
        ("dw", "dzbar"): 0.5j * H[1, 0],
        ("dw", "dwbar"): 0.5j * H[1, 1],
    }
    omega = _wedge_matrix([
        ((DZ, dzbar), wedge[("dz", "dzbar")]),
        ((DZ, DW.conj()), wedge[("dz", "dwbar")]),
        ((DW, dzbar), wedge[("dw", "dzbar")]),
        ((DW, DW.conj()), wedge[("dw", "dwbar")]),
    ])
    if np.max(np.abs(omega.imag)) > _REALITY_TOL:
        raise RealityError(f"symplectic form at {p} is not real")

    return MetricAtPoint(
        at=p, G=G, H=H, omega_matrix=omega.real, omega_wedge=wedge,
        signature=classify_signature(f, delta),
        f=f, a=a, h=h, delta=delta, lam=lam, gamma=g,
    )


def metric_entry_jets(chart: ConformalChart, weights: WeightTriple, p: Point4):
    """The sixteen coordinate metric entries as jets (for curvature work).

    Gamma enters through a truncated jet, so the entry Hessians are exact
    only for the combinations downstream code actually consumes (first
    derivatives of entries, and determinants where the Gamma terms cancel).
    They are exact in full whenever the chart is flat.
    """
    from .surface import gamma_jet

    fj, aj, hj = weights.eval_jets(p, chart)
    lam = chart.lambda_jet(p)
    env = seed_complex(p)
    wg = env["w"] * gamma_jet(chart, p)
    # Values of the forms on the coordinate fields (d/dx, d/dy, d/ds, d/dt).
    eta = [wg * DZ[k] + DW[k] for k in range(4)]
    etab = [eta[k].conj() for k in range(4)]
    dz = [Jet2(c) for c in DZ]
    dzb = [Jet2(c) for c in DZ.conj()]

    half_lam = lam * 0.5
    entries = [[None] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(i, 4):
            val = half_lam * (
                fj * (dz[i] * dzb[j] + dz[j] * dzb[i])
                + aj * (dz[i] * etab[j] + dz[j] * etab[i])
                + aj.conj() * (eta[i] * dzb[j] + eta[j] * dzb[i])
                + hj * (eta[i] * etab[j] + eta[j] * etab[i])
            )
            entries[i][j] = val
            entries[j][i] = val
    return entries


def hermitian_entry_jets(chart: ConformalChart, weights: WeightTriple, p: Point4):
    """The 2x2 Hermitian frame matrix as jets; det is exactly lambda^2 delta."""
    from .surface import gamma_jet

    fj, aj, hj = weights.eval_jets(p, chart)
    lam = chart.lambda_jet(p)
    env = seed_complex(p)
    wg = env["w"] * gamma_jet(chart, p)
    wgb = wg.conj()
    ab = aj.conj()
    return [
        [lam * (fj + hj * wg * wgb + ab * wg + aj * wgb), lam * (aj + hj * wg)],
        [lam * (ab + hj * wgb), lam * hj],
    ]


def classify_signature(f: float, delta: float, tol: float = DEGENERACY_TOL) -> str:
    if abs(delta) < tol or (abs(f) < tol and delta > 0):
        return "degenerate"
    if delta > 0:
        return "riemannian" if f > 0 else "negative-definite"
    return "split(2,2)"


def signature(weights: WeightTriple, chart: ConformalChart, p: Point4) -> str:
    f, a, h = weights.eval_values(p, chart)
    return classify_signature(f, f * h - abs(a) ** 2)


def eigenvalue_signature(G: np.ndarray, tol: float = 1e-9) -> str:
    """Classification read off the eigenvalue signs of the coordinate matrix."""
    ev = np.linalg.eigvalsh(G)
    if np.min(np.abs(ev)) < tol:
        return "degenerate"
    pos = int(np.sum(ev > 0))
    if pos == 4:
        return "riemannian"
    if pos == 0:
        return "negative-definite"
    if pos == 2:
        return "split(2,2)"
    return f"unexpected({pos},{4 - pos})"


def symplectic_form(chart: ConformalChart, weights: WeightTriple, p: Point4):
    """Wedge coefficients and real matrix of omega_{f,a,h} at p."""
    m = assemble(chart, weights, p)
    return m.omega_wedge, m.omega_matrix


def compatibility_residual(m: MetricAtPoint) -> float:
    """Max deviation of omega(u, v) from G(Ju, v) over the coordinate basis."""
    return float(np.max(np.abs(m.omega_matrix - J_MATRIX.T @ m.G)))


def frame_matrix(chart: ConformalChart, weights: WeightTriple, p: Point4) -> np.ndarray:
    """Metric matrix on the adapted orthonormal frame.

    The frame is the horizontal lift of the lambda^(-1/2)-normalised
    coordinate frame together with its vertical mirror; on it the matrix
    takes the block shape [[f, 0, b, c], [0, f, -c, b], [b, -c, h, 0],
    [c, b, 0, h]] with a = b + ic.
    """
    m = assemble(chart, weights, p)
    wg = p.w * m.gamma
    rt = 1.0 / math.sqrt(m.lam)
    E = np.array([
        [1.0, 0.0, -wg.real, -wg.imag],
        [0.0, 1.0, wg.imag, -wg.real],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]) * rt
    return E @ m.G @ E.T


def expected_frame_matrix(f: float, a: complex, h: float) -> np.ndarray:
    b, c = a.real, a.imag
    return np.array([
        [f, 0.0, b, c],
        [0.0, f, -c, b],
        [b, -c, h, 0.0],
        [c, b, 0.0, h],
    ])


@dataclass
class IsometryReport:
    base_residual: float
    weight_residual: float
    pullback_residual: float
    samples: int

    @property
    def max_residual(self):
        return max(self.weight_residual, self.pullback_residual)


def isometry_lift_check(chart: ConformalChart, weights: WeightTriple, phi: _expr.Expression,
                        samples, base_tol: float = 1e-9) -> IsometryReport:
    """Test whether the tangent lift of phi preserves g_{f,a,h}.

    phi must first be an isometry of the base: |dphi/dz|^2 lambda(phi(z)) =
    lambda(z) within base_tol, otherwise NotAnIsometry.  For a scalar field
    a the lift condition reduces to a(phi(z)) = a(z); the pullback of the
    assembled metric under (z, w) -> (phi(z), phi'(z) w) is compared as well.
    """
    if not phi.identifiers <= {"z"}:
        raise ValueError("isometry candidate must be a holomorphic expression in z")
    base_res = 0.0
    checked = []
    for p in samples:
        pj = phi.evaluate(Point4(p.z, 0j))
        z1 = pj.value
        if not chart.domain.contains(z1):
            continue
        dphi = wirtinger(pj, "z")
        base_res = max(base_res, abs(abs(dphi) ** 2 * chart.lambda_value(z1) - chart.lambda_value(p.z)))
        checked.append((p, pj, z1, dphi))
    if base_res > base_tol:
        raise NotAnIsometry(f"base map fails the conformal-factor test (residual {base_res:.3e})")

    weight_res = 0.0
    pullback_res = 0.0
    for p, pj, z1, dphi in checked:
        a_here = weights.a.evaluate_value(p, chart)
        a_there = weights.a.evaluate_value(Point4(z1, 0j), chart)
        weight_res = max(weight_res, abs(a_there - a_here))

        target = Point4(z1, dphi * p.w)
        jac = _lift_jacobian(phi, p)
        G_src = assemble(chart, weights, p).G
        G_tgt = assemble(chart, weights, target).G
        pullback_res = max(pullback_res, float(np.max(np.abs(jac.T @ G_tgt @ jac - G_src))))
    return IsometryReport(base_res, weight_res, pullback_res, len(checked))


def _lift_jacobian(phi: _expr.Expression, p: Point4) -> np.ndarray:
    """Real 4x4 Jacobian of (z, w) -> (phi(z), phi'(z) w) at p."""
    env = seed_complex(p)
    comp1 = _expr.eval_jet(phi, p)
    # phi'(z) as a truncated jet: value and gradient from comp1's higher slots.
    from .jets import wirtinger_jet

    comp2 = wirtinger_jet(comp1, "z") * env["w"]
    rows = []
    for comp in (comp1, comp2):
        rows.append(comp.grad.real)
        rows.append(comp.grad.imag)
    return np.array(rows)
