"""Tangent-manifold apparatus over a chart: eta, X, r^2 and the pullback connection.

Complex one-forms are stored as length-4 complex vectors of their values on
the real coordinate fields (d/dx, d/dy, d/ds, d/dt); coordinate order is
fixed package-wide as (x, y, s, t) with z = x + iy, w = s + it.  The
vertical (1,0)-form is eta = w Gamma dz + dw, the horizontal (1,0)-generator
X = d/dz - w Gamma d/dw, with eta(X) = 0 and eta(d/dw) = 1 by construction.

The pullback connection acts on the coordinate coframe (dz, dzbar, dw, dwbar) by

    along d/dz:  dz -> -Gamma dz,  dzbar -> 0,
                 dw -> -w (dGamma/dz) dz - Gamma dw,
                 dwbar -> -wbar (dGammabar/dz) dzbar
    along d/dw:  dw -> -Gamma dz, all others -> 0

(and conjugate mirrors along d/dzbar, d/dwbar).  Both lifted metrics
lambda dz dzbar and lambda eta etabar are parallel for it; the residual
functions below measure exactly that, with every coefficient derivative
taken from jets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet2, Point4, wirtinger, wirtinger2, wirtinger_jet, seed_complex
from .surface import ConformalChart, gamma_jet

DZ = np.array([1.0, 1.0j, 0.0, 0.0])
DZB = DZ.conj()
DW = np.array([0.0, 0.0, 1.0, 1.0j])
DWB = DW.conj()

_FORM_NAMES = ("dz", "dzbar", "dw", "dwbar")


@dataclass
class FrameData:
    at: Point4
    lam: complex
    gamma: complex
    eta_dz_coeff: complex       # w * Gamma
    X_vertical_coeff: complex   # -w * Gamma

    @property
    def eta(self):
        return self.eta_dz_coeff * DZ + DW

    @property
    def dz(self):
        return DZ

    def eta_of(self, v):
        """eta evaluated on a real tangent 4-vector."""
        return complex(self.eta @ np.asarray(v))


def frame_at(chart: ConformalChart, p: Point4) -> FrameData:
    lam = chart.lambda_jet(p)
    g = wirtinger(lam, "z") / lam.value
    return FrameData(p, lam.value, g, p.w * g, -p.w * g)


def r2_jet(chart: ConformalChart, p: Point4) -> Jet2:
    env = seed_complex(p)
    return chart.lambda_jet(p) * env["w"] * env["wbar"]


def dr2_identity_residual(chart: ConformalChart, p: Point4) -> float:
    """Max coordinate-direction deviation of dr^2 from lambda (w etabar + wbar eta)."""
    fd = frame_at(chart, p)
    dr2 = r2_jet(chart, p).grad
    rhs = fd.lam * (p.w * np.conj(fd.eta) + p.w.conjugate() * fd.eta)
    return float(np.max(np.abs(dr2 - rhs)))


# ---- pullback-connection tables ----------------------------------------------


def _connection_coefficients(chart, p):
    """C[v][A, D] with derivative along v of theta^A equal to sum_D C[A, D] theta^D."""
    lam = chart.lambda_jet(p)
    g = wirtinger(lam, "z") / lam.value
    loglam = lam.log()
    dg_z = wirtinger2(loglam, "z", "z")        # dGamma/dz
    dg_zbar = wirtinger2(loglam, "z", "zbar")  # dGamma/dzbar
    w, wb = p.w, p.w.conjugate()
    gb = g.conjugate()

    Cz = np.zeros((4, 4), dtype=complex)
    Cz[0, 0] = -g
    Cz[2, 0] = -w * dg_z
    Cz[2, 2] = -g
    Cz[3, 1] = -wb * dg_zbar.conjugate()       # dGammabar/dz = conj(dGamma/dzbar)

    Czb = np.zeros((4, 4), dtype=complex)
    Czb[1, 1] = -gb
    Czb[3, 1] = -wb * dg_z.conjugate()
    Czb[3, 3] = -gb
    Czb[2, 0] = -w * dg_zbar

    Cw = np.zeros((4, 4), dtype=complex)
    Cw[2, 0] = -g

    Cwb = np.zeros((4, 4), dtype=complex)
    Cwb[3, 1] = -gb

    return {"z": Cz, "zbar": Czb, "w": Cw, "wbar": Cwb}


def _eta_coefficient_jets(chart, p):
    """Jets of the eta coefficients (w Gamma, 0, 1, 0) on the coordinate coframe."""
    env = seed_complex(p)
    wg = env["w"] * gamma_jet(chart, p)
    return [wg, Jet2(0.0), Jet2(1.0), Jet2(0.0)]


def nabla_star_table_residual(chart: ConformalChart, p: Point4) -> dict:
    """Residuals certifying the derivative tables at p.

    Checks, per direction v in (z, zbar, w, wbar):
      * parallelism of the horizontal metric lambda dz dzbar,
      * parallelism of the vertical metric lambda eta etabar,
      * the closed forms for the derivatives of eta
        (-Gamma eta along z, zero along zbar, w, wbar),
    where coefficient derivatives come from jets and connection terms from
    the table.  Returns named residuals plus their max under key "max".
    """
    C = _connection_coefficients(chart, p)
    lam = chart.lambda_jet(p)
    eta_jets = _eta_coefficient_jets(chart, p)
    g = wirtinger(lam, "z") / lam.value
    eta_vals = np.array([j.value for j in eta_jets])

    # Tensor entry jets: T1 = lambda dz (x) dzbar, T2 = lambda eta (x) etabar.
    # Conjugating a form swaps its dz/dzbar and dw/dwbar coefficients.
    T1 = [[Jet2(0.0)] * 4 for _ in range(4)]
    T1[0][1] = lam
    swap = (1, 0, 3, 2)
    etabar_jets = [eta_jets[swap[b]].conj() for b in range(4)]
    T2 = [[eta_jets[a] * etabar_jets[b] * lam for b in range(4)] for a in range(4)]

    def tensor_residual(T):
        worst = 0.0
        vals = np.array([[T[a][b].value for b in range(4)] for a in range(4)])
        for v, Cv in C.items():
            dT = np.array([[wirtinger(T[a][b], v) for b in range(4)] for a in range(4)])
            res = dT + Cv.T @ vals + vals @ Cv
            worst = max(worst, float(np.max(np.abs(res))))
        return worst

    closed_eta = {
        "z": -g * eta_vals,
        "zbar": np.zeros(4, dtype=complex),
        "w": np.zeros(4, dtype=complex),
        "wbar": np.zeros(4, dtype=complex),
    }
    eta_res = {}
    for v, Cv in C.items():
        deriv = np.array([wirtinger(j, v) for j in eta_jets]) + Cv.T @ eta_vals
        eta_res[f"eta_{v}"] = float(np.max(np.abs(deriv - closed_eta[v])))

    out = {
        "pi_pullback_metric_parallel": tensor_residual(T1),
        "pi_vertical_metric_parallel": tensor_residual(T2),
        **eta_res,
    }
    out["max"] = max(out.values())
    return out


def deta_coefficients(chart: ConformalChart, p: Point4) -> dict:
    """Wedge coefficients of d(eta) on the six coordinate pairs."""
    P = _eta_coefficient_jets(chart, p)[0]  # the w Gamma coefficient; others constant
    return {
        ("dz", "dzbar"): -wirtinger(P, "zbar"),
        ("dz", "dw"): -wirtinger(P, "w"),
        ("dz", "dwbar"): -wirtinger(P, "wbar"),
        ("dzbar", "dw"): 0.0,
        ("dzbar", "dwbar"): 0.0,
        ("dw", "dwbar"): 0.0,
    }


def deta_02_part(chart: ConformalChart, p: Point4) -> complex:
    """The dzbar ^ dwbar component of d(eta); zero gives the holomorphic structure."""
    return deta_coefficients(chart, p)[("dzbar", "dwbar")]
