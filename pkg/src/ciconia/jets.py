"""Second-order jet arithmetic in the real coordinates (x, y, s, t).

A :class:`Jet2` carries a complex value together with all first and second
partial derivatives with respect to the four real coordinates of the tangent
manifold, where z = x + iy is the base coordinate and w = s + it the fibre
coordinate.  Arithmetic propagates derivatives exactly (Leibniz and chain
rules), so downstream geometric formulas are differentiated to machine
precision instead of symbolically.

Wirtinger combinations are extracted on demand:

    d/dz = (d/dx - i d/dy) / 2        d/dw = (d/ds - i d/dt) / 2

and their conjugates.  Derivatives are carried in the real basis precisely
because the weight functions may depend on zbar and wbar.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PoleError

COORDS = ("x", "y", "s", "t")

# Complex combinations of the real partials giving each Wirtinger direction.
_WIRT = {
    "z": np.array([0.5, -0.5j, 0.0, 0.0]),
    "zbar": np.array([0.5, 0.5j, 0.0, 0.0]),
    "w": np.array([0.0, 0.0, 0.5, -0.5j]),
    "wbar": np.array([0.0, 0.0, 0.5, 0.5j]),
}


@dataclass(frozen=True)
class Point4:
    """A point of the tangent manifold in complex coordinates (z, w)."""

    z: complex
    w: complex

    @property
    def x(self):
        return self.z.real

    @property
    def y(self):
        return self.z.imag

    @property
    def s(self):
        return self.w.real

    @property
    def t(self):
        return self.w.imag

    def reals(self):
        return np.array([self.x, self.y, self.s, self.t], dtype=float)

    @staticmethod
    def from_reals(r) -> "Point4":
        return Point4(complex(r[0], r[1]), complex(r[2], r[3]))

    def shifted(self, offsets) -> "Point4":
        return Point4.from_reals(self.reals() + np.asarray(offsets, dtype=float))


class Jet2:
    """Complex value with exact gradient (4,) and symmetric Hessian (4, 4)."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad=None, hess=None):
        self.value = complex(value)
        self.grad = np.zeros(4, dtype=complex) if grad is None else grad
        self.hess = np.zeros((4, 4), dtype=complex) if hess is None else hess

    @staticmethod
    def constant(value) -> "Jet2":
        return Jet2(value)

    @staticmethod
    def variable(value, slot: int) -> "Jet2":
        g = np.zeros(4, dtype=complex)
        g[slot] = 1.0
        return Jet2(value, g)

    # ---- ring operations -------------------------------------------------

    def __add__(self, other):
        other = _lift(other)
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __sub__(self, other):
        other = _lift(other)
        return Jet2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)

    def __rsub__(self, other):
        return _lift(other).__sub__(self)

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __mul__(self, other):
        other = _lift(other)
        cross = np.outer(self.grad, other.grad)
        return Jet2(
            self.value * other.value,
            self.grad * other.value + other.grad * self.value,
            self.hess * other.value + other.hess * self.value + cross + cross.T,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * _lift(other)._reciprocal()

    def __rtruediv__(self, other):
        return _lift(other) * self._reciprocal()

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("jet exponents must be integers")
        if n == 0:
            return Jet2(1.0)
        if n < 0:
            return (self ** (-n))._reciprocal()
        v = self.value
        return self._compose(v**n, n * v ** (n - 1), n * (n - 1) * v ** (n - 2) if n >= 2 else 0.0)

    def _reciprocal(self):
        if self.value == 0:
            raise PoleError("division by zero")
        inv = 1.0 / self.value
        return self._compose(inv, -inv * inv, 2.0 * inv * inv * inv)

    def _compose(self, f0, f1, f2):
        # Univariate chain rule through this jet: f(self).
        g = np.outer(self.grad, self.grad)
        return Jet2(f0, f1 * self.grad, f1 * self.hess + f2 * g)

    # ---- smooth primitives -----------------------------------------------

    def exp(self):
        e = cmath.exp(self.value)
        return self._compose(e, e, e)

    def log(self):
        if self.value == 0:
            raise DomainError("log of zero")
        inv = 1.0 / self.value
        return self._compose(cmath.log(self.value), inv, -inv * inv)

    def sqrt(self):
        # Principal branch: nonnegative real part, cut along the negative reals.
        if self.value == 0:
            raise DomainError("sqrt at zero has a singular derivative")
        r = cmath.sqrt(self.value)
        return self._compose(r, 0.5 / r, -0.25 / (r * self.value))

    def conj(self):
        return Jet2(self.value.conjugate(), np.conj(self.grad), np.conj(self.hess))

    def abs2(self):
        return self * self.conj()

    def truncated(self) -> "Jet2":
        """Copy with the Hessian zeroed; first-order information only."""
        return Jet2(self.value, self.grad.copy())

    def __repr__(self):
        return f"Jet2({self.value!r})"


def _lift(x):
    return x if isinstance(x, Jet2) else Jet2(x)


def seed_variables(p: Point4):
    """Jets of the four independent coordinates x, y, s, t at p."""
    return tuple(Jet2.variable(v, k) for k, v in enumerate(p.reals()))


def seed_complex(p: Point4):
    """Jets of z, zbar, w, wbar built from seeded real coordinates."""
    x, y, s, t = seed_variables(p)
    z = x + 1j * y
    w = s + 1j * t
    return {"z": z, "zbar": z.conj(), "w": w, "wbar": w.conj()}


def wirtinger(j: Jet2, which: str) -> complex:
    """First Wirtinger derivative of j along z, zbar, w or wbar."""
    return complex(_WIRT[which] @ j.grad)


def wirtinger2(j: Jet2, first: str, second: str) -> complex:
    """Second Wirtinger derivative d^2 j / d(first) d(second)."""
    return complex(_WIRT[first] @ j.hess @ _WIRT[second])


def wirtinger_jet(j: Jet2, which: str) -> Jet2:
    """First Wirtinger derivative of j as a jet.

    The result is truncated: its value and gradient are exact but its Hessian
    is zero (third derivatives of j are not carried).  Callers must not
    consume second derivatives of the returned jet.
    """
    return Jet2(_WIRT[which] @ j.grad, _WIRT[which] @ j.hess)


def fd_crosscheck(fn, p: Point4, step: float = 1e-4, threshold: float = 1e-6) -> float:
    """Max scaled deviation between jet derivatives of fn and central differences.

    fn maps a Point4 to a Jet2; the finite-difference stencil consumes only
    values.  Evaluation failures inside the stencil propagate to the caller.
    When the plain second-order stencil misses the threshold, a Richardson
    pass at half step refines the estimate and the smaller deviation is kept.
    """
    jet = fn(p)
    dev = _fd_deviation(fn, p, jet, step)
    if dev > threshold:
        fine = _fd_deviation(fn, p, jet, step / 2.0, coarse_step=step)
        dev = min(dev, fine)
    return dev


def _fd_deviation(fn, p, jet, h, coarse_step=None):
    value = lambda offs: fn(p.shifted(offs)).value
    v0 = value((0.0, 0.0, 0.0, 0.0))

    def first(i, hh):
        e = np.zeros(4)
        e[i] = hh
        return (value(e) - value(-e)) / (2.0 * hh)

    def second(i, j, hh):
        ei, ej = np.zeros(4), np.zeros(4)
        ei[i], ej[j] = hh, hh
        if i == j:
            return (value(ei) - 2.0 * v0 + value(-ei)) / (hh * hh)
        return (value(ei + ej) - value(ei - ej) - value(-ei + ej) + value(-ei - ej)) / (4.0 * hh * hh)

    def estimate(d):
        if coarse_step is None:
            return d(h)
        # Richardson: combine the h and h/2 central estimates (both second order).
        return d(h) + (d(h) - d(coarse_step)) / 3.0

    dev = abs(jet.value - v0) / max(1.0, abs(jet.value))
    for i in range(4):
        fd = estimate(lambda hh, i=i: first(i, hh))
        dev = max(dev, _scaled_diff(jet.grad[i], fd))
    for i in range(4):
        for j in range(i, 4):
            fd = estimate(lambda hh, i=i, j=j: second(i, j, hh))
            dev = max(dev, _scaled_diff(jet.hess[i, j], fd))
    return dev


def _scaled_diff(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))
