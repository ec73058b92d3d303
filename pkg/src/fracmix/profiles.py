"""Closed-form test profiles on the spectral line.

A :class:`PolyExp` is a finite sum of terms ``P(lam) * exp(-a lam**2 - b lam)``
with complex polynomial ``P``.  The class is closed under multiplication by
``lam`` and under ``d/dlam``, hence under every model generator, so high-order
Sobolev budgets can be evaluated without repeated finite differencing.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial import Polynomial


@dataclass(frozen=True)
class Term:
    poly: Polynomial
    a: complex = 0.0
    b: complex = 0.0

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self.poly(lam) * np.exp(-self.a * lam**2 - self.b * lam)

    def derivative(self):
        dq = Polynomial([-self.b, -2.0 * self.a])
        return Term(self.poly.deriv() + self.poly * dq, self.a, self.b)

    def times_lam(self, c=1.0):
        return Term(self.poly * Polynomial([0.0, c]), self.a, self.b)

    def scaled(self, c):
        return Term(self.poly * c, self.a, self.b)


def _poly(coef):
    return Polynomial(np.asarray(coef, dtype=complex))


@dataclass(frozen=True)
class PolyExp:
    terms: Tuple[Term, ...]

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.zeros(lam.shape, dtype=complex)
        for t in self.terms:
            out += t(lam)
        return out

    def __add__(self, other):
        return PolyExp(self.terms + other.terms)

    def __mul__(self, c):
        return PolyExp(tuple(t.scaled(c) for t in self.terms))

    __rmul__ = __mul__

    def derivative(self):
        return PolyExp(tuple(t.derivative() for t in self.terms))

    def times_lam(self, c=1.0):
        return PolyExp(tuple(t.times_lam(c) for t in self.terms))

    def dilate(self, c):
        """Profile of ``lam -> f(c * lam)``."""
        out = []
        for t in self.terms:
            coef = t.poly.coef * c ** np.arange(len(t.poly.coef))
            out.append(Term(_poly(coef), t.a * c * c, t.b * c))
        return PolyExp(tuple(out))

    def modulate(self, t):
        """Profile of ``lam -> exp(-1j lam t) f(lam)``."""
        return PolyExp(tuple(Term(s.poly, s.a, s.b + 1j * t) for s in self.terms))

    # generator actions in the Fourier model
    def apply_U(self):
        return self.times_lam(-1j)

    def apply_X(self, varpi):
        return self * (varpi - 1.0) + self.derivative().times_lam(-2.0)

    def apply_V(self, varpi):
        d1 = self.derivative()
        return (d1 * (varpi - 1.0) + d1.derivative().times_lam(-1.0)) * 1j

    def apply(self, gen, varpi):
        if gen == "U":
            return self.apply_U()
        if gen == "X":
            return self.apply_X(varpi)
        if gen == "V":
            return self.apply_V(varpi)
        raise ValueError(f"unknown generator {gen!r}")


def gaussian(center=0.0, width=1.0, amplitude=1.0):
    """``amplitude * exp(-((lam - center) / width)**2)``."""
    a = 1.0 / width**2
    b = -2.0 * center / width**2
    k = amplitude * np.exp(-(center**2) / width**2)
    return PolyExp((Term(_poly([k]), a, b),))


def monomial_gaussian(power, width=1.0, amplitude=1.0):
    """``amplitude * lam**power * exp(-(lam / width)**2)``."""
    coef = np.zeros(power + 1, dtype=complex)
    coef[power] = amplitude
    return PolyExp((Term(_poly(coef), 1.0 / width**2, 0.0),))


def laguerre_profile(power, rate=1.0, amplitude=1.0):
    """``amplitude * lam**power * exp(-rate * lam)`` (half-line vectors)."""
    coef = np.zeros(power + 1, dtype=complex)
    coef[power] = amplitude
    return PolyExp((Term(_poly(coef), 0.0, rate),))
