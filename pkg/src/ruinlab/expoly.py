"""Exponential polynomials f(t) = sum_j coef_j * t**k_j * exp(-rate_j * t).

Closed under products, shifts and the integral transforms the overshoot
and exit formulas need, which keeps every scalar analytic in closed form.
"""

from __future__ import annotations

from collections import defaultdict
from math import comb, factorial

import numpy as np

__all__ = ["ExpPoly"]


def _antideriv(k: int, beta: float):
    """Coefficients c_j with d/ds[exp(beta s) sum_j c_j s^j] = s^k exp(beta s)."""
    return {k - j: (-1) ** j * factorial(k) / factorial(k - j) / beta ** (j + 1) for j in range(k + 1)}


class ExpPoly:
    __slots__ = ("terms",)

    def __init__(self, terms=()):
        acc: dict = defaultdict(float)
        for coef, k, rate in terms:
            if coef != 0.0:
                acc[(int(k), float(rate))] += float(coef)
        self.terms = [(c, k, r) for (k, r), c in sorted(acc.items()) if c != 0.0]

    def __repr__(self):
        return f"ExpPoly({self.terms})"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c, k, r in self.terms:
            out = out + c * t**k * np.exp(-r * t)
        return out if out.ndim else float(out)

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        return ExpPoly(self.terms + other.terms)

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + other.scale(-1.0)

    def __mul__(self, other: "ExpPoly") -> "ExpPoly":
        return ExpPoly((c1 * c2, k1 + k2, r1 + r2) for c1, k1, r1 in self.terms for c2, k2, r2 in other.terms)

    def scale(self, a: float) -> "ExpPoly":
        return ExpPoly((a * c, k, r) for c, k, r in self.terms)

    @classmethod
    def const(cls, a: float) -> "ExpPoly":
        return cls([(a, 0, 0.0)])

    def shift(self, s0: float) -> "ExpPoly":
        """t -> f(t + s0)."""
        out = []
        for c, k, r in self.terms:
            e = c * np.exp(-r * s0)
            out += [(e * comb(k, j) * s0 ** (k - j), j, r) for j in range(k + 1)]
        return ExpPoly(out)

    def integral(self, lo: float, hi: float) -> float:
        """Definite integral over [lo, hi]; hi may be inf when all rates > 0."""
        total = 0.0
        for c, k, r in self.terms:
            if r == 0.0:
                if np.isinf(hi):
                    raise ValueError("divergent integral")
                total += c * (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
                continue
            anti = _antideriv(k, -r)
            F = lambda s: 0.0 if np.isinf(s) else np.exp(-r * s) * sum(a * s**p for p, a in anti.items())
            if np.isinf(hi) and r < 0:
                raise ValueError("divergent integral")
            total += c * (F(hi) - F(lo))
        return float(total)

    def tail(self) -> "ExpPoly":
        """t -> integral of f over [t, inf)."""
        out = []
        for c, k, r in self.terms:
            if r <= 0:
                raise ValueError("tail integral needs positive rates")
            for p, a in _antideriv(k, -r).items():
                out.append((-c * a, p, r))
        return ExpPoly(out)

    def laplace_shift(self, lam: float) -> "ExpPoly":
        """t -> integral_0^inf exp(-lam v) f(t + v) dv."""
        out = []
        for c, k, r in self.terms:
            for j in range(k + 1):
                out.append((c * comb(k, j) * factorial(j) / (lam + r) ** (j + 1), k - j, r))
        return ExpPoly(out)

    def conv_exp(self, rate: float, u: float) -> "ExpPoly":
        """y -> integral_0^u exp(-rate (u - w)) f(y + w) dw."""
        out = []
        for c, k, r in self.terms:
            beta = rate - r
            if beta == 0.0:
                # c exp(-r(u+y)) [(y+u)^{k+1} - y^{k+1}] / (k+1)
                head = ExpPoly([(c / (k + 1), k + 1, r)])
                out += head.shift(u).terms + head.scale(-np.exp(-rate * u)).terms
                continue
            S = ExpPoly((c * a, p, r) for p, a in _antideriv(k, beta).items())
            out += S.shift(u).terms + S.scale(-np.exp(-rate * u)).terms
        return ExpPoly(out)
