"""Bivariate polynomials in the graded monomial basis and products of them.

Monomials of degree <= d are ordered by total degree k and, within a degree,
as x^k, x^(k-1) y, ..., y^k.  For d = 2 this is (1, x, y, x^2, xy, y^2), the
order used by ``Curve2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import PreconditionError
from .curves import Curve2


@lru_cache(maxsize=None)
def monomial_exponents(d):
    return tuple((k - j, j) for k in range(d + 1) for j in range(k + 1))


def n_monomials(d):
    return (d + 1) * (d + 2) // 2


def veronese(pts, d):
    """Rows of all monomials of degree <= d evaluated at each point."""
    pts = np.atleast_2d(np.asarray(pts, float))
    x, y = pts[:, 0], pts[:, 1]
    xp = [np.ones_like(x)]
    yp = [np.ones_like(y)]
    for _ in range(d):
        xp.append(xp[-1] * x)
        yp.append(yp[-1] * y)
    return np.column_stack([xp[i] * yp[j] for i, j in monomial_exponents(d)])


@dataclass(frozen=True, eq=False)
class Poly2:
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, float).reshape(n_monomials(self.degree))
        if not np.any(c):
            raise PreconditionError("zero polynomial")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_curve(cls, curve: Curve2):
        return cls(2, curve.coeffs)

    def to_curve(self):
        if self.degree > 2:
            raise PreconditionError("only polynomials of degree <= 2 are conics")
        c = np.zeros(6)
        c[:self.coeffs.size] = self.coeffs
        return Curve2(c)

    def normalized(self):
        return Poly2(self.degree, self.coeffs / np.abs(self.coeffs).max())

    def __call__(self, pts):
        return veronese(pts, self.degree) @ self.coeffs

    def gradient(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        x, y = pts[:, 0], pts[:, 1]
        gx = np.zeros_like(x)
        gy = np.zeros_like(y)
        for (i, j), c in zip(monomial_exponents(self.degree), self.coeffs):
            if c == 0:
                continue
            if i:
                gx += c * i * x ** (i - 1) * y ** j
            if j:
                gy += c * j * x ** i * y ** (j - 1)
        return np.column_stack([gx, gy])

    def distance_proxy(self, pts):
        g = np.linalg.norm(self.gradient(pts), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(g > 0, np.abs(self(pts)) / g, np.where(self(pts) == 0, 0.0, np.inf))

    def restrict(self, axis, value):
        """Univariate coefficients (low to high) of the restriction to the
        line {y = value} (axis=0, polynomial in x) or {x = value} (axis=1)."""
        out = np.zeros(self.degree + 1)
        for (i, j), c in zip(monomial_exponents(self.degree), self.coeffs):
            if axis == 0:
                out[i] += c * value ** j
            else:
                out[j] += c * value ** i
        return out

    def evaluate_grid(self, xs, ys):
        """Values on the tensor grid, shape (len(ys), len(xs))."""
        X = np.vander(np.asarray(xs, float), self.degree + 1, increasing=True)
        Y = np.vander(np.asarray(ys, float), self.degree + 1, increasing=True)
        C = np.zeros((self.degree + 1, self.degree + 1))
        for (i, j), c in zip(monomial_exponents(self.degree), self.coeffs):
            C[j, i] = c
        return Y @ C @ X.T


@dataclass(frozen=True, eq=False)
class ProductPoly:
    """P = f_1 f_2 ... f_k, kept in factored form."""
    factors: tuple

    def __post_init__(self):
        if not self.factors:
            raise PreconditionError("empty product")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def degree(self):
        return sum(f.degree for f in self.factors)

    def __call__(self, pts):
        out = np.ones(np.atleast_2d(pts).shape[0])
        for f in self.factors:
            out = out * f(pts)
        return out

    def sign(self, pts):
        s = np.ones(np.atleast_2d(pts).shape[0], np.int8)
        for f in self.factors:
            s = s * np.sign(f(pts)).astype(np.int8)
        return s

    def sign_grid(self, xs, ys):
        s = np.ones((len(ys), len(xs)), np.int8)
        for f in self.factors:
            s *= np.sign(f.evaluate_grid(xs, ys)).astype(np.int8)
        return s

    def distance_proxy(self, pts):
        """min over factors of |f| / |grad f|."""
        return np.min([f.distance_proxy(pts) for f in self.factors], axis=0)

    def expanded(self):
        """The product as a single ``Poly2``."""
        coeff = {(0, 0): 1.0}
        for f in self.factors:
            nxt = {}
            for (i, j), c in coeff.items():
                for (k, l), d in zip(monomial_exponents(f.degree), f.coeffs):
                    if d:
                        nxt[(i + k, j + l)] = nxt.get((i + k, j + l), 0.0) + c * d
            coeff = nxt
        deg = self.degree
        idx = {e: n for n, e in enumerate(monomial_exponents(deg))}
        out = np.zeros(n_monomials(deg))
        for e, c in coeff.items():
            out[idx[e]] = c
        return Poly2(deg, out)

    def to_json(self):
        return [{"degree": f.degree, "coeffs": [float(c) for c in f.coeffs]} for f in self.factors]

    @classmethod
    def from_json(cls, data):
        return cls(tuple(Poly2(int(d["degree"]), np.asarray(d["coeffs"], float)) for d in data))


def as_product(P):
    if isinstance(P, ProductPoly):
        return P
    if isinstance(P, Poly2):
        return ProductPoly((P,))
    if isinstance(P, Curve2):
        return ProductPoly((Poly2.from_curve(P),))
    raise PreconditionError(f"cannot interpret {type(P).__name__} as a polynomial")
