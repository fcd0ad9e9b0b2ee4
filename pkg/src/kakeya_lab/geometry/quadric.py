"""Degree-two polynomials on R^3 and quadric fitting through lines."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegeneracyError, PreconditionError

MONOMIALS = ("1", "x", "y", "z", "x^2", "y^2", "z^2", "xy", "xz", "yz")
RANK_TOL = 1e-9


def monomial_matrix(pts):
    """Rows (1, x, y, z, x^2, y^2, z^2, xy, xz, yz) for each point."""
    pts = np.atleast_2d(np.asarray(pts, float))
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    one = np.ones_like(x)
    return np.column_stack([one, x, y, z, x * x, y * y, z * z, x * y, x * z, y * z])


@dataclass(frozen=True, eq=False)
class QuadricPoly:
    coeffs: np.ndarray
    monic: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, float).reshape(10)
        if not np.any(c):
            raise PreconditionError("zero polynomial")
        object.__setattr__(self, "coeffs", c)

    def normalized(self):
        """Scale so the coefficient of largest magnitude is exactly 1."""
        c = self.coeffs
        k = int(np.argmax(np.abs(c)))
        return QuadricPoly(c / c[k], monic=True)

    @property
    def quadratic_form(self):
        c = self.coeffs
        return np.array([[c[4], c[7] / 2, c[8] / 2],
                         [c[7] / 2, c[5], c[9] / 2],
                         [c[8] / 2, c[9] / 2, c[6]]])

    @property
    def linear_part(self):
        return self.coeffs[1:4].copy()

    def __call__(self, pts):
        pts = np.asarray(pts, float)
        single = pts.ndim == 1
        val = monomial_matrix(pts) @ self.coeffs
        return float(val[0]) if single else val

    def gradient(self, pts):
        pts = np.asarray(pts, float)
        g = 2 * pts @ self.quadratic_form + self.linear_part
        return g

    def hessian(self):
        return 2 * self.quadratic_form

    def distance_proxy(self, pts):
        """First-order distance |Q| / |grad Q|."""
        g = np.linalg.norm(self.gradient(pts), axis=-1)
        return np.abs(self(pts)) / np.where(g > 0, g, np.nan)

    def implicit_gauss_curvature(self, p):
        """Curvature of Z(Q) at a regular point from the bordered Hessian."""
        g = self.gradient(p)
        gn = np.linalg.norm(g)
        if gn < 1e-12:
            raise DegeneracyError("gradient vanishes: singular point of Z(Q)")
        B = np.zeros((4, 4))
        B[:3, :3] = self.hessian()
        B[:3, 3] = g
        B[3, :3] = g
        return float(-np.linalg.det(B) / gn**4)

    def to_json(self):
        return [float(x) for x in self.coeffs]

    @classmethod
    def from_json(cls, arr):
        return cls(np.asarray(arr, float))


def fit_quadric(lines, samples_per_line=4):
    """Least-squares null vector of the monomial system on points of the lines.

    Raises ``DegeneracyError`` if the quadric through the lines is not unique.
    """
    ts = np.linspace(-1.0, 1.0, samples_per_line)
    pts = []
    for L in lines:
        c = L.foot_parameter(np.zeros(3))
        pts.append(L.point(c + ts))
    M = monomial_matrix(np.vstack(pts))
    scale = np.abs(M).max(axis=0)
    scale[scale == 0] = 1.0
    _, s, vt = np.linalg.svd(M / scale)
    sv = np.concatenate([s, np.zeros(max(0, 10 - s.size))])
    if sv[-2] < RANK_TOL * sv[0]:
        raise DegeneracyError("rank-deficient system: no unique quadric through the lines")
    coeffs = vt[-1] / scale
    return QuadricPoly(coeffs).normalized()
