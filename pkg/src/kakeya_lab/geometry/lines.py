"""Lines in R^3 and affine maps acting on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegeneracyError, PreconditionError

CHART_EPS = 1e-12


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0 or not np.isfinite(n):
        raise DegeneracyError("zero direction vector")
    return v / n


@dataclass(frozen=True, eq=False)
class Line3:
    """A line (``length is None``) or a segment ``base + t*direction, t in [0, length]``.

    ``direction`` is always stored with unit norm.
    """
    base: np.ndarray
    direction: np.ndarray
    length: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float).reshape(3))
        object.__setattr__(self, "direction", _unit(np.reshape(self.direction, 3)))
        if self.length is not None and self.length < 0:
            raise PreconditionError("segment length must be non-negative")

    @classmethod
    def from_chart(cls, a, b, c, d):
        """The line (a, b, 0) + R(c, d, 1)."""
        return cls(np.array([a, b, 0.0]), np.array([c, d, 1.0]))

    @classmethod
    def through(cls, p, q, segment=False):
        p, q = np.asarray(p, float), np.asarray(q, float)
        return cls(p, q - p, float(np.linalg.norm(q - p)) if segment else None)

    def chart(self):
        """(a, b, c, d) with the line equal to (a, b, 0) + R(c, d, 1)."""
        vz = self.direction[2]
        if abs(vz) < CHART_EPS:
            raise DegeneracyError("horizontal direction has no chart form")
        slope = self.direction / vz
        foot = self.base - self.base[2] * slope
        return np.array([foot[0], foot[1], slope[0], slope[1]])

    def as_line(self):
        return Line3(self.base, self.direction)

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return self.base + t[..., None] * self.direction

    def endpoints(self):
        if self.length is None:
            raise PreconditionError("infinite line has no endpoints")
        return self.base, self.base + self.length * self.direction

    def closest_point_to(self, p):
        p = np.asarray(p, float)
        return self.point((p - self.base) @ self.direction)

    def foot_parameter(self, p):
        return (np.asarray(p, float) - self.base) @ self.direction

    def distance_to_points(self, pts):
        """Distance from each point to the infinite line."""
        w = np.asarray(pts, float) - self.base
        along = w @ self.direction
        return np.linalg.norm(w - along[..., None] * self.direction, axis=-1)

    def ball_chord(self, radius=1.0, center=None):
        """Parameter interval of the line inside a ball, or None if disjoint."""
        c = np.zeros(3) if center is None else np.asarray(center, float)
        w = self.base - c
        bw = w @ self.direction
        disc = bw * bw - (w @ w - radius * radius)
        if disc < 0:
            return None
        r = np.sqrt(disc)
        return -bw - r, -bw + r

    def sample(self, n, t_range=None):
        if t_range is None:
            t_range = (0.0, self.length) if self.length is not None else (-1.0, 1.0)
        return self.point(np.linspace(t_range[0], t_range[1], n))

    def to_json(self, form="segment"):
        if form == "chart":
            return {"chart": [float(x) for x in self.chart()]}
        out = {"base": [float(x) for x in self.base], "dir": [float(x) for x in self.direction]}
        out["len"] = None if self.length is None else float(self.length)
        return out

    @classmethod
    def from_json(cls, obj):
        if "chart" in obj:
            return cls.from_chart(*obj["chart"])
        return cls(obj["base"], obj["dir"], obj.get("len"))

    def same_line(self, other, tol=1e-9):
        """Point-set equality of the underlying infinite lines."""
        parallel = np.linalg.norm(np.cross(self.direction, other.direction)) <= tol
        return bool(parallel and other.distance_to_points(self.base) <= tol)

    def __repr__(self):
        return f"Line3(base={self.base.round(6).tolist()}, dir={self.direction.round(6).tolist()}, len={self.length})"


def closest_points(L1: Line3, L2: Line3):
    """Parameters (t1, t2) of the closest pair of points on two infinite lines.

    For parallel lines the foot of L1's base point is used.
    """
    v1, v2 = L1.direction, L2.direction
    w = L1.base - L2.base
    b = v1 @ v2
    d, e = v1 @ w, v2 @ w
    den = 1.0 - b * b
    if den < 1e-15:
        return 0.0, e
    t1 = (b * e - d) / den
    t2 = (e - b * d) / den
    return t1, t2


def line_distance(L1: Line3, L2: Line3):
    t1, t2 = closest_points(L1, L2)
    return float(np.linalg.norm(L1.point(t1) - L2.point(t2)))


def sin_angle(u, v):
    u, v = _unit(u), _unit(v)
    return float(np.linalg.norm(np.cross(u, v)))


def plane_through_point_and_line(p, L: Line3):
    """Unit normal of the plane spanned by a point and a line not through it."""
    n = np.cross(L.direction, np.asarray(p, float) - L.base)
    return _unit(n)


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> A x + b on R^3."""
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, float).reshape(3, 3))
        object.__setattr__(self, "b", np.asarray(self.b, float).reshape(3))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_function(cls, f):
        """Recover an affine map from its action on the origin and basis vectors."""
        b = np.asarray(f(np.zeros(3)), float)
        cols = [np.asarray(f(e), float) - b for e in np.eye(3)]
        return cls(np.column_stack(cols), b)

    def __call__(self, x):
        x = np.asarray(x, float)
        return x @ self.A.T + self.b

    def then(self, other: AffineMap):
        """The composite ``other(self(x))``."""
        return AffineMap(other.A @ self.A, other.A @ self.b + other.b)

    def inverse(self):
        Ai = np.linalg.inv(self.A)
        return AffineMap(Ai, -Ai @ self.b)

    @property
    def det(self):
        return float(np.linalg.det(self.A))

    def map_line(self, L: Line3):
        d = self.A @ L.direction
        return Line3(self(L.base), d)
