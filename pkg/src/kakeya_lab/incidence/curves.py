"""Plane conics: evaluation, exact point-to-curve distance and I/O.

A conic is stored as six coefficients in the order (1, x, y, x^2, xy, y^2).
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError

CONIC_MONOMIALS = ("1", "x", "y", "x^2", "xy", "y^2")


@dataclass(frozen=True, eq=False)
class Curve2:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, float).reshape(6)
        if not np.any(c[1:]):
            raise PreconditionError("conic must be non-constant")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def circle(cls, cx, cy, r):
        return cls([cx * cx + cy * cy - r * r, -2 * cx, -2 * cy, 1.0, 0.0, 1.0])

    @classmethod
    def line(cls, a, b, c):
        """a x + b y + c = 0."""
        return cls([c, a, b, 0.0, 0.0, 0.0])

    @property
    def degree(self):
        return 2 if np.any(self.coeffs[3:]) else 1

    @property
    def quadratic_form(self):
        c = self.coeffs
        return np.array([[c[3], c[4] / 2], [c[4] / 2, c[5]]])

    @property
    def linear_part(self):
        return self.coeffs[1:3].copy()

    def normalized(self):
        c = self.coeffs
        return Curve2(c / np.abs(c).max())

    def __call__(self, pts):
        pts = np.asarray(pts, float)
        x, y = pts[..., 0], pts[..., 1]
        c = self.coeffs
        return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y

    def gradient(self, pts):
        pts = np.asarray(pts, float)
        x, y = pts[..., 0], pts[..., 1]
        c = self.coeffs
        return np.stack([c[1] + 2 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2 * c[5] * y], axis=-1)

    def distance_proxy(self, pts):
        g = np.linalg.norm(self.gradient(pts), axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(self(pts)) / g

    def sample(self, n, window=1.0):
        """Points of the real zero set inside [-window, window]^2, found by
        solving for y on a grid of x and for x on a grid of y."""
        out = []
        grid = np.linspace(-window, window, n)
        c = self.coeffs
        for swap in (False, True):
            for t in grid:
                if not swap:  # solve in y with x = t
                    qa, qb, qc = c[5], c[2] + c[4] * t, c[0] + c[1] * t + c[3] * t * t
                else:
                    qa, qb, qc = c[3], c[1] + c[4] * t, c[0] + c[2] * t + c[5] * t * t
                for r in _real_quadratic_roots(qa, qb, qc):
                    if abs(r) <= window:
                        out.append((r, t) if swap else (t, r))
        return np.array(out).reshape(-1, 2)


def _real_quadratic_roots(a, b, c):
    if abs(a) < 1e-14:
        return [] if abs(b) < 1e-14 else [-c / b]
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    s = np.sqrt(disc)
    q = -0.5 * (b + np.copysign(s, b))
    roots = [q / a]
    if q != 0:
        roots.append(c / q)
    return roots


def write_curves_csv(curves, path=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["c_1", "c_x", "c_y", "c_xx", "c_xy", "c_yy"])
    for cv in curves:
        w.writerow([repr(float(v)) for v in cv.coeffs])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_curves_csv(path_or_text):
    text = _read_text(path_or_text)
    rows = list(csv.reader(io.StringIO(text)))
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    out = []
    for i, row in enumerate(rows):
        if not row:
            continue
        if len(row) != 6:
            raise PreconditionError(f"curve row {i} must have 6 coefficients")
        out.append(Curve2(np.array([float(v) for v in row])))
    return out


def write_points_csv(pts, path=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y"])
    for x, y in np.asarray(pts, float):
        w.writerow([repr(float(x)), repr(float(y))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_points_csv(path_or_text):
    text = _read_text(path_or_text)
    rows = list(csv.reader(io.StringIO(text)))
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    pts = [(float(r[0]), float(r[1])) for r in rows if r]
    return np.array(pts, float).reshape(-1, 2)


def _read_text(path_or_text):
    """Accept a path or the CSV text itself."""
    if isinstance(path_or_text, os.PathLike) or (
            isinstance(path_or_text, str) and "\n" not in path_or_text and os.path.exists(path_or_text)):
        with open(path_or_text, newline="") as fh:
            return fh.read()
    return str(path_or_text)


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False
