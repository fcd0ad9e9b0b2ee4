"""Skewness, separation and the chart determinant of pairs of lines."""
from __future__ import annotations

import math

import numpy as np

from ..errors import PreconditionError
from .lines import Line3

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _pencil_basis(v):
    """Orthonormal e1, e2 with e1 x e2 = v."""
    a = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(v, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(v, e1)
    return e1, e2


def _cone_ratio_sup(phi, w0, w1, t0, t1):
    """sup over t in [t0, t1] of |n.w(t)| / |m.w(t)| with w(t) = w0 + t w1.

    n = (cos phi, sin phi) is the normal of the plane through L1, m spans the
    plane's direction perpendicular to L1.  The ratio is a Mobius function of t,
    so its supremum sits at an endpoint unless the denominator changes sign.
    """
    n = np.array([math.cos(phi), math.sin(phi)])
    m = np.array([-math.sin(phi), math.cos(phi)])
    num0, num1 = n @ w0, n @ w1
    den0, den1 = m @ w0, m @ w1
    d_a, d_b = den0 + t0 * den1, den0 + t1 * den1
    n_a, n_b = num0 + t0 * num1, num0 + t1 * num1
    if d_a * d_b < 0:
        tz = -den0 / den1
        if abs(num0 + tz * num1) > 1e-14 * (abs(num0) + abs(num1) + 1e-300):
            return math.inf
    best = 0.0
    for num, den in ((n_a, d_a), (n_b, d_b)):
        if abs(num) <= 1e-15 and abs(den) <= 1e-15:
            continue
        best = max(best, math.inf if den == 0 else abs(num / den))
    return best


def skewness(L1: Line3, L2: Line3, window=2.0, tol=1e-10, prescan=64):
    """Smallest cone angle alpha such that L2 near the origin lies in
    {dist(p, P) <= alpha * dist(proj_P p, L1)} for some plane P containing L1.

    The inner supremum is exact; the outer minimum over the pencil of planes
    through L1 is a 64-point scan followed by golden-section refinement.
    """
    if L1.ball_chord(1.0) is None or L2.ball_chord(1.0) is None:
        raise PreconditionError("both lines must meet the unit ball")
    chord = L2.ball_chord(window)
    if chord is None:
        raise PreconditionError("L2 misses the skewness window")
    t0, t1 = chord
    e1, e2 = _pencil_basis(L1.direction)
    w_base = L2.base - L1.base
    w0 = np.array([w_base @ e1, w_base @ e2])
    w1 = np.array([L2.direction @ e1, L2.direction @ e2])

    def g(phi):
        return _cone_ratio_sup(phi, w0, w1, t0, t1)

    phis = np.linspace(0.0, math.pi, prescan, endpoint=False)
    vals = np.array([g(p) for p in phis])
    k = int(np.argmin(vals))
    if vals[k] == 0.0:
        return 0.0
    step = math.pi / prescan
    lo, hi = phis[k] - step, phis[k] + step
    a = hi - GOLDEN * (hi - lo)
    b = lo + GOLDEN * (hi - lo)
    ga, gb = g(a), g(b)
    while hi - lo > tol:
        if ga <= gb:
            hi, b, gb = b, a, ga
            a = hi - GOLDEN * (hi - lo)
            ga = g(a)
        else:
            lo, a, ga = a, b, gb
            b = lo + GOLDEN * (hi - lo)
            gb = g(b)
    return float(min(ga, gb, vals[k]))


def separation(L1: Line3, L2: Line3, radius=1.0):
    """Exact (min, max) of dist(p, L2) for p on L1 inside B(0, radius)."""
    chord = L1.ball_chord(radius)
    if chord is None:
        raise PreconditionError("L1 misses the unit ball")
    t0, t1 = chord
    v2 = L2.direction
    w0 = L1.base - L2.base
    u0 = w0 - (w0 @ v2) * v2
    u1 = L1.direction - (L1.direction @ v2) * v2
    # |u0 + t u1|^2 is a convex quadratic in t
    aa, bb, cc = u1 @ u1, 2 * (u0 @ u1), u0 @ u0

    def q(t):
        return max(aa * t * t + bb * t + cc, 0.0)

    ends = [q(t0), q(t1)]
    lo = min(ends)
    if aa > 0:
        tv = -bb / (2 * aa)
        if t0 < tv < t1:
            # the norm of the vector itself avoids cancellation in c - b^2/4a
            lo = min(lo, float(np.linalg.norm(u0 + tv * u1)) ** 2)
    return math.sqrt(lo), math.sqrt(max(ends))


def xij_determinant(Li: Line3, Lj: Line3):
    """det [[a_i - a_j, b_i - b_j], [c_i - c_j, d_i - d_j]] in chart coordinates."""
    ai, bi, ci, di = Li.chart()
    aj, bj, cj, dj = Lj.chart()
    return float((ai - aj) * (di - dj) - (bi - bj) * (ci - cj))


def tetrahedron_volume(p0, p1, p2, p3):
    """Signed volume of a tetrahedron."""
    m = np.array([np.asarray(p1) - p0, np.asarray(p2) - p0, np.asarray(p3) - p0], float)
    return float(np.linalg.det(m) / 6.0)
