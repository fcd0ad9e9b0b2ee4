"""Reguli through three skew lines: fitting, canonical frames and curvature.

The canonical frame at a point p of a generator L1 puts p at the origin, L1 on
the z-axis and the tangent plane at p equal to the yz-plane.  The transversal
through p then has direction (0, sin theta, cos theta) and meets the other two
generators at parameters u1 and u2; v and w are their directions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegeneracyError, PreconditionError, VerificationError
from .lines import AffineMap, Line3, closest_points, line_distance, sin_angle
from .measures import xij_determinant
from .quadric import QuadricPoly, fit_quadric

SKEW_TOL = 1e-6
ANGLE_TOL = 1e-6
ON_SURFACE_TOL = 1e-6
MEET_TOL = 1e-9
NORMALIZE_GUARD = 1e-8


def coplanarity(L1: Line3, L2: Line3):
    """|det(v1, v2, q2 - q1)| for unit directions: zero iff the lines meet or are
    parallel, and well conditioned when they meet far away."""
    return float(abs(np.cross(L1.direction, L2.direction) @ (L2.base - L1.base)))


def check_skew(lines, tol=SKEW_TOL):
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            Li, Lj = lines[i], lines[j]
            if sin_angle(Li.direction, Lj.direction) < tol:
                raise DegeneracyError(f"generators {i + 1} and {j + 1} are parallel")
            if line_distance(Li, Lj) < tol:
                raise DegeneracyError(f"generators {i + 1} and {j + 1} intersect")


def check_hyperboloid(L1, L2, L3, tol=ANGLE_TOL):
    n = np.cross(L1.direction, L2.direction)
    n /= np.linalg.norm(n)
    if abs(L3.direction @ n) < np.sin(tol):
        raise DegeneracyError("third generator is parallel to the plane spanned by "
                              "the first two directions (paraboloid case)")


@dataclass(frozen=True, eq=False)
class RegulusFrame:
    origin: np.ndarray
    rotation: np.ndarray  # rows are the frame axes in world coordinates
    theta: float
    u1: float
    u2: float
    v: np.ndarray
    w: np.ndarray

    def to_frame(self, pts):
        return (np.asarray(pts, float) - self.origin) @ self.rotation.T

    def to_world(self, pts):
        return np.asarray(pts, float) @ self.rotation + self.origin

    def frame_lines(self):
        """Generators expressed in frame coordinates."""
        st, ct = np.sin(self.theta), np.cos(self.theta)
        L1 = Line3(np.zeros(3), np.array([0.0, 0.0, 1.0]))
        L2 = Line3(np.array([0.0, self.u1 * st, self.u1 * ct]), self.v)
        L3 = Line3(np.array([0.0, self.u2 * st, self.u2 * ct]), self.w)
        return L1, L2, L3

    def ruling_coefficients(self):
        """c0, c1, c2 with y(s) = c0 + s c1 + s^2 c2 in frame coordinates."""
        st, ct = np.sin(self.theta), np.cos(self.theta)
        down = np.array([0.0, 0.0, -1.0])
        a0 = np.cross([0.0, self.u1 * st, self.u1 * ct], self.v)
        a1 = np.cross(down, self.v)
        b0 = np.cross([0.0, self.u2 * st, self.u2 * ct], self.w)
        b1 = np.cross(down, self.w)
        return np.cross(a0, b0), np.cross(a0, b1) + np.cross(a1, b0), np.cross(a1, b1)

    def ruling_direction(self, s):
        c0, c1, c2 = self.ruling_coefficients()
        return c0 + s * c1 + s * s * c2

    def frame_curvature(self):
        """-(y1'(0))^2 / (y2(0))^2."""
        c0, c1, _ = self.ruling_coefficients()
        return float(-(c1[0] ** 2) / c0[1] ** 2)


def canonical_frame(L1: Line3, L2: Line3, L3: Line3, p=None) -> RegulusFrame:
    """Rigid frame at a point p of L1 (default: the point of L1 nearest 0)."""
    p = L1.closest_point_to(np.zeros(3)) if p is None else np.asarray(p, float)
    v1 = L1.direction
    n2 = np.cross(L2.direction, p - L2.base)
    n3 = np.cross(L3.direction, p - L3.base)
    dL = np.cross(n2, n3)
    if np.linalg.norm(dL) < 1e-12 * (np.linalg.norm(n2) * np.linalg.norm(n3) + 1e-300):
        raise DegeneracyError("planes through p and the generators are parallel")
    dL /= np.linalg.norm(dL)
    ex = np.cross(dL, v1)
    if np.linalg.norm(ex) < 1e-12:
        raise DegeneracyError("transversal is parallel to the first generator")
    ex /= np.linalg.norm(ex)
    ez = v1
    ey = np.cross(ez, ex)
    rot = np.vstack([ex, ey, ez])
    d_frame = rot @ dL
    theta = float(np.arctan2(d_frame[1], d_frame[2]))
    T = Line3(p, dL)
    us = []
    for L in (L2, L3):
        t_T, t_L = closest_points(T, L)
        if np.linalg.norm(T.point(t_T) - L.point(t_L)) > 1e-7 * (1 + abs(t_T)):
            raise VerificationError("transversal does not meet a generator")
        us.append(float(t_T))
    return RegulusFrame(p, rot, theta, us[0], us[1], rot @ L2.direction, rot @ L3.direction)


@dataclass(frozen=True, eq=False)
class Regulus:
    generators: tuple
    quadric: QuadricPoly
    frame: RegulusFrame = field(repr=False)

    def contains(self, pts, tol=ON_SURFACE_TOL):
        return self.quadric.distance_proxy(pts) <= tol

    def frame_at(self, p):
        """Canonical frame with origin at a surface point p."""
        p = np.asarray(p, float)
        gens = list(self.generators)
        through = [L for L in gens if L.distance_to_points(p) < MEET_TOL]
        if through:
            L1 = through[0]
        else:
            L1 = generator_through_point(self, p)
        others = [L for L in gens if L is not L1 and L.distance_to_points(p) >= MEET_TOL]
        return canonical_frame(L1, others[0], others[1], p)


def fit_regulus(L1: Line3, L2: Line3, L3: Line3, require_hyperboloid=True) -> Regulus:
    lines = (L1.as_line(), L2.as_line(), L3.as_line())
    check_skew(lines)
    if require_hyperboloid:
        check_hyperboloid(*lines)
    Q = fit_quadric(lines)
    return Regulus(lines, Q, _default_frame(lines))


def _default_frame(lines):
    """Frame at the point of L1 nearest the origin, nudged along L1 when the
    transversal there is parallel to another generator."""
    L1 = lines[0]
    t0 = L1.foot_parameter(np.zeros(3))
    for dt in (0.0, 0.25, -0.25, 0.5, -0.5, 0.125, -0.125):
        try:
            return canonical_frame(*lines, p=L1.point(t0 + dt))
        except (DegeneracyError, VerificationError):
            continue
    raise DegeneracyError("no admissible frame point on the first generator")


def lines_through_surface_point(Q: QuadricPoly, p):
    """The two line directions through a point of a doubly ruled quadric."""
    g = Q.gradient(p)
    gn = np.linalg.norm(g)
    if gn < 1e-12:
        raise DegeneracyError("singular point of the quadric")
    n = g / gn
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    f1 = np.cross(n, a)
    f1 /= np.linalg.norm(f1)
    f2 = np.cross(n, f1)
    A = Q.quadratic_form
    # (cos, sin) with (cos f1 + sin f2)^T A (cos f1 + sin f2) = 0
    a11, a12, a22 = f1 @ A @ f1, f1 @ A @ f2, f2 @ A @ f2
    roots = np.roots([a22, 2 * a12, a11]) if abs(a22) > 1e-14 else None
    dirs = []
    if roots is None:
        dirs.append(f2)
        if abs(a12) > 1e-14:
            dirs.append(f1 - a11 / (2 * a12) * f2)
    else:
        if np.any(np.abs(roots.imag) > 1e-9):
            raise DegeneracyError("point is elliptic: no real lines through it")
        dirs.extend(f1 + r.real * f2 for r in roots)
    return [d / np.linalg.norm(d) for d in dirs]


def transversal_through_point(p, L1: Line3, L2: Line3, L3: Line3, tol=MEET_TOL) -> Line3:
    """The line through p meeting the three generators.

    Built from the planes through p and two generators not containing p, then
    checked against the remaining generator.
    """
    p = np.asarray(p, float)
    gens = [L1, L2, L3]
    away = [L for L in gens if L.distance_to_points(p) > tol]
    if len(away) < 2:
        raise DegeneracyError("point lies on two generators")
    na = np.cross(away[0].direction, p - away[0].base)
    nb = np.cross(away[1].direction, p - away[1].base)
    d = np.cross(na, nb)
    if np.linalg.norm(d) < 1e-12 * np.linalg.norm(na) * np.linalg.norm(nb):
        raise DegeneracyError("planes through p and the generators are parallel")
    T = Line3(p, d)
    for L in gens:
        if coplanarity(T, L) > tol * (1.0 + np.linalg.norm(p - L.base)):
            raise PreconditionError("point is not on the regulus of the three lines")
    return T


def generator_through_point(R: Regulus, p) -> Line3:
    """The line of the generators' ruling that passes through p."""
    p = np.asarray(p, float)
    T = transversal_through_point(p, *R.generators)
    dirs = lines_through_surface_point(R.quadric, p)
    best = min(dirs, key=lambda d: abs(d @ T.direction))
    return Line3(p, best)


def ruling_line(R: Regulus, s) -> Line3:
    """Transversal through the frame point (0, 0, s), returned in world coordinates.

    The double cross product ((q2 - q) x v) x ((q3 - q) x w) is evaluated with
    world-coordinate data, which is the frame formula up to the rotation.
    """
    F = R.frame
    q = F.to_world(np.array([0.0, 0.0, s]))
    _, L2, L3 = R.generators
    y = np.cross(np.cross(L2.base - q, L2.direction), np.cross(L3.base - q, L3.direction))
    if np.linalg.norm(y) < 1e-13:
        raise DegeneracyError(f"ruling direction vanishes at s={s}")
    return Line3(q, y)


def _ruled_curvature(F: RegulusFrame, s, t):
    """K = (LN - M^2)/(EG - F^2) for r(s, t) = (0, 0, s) + t y(s); N vanishes."""
    c0, c1, c2 = F.ruling_coefficients()
    y = c0 + s * c1 + s * s * c2
    dy = c1 + 2 * s * c2
    r_s = np.array([0.0, 0.0, 1.0]) + t * dy
    r_t = y
    nrm = np.cross(r_s, r_t)
    nn = np.linalg.norm(nrm)
    if nn < 1e-14:
        raise DegeneracyError("ruled parameterization is singular here")
    E, Fc, G = r_s @ r_s, r_s @ r_t, r_t @ r_t
    M = dy @ (nrm / nn)
    return float(-(M * M) / (E * G - Fc * Fc))


def _ruled_parameters(F: RegulusFrame, gens, p):
    """(s, t) with p = (0, 0, s) + t y(s) in frame F based on gens[0]."""
    pf = F.to_frame(p)
    if gens[0].distance_to_points(p) < MEET_TOL:
        return float(pf[2]), 0.0
    T = transversal_through_point(p, *gens)
    _, tL = closest_points(T, gens[0])
    s = float(F.to_frame(gens[0].point(tL))[2])
    y = F.ruling_direction(s)
    return s, float((pf - np.array([0.0, 0.0, s])) @ y / (y @ y))


def gauss_curvature_pair(R: Regulus, p, tol=ON_SURFACE_TOL):
    """Curvature at p by the ruled parameterization and by the frame formula."""
    p = np.asarray(p, float)
    Q = R.quadric
    g = np.linalg.norm(Q.gradient(p))
    if g < 1e-12:
        raise DegeneracyError("gradient of Q vanishes at p")
    if abs(Q(p)) / g > tol:
        raise PreconditionError("point is not on the regulus")
    # the ruled chart is ill-conditioned where the ruling through p runs nearly
    # parallel to its base generator, so base it on the best of the three
    best = None
    for k in range(3):
        gens = R.generators[k:] + R.generators[:k]
        try:
            F = R.frame if k == 0 else _default_frame(gens)
            s, t = _ruled_parameters(F, gens, p)
        except (DegeneracyError, VerificationError):
            continue
        if best is None or abs(s) + abs(t) < best[0]:
            best = (abs(s) + abs(t), F, s, t)
    if best is None:
        raise DegeneracyError("no ruled chart covers p")
    _, F, s, t = best
    k_ruled = _ruled_curvature(F, s, t)
    k_frame = R.frame_at(p).frame_curvature()
    return k_ruled, k_frame


def gauss_curvature(R: Regulus, p, rtol=1e-6):
    k_ruled, k_frame = gauss_curvature_pair(R, p)
    if abs(k_ruled - k_frame) > rtol * max(abs(k_ruled), abs(k_frame), 1e-300):
        raise VerificationError(f"curvature methods disagree: {k_ruled} vs {k_frame}")
    return k_ruled


def curvature_identity(R: Regulus, p=None):
    """Both sides of |K|^(1/2) |X12 X13 X23| = (u1-u2)^2 v1^2 w1^2 sin^2(theta) / (v3^2 w3^2)
    at the frame origin.  The signed product carries the opposite sign, so
    magnitudes are compared."""
    F = R.frame if p is None else R.frame_at(p)
    K = F.frame_curvature()
    L1, L2, L3 = F.frame_lines()
    x12, x13, x23 = xij_determinant(L1, L2), xij_determinant(L1, L3), xij_determinant(L2, L3)
    v, w = F.v, F.w
    lhs = np.sqrt(abs(K)) * abs(x12 * x13 * x23)
    rhs = (F.u1 - F.u2) ** 2 * v[0] ** 2 * w[0] ** 2 * np.sin(F.theta) ** 2 / (v[2] ** 2 * w[2] ** 2)
    return {"K": K, "X12": x12, "X13": x13, "X23": x23, "lhs": float(lhs), "rhs": float(rhs)}


@dataclass(frozen=True, eq=False)
class RegulusStrip:
    """delta-neighbourhood of a regulus cut down to the sqrt(delta)-neighbourhood
    of one ruling line."""
    regulus: Regulus
    ruling: Line3
    delta: float

    @property
    def direction(self):
        return self.ruling.direction

    def contains_points(self, pts):
        pts = np.atleast_2d(pts)
        near_surface = self.regulus.quadric.distance_proxy(pts) <= self.delta
        near_line = self.ruling.distance_to_points(pts) <= np.sqrt(self.delta)
        return near_surface & near_line


CANONICAL_TRIPLE = (
    Line3(np.zeros(3), np.array([1.0, 0.0, 0.0])),
    Line3(np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])),
    Line3(np.array([1.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0])),
)
CANONICAL_QUADRIC = np.array([0, 0, 0, 1, 0, 0, 0, 1, -1, -1], float)


def _crossing(L: Line3, axis, value):
    if abs(L.direction[axis]) < 1e-14:
        raise DegeneracyError("line is parallel to the coordinate plane it must cross")
    t = (value - L.base[axis]) / L.direction[axis]
    return L.point(t)


def affine_normalize(L1: Line3, L2: Line3, L3: Line3, guard=NORMALIZE_GUARD) -> AffineMap:
    """Affine map sending the triple to the canonical triple
    R(1,0,0); (0,1,0)+R(0,0,1); (1,0,1)+R(0,1,0).

    Stages: a rigid motion putting L1 on the x-axis and the common perpendicular
    of L1, L2 on the y-axis; a linear map fixing L1 that straightens L2; then two
    maps fixing L1 and L2 that place L3.
    """
    lines = (L1.as_line(), L2.as_line(), L3.as_line())
    check_skew(lines)
    check_hyperboloid(*lines)
    t1, t2 = closest_points(lines[0], lines[1])
    f1, f2 = lines[0].point(t1), lines[1].point(t2)
    ex = lines[0].direction
    ey = (f2 - f1) / np.linalg.norm(f2 - f1)
    ez = np.cross(ex, ey)
    rigid = AffineMap(np.vstack([ex, ey, ez]), -np.vstack([ex, ey, ez]) @ f1)
    y0 = float(np.linalg.norm(f2 - f1))
    d2 = rigid.A @ lines[1].direction
    phi = float(np.arctan2(d2[2], d2[0]))
    sphi, cphi = np.sin(phi), np.cos(phi)
    straighten = AffineMap(np.array([[1.0, 0.0, -cphi / sphi],
                                     [0.0, 1.0 / y0, 0.0],
                                     [0.0, 0.0, 1.0 / sphi]]), np.zeros(3))
    stage = rigid.then(straighten)
    L3a = stage.map_line(lines[2])
    x0, _, z0 = _crossing(L3a, 1, 0.0)
    if abs(z0) < guard:
        raise DegeneracyError("third generator meets the first")
    c = 1.0 / z0
    shear1 = AffineMap.from_function(lambda q: np.array([q[0] + (1.0 - x0) * (1.0 - q[1]),
                                                        q[1], c * q[2] + q[1]]))
    stage = stage.then(shear1)
    L3b = stage.map_line(lines[2])
    x1, _, z1 = _crossing(L3b, 1, 0.5)
    if abs(2 * x1 - 1) < guard:
        raise DegeneracyError("|2 x1 - 1| below the skewness guard")
    a = 1.0 / (2 * x1 - 1)
    dd = 2.0 - 2.0 * z1
    shear2 = AffineMap.from_function(lambda q: np.array([a * q[0] + (1.0 - a) * (1.0 - q[1]),
                                                        q[1], q[2] + dd * q[1]]))
    T = stage.then(shear2)
    for L, target in zip(lines, CANONICAL_TRIPLE):
        img = T.map_line(L)
        if not img.same_line(target, tol=1e-7):
            raise VerificationError("normalized line does not match the canonical triple")
    return T


def sample_admissible_triple(rng, margin=0.15, max_tries=10000):
    """Three random lines through B(0, 1/2) with every guard comfortably met."""
    for _ in range(max_tries):
        bases = rng.uniform(-1, 1, (3, 3))
        bases = bases / np.maximum(1.0, np.linalg.norm(bases, axis=1))[:, None] * 0.5
        dirs = rng.normal(size=(3, 3))
        lines = tuple(Line3(b, d) for b, d in zip(bases, dirs))
        try:
            check_skew(lines, tol=margin)
            check_hyperboloid(*lines, tol=margin)
            F = canonical_frame(*lines)
        except (DegeneracyError, VerificationError):
            continue
        if min(abs(F.v[2]), abs(F.w[2]), abs(F.v[0]), abs(F.w[0]), abs(np.sin(F.theta))) < margin:
            continue
        if abs(F.u1 - F.u2) < margin:
            continue
        return lines
    raise RuntimeError("could not sample an admissible triple")
