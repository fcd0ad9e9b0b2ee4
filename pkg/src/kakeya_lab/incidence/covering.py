"""Covering numbers, neighbourhood areas and component counts of plane curves,
plus the profile of a line's distance to a conic."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..errors import PreconditionError
from .curves import Curve2
from .distance import conic_distance
from .polynomials import Poly2, ProductPoly, as_product, monomial_exponents

COVERING_CEILING = 8.0
HARNACK_CEILING = 2.0


def _restrictions(f: Poly2, axis, ticks):
    """Univariate coefficient rows (low to high) of f on each grid line."""
    out = np.zeros((len(ticks), f.degree + 1))
    for (i, j), c in zip(monomial_exponents(f.degree), f.coeffs):
        if c == 0:
            continue
        if axis == 0:
            out[:, i] += c * ticks ** j
        else:
            out[:, j] += c * ticks ** i
    return out


def _real_roots_rows(coef):
    """(row, root) pairs of the real roots of each coefficient row."""
    rows_out, vals_out = [], []
    scale = np.abs(coef).max(axis=1)
    scale[scale == 0] = 1.0
    c = coef / scale[:, None]
    deg = c.shape[1] - 1
    nz = np.abs(c) > 1e-14
    top = np.where(nz.any(axis=1), deg - np.argmax(nz[:, ::-1], axis=1), -1)
    for d in range(1, deg + 1):
        idx = np.flatnonzero(top == d)
        if idx.size == 0:
            continue
        lead = c[idx, d]
        if d == 1:
            rows_out.append(idx)
            vals_out.append(-c[idx, 0] / lead)
            continue
        comp = np.zeros((idx.size, d, d))
        comp[:, 1:, :d - 1] = np.eye(d - 1)
        comp[:, :, d - 1] = -c[idx, :d] / lead[:, None]
        eig = np.linalg.eigvals(comp)
        real = np.abs(eig.imag) <= 1e-9 * (1 + np.abs(eig))
        r, k = np.nonzero(real)
        rows_out.append(idx[r])
        vals_out.append(eig.real[r, k])
    if not rows_out:
        return np.zeros(0, int), np.zeros(0)
    return np.concatenate(rows_out), np.concatenate(vals_out)


def zero_set_samples(P, spacing, radius=1.0):
    """Points of Z(P) inside B(0, radius) from root-finding along horizontal
    and vertical lines spaced ``spacing`` apart.

    Every point of Z(P) in the disc lies within sqrt(2) * spacing of a sample
    unless it belongs to an oval small enough to fit inside one grid square.
    """
    P = as_product(P)
    ticks = np.arange(-radius, radius + spacing / 2, spacing)
    out = []
    for f in P.factors:
        for axis in (0, 1):
            rows, roots = _real_roots_rows(_restrictions(f, axis, ticks))
            v = ticks[rows]
            out.append(np.column_stack([roots, v]) if axis == 0 else np.column_stack([v, roots]))
    pts = np.vstack(out) if out else np.zeros((0, 2))
    return pts[np.linalg.norm(pts, axis=1) <= radius]


def greedy_net(samples, rho):
    """Indices of a maximal rho-separated subset, scanned in input order."""
    if len(samples) == 0:
        return np.zeros(0, int)
    tree = cKDTree(samples)
    covered = np.zeros(len(samples), bool)
    centres = []
    for i in range(len(samples)):
        if covered[i]:
            continue
        centres.append(i)
        covered[tree.query_ball_point(samples[i], rho)] = True
    return np.array(centres, int)


def component_count(samples, link):
    """Connected components of the graph joining samples closer than ``link``."""
    if len(samples) == 0:
        return 0
    pairs = cKDTree(samples).query_pairs(link, output_type="ndarray")
    n = len(samples)
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    return int(connected_components(g, directed=False)[0])


@dataclass
class CoveringReport:
    D: int
    rho: float
    covering: int
    constant: float                 # covering / (D / rho + D^2)
    area: float                     # |N_rho(Z) cap B(0,1)|
    area_constant: float            # area / (D rho + D^2 rho^2)
    components: int
    harnack_ok: bool
    ok: bool

    def to_json(self):
        return dict(self.__dict__)


def neighbourhood_area(samples, rho, radius=1.0, max_side=2048):
    """Area of {p in B(0, radius): dist(p, samples) <= rho} on a grid."""
    if len(samples) == 0:
        return 0.0
    side = int(min(max_side, np.ceil(2 * radius / (rho / 4))))
    xs = (np.arange(side) + 0.5) / side * 2 * radius - radius
    h = xs[1] - xs[0]
    tree = cKDTree(samples)
    area = 0.0
    for row in np.array_split(np.arange(side), max(1, side // 256)):
        X, Y = np.meshgrid(xs, xs[row])
        pts = np.column_stack([X.ravel(), Y.ravel()])
        pts = pts[np.linalg.norm(pts, axis=1) <= radius]
        if len(pts):
            d, _ = tree.query(pts, distance_upper_bound=rho)
            area += np.count_nonzero(np.isfinite(d)) * h * h
    return float(area)


def zero_set_covering(P, rho, D=None, ceiling=COVERING_CEILING):
    """Greedy rho-net size of Z(P) cap B(0,1) against c (D / rho + D^2).

    The same samples feed the neighbourhood-area check against
    c (D rho + D^2 rho^2) and the component count against c D^2.
    """
    if rho <= 0:
        raise PreconditionError("rho must be positive")
    P = as_product(P)
    D = P.degree if D is None else int(D)
    if P.degree > D:
        raise PreconditionError("deg P exceeds D")
    spacing = rho / 4
    samples = zero_set_samples(P, spacing)
    net = greedy_net(samples, rho)
    cover = len(net)
    const = cover / (D / rho + D * D)
    area = neighbourhood_area(samples, rho)
    area_const = area / (D * rho + (D * rho) ** 2)
    comps = component_count(samples, 2.5 * spacing)
    harnack = comps <= HARNACK_CEILING * D * D
    return CoveringReport(D, rho, cover, const, area, area_const, comps, harnack,
                          bool(const <= ceiling and harnack))


def conic_test_corpus():
    """Named plane curves of low degree used to exercise the covering bounds."""
    def line(a, b, c):
        return Poly2(1, [c, a, b])

    def conic(*c):
        return Poly2(2, c)

    corpus = {
        "circle_r0.5": ProductPoly((conic(-0.25, 0, 0, 1, 0, 1),)),
        "circle_offset": ProductPoly((conic(*Curve2.circle(0.3, -0.2, 0.6).coeffs),)),
        "ellipse": ProductPoly((conic(-0.25, 0, 0, 1, 0, 4),)),
        "hyperbola": ProductPoly((conic(-0.05, 0, 0, 0, 1, 0),)),
        "parabola": ProductPoly((conic(-0.5, 0, -1, 1, 0, 0),)),
        "line_pair": ProductPoly((conic(0, 0, 0, 1, 0, -1),)),
        "parallel_lines": ProductPoly((conic(-0.09, 0, 0, 0, 0, 1),)),
        "empty": ProductPoly((conic(1, 0, 0, 1, 0, 1),)),
        "tiny_circle": ProductPoly((conic(-1e-4, 0, 0, 1, 0, 1),)),
    }
    for D in (2, 4, 8):
        angles = np.linspace(0, np.pi, D, endpoint=False) + 0.1
        corpus[f"lines_{D}"] = ProductPoly(tuple(
            line(np.cos(t), np.sin(t), -0.5 * np.sin(3 * t)) for t in angles))
    corpus["circles_3"] = ProductPoly(tuple(conic(-r * r, 0, 0, 1, 0, 1) for r in (0.3, 0.6, 0.9)))
    return corpus


@dataclass
class NearVarietyProfile:
    s: float
    rho: float
    near_points: np.ndarray         # three s-separated parameters within rho of Z
    ts: tuple
    measures: dict                  # t -> |{p in L cap B(0,1): dist > t rho}|
    constant: float                 # fitted at t = 1: measure / s^3
    bounds: dict                    # t -> constant * s^3 * t^(-1/2)
    decay_exponent: float           # least-squares slope of log measure vs log t

    @property
    def ok(self):
        return all(self.measures[t] <= self.bounds[t] * (1 + 1e-9) + 1e-12 for t in self.ts)

    def to_json(self):
        return {
            "s": self.s, "rho": self.rho,
            "near_points": [float(x) for x in self.near_points],
            "measures": {str(t): float(v) for t, v in self.measures.items()},
            "bounds": {str(t): float(v) for t, v in self.bounds.items()},
            "constant": self.constant, "decay_exponent": self.decay_exponent, "ok": self.ok,
        }


def near_variety_profile(P, line, s, rho, ts=(1, 4, 16, 64), samples=20001):
    """Measure of the part of a line segment in B(0,1) far from a conic.

    ``line`` is (point, direction) in the plane.  Distances are exact and
    evaluated at ``samples`` equally spaced points of the chord.
    """
    curve = P.to_curve() if isinstance(P, Poly2) else P
    if not isinstance(curve, Curve2):
        raise PreconditionError("the profile needs a polynomial of degree <= 2")
    p0, v = (np.asarray(a, float) for a in line)
    v = v / np.linalg.norm(v)
    b = p0 @ v
    disc = b * b - (p0 @ p0 - 1.0)
    if disc <= 0:
        raise PreconditionError("the line misses the unit disc")
    t0, t1 = -b - np.sqrt(disc), -b + np.sqrt(disc)
    tt = np.linspace(t0, t1, samples)
    pts = p0 + tt[:, None] * v
    dist = conic_distance(curve, pts)
    near = tt[dist < rho]
    chosen = []
    for t in near:
        if not chosen or t - chosen[-1] >= s:
            chosen.append(t)
        if len(chosen) == 3:
            break
    if len(chosen) < 3:
        raise PreconditionError("no three s-separated points of the chord lie within rho of Z(P)")
    dt = (t1 - t0) / (samples - 1)
    measures = {t: float(np.count_nonzero(dist > t * rho) * dt) for t in ts}
    const = measures[ts[0]] / s ** 3
    bounds = {t: const * s ** 3 * (t / ts[0]) ** -0.5 for t in ts}
    pos = [(np.log(t), np.log(m)) for t, m in measures.items() if m > 0]
    slope = float(np.polyfit(*zip(*pos), 1)[0]) if len(pos) >= 2 else float("-inf")
    return NearVarietyProfile(s, rho, np.array(chosen), tuple(ts), measures, const, bounds, slope)
