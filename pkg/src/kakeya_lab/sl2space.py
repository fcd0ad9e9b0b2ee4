"""The hypersurface {ad - bc = 1} in R^4 viewed as a space of lines.

The point (a, b, c, d) stands for the line (a, b, 0) + R(c, d, 1).  Two such
lines meet exactly when det[[a1-a2, b1-b2], [c1-c2, d1-d2]] vanishes, which on
the hypersurface equals the dot product of the chord with the normal
(d1, -c1, -b1, a1).
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .errors import DegeneracyError, PreconditionError
from .geometry.lines import Line3
from .incidence.curves import Curve2, _read_text

SL2_TOL = 1e-10
TRANSVERSAL_TOL = 1e-6


def sl2_defect(x):
    x = np.asarray(x, float)
    return x[..., 0] * x[..., 3] - x[..., 1] * x[..., 2] - 1.0


@dataclass(frozen=True, eq=False)
class SL2Point:
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, float).reshape(4)
        if abs(sl2_defect(c)) > SL2_TOL * max(1.0, float(np.abs(c).max()) ** 2):
            raise PreconditionError(f"{c.tolist()} is not on ad - bc = 1")
        object.__setattr__(self, "coords", c)

    @classmethod
    def of(cls, a, b, c, d):
        return cls(np.array([a, b, c, d], float))

    @classmethod
    def from_line(cls, L: Line3):
        return cls(L.chart())

    def to_line(self):
        return Line3.from_chart(*self.coords)

    @property
    def a(self):
        return self.coords[0]

    @property
    def b(self):
        return self.coords[1]

    @property
    def c(self):
        return self.coords[2]

    @property
    def d(self):
        return self.coords[3]


def project_to_sl2(x):
    """Radial rescaling onto the hypersurface (needs ad - bc > 0)."""
    x = np.asarray(x, float)
    det = x[..., 0] * x[..., 3] - x[..., 1] * x[..., 2]
    if np.any(det <= 0):
        raise PreconditionError("radial projection needs ad - bc > 0")
    return x / np.sqrt(det)[..., None]


def random_sl2_points(rng, n, scale=1.0):
    """Points with (a, b) and a slope parameter drawn from boxes; d solved from
    the defining relation so every point is exact."""
    out = []
    while len(out) < n:
        a, b, c = rng.uniform(-scale, scale, 3)
        if abs(a) < 0.2 * scale:
            continue
        out.append((a, b, c, (1.0 + b * c) / a))
    return np.array(out)


def tangent_normal(p: SL2Point):
    a, b, c, d = p.coords
    return np.array([d, -c, -b, a])


def chord_transversality(p1: SL2Point, p2: SL2Point, check=True):
    """|det[[a1-a2, b1-b2], [c1-c2, d1-d2]]|, cross-checked against the
    normal-vector form."""
    da, db, dc, dd = p1.coords - p2.coords
    det = da * dd - db * dc
    if check:
        dot = tangent_normal(p1) @ (p1.coords - p2.coords)
        scale = 1.0 + float(np.abs(p1.coords).max() + np.abs(p2.coords).max()) ** 2
        if abs(abs(det) - abs(dot)) > 1e-10 * scale:
            raise PreconditionError("chord identity failed: points are not on ad - bc = 1")
    return float(abs(det))


def strip_matrix(p):
    """Rows: the three grain constraints at heights 0, 1/2, 1 and the linear
    part of ad - bc along (u, v, w, x)."""
    a, b, c, d = np.asarray(p.coords if isinstance(p, SL2Point) else p, float)
    return np.array([
        [-b, a, 0.0, 0.0],
        [-(b + d / 2), a + c / 2, -(b + d / 2) / 2, (a + c / 2) / 2],
        [-(b + d), a + c, -(b + d), a + c],
        [d, -c, -b, a],
    ])


@dataclass(frozen=True, eq=False)
class StripDirection:
    direction: np.ndarray
    offset: np.ndarray
    determinant: float
    transversality: float


def strip_direction(p: SL2Point, e=0.0, f=0.0, g=0.0):
    """Solution family of the grain constraints: offset + t * direction.

    The direction spans the kernel of the first three rows; ``transversality``
    is the derivative of ad - bc along it.
    """
    M = strip_matrix(p)
    det = float(np.linalg.det(M))
    top = M[:3]
    _, _, vt = np.linalg.svd(top)
    k = vt[-1]
    trans = float(M[3] @ k)
    if trans < 0:
        k, trans = -k, -trans
    offset = np.linalg.lstsq(top, np.array([e, f, g], float), rcond=None)[0]
    return StripDirection(k, offset, det, trans)


@dataclass(frozen=True, eq=False)
class BetaCurve:
    """Lines of the hypersurface meeting both anchor lines.

    ``origin`` and ``basis`` describe the affine plane cut out by the two linear
    conditions; ``curve`` is the conic in the orthonormal coordinates of that
    plane, with axes ordered by sample variance.
    """
    anchor_t: SL2Point
    anchor_b: SL2Point
    origin: np.ndarray
    basis: np.ndarray
    curve: Curve2
    free_coords: tuple = field(default=(0, 1))
    form: str = "meeting"

    def lift(self, uv):
        uv = np.atleast_2d(uv)
        return self.origin + uv @ self.basis

    def project(self, x):
        return (np.atleast_2d(x) - self.origin) @ self.basis.T

    def sample(self, n=200, window=4.0):
        """Curve points in R^4 from a coordinate sweep of the planar conic."""
        return self.lift(self.curve.sample(n, window=window))

    def coordinate_model(self):
        """The conic in two of the original coordinates, the other two being
        eliminated with the linear conditions."""
        i, j = self.free_coords
        A, rhs = _beta_linear_system(self.anchor_t, self.anchor_b, self.form)
        rest = [k for k in range(4) if k not in (i, j)]
        # x_rest = S (x_i, x_j) + s0
        sub = np.linalg.solve(A[:, rest], np.column_stack([-A[:, i], -A[:, j], rhs]))
        def point(al, be):
            x = np.zeros(4)
            x[i], x[j] = al, be
            x[rest] = sub[:, 0] * al + sub[:, 1] * be + sub[:, 2]
            return x
        return _conic_from_map(point)

    def to_json(self):
        return {
            "anchors": {"T": self.anchor_t.coords.tolist(), "B": self.anchor_b.coords.tolist()},
            "projection": {"origin": self.origin.tolist(), "basis": self.basis.tolist()},
            "monomials": ["1", "x", "y", "x^2", "xy", "y^2"],
            "incidence_form": self.form,
        }

    def export(self, csv_path, json_path):
        from .incidence.curves import write_curves_csv
        write_curves_csv([self.curve], csv_path)
        with open(json_path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)


INCIDENCE_FORMS = ("meeting", "literal")


def incidence_row(p: SL2Point, form="meeting"):
    """Row r with r . x = 2 describing the lines x that meet the line p.

    "meeting" is the normal (d, -c, -b, a), which is exact for the chart used
    here.  "literal" is the permuted row (a, -b, -c, d); it agrees with the
    meeting row only when a = d and b = c, and is kept for reproducing
    worked examples written in that form.
    """
    a, b, c, d = p.coords
    if form == "meeting":
        return np.array([d, -c, -b, a])
    if form == "literal":
        return np.array([a, -b, -c, d])
    raise PreconditionError(f"unknown incidence form {form!r}")


def _beta_linear_system(p_t: SL2Point, p_b: SL2Point, form="meeting"):
    rows = [incidence_row(p, form) for p in (p_b, p_t)]
    return np.array(rows), np.array([2.0, 2.0])


def _conic_from_map(point):
    """Coefficients of (alpha, beta) -> ad - bc - 1 for an affine map into R^4,
    read off exactly from values at six points."""
    nodes = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1)]
    vals = np.array([sl2_defect(point(al, be)) for al, be in nodes])
    V = np.array([[1, al, be, al * al, al * be, be * be] for al, be in nodes], float)
    return Curve2(np.linalg.solve(V, vals))


def beta_curve(p_t: SL2Point, p_b: SL2Point, min_transversality=TRANSVERSAL_TOL,
               form="meeting"):
    """Lines of the hypersurface meeting the lines p_t and p_b, as a planar conic."""
    if chord_transversality(p_t, p_b) < min_transversality:
        raise DegeneracyError("anchor lines intersect: the curve degenerates")
    A, rhs = _beta_linear_system(p_t, p_b, form)
    x0 = np.linalg.lstsq(A, rhs, rcond=None)[0]
    _, _, vt = np.linalg.svd(A)
    plane = vt[2:]
    prelim = Curve2(_conic_from_map(lambda al, be: x0 + al * plane[0] + be * plane[1]).coeffs)
    pts = prelim.sample(400, window=4.0)
    if len(pts) >= 3:
        lifted = x0 + pts @ plane
        centre = lifted.mean(axis=0)
        _, _, w = np.linalg.svd((lifted - centre) @ plane.T, full_matrices=False)
        basis = w @ plane
        origin = x0 + ((centre - x0) @ plane.T) @ plane
    else:
        basis, origin = plane, x0
    curve = _conic_from_map(lambda al, be: origin + al * basis[0] + be * basis[1])
    minors = [abs(np.linalg.det(A[:, [k for k in range(4) if k not in (i, j)]]))
              for i in range(4) for j in range(i + 1, 4)]
    pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    free = pairs[int(np.argmax(minors))]
    return BetaCurve(p_t, p_b, origin, basis, curve, free, form)


@dataclass
class LocusCluster:
    centre: np.ndarray
    diameter: float
    samples: int


@dataclass
class LocusReport:
    delta: float
    clusters: list
    exact_solutions: np.ndarray
    constant: float

    @property
    def ok(self):
        return len(self.clusters) <= 2


def triple_hairbrush_locus(p1: SL2Point, p2: SL2Point, p3: SL2Point, delta,
                           min_transversality=1e-3, grid=5, window=10.0, form="meeting"):
    """Lines of the hypersurface that come within delta of meeting three given lines.

    Each incidence condition r_i . x = 2 is relaxed to a slab of width
    delta, as is ad - bc = 1.  The three slabs meet in a thickened line of R^4;
    for every offset on a grid over the slab residuals, the set of parameters
    along that line satisfying the relaxed quadric is an exact union of at most
    two intervals.  Interval endpoints and midpoints are clustered by single
    linkage at 4 sqrt(delta).
    """
    if np.linalg.norm(p1.coords - p2.coords) < np.sqrt(delta):
        raise PreconditionError("p1 and p2 are closer than sqrt(delta)")
    for name, q in (("p1", p1), ("p2", p2)):
        if chord_transversality(p3, q) < min_transversality:
            raise PreconditionError(f"p3 is not transversal to {name}")
    M = np.array([incidence_row(p, form) for p in (p1, p2, p3)])
    rhs = np.full(3, 2.0)
    x0 = np.linalg.lstsq(M, rhs, rcond=None)[0]
    _, _, vt = np.linalg.svd(M)
    k = vt[-1]
    pinv = np.linalg.pinv(M)
    levels = np.linspace(-delta, delta, grid)
    samples = []
    for r in np.array(np.meshgrid(levels, levels, levels, indexing="ij")).reshape(3, -1).T:
        base = x0 + pinv @ r
        for lo, hi in _quadric_slab_intervals(base, k, delta, window):
            samples.extend([base + lo * k, base + 0.5 * (lo + hi) * k, base + hi * k])
    exact = np.array([x0 + t * k for t in _quadric_roots(x0, k)]).reshape(-1, 4)
    if not samples:
        return LocusReport(delta, [], exact, 0.0)
    S = np.array(samples)
    if len(S) == 1:
        labels = np.array([1])
    else:
        labels = fcluster(linkage(S, method="single"), t=4 * np.sqrt(delta), criterion="distance")
    clusters = []
    for lab in np.unique(labels):
        pts = S[labels == lab]
        diam = _diameter(pts)
        clusters.append(LocusCluster(pts.mean(axis=0), diam, len(pts)))
    clusters.sort(key=lambda c: tuple(c.centre))
    const = max(c.diameter for c in clusters) / np.sqrt(delta)
    return LocusReport(delta, clusters, exact, float(const))


def _diameter(pts):
    if len(pts) < 2:
        return 0.0
    from scipy.spatial.distance import pdist
    return float(pdist(pts).max())


def _quadric_along(base, k):
    """Coefficients (q2, q1, q0) of t -> defect(base + t k)."""
    a, b, c, d = base
    ka, kb, kc, kd = k
    q2 = ka * kd - kb * kc
    q1 = a * kd + d * ka - b * kc - c * kb
    q0 = a * d - b * c - 1.0
    return q2, q1, q0


def _quadric_roots(base, k):
    q2, q1, q0 = _quadric_along(base, k)
    return [r.real for r in np.roots([q2, q1, q0]) if abs(r.imag) < 1e-12] if abs(q2) > 1e-15 else (
        [] if abs(q1) < 1e-15 else [-q0 / q1])


def _quadric_slab_intervals(base, k, delta, window):
    """Exact intervals of t in [-window, window] with |defect(base + t k)| <= delta."""
    q2, q1, q0 = _quadric_along(base, k)
    cuts = [-window, window]
    for level in (-delta, delta):
        if abs(q2) > 1e-15:
            for r in np.roots([q2, q1, q0 - level]):
                if abs(r.imag) < 1e-12 and -window < r.real < window:
                    cuts.append(r.real)
        elif abs(q1) > 1e-15:
            r = (level - q0) / q1
            if -window < r < window:
                cuts.append(r)
    cuts = np.unique(cuts)
    out = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        if abs(q2 * mid * mid + q1 * mid + q0) <= delta:
            if out and abs(out[-1][1] - lo) < 1e-15:
                out[-1] = (out[-1][0], hi)
            else:
                out.append((lo, hi))
    return out


@dataclass
class PolyClass:
    kind: str
    coeffs: np.ndarray          # (A, B, C, D, E, F) as fitted, largest entry 1
    normalized: np.ndarray      # after the case transformation, F scaled to 1
    residual: float
    transform: str | None


CASE_TOL = 0.1


def _classify(coeffs, tol=CASE_TOL):
    A, B, C, D, E, F = coeffs
    big = np.abs(coeffs).max()
    if abs(F) >= tol * big:
        return "F-dominant", None, coeffs
    if abs(A) >= tol * big:
        # (x, y, z) -> (x, y, z + y)
        return "A-dominant", "z+y", np.array([A, B, C, D + E, E, A + F])
    if abs(B) >= tol * big:
        # (x, y, z) -> (x, y, z + x)
        return "B-dominant", "z+x", np.array([A, B, C + E, D, E, F - B])
    return "degenerate", None, coeffs


def sl2_poly_detect(centres, tol=1e-9):
    """Fit A a + B b + C c + D d + E + F (ad - bc) to strip centres and classify."""
    X = np.asarray(centres, float)
    if X.ndim != 2 or X.shape[1] != 4 or len(X) < 20:
        raise PreconditionError("need at least 20 centres in R^4")
    a, b, c, d = X.T
    design = np.column_stack([a, b, c, d, np.ones_like(a), a * d - b * c])
    scale = np.abs(design).max(axis=0)
    scale[scale == 0] = 1.0
    _, s, vt = np.linalg.svd(design / scale, full_matrices=False)
    if s[-2] < tol * s[0]:
        cands = []
        for v in vt[-2:]:
            w = v / scale
            cands.append(_classify(w / np.abs(w).max())[0])
        raise DegeneracyError(f"ambiguous fit; candidate classes: {sorted(set(cands))}")
    coeffs = vt[-1] / scale
    coeffs = coeffs / coeffs[np.argmax(np.abs(coeffs))]
    resid = float(np.sqrt(np.mean((design @ coeffs) ** 2)))
    kind, transform, mapped = _classify(coeffs)
    normalized = mapped / mapped[5] if abs(mapped[5]) > 0 else mapped
    return PolyClass(kind, coeffs, normalized, resid, transform)


def transform_line_params(x, transform):
    """Action on (a, b, c, d) of the maps used by the case analysis."""
    a, b, c, d = np.asarray(x, float)
    if transform == "z+y":
        return np.array([a - b * c / (1 + d), b - b * d / (1 + d), c / (1 + d), d / (1 + d)])
    if transform == "z+x":
        return np.array([a / (1 + c), (b + b * c - a * d) / (1 + c), c / (1 + c), d / (1 + c)])
    raise PreconditionError(f"unknown transform {transform!r}")


def write_sl2_csv(points, path=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "b", "c", "d"])
    for p in points:
        coords = p.coords if isinstance(p, SL2Point) else p
        w.writerow([repr(float(v)) for v in coords])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_sl2_csv(path_or_text, validate=True):
    rows = list(csv.reader(io.StringIO(_read_text(path_or_text))))
    if rows and rows[0] and rows[0][0].strip() == "a":
        rows = rows[1:]
    out = []
    for r in rows:
        if not r:
            continue
        x = np.array([float(v) for v in r])
        out.append(SL2Point(x) if validate else x)
    return out
