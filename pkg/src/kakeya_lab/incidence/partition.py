"""Discrete polynomial partitioning of planar point sets.

The partitioning polynomial is a product of ham-sandwich bisectors.  Each round
bisects every current sign class at once by lifting the points with the
Veronese map of some degree d and solving a linear ham-sandwich problem in the
space of coefficients.  Rounds continue while the total degree stays within D.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from ..errors import PreconditionError, VerificationError
from .polynomials import Poly2, ProductPoly, as_product, n_monomials, veronese

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-9
MAX_DEGREE = 64
GRID_WINDOW = 1.25
BASE_RESOLUTION = 256
MAX_RESOLUTION = 4096


@dataclass(frozen=True, eq=False)
class PlanarPointSet:
    points: np.ndarray
    separation: float = 0.0
    scale: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, float).reshape(-1, 2)
        if pts.size and np.linalg.norm(pts, axis=1).max() > 1.0 + 1e-12:
            raise PreconditionError("points must lie in the closed unit disc")
        if self.separation > 0 and len(pts) > 1:
            d, _ = cKDTree(pts).query(pts, k=2)
            if d[:, 1].min() < self.separation * (1 - 1e-12):
                raise PreconditionError(
                    f"points closer than the declared separation {self.separation}")
        if self.scale is not None and len(pts) > 1.0 / self.scale + 1e-9:
            raise PreconditionError("more than 1/scale points")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


@dataclass
class Cell:
    label: int
    sign: int
    indices: np.ndarray


@dataclass
class CellLabeling:
    labels: np.ndarray          # -1 for points on Z(P)
    signs: np.ndarray
    n_components: int
    resolution: int
    unresolved: list = field(default_factory=list)


@dataclass
class RoundStats:
    degree: int
    sets: int
    largest_set: int
    largest_side: int
    ok: bool


@dataclass
class PartitionResult:
    poly: ProductPoly
    D: int
    cells: list
    boundary: np.ndarray
    n_points: int
    n_components: int
    rounds: list
    degenerate: bool = False
    unresolved: list = field(default_factory=list)

    @property
    def max_cell(self):
        return max((len(c.indices) for c in self.cells), default=0)

    @property
    def cell_constant(self):
        """n_components / D^2."""
        return self.n_components / self.D ** 2

    @property
    def load_constant(self):
        """max cell size * D^2 / n."""
        return self.max_cell * self.D ** 2 / max(self.n_points, 1)

    def bookkeeping_ok(self):
        counted = sum(len(c.indices) for c in self.cells) + len(self.boundary)
        seen = np.concatenate([c.indices for c in self.cells] + [self.boundary]) if counted else np.zeros(0, int)
        return counted == self.n_points and len(np.unique(seen)) == self.n_points

    def summary(self):
        return {
            "D": self.D,
            "degree": self.poly.degree,
            "n": self.n_points,
            "cells_occupied": len(self.cells),
            "components": self.n_components,
            "boundary": int(len(self.boundary)),
            "max_cell": self.max_cell,
            "c1_components_over_D2": self.cell_constant,
            "c2_maxcell_D2_over_n": self.load_constant,
            "degenerate": self.degenerate,
        }


def _round_degree(k):
    """Smallest d whose coefficient space has projective dimension >= k."""
    d = 1
    while n_monomials(d) - 1 < k:
        d += 1
    return d


def _median_and_grad(vals, rows):
    """Median of vals and the matching combination of lifted rows."""
    n = vals.size
    order = np.argpartition(vals, [(n - 1) // 2, n // 2])
    lo, hi = order[(n - 1) // 2], order[n // 2]
    return 0.5 * (vals[lo] + vals[hi]), 0.5 * (rows[lo] + rows[hi])


def _sides_ok(vals, tol):
    half = math.ceil(vals.size / 2)
    return int((vals > tol).sum()) <= half and int((vals < -tol).sum()) <= half


def ham_sandwich(point_sets, d, rng, restarts=60, max_iter=200):
    """A degree-d polynomial bisecting each of the given point sets.

    Solves median(f(S_i)) = 0 for all i by Newton's method on a random affine
    family of coefficient vectors; the median is piecewise linear in the
    coefficients, so the iteration terminates once the active points settle.
    Every candidate is verified; failures restart from fresh randomness.
    """
    sets = [np.atleast_2d(s) for s in point_sets if len(s)]
    k = len(sets)
    m = n_monomials(d)
    if k == 0:
        return Poly2(d, np.eye(m)[1])
    if k > m - 1:
        raise PreconditionError(f"degree {d} cannot bisect {k} sets")
    lifted = [veronese(s, d) for s in sets]
    if k == 1 and d == 1:
        # a vertical line through the median is always a bisector
        xs = sets[0][:, 0]
        med = float(np.median(xs))
        return Poly2(1, np.array([-med, 1.0, 0.0]))
    best = None
    for _ in range(restarts):
        B = rng.normal(size=(k + 1, m))
        t = np.zeros(k)
        for _ in range(max_iter):
            c = B[0] + t @ B[1:]
            F = np.empty(k)
            J = np.empty((k, k))
            for i, V in enumerate(lifted):
                med, row = _median_and_grad(V @ c, V)
                F[i] = med
                J[i] = B[1:] @ row
            scale = np.abs(c).max()
            if np.abs(F).max() <= 1e-13 * scale:
                break
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                break
            t = t + step
        c = B[0] + t @ B[1:]
        c = c / np.abs(c).max()
        if all(_sides_ok(V @ c, BOUNDARY_TOL) for V in lifted):
            return Poly2(d, c)
        res = max(abs(_median_and_grad(V @ c, V)[0]) for V in lifted)
        if best is None or res < best[0]:
            best = (res, c)
    raise VerificationError(f"no verified bisector of degree {d} for {k} sets "
                            f"(best median residual {best[0]:.3g})")


def boundary_mask(P, pts, tol=BOUNDARY_TOL):
    P = as_product(P)
    pts = np.atleast_2d(pts)
    if len(pts) == 0:
        return np.zeros(0, bool)
    return P.distance_proxy(pts) <= tol


def _sign_classes(P: ProductPoly, pts, active):
    """Group active indices by the sign vector of the factors."""
    if not P.factors:
        return [active]
    sig = np.column_stack([np.sign(f(pts[active])) for f in P.factors]).astype(np.int8)
    keys, inv = np.unique(sig, axis=0, return_inverse=True)
    return [active[inv.ravel() == k] for k in range(len(keys))]


def polynomial_partition(pts, D, rng=None):
    """Partitioning polynomial of degree <= D and the induced cells."""
    if isinstance(pts, PlanarPointSet):
        pts = pts.points
    pts = np.asarray(pts, float).reshape(-1, 2)
    n = len(pts)
    if D < 1:
        raise PreconditionError("D must be at least 1")
    if D > MAX_DEGREE:
        raise PreconditionError(f"D = {D} exceeds the degree budget {MAX_DEGREE}")
    if n < 1:
        raise PreconditionError("need at least one point")
    rng = rng if rng is not None else np.random.default_rng(0)

    factors = []
    rounds = []
    active = np.arange(n)
    while True:
        P = ProductPoly(tuple(factors)) if factors else None
        classes = _sign_classes(P, pts, active) if P else [active]
        classes = [c for c in classes if len(c)]
        d = _round_degree(len(classes))
        used = sum(f.degree for f in factors)
        if not classes or used + d > D:
            break
        f = ham_sandwich([pts[c] for c in classes], d, rng)
        factors.append(f)
        largest_side = 0
        ok = True
        for c in classes:
            vals = f(pts[c])
            on = f.distance_proxy(pts[c]) <= BOUNDARY_TOL
            pos = int(((vals > 0) & ~on).sum())
            neg = int(((vals < 0) & ~on).sum())
            largest_side = max(largest_side, pos, neg)
            ok &= max(pos, neg) <= math.ceil(len(c) / 2)
        rounds.append(RoundStats(d, len(classes), max(len(c) for c in classes), largest_side, ok))
        if not ok:
            raise VerificationError(f"bisection round {len(rounds)} failed verification")
        active = active[~boundary_mask(f, pts[active])]
        if len(active) == 0:
            break

    if not factors:
        factors.append(Poly2(1, np.array([-(GRID_WINDOW + 1.0), 1.0, 0.0])))
    P = ProductPoly(tuple(factors))
    labeling = assign_cells(P, pts)
    boundary = np.flatnonzero(labeling.labels < 0)
    cells = []
    for lab in np.unique(labeling.labels[labeling.labels >= 0]):
        idx = np.flatnonzero(labeling.labels == lab)
        cells.append(Cell(int(lab), int(labeling.signs[idx[0]]), idx))
    result = PartitionResult(P, int(D), cells, boundary, n, labeling.n_components, rounds,
                             degenerate=len(cells) == 0, unresolved=labeling.unresolved)
    if not result.bookkeeping_ok():
        raise VerificationError("partition bookkeeping does not account for every point")
    return result


def _label_grid(P: ProductPoly, N, window):
    """Component labels of the pixels, where a component is a 4-connected
    region on which every factor keeps one sign.  Pixels on Z(P) get -1."""
    xs = np.linspace(-window, window, N)
    code = np.zeros((N, N), np.int64)
    zero = np.zeros((N, N), bool)
    chunk = max(1, (1 << 22) // N)
    for bit, f in enumerate(P.factors):
        for r0 in range(0, N, chunk):
            v = f.evaluate_grid(xs, xs[r0:r0 + chunk])
            code[r0:r0 + chunk] |= (v > 0).astype(np.int64) << bit
            zero[r0:r0 + chunk] |= v == 0
    lab = np.full((N, N), -1, np.int64)
    total = 0
    for c in np.unique(code[~zero]):
        mask = (code == c) & ~zero
        part, k = ndimage.label(mask)
        lab[mask] = part[mask] - 1 + total
        total += k
    return xs, code, zero, lab, total


def _point_codes(P, pts):
    code = np.zeros(len(pts), np.int64)
    for bit, f in enumerate(P.factors):
        code |= (f(pts) > 0).astype(np.int64) << bit
    return code


def _point_labels(pts, codes, on_zero, xs, code, zero, lab):
    N = len(xs)
    h = xs[1] - xs[0]
    window = -xs[0]
    ij = np.clip(np.rint((pts + window) / h).astype(int), 0, N - 1)
    out = np.full(len(pts), -1, int)
    unresolved = []
    for k, (ix, iy) in enumerate(ij):
        if on_zero[k]:
            continue
        s = codes[k]
        if not zero[iy, ix] and code[iy, ix] == s:
            out[k] = lab[iy, ix]
            continue
        best, bd = -1, np.inf
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                y, x = iy + dy, ix + dx
                if 0 <= x < N and 0 <= y < N and not zero[y, x] and code[y, x] == s:
                    dd = (xs[x] - pts[k, 0]) ** 2 + (xs[y] - pts[k, 1]) ** 2
                    if dd < bd:
                        best, bd = lab[y, x], dd
        if best < 0:
            unresolved.append(k)
        out[k] = best
    return out, unresolved


def _same_partition(a, b):
    """True when labelings a and b group points identically."""
    if len(a) == 0:
        return True
    pairs = np.unique(np.column_stack([a, b]), axis=0)
    return len(np.unique(pairs[:, 0])) == len(pairs) == len(np.unique(pairs[:, 1]))


def assign_cells(P, pts, base=BASE_RESOLUTION, max_resolution=MAX_RESOLUTION,
                 window=GRID_WINDOW, boundary_tol=BOUNDARY_TOL):
    """Label points by the connected component of R^2 \\ Z(P) containing them.

    Components are same-sign 4-connected pixel regions of a grid over
    [-window, window]^2.  The grid doubles until two successive resolutions
    group the points identically, up to ``max_resolution``; pairs still
    grouped differently at that point are reported as unresolved.
    """
    P = as_product(P)
    pts = np.asarray(pts, float).reshape(-1, 2)
    on = boundary_mask(P, pts, boundary_tol) if len(pts) else np.zeros(0, bool)
    signs = P.sign(pts) if len(pts) else np.zeros(0, np.int8)
    signs = np.where(on, 0, signs)
    codes = _point_codes(P, pts)
    N = base
    prev = None
    while True:
        xs, code, zero, lab, ncomp = _label_grid(P, N, window)
        labels, unresolved = _point_labels(pts, codes, on, xs, code, zero, lab)
        if prev is not None and not unresolved and _same_partition(prev[0][signs != 0], labels[signs != 0]):
            return CellLabeling(labels, signs, ncomp, N)
        if N * 2 > max_resolution:
            break
        prev = (labels, unresolved)
        N *= 2
    pairs = []
    if prev is not None:
        a, b = prev[0], labels
        for i in np.flatnonzero(signs != 0):
            for j in np.flatnonzero(signs != 0):
                if i < j and (a[i] == a[j]) != (b[i] == b[j]):
                    pairs.append((int(i), int(j)))
                    if len(pairs) >= 20:
                        break
            if len(pairs) >= 20:
                break
    pairs.extend((int(k), int(k)) for k in unresolved)
    if pairs:
        log.warning("cell labeling unresolved at %d^2 for pairs %s", N, pairs)
    labels = np.where(labels < 0, -1, labels)
    # points that could not be placed on any same-sign pixel go to the boundary list
    return CellLabeling(labels, signs, ncomp, N, pairs)


def grid_labeler(P, resolution, window=GRID_WINDOW, boundary_tol=BOUNDARY_TOL):
    """Callable labeling arbitrary points by component on one fixed grid;
    -1 on Z(P) or where no same-sign pixel is adjacent."""
    P = as_product(P)
    xs, code, zero, lab, _ = _label_grid(P, resolution, window)

    def label(pts):
        pts = np.asarray(pts, float).reshape(-1, 2)
        if len(pts) == 0:
            return np.zeros(0, int)
        on = boundary_mask(P, pts, boundary_tol)
        labels, _ = _point_labels(pts, _point_codes(P, pts), on, xs, code, zero, lab)
        return labels

    return label
