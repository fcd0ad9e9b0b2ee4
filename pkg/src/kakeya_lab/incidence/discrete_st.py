"""Fuzzy point/conic incidences counted directly and through a polynomial
partition, on generated configurations with bounded pair multiplicity."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..errors import PreconditionError, VerificationError
from .covering import zero_set_samples
from .curves import Curve2
from .distance import conic_distance, incidence_matrix
from .partition import PlanarPointSet, grid_labeler, polynomial_partition
from .polynomials import ProductPoly

ST_CEILING = 8.0
MAX_RADIUS = 4.0


def is_dyadic(delta):
    k = -math.log2(delta)
    return delta > 0 and abs(k - round(k)) < 1e-12


def separated_points(rng, n, separation, attempts=50_000):
    """Dart throwing in the unit disc: up to n points pairwise >= separation apart."""
    pts = []
    tree_pts = np.zeros((0, 2))
    batch = 256
    tried = 0
    while len(pts) < n and tried < attempts:
        r = np.sqrt(rng.uniform(0, 1, batch))
        th = rng.uniform(0, 2 * np.pi, batch)
        cand = np.column_stack([r * np.cos(th), r * np.sin(th)])
        tried += batch
        for c in cand:
            if len(pts) >= n:
                break
            if tree_pts.size and np.min(np.sum((tree_pts - c) ** 2, axis=1)) < separation ** 2:
                continue
            pts.append(c)
            tree_pts = np.vstack([tree_pts, c])
    return np.array(pts).reshape(-1, 2)


def circle_through(p, q, s):
    """Circle through three points, or None if they are (nearly) collinear."""
    (ax, ay), (bx, by), (cx, cy) = p, q, s
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-12:
        return None
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d
    r = math.hypot(ax - ux, ay - uy)
    return Curve2.circle(ux, uy, r), r


@dataclass
class Configuration:
    points: PlanarPointSet
    curves: list
    r: float
    A: int
    pair_max: int
    attempts: int


def generate_configuration(delta, A, rng, r=None, n_curves=None, max_attempts=20_000):
    """Points delta^(1/2)-separated in B(0,1) and circles through point triples.

    A candidate circle is kept only if no pair of points would then lie within
    r of more than A kept circles, so the pair hypothesis holds by
    construction; it is re-verified on the finished configuration.
    """
    r = delta if r is None else r
    sep = math.sqrt(delta)
    n_pts = int(round(1 / delta))
    pts = separated_points(rng, n_pts, sep)
    n_curves = n_pts if n_curves is None else n_curves
    pair = np.zeros((len(pts), len(pts)), np.int32)
    curves = []
    tries = 0
    while len(curves) < n_curves and tries < max_attempts:
        tries += 1
        i, j, k = rng.choice(len(pts), 3, replace=False)
        got = circle_through(pts[i], pts[j], pts[k])
        if got is None or got[1] > MAX_RADIUS:
            continue
        cv = got[0]
        inc = np.flatnonzero(conic_distance(cv, pts) <= r)
        sub = pair[np.ix_(inc, inc)]
        np.fill_diagonal(sub, 0)
        if sub.size and sub.max() + 1 > A:
            continue
        pair[np.ix_(inc, inc)] += 1
        curves.append(cv)
    M = incidence_matrix(pts, curves, r)
    pm = _pair_max(M)
    return Configuration(PlanarPointSet(pts, sep, delta), curves, r, A, pm, tries)


def _pair_max(M):
    if M.shape[0] < 2 or M.shape[1] == 0:
        return 0
    G = M.astype(np.int32) @ M.T.astype(np.int32)
    np.fill_diagonal(G, 0)
    return int(G.max())


@dataclass
class DiscreteSTReport:
    delta: float
    A: int
    r: float
    D: int
    seed: int | None
    n_points: int
    n_curves: int
    pair_max: int
    incidences_brute: int
    incidences_partition: int
    boundary_points: int
    boundary_incidences: int
    cell_incidences: int
    cells: int
    max_cell_points: int
    curve_cell_pairs: int
    bound: float
    constant: float
    boundary_constant: float            # |P_0| / (D^2 delta^(-1/2))
    curve_cell_constant: float          # sum |C_Omega| / (D |C|)
    cauchy_schwarz_ok: bool
    ceiling: float = ST_CEILING
    per_cell: list = field(default_factory=list)

    @property
    def ok(self):
        return (self.incidences_brute == self.incidences_partition
                and self.constant <= self.ceiling and self.cauchy_schwarz_ok
                and self.pair_max <= self.A)

    def to_json(self):
        d = {k: v for k, v in self.__dict__.items()}
        d["ok"] = self.ok
        return d


def _distance_to_zero_set(P: ProductPoly, pts):
    """Exact for factors of degree <= 2, first-order proxy above that."""
    out = np.full(len(pts), np.inf)
    for f in P.factors:
        if f.degree <= 2:
            d = conic_distance(f.to_curve(), pts)
        else:
            d = f.distance_proxy(pts)
        out = np.minimum(out, d)
    return out


def partition_route(points, curves, r, D, rng, M=None):
    """I(P, C) as I(P_0, C) + sum over cells of I(P_Omega, C_Omega)."""
    pts = points.points if isinstance(points, PlanarPointSet) else np.asarray(points, float)
    M = incidence_matrix(pts, curves, r) if M is None else M
    if len(pts) == 0:
        return dict(total=0, boundary_points=0, boundary_incidences=0, cell_incidences=0,
                    cells=0, max_cell_points=0, curve_cell_pairs=0, per_cell=[])
    part = polynomial_partition(pts, D, rng)
    P = part.poly
    near = _distance_to_zero_set(P, pts) <= r
    labels = np.full(len(pts), -1)
    for c in part.cells:
        labels[c.indices] = c.label
    labels[near] = -1
    boundary_inc = int(M[near].sum())
    # cells met by each curve, from samples of the curve in the grid window
    res = max(512, min(2048, int(4 / max(r, 1e-3))))
    label = grid_labeler(P, res)
    cell_labels = label(pts)
    meets = [set() for _ in curves]
    for j, cv in enumerate(curves):
        smp = zero_set_samples(cv, 0.01, radius=1.0)
        meets[j].update(int(x) for x in label(smp) if x >= 0)
    cell_total = 0
    per_cell = []
    pairs = 0
    for lab in np.unique(labels[labels >= 0]):
        idx = np.flatnonzero(labels == lab)
        grid_lab = set(int(x) for x in cell_labels[idx] if x >= 0)
        members = {j for j in range(len(curves)) if meets[j] & grid_lab}
        members |= set(np.flatnonzero(M[idx].any(axis=0)).tolist())
        cols = np.array(sorted(members), int)
        inc = int(M[np.ix_(idx, cols)].sum()) if cols.size else 0
        cell_total += inc
        pairs += len(cols)
        per_cell.append({"cell": int(lab), "points": int(len(idx)), "curves": int(len(cols)),
                         "incidences": inc})
    return dict(total=boundary_inc + cell_total, boundary_points=int(near.sum()),
                boundary_incidences=boundary_inc, cell_incidences=cell_total,
                cells=len(per_cell), max_cell_points=max((c["points"] for c in per_cell), default=0),
                curve_cell_pairs=pairs, per_cell=per_cell)


def discrete_st_experiment(delta, A, seed=None, r=None, D=None, retries=5, ceiling=ST_CEILING):
    """Generate a configuration and compare its incidence count with A^(1/2) delta^(-4/3)."""
    if not is_dyadic(delta):
        raise PreconditionError("delta must be a power of 1/2")
    if A < 1:
        raise PreconditionError("A must be at least 1")
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(retries):
        rng = np.random.default_rng(child)
        conf = generate_configuration(delta, A, rng, r=r)
        if conf.pair_max <= A:
            break
    else:
        raise VerificationError(f"no configuration met the pair bound A={A} in {retries} tries")
    D = max(1, int(round(delta ** (-1 / 6)))) if D is None else int(D)
    pts = conf.points.points
    M = incidence_matrix(pts, conf.curves, conf.r)
    brute = int(M.sum())
    route = partition_route(conf.points, conf.curves, conf.r, D, rng, M)
    bound = math.sqrt(A) * delta ** (-4 / 3)
    nP, nC = len(pts), len(conf.curves)
    cs_ok = brute <= nC + math.sqrt(A * nP * nP * nC) + 1e-9
    return DiscreteSTReport(
        delta=delta, A=A, r=conf.r, D=D, seed=seed, n_points=nP, n_curves=nC,
        pair_max=conf.pair_max, incidences_brute=brute, incidences_partition=route["total"],
        boundary_points=route["boundary_points"], boundary_incidences=route["boundary_incidences"],
        cell_incidences=route["cell_incidences"], cells=route["cells"],
        max_cell_points=route["max_cell_points"], curve_cell_pairs=route["curve_cell_pairs"],
        bound=bound, constant=brute / bound,
        boundary_constant=route["boundary_points"] / (D * D * delta ** -0.5),
        curve_cell_constant=route["curve_cell_pairs"] / max(1, D * nC),
        cauchy_schwarz_ok=bool(cs_ok), ceiling=ceiling, per_cell=route["per_cell"])
