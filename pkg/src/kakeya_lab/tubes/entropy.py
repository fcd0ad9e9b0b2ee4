"""Covering numbers of the part of a regulus reached by nearly tangent lines
through a segment, and grains (thin plane slabs inside grid cubes)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from ..geometry.lines import Line3
from ..geometry.regulus import Regulus, gauss_curvature
from ..incidence.covering import greedy_net
from ..seeding import make_rng

ENTROPY_CEILING = 8.0
MIN_CURVATURE = 1e-3


def _project_to_surface(Q, pts, steps=20):
    for _ in range(steps):
        g = Q.gradient(pts)
        gg = (g * g).sum(axis=1)
        pts = pts - (Q(pts) / np.maximum(gg, 1e-300))[:, None] * g
    return pts


def surface_samples(R: Regulus, n, rng, radius=1.0):
    """Points of Z(R) inside B(0, radius) by projecting uniform samples."""
    out = []
    tries = 0
    while sum(len(o) for o in out) < n and tries < 50:
        tries += 1
        x = rng.uniform(-radius, radius, (4 * n, 3))
        x = _project_to_surface(R.quadric, x)
        ok = (np.abs(R.quadric(x)) < 1e-10) & (np.linalg.norm(x, axis=1) <= radius)
        out.append(x[ok])
    pts = np.vstack(out)[:n]
    if len(pts) == 0:
        raise PreconditionError("the regulus misses the ball")
    return pts


def curvature_floor(R: Regulus, n=200, checked=20, seed=0):
    """Smallest |K| over sampled surface points; ``checked`` of them are
    cross-checked with both curvature computations."""
    rng = make_rng(seed)
    pts = surface_samples(R, n, rng)
    ks = np.array([abs(R.quadric.implicit_gauss_curvature(p)) for p in pts])
    for p in pts[:checked]:
        gauss_curvature(R, p, rtol=1e-5)
    return float(ks.min())


def neighbourhood_samples(R: Regulus, rho, radius=1.0, chunk=1 << 21):
    """Grid points of spacing rho/2 in B(0, radius) within rho of Z(R) (first order)."""
    step = rho / 2
    ticks = np.arange(-radius + step / 2, radius, step)
    X, Y = np.meshgrid(ticks, ticks, indexing="ij")
    plane = np.column_stack([X.ravel(), Y.ravel()])
    out = []
    for z in ticks:
        pts = np.column_stack([plane, np.full(len(plane), z)])
        pts = pts[(pts * pts).sum(axis=1) <= radius * radius]
        out.append(pts[R.quadric.distance_proxy(pts) <= rho])
    return np.vstack(out)


def cell_count(pts, side):
    """Number of axis-aligned cubes of the given side meeting the point set.

    Monotone under inclusion; balls of radius side*sqrt(3)/2 around the cube
    centres cover the set.
    """
    if len(pts) == 0:
        return 0
    return int(len(np.unique(np.floor(np.asarray(pts) / side).astype(np.int64), axis=0)))


def _finite(line: Line3):
    """The chord of B(0,1) on the line, or a length-2 piece centred at the
    point nearest the origin when the line misses the ball."""
    span = line.ball_chord()
    if span is None or span[1] - span[0] < 1e-12:
        mid = line.foot_parameter(np.zeros(3))
        span = (mid - 1.0, mid + 1.0)
    return Line3(line.point(span[0]), line.direction, span[1] - span[0])


def tangent_planes(R: Regulus, segment: Line3, rho):
    """Normals of the planes containing the segment and tangent to Z(R)
    (as far as possible) at the centre of each rho-interval."""
    n_int = max(1, int(math.ceil(segment.length / rho - 1e-9)))
    centres = segment.point((np.arange(n_int) + 0.5) * segment.length / n_int)
    e = segment.direction
    out = []
    for g in R.quadric.gradient(centres):
        n = g - (g @ e) * e
        if np.linalg.norm(n) < 1e-12:
            n = np.cross(e, [1.0, 0.0, 0.0]) if abs(e[0]) < 0.9 else np.cross(e, [0.0, 1.0, 0.0])
        out.append(n / np.linalg.norm(n))
    return out


@dataclass
class EntropyReport:
    rho: float
    covering: int                   # greedy rho-net of the covered part
    cells: int                      # cube count of the covered part at side rho
    reference_covering: int         # greedy rho-net of N_rho(Z) cap B(0,1)
    reference_cells: int
    constant: float                 # covering * rho^(7/4)
    growth_constant: float          # covering * rho^2
    lines_tested: int
    lines_accepted: int
    curvature_floor: float
    ceiling: float = ENTROPY_CEILING

    @property
    def ok(self):
        return self.constant <= self.ceiling

    def to_json(self):
        d = dict(self.__dict__)
        d["ok"] = self.ok
        return d


def covered_entropy(R: Regulus, segment: Line3, planes, rho, phi_step=None, tilts=3,
                    min_curvature=MIN_CURVATURE, ceiling=ENTROPY_CEILING):
    """Covering number of the points of N_rho(Z) lying on a line that

    * meets the segment in the j-th rho-interval at angle <= rho to plane j, and
    * passes within rho of Z at a point where it makes angle <= rho with the
      tangent plane.

    ``planes`` holds one unit normal per interval (each normal orthogonal to
    the segment) or the string "tangent".  Lines are sampled with in-plane
    angle step ``phi_step`` (default rho) and ``tilts`` out-of-plane tilts
    spread over [-rho, rho]; points along each line are sampled at rho/2.
    """
    if rho <= 0:
        raise PreconditionError("rho must be positive")
    if segment.length is None:
        segment = _finite(segment)
    floor = curvature_floor(R)
    if floor < min_curvature:
        raise PreconditionError(f"curvature floor {floor:.3g} is below {min_curvature}")
    n_int = max(1, int(math.ceil(segment.length / rho - 1e-9)))
    if isinstance(planes, str):
        if planes != "tangent":
            raise PreconditionError(f"unknown plane choice {planes!r}")
        planes = tangent_planes(R, segment, rho)
    planes = [np.asarray(p, float) / np.linalg.norm(p) for p in planes]
    if len(planes) != n_int:
        raise PreconditionError(f"need one plane per interval ({n_int}), got {len(planes)}")
    e = segment.direction
    if any(abs(p @ e) > 1e-9 for p in planes):
        raise PreconditionError("every plane must contain the segment")
    phi_step = rho if phi_step is None else phi_step
    phis = np.arange(0.0, math.pi, phi_step)
    taus = np.tan(np.linspace(-rho, rho, tilts)) if tilts > 1 else np.zeros(1)
    ts = np.arange(-2.0, 2.0 + rho / 4, rho / 2)
    sin_rho = math.sin(rho)
    Q = R.quadric
    covered = []
    tested = accepted = 0
    for j, nrm in enumerate(planes):
        x = segment.point((j + 0.5) * segment.length / n_int)
        w = np.cross(nrm, e)
        base = np.cos(phis)[:, None] * e + np.sin(phis)[:, None] * w
        for tau in taus:
            U = base + tau * nrm
            U /= np.linalg.norm(U, axis=1)[:, None]
            P = x + ts[None, :, None] * U[:, None, :]                   # (lines, samples, 3)
            flat = P.reshape(-1, 3)
            inside = (flat * flat).sum(axis=1) <= 1.0
            g = Q.gradient(flat)
            gn = np.linalg.norm(g, axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                near = inside & (np.abs(Q(flat)) <= rho * gn)
                tang = np.abs((g.reshape(P.shape) * U[:, None, :]).sum(axis=2)).ravel() <= sin_rho * gn
            near = near.reshape(P.shape[:2])
            good = (near & tang.reshape(P.shape[:2])).any(axis=1)
            tested += len(U)
            accepted += int(good.sum())
            if good.any():
                covered.append(P[good][near[good]])
    pts = np.vstack(covered) if covered else np.zeros((0, 3))
    if len(pts):
        pts = np.unique(np.round(pts / (rho / 4)).astype(np.int64), axis=0) * (rho / 4)
    net = len(greedy_net(pts, rho))
    ref = neighbourhood_samples(R, rho)
    ref_net = len(greedy_net(ref, rho))
    return EntropyReport(rho, net, cell_count(pts, rho), ref_net, cell_count(ref, rho),
                         net * rho ** 1.75, net * rho ** 2, tested, accepted, floor, ceiling)


@dataclass(frozen=True, eq=False)
class Grain:
    """A cube of the (side Z)^3 lattice cut down to a slab around a plane."""
    cube: tuple
    side: float
    normal: np.ndarray
    point: np.ndarray
    thickness: float

    def __post_init__(self):
        n = np.asarray(self.normal, float)
        object.__setattr__(self, "normal", n / np.linalg.norm(n))
        object.__setattr__(self, "point", np.asarray(self.point, float))
        object.__setattr__(self, "cube", tuple(int(c) for c in self.cube))

    @property
    def lower_corner(self):
        return np.array(self.cube, float) * self.side

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        lo = self.lower_corner
        in_cube = np.all((pts >= lo) & (pts < lo + self.side), axis=1)
        return in_cube & (np.abs((pts - self.point) @ self.normal) <= self.thickness)

    @classmethod
    def fit(cls, pts, side, coverage=0.9):
        """Plane of least squares through points of one cube; the thickness is
        the ``coverage`` quantile of the distances to it."""
        pts = np.atleast_2d(np.asarray(pts, float))
        if len(pts) < 3:
            raise PreconditionError("a grain needs at least three points")
        cube = np.floor(pts[0] / side).astype(int)
        if np.any(np.floor(pts / side).astype(int) != cube):
            raise PreconditionError("points span more than one cube")
        c = pts.mean(axis=0)
        _, _, vt = np.linalg.svd(pts - c)
        n = vt[-1]
        thick = float(np.quantile(np.abs((pts - c) @ n), coverage))
        return cls(tuple(cube), side, n, c, thick)


def grains_of(points, delta, min_points=8, coverage=0.9):
    """Fit a grain in every delta^(1/2)-cube holding at least ``min_points`` points."""
    side = math.sqrt(delta)
    pts = np.asarray(points, float)
    keys = np.floor(pts / side).astype(np.int64)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    order = np.argsort(inverse, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(counts)])
    out = []
    for g, cnt in enumerate(counts):
        if cnt < min_points:
            continue
        out.append(Grain.fit(pts[order[bounds[g]:bounds[g + 1]]], side, coverage))
    return out
