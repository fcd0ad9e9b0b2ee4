"""Voxelisation of tubes and volume statistics of their unions.

Tubes are visited layer by layer along z.  Inside a layer the in-plane
dominant axis is swept row by row, and each row only scans the window where
the axis segment can come within the radius, so the work per tube is close to
its voxel count whatever the orientation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ..errors import PreconditionError, ResourceError
from .core import Shading, TubeFamily, VoxelGrid

SLAB_VOXELS = 1 << 25
MAX_PAIRS = 60_000_000


@numba.njit(cache=True)
def _trange(p, u, c, r, t0, t1):
    """Sub-interval of [t0, t1] where |p + t u - c| <= r."""
    if abs(u) < 1e-15:
        if abs(p - c) <= r:
            return t0, t1
        return 1.0, 0.0
    a = (c - r - p) / u
    b = (c + r - p) / u
    if a > b:
        a, b = b, a
    return max(a, t0), min(b, t1)


@numba.njit(cache=True)
def _irange(lo, hi, h, n):
    i0 = int(math.ceil((lo + 1.0) / h - 0.5))
    i1 = int(math.floor((hi + 1.0) / h - 0.5))
    return max(i0, 0), min(i1, n - 1)


@numba.njit(cache=True)
def _visit(s, u, L, r, n, h, k_lo, k_hi, mode, counts, out, nout):
    """Voxels with centre within r of the segment s + [0, L] u and k in [k_lo, k_hi).

    mode 0 adds one to ``counts[k - k_lo, j, i]``; mode 1 writes flat indices
    into ``out`` from position ``nout``; mode 2 only counts.  Returns the new
    position.
    """
    r2 = r * r
    z0 = min(s[2], s[2] + L * u[2]) - r
    z1 = max(s[2], s[2] + L * u[2]) + r
    ka, kb = _irange(z0, z1, h, n)
    ka = max(ka, k_lo)
    kb = min(kb, k_hi - 1)
    a_ax = 0 if abs(u[0]) >= abs(u[1]) else 1
    b_ax = 1 - a_ax
    for k in range(ka, kb + 1):
        zc = -1.0 + (k + 0.5) * h
        ta, tb = _trange(s[2], u[2], zc, r, 0.0, L)
        if ta > tb:
            continue
        a0 = min(s[a_ax] + ta * u[a_ax], s[a_ax] + tb * u[a_ax]) - r
        a1 = max(s[a_ax] + ta * u[a_ax], s[a_ax] + tb * u[a_ax]) + r
        ia0, ia1 = _irange(a0, a1, h, n)
        for ia in range(ia0, ia1 + 1):
            ac = -1.0 + (ia + 0.5) * h
            tc, td = _trange(s[a_ax], u[a_ax], ac, r, ta, tb)
            if tc > td:
                continue
            b0 = min(s[b_ax] + tc * u[b_ax], s[b_ax] + td * u[b_ax]) - r
            b1 = max(s[b_ax] + tc * u[b_ax], s[b_ax] + td * u[b_ax]) + r
            ib0, ib1 = _irange(b0, b1, h, n)
            for ib in range(ib0, ib1 + 1):
                bc = -1.0 + (ib + 0.5) * h
                if a_ax == 0:
                    x, y = ac, bc
                else:
                    x, y = bc, ac
                wx = x - s[0]
                wy = y - s[1]
                wz = zc - s[2]
                t = wx * u[0] + wy * u[1] + wz * u[2]
                if t < 0.0:
                    t = 0.0
                elif t > L:
                    t = L
                dx = wx - t * u[0]
                dy = wy - t * u[1]
                dz = wz - t * u[2]
                if dx * dx + dy * dy + dz * dz <= r2:
                    i = int(round((x + 1.0) / h - 0.5))
                    j = int(round((y + 1.0) / h - 0.5))
                    if mode == 0:
                        counts[k - k_lo, j, i] += 1
                    elif mode == 1:
                        out[nout] = i + n * (j + n * k)
                    nout += 1
    return nout


@numba.njit(cache=True)
def _segment_voxels(s, u, L, r, n, h):
    dummy = np.zeros((1, 1, 1), np.uint32)
    m = _visit(s, u, L, r, n, h, 0, n, 2, dummy, np.zeros(1, np.int64), 0)
    out = np.empty(m, np.int64)
    _visit(s, u, L, r, n, h, 0, n, 1, dummy, out, 0)
    return out


@numba.njit(cache=True)
def _accumulate(starts, dirs, lengths, radius, n, h, k_lo, k_hi, counts):
    empty = np.zeros(1, np.int64)
    for t in range(starts.shape[0]):
        if lengths[t] < 0.0:
            continue
        _visit(starts[t], dirs[t], lengths[t], radius, n, h, k_lo, k_hi, 0, counts, empty, 0)


@numba.njit(cache=True)
def _histogram(counts, hist):
    flat = counts.ravel()
    for v in flat:
        hist[min(v, hist.size - 1)] += 1


def rasterize(tube, grid: VoxelGrid, radius=None):
    """Sorted flat indices of voxels whose centres lie within ``radius``
    (default delta) of the clipped axis."""
    grid.check_for(tube.delta)
    seg = tube.clipped()
    if seg is None:
        return np.zeros(0, np.int64)
    r = tube.delta if radius is None else float(radius)
    out = _segment_voxels(seg.base, seg.direction, float(seg.length), r, grid.n, grid.h)
    return np.sort(out)


def full_shading(tube, grid=None):
    grid = VoxelGrid.for_delta(tube.delta) if grid is None else grid
    return Shading(tube.id, rasterize(tube, grid), grid.h)


def shading_voxels(family: TubeFamily, grid: VoxelGrid = None):
    """Per-tube voxel arrays of the shadings on ``grid``."""
    grid = VoxelGrid.for_delta(family.delta) if grid is None else grid
    grid.check_for(family.delta)
    out = []
    for t in family.tubes:
        sh = family.shadings.get(t.id)
        if sh is None:
            out.append(rasterize(t, grid))
        else:
            if abs(sh.h - grid.h) > 1e-15:
                raise PreconditionError("explicit shadings are defined on the delta/2 grid only")
            out.append(sh.voxels)
    return out


@dataclass
class UnionStats:
    h: float
    union_count: int
    total_count: int
    histogram: np.ndarray           # histogram[m] = number of voxels of multiplicity m

    @property
    def union_volume(self):
        return self.union_count * self.h ** 3

    @property
    def total_volume(self):
        return self.total_count * self.h ** 3

    @property
    def max_multiplicity(self):
        nz = np.flatnonzero(self.histogram)
        return int(nz[-1]) if nz.size else 0

    def to_json(self):
        return {"h": self.h, "union_volume": self.union_volume, "total_volume": self.total_volume,
                "union_voxels": self.union_count, "total_voxels": self.total_count,
                "max_multiplicity": self.max_multiplicity,
                "histogram": {int(m): int(c) for m, c in enumerate(self.histogram) if m and c}}


def estimate_visits(family: TubeFamily, grid: VoxelGrid, radius=None):
    """Rough number of voxel visits needed to rasterize the family."""
    r = family.delta if radius is None else radius
    per = (math.pi * r * r + 4 * r * grid.h) * 1.0 / grid.h ** 3
    return int(len(family) * per)


def _capsule_union(starts, dirs, lengths, radius, grid: VoxelGrid, max_hist):
    n = grid.n
    dtype = np.uint16 if len(starts) < 65535 else np.uint32
    nz = max(1, min(n, SLAB_VOXELS // (n * n)))
    hist = np.zeros(max_hist + 2, np.int64)
    starts = np.ascontiguousarray(starts, float)
    dirs = np.ascontiguousarray(dirs, float)
    lengths = np.ascontiguousarray(lengths, float)
    for k_lo in range(0, n, nz):
        k_hi = min(n, k_lo + nz)
        counts = np.zeros((k_hi - k_lo, n, n), dtype)
        _accumulate(starts, dirs, lengths, float(radius), n, grid.h, k_lo, k_hi, counts)
        _histogram(counts, hist)
    return hist


def _stats_from_hist(hist, h):
    m = np.arange(hist.size)
    hist = np.trim_zeros(hist, "b")
    if hist.size == 0:
        hist = np.zeros(1, np.int64)
    m = np.arange(hist.size)
    return UnionStats(h, int(hist[1:].sum()), int((m * hist).sum()), hist)


def _family_arrays(family):
    starts, dirs, lengths = family.axes()
    lengths = np.where(lengths > 0, lengths, -1.0)
    return starts, dirs, lengths


def union_volume(family: TubeFamily, grid: VoxelGrid = None) -> UnionStats:
    """|union of Y(T)|, sum of |Y(T)| and the multiplicity histogram."""
    grid = VoxelGrid.for_delta(family.delta) if grid is None else grid
    grid.check_for(family.delta)
    if len(family) == 0:
        return UnionStats(grid.h, 0, 0, np.zeros(1, np.int64))
    if family.fully_shaded:
        starts, dirs, lengths = _family_arrays(family)
        hist = _capsule_union(starts, dirs, lengths, family.delta, grid, len(family))
        return _stats_from_hist(hist, grid.h)
    vox = shading_voxels(family, grid)
    allv = np.concatenate(vox) if vox else np.zeros(0, np.int64)
    _, mult = np.unique(allv, return_counts=True)
    hist = np.bincount(mult, minlength=1).astype(np.int64)
    return _stats_from_hist(hist, grid.h)


def voxel_tube_pairs(family: TubeFamily, grid: VoxelGrid = None, max_pairs=MAX_PAIRS):
    """(voxel, tube position) incidence pairs sorted by voxel."""
    grid = VoxelGrid.for_delta(family.delta) if grid is None else grid
    est = estimate_visits(family, grid)
    if est > max_pairs:
        raise ResourceError(f"about {est} voxel-tube pairs exceed the budget of {max_pairs}")
    vox = shading_voxels(family, grid)
    if not vox:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    owner = np.concatenate([np.full(v.size, i, np.int64) for i, v in enumerate(vox)])
    allv = np.concatenate(vox)
    order = np.argsort(allv, kind="stable")
    return allv[order], owner[order]


def multiplicity(family: TubeFamily, grid: VoxelGrid = None):
    """(voxels, multiplicities) of the union, voxels sorted."""
    grid = VoxelGrid.for_delta(family.delta) if grid is None else grid
    vox = shading_voxels(family, grid)
    allv = np.concatenate(vox) if vox else np.zeros(0, np.int64)
    return np.unique(allv, return_counts=True)


@dataclass
class MinkowskiProfile:
    scales: tuple
    volumes: tuple
    resolutions: tuple

    def ratio(self, big, small):
        vb = self.volumes[self.scales.index(big)]
        vs = self.volumes[self.scales.index(small)]
        return vb / vs if vs > 0 else math.inf

    def to_csv(self):
        rows = ["scale,resolution,volume"]
        rows += [f"{s!r},{h!r},{v!r}" for s, h, v in zip(self.scales, self.resolutions, self.volumes)]
        return "\n".join(rows) + "\n"

    def to_json(self):
        return {"scales": list(self.scales), "volumes": list(self.volumes),
                "resolutions": list(self.resolutions)}


def minkowski_profile(family: TubeFamily, scales) -> MinkowskiProfile:
    """Volume of the r-neighbourhood of the union of shadings, each on a grid of side r/2."""
    scales = tuple(float(s) for s in scales)
    if any(s < family.delta * (1 - 1e-12) for s in scales):
        raise PreconditionError("profile scales must be at least delta")
    vols, hs = [], []
    if family.fully_shaded:
        starts, dirs, lengths = _family_arrays(family)
    else:
        fine = VoxelGrid.for_delta(family.delta)
        pts = fine.centres(multiplicity(family, fine)[0])
    for r in scales:
        grid = VoxelGrid(r / 2)
        if family.fully_shaded:
            hist = _capsule_union(starts, dirs, lengths, family.delta + r, grid, 1)
        else:
            hist = _capsule_union(pts, np.tile([0.0, 0.0, 1.0], (len(pts), 1)), np.zeros(len(pts)),
                                  r, grid, 1)
        vols.append(int(hist[1:].sum()) * grid.h ** 3)
        hs.append(grid.h)
    return MinkowskiProfile(scales, tuple(vols), tuple(hs))
