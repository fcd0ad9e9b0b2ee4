"""Tubes, voxel grids, shadings and tube families."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import PreconditionError
from ..geometry.lines import Line3

PROVENANCES = ("random-direction-separated", "heisenberg-style", "sl2-style", "file")


def is_dyadic(x):
    if x <= 0:
        return False
    k = -math.log2(x)
    return abs(k - round(k)) < 1e-12


def clip_to_ball(start, direction, length, radius):
    """Parameter interval [t0, t1] of the segment lying in B(0, radius), or None."""
    b = start @ direction
    disc = b * b - (start @ start - radius * radius)
    if disc <= 0:
        return None
    r = math.sqrt(disc)
    t0, t1 = max(0.0, -b - r), min(length, -b + r)
    if t1 <= t0:
        return None
    return t0, t1


@dataclass(frozen=True, eq=False)
class Tube:
    """delta-neighbourhood of a unit axis segment, with the axis clipped so the
    whole tube lies in the closed unit ball."""
    id: int
    axis: Line3
    delta: float

    def __post_init__(self):
        if self.axis.length is None:
            raise PreconditionError("a tube axis must be a segment")
        if self.delta <= 0:
            raise PreconditionError("delta must be positive")

    @classmethod
    def from_points(cls, tid, start, direction, delta, length=1.0):
        return cls(int(tid), Line3(np.asarray(start, float), np.asarray(direction, float), float(length)),
                   float(delta))

    @classmethod
    def centred(cls, tid, centre, direction, delta):
        u = np.asarray(direction, float)
        u = u / np.linalg.norm(u)
        return cls.from_points(tid, np.asarray(centre, float) - 0.5 * u, u, delta)

    @property
    def direction(self):
        return self.axis.direction

    def clipped(self):
        """The axis segment cut to B(0, 1 - delta), or None if nothing remains."""
        span = clip_to_ball(self.axis.base, self.axis.direction, self.axis.length, 1.0 - self.delta)
        if span is None:
            return None
        t0, t1 = span
        return Line3(self.axis.point(t0), self.axis.direction, t1 - t0)

    def capsule_volume(self):
        seg = self.clipped()
        if seg is None:
            return 0.0
        return math.pi * self.delta ** 2 * seg.length + 4.0 / 3.0 * math.pi * self.delta ** 3


@dataclass(frozen=True)
class VoxelGrid:
    """Cubic lattice of side h covering [-1, 1]^3.

    Voxel (i, j, k) has centre -1 + (i + 1/2, j + 1/2, k + 1/2) h and flat index
    i + N (j + N k).
    """
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise PreconditionError("grid resolution must be positive")

    @classmethod
    def for_delta(cls, delta):
        return cls(delta / 2)

    @property
    def n(self):
        return int(math.ceil(2.0 / self.h - 1e-9))

    @property
    def voxel_volume(self):
        return self.h ** 3

    @property
    def size(self):
        return self.n ** 3

    def centres(self, flat):
        flat = np.asarray(flat, np.int64)
        n = self.n
        i = flat % n
        j = (flat // n) % n
        k = flat // (n * n)
        return -1.0 + (np.column_stack([i, j, k]) + 0.5) * self.h

    def index_of(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        ijk = np.floor((pts + 1.0) / self.h).astype(np.int64)
        n = self.n
        if np.any((ijk < 0) | (ijk >= n)):
            raise PreconditionError("point outside the grid")
        return ijk[:, 0] + n * (ijk[:, 1] + n * ijk[:, 2])

    def check_for(self, delta):
        if self.h > delta / 2 * (1 + 1e-12):
            raise PreconditionError(f"grid resolution {self.h} is coarser than delta/2 = {delta / 2}")


@dataclass(frozen=True, eq=False)
class Shading:
    """A subset of a tube's voxels on a grid of side ``h``."""
    tube_id: int
    voxels: np.ndarray
    h: float

    def __post_init__(self):
        v = np.unique(np.asarray(self.voxels, np.int64))
        object.__setattr__(self, "voxels", v)

    @property
    def count(self):
        return int(self.voxels.size)

    @property
    def volume(self):
        return self.count * self.h ** 3

    @property
    def grid(self):
        return VoxelGrid(self.h)

    def points(self):
        return self.grid.centres(self.voxels)


@dataclass(frozen=True, eq=False)
class TubeFamily:
    """Tubes sharing one delta, with optional explicit shadings.

    Tubes without an entry in ``shadings`` are fully shaded.  Explicit
    shadings live on the grid of side delta/2.
    """
    tubes: tuple
    delta: float
    provenance: str = "file"
    seed: int | None = None
    shadings: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "tubes", tuple(self.tubes))
        ids = [t.id for t in self.tubes]
        if len(set(ids)) != len(ids):
            raise PreconditionError("tube ids must be unique")
        if any(abs(t.delta - self.delta) > 1e-15 for t in self.tubes):
            raise PreconditionError("all tubes must share one delta")
        if self.provenance not in PROVENANCES:
            raise PreconditionError(f"unknown provenance {self.provenance!r}")
        for tid in self.shadings:
            if tid not in ids:
                raise PreconditionError(f"shading for unknown tube {tid}")

    def __len__(self):
        return len(self.tubes)

    @property
    def ids(self):
        return [t.id for t in self.tubes]

    def index_of(self, tid):
        for i, t in enumerate(self.tubes):
            if t.id == tid:
                return i
        raise PreconditionError(f"unknown tube id {tid}")

    def axes(self):
        """Clipped axes as (starts, directions, lengths); empty tubes get length 0."""
        n = len(self.tubes)
        starts = np.zeros((n, 3))
        dirs = np.zeros((n, 3))
        lengths = np.zeros(n)
        for i, t in enumerate(self.tubes):
            seg = t.clipped()
            dirs[i] = t.direction
            if seg is None:
                starts[i] = t.axis.base
                continue
            starts[i] = seg.base
            lengths[i] = seg.length
        return starts, dirs, lengths

    def directions(self):
        return np.array([t.direction for t in self.tubes]).reshape(-1, 3)

    @property
    def fully_shaded(self):
        return not self.shadings

    def subset(self, ids):
        keep = set(int(i) for i in ids)
        return TubeFamily(tuple(t for t in self.tubes if t.id in keep), self.delta, self.provenance,
                          self.seed, {k: v for k, v in self.shadings.items() if k in keep}, dict(self.meta))

    def with_shadings(self, shadings):
        return TubeFamily(self.tubes, self.delta, self.provenance, self.seed, dict(shadings), dict(self.meta))

    def to_jsonl(self):
        lines = []
        for t in self.tubes:
            sh = self.shadings.get(t.id)
            lines.append(json.dumps({
                "id": t.id,
                "base": [float(x) for x in t.axis.base],
                "dir": [float(x) for x in t.direction],
                "delta": float(self.delta),
                "shading": "full" if sh is None else [int(v) for v in sh.voxels],
            }))
        return "\n".join(lines) + ("\n" if lines else "")

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text, provenance="file", seed=None):
        tubes, shadings, delta = [], {}, None
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                tid = int(rec["id"])
                d = float(rec["delta"])
                tube = Tube.from_points(tid, rec["base"], rec["dir"], d)
            except (KeyError, TypeError, ValueError) as exc:
                raise PreconditionError(f"line {lineno}: {exc}") from exc
            if delta is None:
                delta = d
            tubes.append(tube)
            sh = rec.get("shading", "full")
            if sh != "full":
                shadings[tid] = Shading(tid, np.asarray(sh, np.int64), d / 2)
        if delta is None:
            raise PreconditionError("family file has no tubes")
        return cls(tuple(tubes), delta, provenance, seed, shadings)

    @classmethod
    def read(cls, path, **kw):
        with open(path) as fh:
            return cls.from_jsonl(fh.read(), **kw)
