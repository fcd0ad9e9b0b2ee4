"""Packing checks on tube families: sampled Wolff-axiom prisms, hairbrushes
and counts of tubes near a thickened line."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import PreconditionError
from ..seeding import make_rng
from .core import TubeFamily
from .raster import shading_voxels

WOLFF_CEILING = 1.5


def dyadic_scales(delta):
    k = int(round(-math.log2(delta)))
    return 2.0 ** -np.arange(k, -1, -1)


@dataclass
class WolffReport:
    delta: float
    n_tubes: int
    n_samples: int
    max_ratio: float
    worst: dict                     # centre, frame, s, t, count of the worst prism
    ceiling: float = WOLFF_CEILING
    per_scale: dict = field(default_factory=dict)   # "s,t" -> max ratio

    @property
    def ok(self):
        return self.max_ratio <= self.ceiling

    def to_json(self):
        return {"delta": self.delta, "n_tubes": self.n_tubes, "n_samples": self.n_samples,
                "max_ratio": self.max_ratio, "ceiling": self.ceiling, "ok": self.ok,
                "worst": self.worst, "per_scale": self.per_scale}


def _frame(e1, hint):
    e1 = e1 / np.linalg.norm(e1)
    e2 = hint - (hint @ e1) * e1
    if np.linalg.norm(e2) < 1e-9:
        e2 = np.cross(e1, [1.0, 0.0, 0.0])
        if np.linalg.norm(e2) < 1e-9:
            e2 = np.cross(e1, [0.0, 1.0, 0.0])
    e2 /= np.linalg.norm(e2)
    return np.array([e1, e2, np.cross(e1, e2)])


def _sample_frames(family, n_samples, rng):
    starts, dirs, lengths = family.axes()
    mids = starts + 0.5 * lengths[:, None] * dirs
    n = len(family)
    frames, centres = [], []
    n_pair = n_samples // 2 if n > 1 else 0
    for _ in range(n_pair):
        i, j = rng.choice(n, 2, replace=False)
        hint = dirs[j] - (dirs[j] @ dirs[i]) * dirs[i]
        if np.linalg.norm(hint) < 1e-6:
            hint = mids[j] - mids[i]
        frames.append(_frame(dirs[i], hint))
        centres.append(0.5 * (mids[i] + mids[j]))
    for _ in range(n_samples - n_pair):
        i = rng.integers(n)
        frames.append(_frame(dirs[i], rng.normal(size=3)))
        centres.append(mids[i])
    return np.array(frames), np.array(centres)


def check_wolff_axioms(family: TubeFamily, n_samples=10_000, seed=None, ceiling=WOLFF_CEILING):
    """Largest sampled count / (s t delta^-2) over prisms 2 x s x t.

    A tube counts as contained when both ends of its clipped axis lie in the
    prism; prisms are centred on tube midpoints with the long side along a
    tube and the second side towards another tube or a random direction.
    """
    rng = make_rng(seed)
    delta = family.delta
    scales = dyadic_scales(delta)
    K = len(scales)
    n = len(family)
    if n == 0:
        return WolffReport(delta, 0, 0, 0.0, {}, ceiling)
    starts, dirs, lengths = family.axes()
    ends = np.stack([starts, starts + lengths[:, None] * dirs], axis=1)       # (n, 2, 3)
    live = lengths > 0
    frames, centres = _sample_frames(family, n_samples, rng)
    bound = np.outer(scales, scales) / delta ** 2
    best = np.zeros((K, K))
    worst = {"ratio": 0.0}
    for f, c in zip(frames, centres):
        loc = (ends - c) @ f.T                                          # (n, 2, 3)
        ok = live & np.all(np.abs(loc[..., 0]) <= 1.0, axis=1)
        need_s = 2 * np.abs(loc[..., 1]).max(axis=1)[ok]
        need_t = 2 * np.abs(loc[..., 2]).max(axis=1)[ok]
        si = np.searchsorted(scales, need_s * (1 - 1e-12))
        ti = np.searchsorted(scales, need_t * (1 - 1e-12))
        fit = (si < K) & (ti < K)
        H = np.zeros((K, K))
        np.add.at(H, (si[fit], ti[fit]), 1)
        counts = H.cumsum(0).cumsum(1)
        ratio = counts / bound
        best = np.maximum(best, ratio)
        a, b = np.unravel_index(np.argmax(ratio), ratio.shape)
        if ratio[a, b] > worst["ratio"]:
            worst = {"ratio": float(ratio[a, b]), "s": float(scales[a]), "t": float(scales[b]),
                     "count": int(counts[a, b]), "centre": c.tolist(), "frame": f.tolist()}
    per = {f"{float(scales[a])!r},{float(scales[b])!r}": float(best[a, b]) for a in range(K) for b in range(K)}
    return WolffReport(delta, n, len(frames), float(best.max()), worst, ceiling, per)


def hairbrush(family: TubeFamily, anchors, exclude_anchors=False, grid=None):
    """Ids of tubes whose shadings share a voxel with every anchor's shading."""
    anchors = [int(a) for a in anchors]
    pos = [family.index_of(a) for a in anchors]
    vox = shading_voxels(family, grid)
    keep = np.ones(len(family), bool)
    for p in pos:
        hits = np.array([np.intersect1d(v, vox[p], assume_unique=True).size > 0 for v in vox], bool)
        keep &= hits
    ids = [t.id for t, k in zip(family.tubes, keep) if k]
    if exclude_anchors:
        ids = [i for i in ids if i not in set(anchors)]
    return set(ids)


def segment_line_distance(starts, dirs, lengths, p0, v):
    """Distance from each segment to the line p0 + R v."""
    v = v / np.linalg.norm(v)
    w = starts - p0
    uv = dirs @ v
    denom = 1.0 - uv ** 2
    # minimise |w + t u - s v| over t in [0, L]: the unconstrained t, clamped
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(denom > 1e-14, (uv * (w @ v) - (w * dirs).sum(axis=1)) / denom, 0.0)
    t = np.clip(t, 0.0, lengths)
    best = np.full(len(starts), np.inf)
    for tt in (t, np.zeros_like(t), lengths):
        q = w + tt[:, None] * dirs
        d = np.linalg.norm(q - (q @ v)[:, None] * v, axis=1)
        best = np.minimum(best, d)
    return best


@dataclass
class FatHairbrushReport:
    delta: float
    rhos: tuple
    counts: tuple
    constant: float                 # fitted at the smallest rho
    bounds: tuple
    min_angle: float
    slack: float

    @property
    def ok(self):
        return all(c <= b * (1 + 1e-9) for c, b in zip(self.counts, self.bounds))

    def to_json(self):
        return {"delta": self.delta, "rhos": list(self.rhos), "counts": list(self.counts),
                "constant": self.constant, "bounds": list(self.bounds), "min_angle": self.min_angle,
                "slack": self.slack, "ok": self.ok}


def fat_hairbrush_counts(family: TubeFamily, line=None, rhos=None, min_angle=0.1, slack=0.1, seed=None):
    """Tubes meeting N_rho(L) at angle >= min_angle, against c delta^-2 rho^(1/4) delta^-slack.

    The constant c is fitted so the bound is tight at the smallest rho.
    """
    delta = family.delta
    rhos = tuple(delta * np.array([1, 4, 16])) if rhos is None else tuple(float(r) for r in rhos)
    if line is None:
        rng = make_rng(seed)
        v = rng.normal(size=3)
        line = (_random_point(rng), v)
    p0, v = (np.asarray(a, float) for a in line)
    v = v / np.linalg.norm(v)
    starts, dirs, lengths = family.axes()
    live = lengths > 0
    ang = np.arccos(np.clip(np.abs(dirs @ v), 0.0, 1.0))
    dist = segment_line_distance(starts, dirs, lengths, p0, v)
    counts = tuple(int(np.count_nonzero(live & (ang >= min_angle) & (dist <= r + delta))) for r in rhos)
    shape = [delta ** -2 * r ** 0.25 for r in rhos]
    c = counts[0] / shape[0] if shape[0] > 0 else 0.0
    bounds = tuple(c * s * delta ** -slack for s in shape)
    return FatHairbrushReport(delta, rhos, counts, c, bounds, min_angle, slack)


def _random_point(rng):
    while True:
        p = rng.uniform(-0.5, 0.5, 3)
        if p @ p <= 0.25:
            return p


def parallel_slab_family(delta, count=None):
    """``count`` (default 2 delta^-1) parallel tubes spaced delta/2 apart in one plane."""
    from .core import Tube
    count = int(round(2 / delta)) if count is None else int(count)
    if count < 1:
        raise PreconditionError("need at least one tube")
    xs = (np.arange(count) - (count - 1) / 2) * (1.0 / count)
    tubes = tuple(Tube.centred(i, [x, 0.0, 0.0], [0.0, 0.0, 1.0], delta) for i, x in enumerate(xs))
    return TubeFamily(tubes, delta, "file")
