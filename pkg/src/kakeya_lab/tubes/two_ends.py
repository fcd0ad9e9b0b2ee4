"""Choosing the ball that captures the most shading relative to its size."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..errors import PreconditionError
from ..seeding import make_rng
from .core import Shading, Tube
from .wolff import dyadic_scales

MAX_CENTRES = 2000


@dataclass
class TwoEndsResult:
    centre: np.ndarray
    radius: float
    captured: int                   # shading voxels inside the ball
    total: int
    rho: float
    delta: float
    capture_ok: bool                # captured >= delta^rho total
    consequence_ok: bool            # no ball of the family beats (r/s)^rho
    worst_consequence: float        # max over the family of |Y cap B(p,r) cap B0| / ((r/s)^rho |Y cap B0|)

    def to_json(self):
        return {"centre": [float(x) for x in self.centre], "radius": self.radius,
                "captured": self.captured, "total": self.total, "rho": self.rho, "delta": self.delta,
                "capture_ok": self.capture_ok, "consequence_ok": self.consequence_ok,
                "worst_consequence": self.worst_consequence}


def _ball_counts(tree, centres, radius):
    return np.asarray(tree.query_ball_point(centres, radius * (1 + 1e-12), return_length=True))


def two_ends_reduce(shading: Shading, rho, tube: Tube = None, delta=None, seed=None,
                    max_centres=MAX_CENTRES):
    """Ball B(p0, s), s dyadic in [delta, 1], maximising |Y cap B| s^-rho.

    Centres range over the shading's voxels (a seeded subsample when there are
    many) plus the tube's midpoint; ties go to the larger radius.  Mass is
    normalised by the full tube, and must be at least delta.
    """
    if not 0 < rho < 1:
        raise PreconditionError("rho must lie in (0, 1)")
    if shading.count == 0:
        raise PreconditionError("empty shading")
    delta = tube.delta if tube is not None else (2 * shading.h if delta is None else delta)
    pts = shading.points()
    if tube is not None:
        full_count = tube.capsule_volume() / shading.h ** 3
        if shading.count / full_count < delta * (1 - 1e-9):
            raise PreconditionError("shading mass below delta of the tube")
    tree = cKDTree(pts)
    rng = make_rng(seed)
    centres = pts if len(pts) <= max_centres else pts[np.sort(rng.choice(len(pts), max_centres, replace=False))]
    if tube is not None and tube.clipped() is not None:
        seg = tube.clipped()
        centres = np.vstack([centres, seg.point(seg.length / 2)])
    scales = dyadic_scales(delta)
    best = (-1.0, 0.0, None, 0)
    table = {}
    for s in scales:
        cnt = _ball_counts(tree, centres, s)
        table[s] = cnt
        i = int(np.argmax(cnt))
        score = cnt[i] * s ** -rho
        if score >= best[0] * (1 - 1e-12):
            best = (score, s, centres[i], int(cnt[i]))
    _, s0, p0, captured = best
    capture_ok = captured >= delta ** rho * shading.count * (1 - 1e-12)
    # consequence: |Y(B(p,r) cap B(p0,s0))| <= (r/s0)^rho |Y(B(p0,s0))| over the same family
    inside = pts[np.linalg.norm(pts - p0, axis=1) <= s0 * (1 + 1e-12)]
    sub = cKDTree(inside)
    worst = 0.0
    for r in scales:
        cnt = _ball_counts(sub, centres, r)
        worst = max(worst, float(cnt.max()) / ((r / s0) ** rho * captured))
    return TwoEndsResult(np.asarray(p0, float), float(s0), captured, shading.count, float(rho),
                         float(delta), bool(capture_ok), bool(worst <= 1 + 1e-9), worst)
