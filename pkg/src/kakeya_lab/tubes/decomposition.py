"""Greedy extraction of regulus strips from a tube family.

Tubes are peeled off strip by strip: while some candidate strip holds at
least delta^(-1/2 + alpha) of the remaining tubes, those tubes move to the
second part.  What is left is the first part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DegeneracyError, PreconditionError, VerificationError
from ..geometry.lines import Line3
from ..geometry.regulus import RegulusStrip, fit_regulus
from ..seeding import make_rng
from .core import TubeFamily

AXIS_SAMPLES = 5


def _line_keys(starts, dirs):
    """Foot of the perpendicular from the origin and the direction with z >= 0."""
    foot = starts - (starts * dirs).sum(axis=1)[:, None] * dirs
    sgn = np.where(dirs[:, 2] < 0, -1.0, 1.0)
    return np.hstack([foot, dirs * sgn[:, None]])


def _axis_samples(starts, dirs, lengths, k=AXIS_SAMPLES):
    t = np.linspace(0.0, 1.0, k)
    return starts[:, None, :] + (t[None, :, None] * lengths[:, None, None]) * dirs[:, None, :]


class StripOracle:
    """Membership of family tubes in candidate strips.

    A tube lies in a strip when every sampled point of its clipped axis is
    within delta of the regulus (first-order distance) and within delta^(1/2)
    of the strip's ruling line.
    """

    def __init__(self, family: TubeFamily):
        self.family = family
        starts, dirs, lengths = family.axes()
        self.live = lengths > 0
        self.samples = _axis_samples(starts, dirs, lengths)
        keys = _line_keys(starts, dirs)
        self.tree = cKDTree(keys)
        self.reach = 4 * math.sqrt(family.delta) + 1e-12

    def members(self, strip: RegulusStrip):
        r = strip.ruling
        foot = r.base - (r.base @ r.direction) * r.direction
        u = r.direction if r.direction[2] >= 0 else -r.direction
        near = set()
        for v in (u, -u):
            near.update(self.tree.query_ball_point(np.concatenate([foot, v]), self.reach))
        idx = np.array(sorted(i for i in near if self.live[i]), int)
        if idx.size == 0:
            return idx
        pts = self.samples[idx].reshape(-1, 3)
        ok = strip.contains_points(pts).reshape(len(idx), -1).all(axis=1)
        return idx[ok]


def strips_from_fat_tubes(family: TubeFamily):
    """One strip per fat tube of a generated SL2-style family: the regulus
    through three of its thin tubes, cut around the middle one."""
    if "strip_of" not in family.meta:
        return []
    strip_of = np.asarray(family.meta["strip_of"])
    out = []
    for fi in np.unique(strip_of):
        members = np.flatnonzero(strip_of == fi)
        if len(members) < 3:
            continue
        pick = [members[0], members[len(members) // 2], members[-1]]
        lines = [family.tubes[i].axis.as_line() for i in pick]
        try:
            R = fit_regulus(*lines, require_hyperboloid=False)
        except (DegeneracyError, VerificationError):
            continue
        out.append(RegulusStrip(R, lines[1], family.delta))
    return out


def strips_from_triples(family: TubeFamily, n_triples, seed=None):
    """Strips through reguli fitted to skew triples of nearby family tubes."""
    rng = make_rng(seed)
    starts, dirs, lengths = family.axes()
    live = np.flatnonzero(lengths > 0)
    if len(live) < 3:
        return []
    keys = _line_keys(starts[live], dirs[live])
    tree = cKDTree(keys)
    reach = 4 * math.sqrt(family.delta)
    out = []
    for _ in range(n_triples):
        i = rng.integers(len(live))
        near = [j for j in tree.query_ball_point(keys[i], reach) if j != i]
        if len(near) < 2:
            continue
        j, k = rng.choice(near, 2, replace=False)
        lines = [family.tubes[live[x]].axis.as_line() for x in (i, j, k)]
        try:
            R = fit_regulus(*lines, require_hyperboloid=False)
        except (DegeneracyError, VerificationError):
            continue
        out.append(RegulusStrip(R, lines[0], family.delta))
    return out


@dataclass
class Extraction:
    candidate: int
    tubes: tuple                    # ids moved at this step
    count: int


@dataclass
class StripDecomposition:
    heisenberg_part: tuple          # ids of the residual family
    strip_part: tuple               # ids of extracted tubes
    extractions: list
    alpha: float
    threshold: float
    n_candidates: int
    n_tubes: int
    iteration_bound: float
    residual_max: int = 0           # largest residual strip count at termination
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.extractions)

    def verify(self, family: TubeFamily, candidates, oracle=None):
        """Re-check the partition and threshold properties from scratch."""
        ids = set(family.ids)
        t1, t2 = set(self.heisenberg_part), set(self.strip_part)
        problems = []
        if t1 & t2 or t1 | t2 != ids:
            problems.append("parts do not partition the family")
        moved = set()
        for ex in self.extractions:
            if ex.count < self.threshold or len(ex.tubes) != ex.count:
                problems.append(f"extraction from candidate {ex.candidate} below threshold")
            if moved & set(ex.tubes):
                problems.append("a tube was extracted twice")
            moved |= set(ex.tubes)
        if moved != t2:
            problems.append("extracted tubes differ from the second part")
        oracle = StripOracle(family) if oracle is None else oracle
        pos = {t.id: i for i, t in enumerate(family.tubes)}
        resid = np.zeros(len(family), bool)
        resid[[pos[i] for i in t1]] = True
        for c, strip in enumerate(candidates):
            if resid[oracle.members(strip)].sum() >= self.threshold:
                problems.append(f"candidate {c} still holds a threshold of residual tubes")
        if self.iterations > self.iteration_bound:
            problems.append("too many iterations")
        return problems

    def to_json(self):
        return {"alpha": self.alpha, "threshold": self.threshold, "n_tubes": self.n_tubes,
                "n_candidates": self.n_candidates, "iterations": self.iterations,
                "iteration_bound": self.iteration_bound, "heisenberg_count": len(self.heisenberg_part),
                "strip_count": len(self.strip_part), "residual_max": self.residual_max,
                "extractions": [{"candidate": e.candidate, "count": e.count} for e in self.extractions]}


def decompose_heisenberg_sl2(family: TubeFamily, alpha, candidates, oracle=None) -> StripDecomposition:
    """Greedy strip extraction against an explicit list of candidate strips.

    At each step the candidate holding the most residual tubes is taken
    (lowest index on ties).
    """
    if not 0 <= alpha < 0.5:
        raise PreconditionError("alpha must lie in [0, 1/2)")
    delta = family.delta
    threshold = delta ** (-0.5 + alpha)
    n = len(family)
    bound = n * delta ** (0.5 - alpha)
    candidates = list(candidates)
    oracle = StripOracle(family) if (oracle is None and candidates) else oracle
    members = [oracle.members(s) for s in candidates]
    by_tube = [[] for _ in range(n)]
    for c, m in enumerate(members):
        for i in m:
            by_tube[i].append(c)
    counts = np.array([len(m) for m in members], int)
    resid = np.ones(n, bool)
    extractions = []
    while counts.size and counts.max() >= threshold:
        c = int(np.argmax(counts))
        moved = [int(i) for i in members[c] if resid[i]]
        for i in moved:
            resid[i] = False
            for other in by_tube[i]:
                counts[other] -= 1
        extractions.append(Extraction(c, tuple(family.tubes[i].id for i in moved), len(moved)))
        if len(extractions) > bound + 1:
            raise VerificationError("extraction did not terminate within the counting bound")
    ids = np.array(family.ids)
    return StripDecomposition(tuple(int(i) for i in ids[resid]), tuple(int(i) for i in ids[~resid]),
                              extractions, float(alpha), float(threshold), len(candidates), n, float(bound),
                              int(counts.max()) if counts.size else 0)
