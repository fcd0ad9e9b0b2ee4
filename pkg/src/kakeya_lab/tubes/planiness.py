"""Triple-wedge planiness statistic and the robust-transversality refinement."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..seeding import make_rng
from .core import TubeFamily, VoxelGrid
from .raster import voxel_tube_pairs
from .wolff import dyadic_scales

EXACT_LIMIT = 32
MC_TRIPLES = 4000


def _groups(voxels, owner):
    """Start/stop offsets of runs of equal voxel index."""
    if voxels.size == 0:
        return np.zeros(0, int), np.zeros(0, int)
    cut = np.flatnonzero(np.diff(voxels)) + 1
    starts = np.concatenate([[0], cut])
    stops = np.concatenate([cut, [voxels.size]])
    return starts, stops


_TRIPLES = {}


def _triples(m):
    if m not in _TRIPLES:
        _TRIPLES[m] = np.array(list(combinations(range(m), 3)), int).reshape(-1, 3)
    return _TRIPLES[m]


def triple_wedge_sum(dirs, rng=None, exact_limit=EXACT_LIMIT, samples=MC_TRIPLES):
    """Sum over unordered triples of |det(v1, v2, v3)|; Monte Carlo above ``exact_limit``."""
    m = len(dirs)
    if m < 3:
        return 0.0
    if m <= exact_limit:
        tr = _triples(m)
        return float(np.abs(np.linalg.det(dirs[tr])).sum())
    rng = make_rng(0) if rng is None else rng
    idx = np.array([rng.choice(m, 3, replace=False) for _ in range(samples)])
    return float(np.abs(np.linalg.det(dirs[idx])).mean() * math.comb(m, 3))


@dataclass
class PlaninessReport:
    delta: float
    n_tubes: int
    statistic: float
    reference: float                # (delta^2 |T|)^(3/2) delta^-0.1
    constant: float                 # statistic / reference
    monte_carlo_voxels: int

    def to_json(self):
        return dict(self.__dict__)


def planiness_statistic(family: TubeFamily, grid: VoxelGrid = None, seed=None, loss=0.1):
    """h^3 times the sum over voxels of (sum of |v1 ^ v2 ^ v3| over triples through the voxel)^(1/2)."""
    grid = VoxelGrid.for_delta(family.delta) if grid is None else grid
    vox, owner = voxel_tube_pairs(family, grid)
    dirs = family.directions()
    rng = make_rng(seed)
    starts, stops = _groups(vox, owner)
    total = 0.0
    mc = 0
    for a, b in zip(starts, stops):
        if b - a < 3:
            continue
        if b - a > EXACT_LIMIT:
            mc += 1
        total += math.sqrt(triple_wedge_sum(dirs[owner[a:b]], rng))
    stat = total * grid.h ** 3
    ref = (family.delta ** 2 * len(family)) ** 1.5 * family.delta ** -loss
    return PlaninessReport(family.delta, len(family), stat, ref, stat / ref if ref > 0 else 0.0, mc)


def direction_net():
    """The 13 lines through the origin and the 26 neighbours of a cube cell."""
    out = []
    for v in np.ndindex(3, 3, 3):
        w = np.array(v, float) - 1
        if not w.any():
            continue
        w /= np.linalg.norm(w)
        if not any(abs(abs(w @ u) - 1) < 1e-12 for u in out):
            out.append(w)
    return np.array(out)


@dataclass
class TransversalityReport:
    constant: float                 # c with |{T: angle <= theta}| <= c theta^(1/10) m on survivors
    retained_fraction: float        # surviving incidence mass / original
    removed_voxels: int
    surviving_voxels: int
    thetas: tuple

    def to_json(self):
        return dict(self.__dict__)


def robust_transversality(family: TubeFamily, grid: VoxelGrid = None, keep=0.5, exponent=0.1):
    """Refine shadings so tubes through each voxel avoid narrow direction caps.

    Each voxel gets the score max over net directions e and dyadic theta of
    #{T through p: angle(v(T), e) <= theta} / (theta^exponent m(p)).  Voxels
    are dropped from every shading in decreasing score order while at least
    ``keep`` of the incidence mass remains; the largest surviving score is
    the reported constant.  Returns (refined family, report).
    """
    from .core import Shading
    grid = VoxelGrid.for_delta(family.delta) if grid is None else grid
    vox, owner = voxel_tube_pairs(family, grid)
    dirs = family.directions()
    net = direction_net()
    thetas = dyadic_scales(family.delta)
    cos_t = np.cos(thetas)
    starts, stops = _groups(vox, owner)
    m = stops - starts
    score = np.zeros(len(starts))
    cosang = np.abs(dirs @ net.T)                                    # (tubes, net)
    for g, (a, b) in enumerate(zip(starts, stops)):
        c = cosang[owner[a:b]]                                       # (m, net)
        within = (c[:, :, None] >= cos_t[None, None, :] - 1e-12).sum(axis=0)   # (net, thetas)
        score[g] = (within / (thetas ** exponent)).max() / (b - a)
    order = np.argsort(-score, kind="stable")
    mass = m[order]
    total = mass.sum()
    removed_mass = np.cumsum(mass)
    # drop the highest scores while the remaining mass stays >= keep * total
    n_drop = int(np.searchsorted(removed_mass, (1 - keep) * total, side="right"))
    dropped = np.zeros(len(starts), bool)
    dropped[order[:n_drop]] = True
    alive = ~dropped
    const = float(score[alive].max()) if alive.any() else 0.0
    keep_pair = np.repeat(alive, m)
    shadings = {}
    for i, t in enumerate(family.tubes):
        sel = keep_pair & (owner == i)
        shadings[t.id] = Shading(t.id, vox[sel], grid.h)
    refined = family.with_shadings(shadings)
    report = TransversalityReport(const, float(m[alive].sum() / total) if total else 1.0,
                                  int(dropped.sum()), int(alive.sum()), tuple(float(x) for x in thetas))
    return refined, report
