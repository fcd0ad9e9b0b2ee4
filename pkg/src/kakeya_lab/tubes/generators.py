"""Example tube families: random direction-separated tubes and a literal
real-space realisation of the SL2 construction."""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from ..errors import PreconditionError, ResourceError
from ..incidence.covering import greedy_net
from ..seeding import make_rng, resolve_seed
from ..sl2space import SL2Point, strip_direction
from .core import Tube, TubeFamily, is_dyadic

MIN_SL2_DELTA = 2.0 ** -10
# {ad - bc = 1} misses the unit ball of R^4, so the family lives on
# {ad - bc = SL2_LEVEL}; scaling (a, b, c, d) by 1/2 is the map (x, y, z) -> (x/2, y/2, z)
SL2_LEVEL = 0.25


def fibonacci_hemisphere(n):
    """n roughly evenly spread unit vectors with z >= 0."""
    k = np.arange(n) + 0.5
    z = 1.0 - k / n
    phi = k * math.pi * (3.0 - math.sqrt(5.0))
    r = np.sqrt(1.0 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def separate_directions(dirs, sep):
    """Greedily drop directions until all pairs, taken as undirected lines,
    are at angle >= sep."""
    chord = 2 * math.sin(sep / 2)
    both = np.vstack([dirs, -dirs])
    tree = cKDTree(both)
    n = len(dirs)
    alive = np.ones(n, bool)
    for i in range(n):
        if not alive[i]:
            continue
        for j in tree.query_ball_point(dirs[i], chord * (1 - 1e-12)):
            j %= n
            if j > i:
                alive[j] = False
    return dirs[alive]


def min_direction_angle(dirs):
    """Smallest angle between two of the directions taken as undirected lines."""
    if len(dirs) < 2:
        return math.pi / 2
    both = np.vstack([dirs, -dirs])
    d, idx = cKDTree(both).query(dirs, k=3)
    n = len(dirs)
    best = math.inf
    for i in range(n):
        for dist, j in zip(d[i], idx[i]):
            if j % n != i:
                best = min(best, 2 * math.asin(min(1.0, dist / 2)))
                break
    return best


def _random_in_ball(rng, n, radius):
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return v * radius * rng.uniform(0, 1, n)[:, None] ** (1 / 3)


def gen_direction_separated(delta, seed=None) -> TubeFamily:
    """About delta^-2 tubes with delta-separated directions and centres uniform in B(0, 1/2)."""
    if not is_dyadic(delta):
        raise PreconditionError("delta must be a power of 1/2")
    seed = resolve_seed(seed)
    rng = make_rng(seed)
    n = int(round(delta ** -2))
    dirs = separate_directions(fibonacci_hemisphere(n), delta)
    centres = _random_in_ball(rng, len(dirs), 0.5)
    tubes = tuple(Tube.centred(i, c, u, delta) for i, (c, u) in enumerate(zip(centres, dirs)))
    return TubeFamily(tubes, delta, "random-direction-separated", seed)


def _sl2_candidates(rng, n):
    """Points of {ad - bc = SL2_LEVEL} in the unit ball of R^4, by Newton
    projection of uniform samples along the gradient."""
    x = rng.normal(size=(n, 4))
    x *= (rng.uniform(0, 1, n) ** 0.25 / np.linalg.norm(x, axis=1))[:, None]
    for _ in range(30):
        a, b, c, d = x.T
        f = a * d - b * c - SL2_LEVEL
        g = np.column_stack([d, -c, -b, a])
        gg = (g * g).sum(axis=1)
        x = x - (f / np.maximum(gg, 1e-12))[:, None] * g
    a, b, c, d = x.T
    ok = (np.abs(a * d - b * c - SL2_LEVEL) < 1e-12) & (np.linalg.norm(x, axis=1) <= 1.0)
    return x[ok]


def gen_sl2_family(delta, seed=None, oversample=12) -> TubeFamily:
    """Fat tubes around delta^(1/2)-separated lines of the SL2 hypersurface,
    each filled with delta^(-1/2) thin tubes displaced along the strip
    direction of the hypersurface at its centre.

    ``meta`` records the fat-tube centres in R^4 and which strip each thin
    tube belongs to.
    """
    if not is_dyadic(delta):
        raise PreconditionError("delta must be a power of 1/2")
    if delta < MIN_SL2_DELTA:
        raise ResourceError(f"delta below {MIN_SL2_DELTA} would need more than 2^20 tubes")
    seed = resolve_seed(seed)
    rng = make_rng(seed)
    target = int(round(delta ** -1.5))
    sep = math.sqrt(delta)
    cand = _sl2_candidates(rng, oversample * target)
    centres = cand[greedy_net(cand, sep * (1 - 1e-12))][:target]
    per = int(round(delta ** -0.5))
    offsets = delta * (np.arange(per) - (per - 1) / 2)
    scale = math.sqrt(SL2_LEVEL)
    tubes, strip_of, directions = [], [], []
    for fi, x in enumerate(centres):
        k = strip_direction(SL2Point(x / scale)).direction
        directions.append(k)
        a, b, c, d = x
        u = np.array([c, d, 1.0])
        s_mid = -(a * c + b * d) / (u @ u)
        for off in offsets:
            a2, b2, c2, d2 = x + off * k
            u2 = np.array([c2, d2, 1.0])
            centre = np.array([a2, b2, 0.0]) + s_mid * u2
            t = Tube.centred(len(tubes), centre, u2, delta)
            if t.clipped() is None:
                continue
            tubes.append(t)
            strip_of.append(fi)
    meta = {"fat_centres": centres, "strip_directions": np.array(directions),
            "strip_of": np.array(strip_of, int), "level": SL2_LEVEL}
    return TubeFamily(tuple(tubes), delta, "sl2-style", seed, meta=meta)
