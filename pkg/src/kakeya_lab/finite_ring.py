"""Arithmetic over the dual-number ring F_p[t]/(t^2) and the SL2 line family.

Elements are written ``x1 + x2*t``.  Internally the enumeration code encodes an
element as the integer ``x1 + p*x2`` and a point of R^3 as
``x + p^2*y + p^4*z`` so that whole point sets become sorted integer arrays.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import PreconditionError, ResourceError

MAX_P_SET = 7
MAX_P_PLANES = 3
MAX_P_PAIRS = 5


def is_prime(p):
    if p < 2:
        return False
    return all(p % q for q in range(2, int(p**0.5) + 1))


def _check_prime(p):
    if not isinstance(p, (int, np.integer)) or not is_prime(int(p)):
        raise PreconditionError(f"p must be prime, got {p!r}")


@dataclass(frozen=True, order=True)
class RingElem:
    x1: int
    x2: int
    p: int = field(compare=True)

    def __post_init__(self):
        object.__setattr__(self, "x1", self.x1 % self.p)
        object.__setattr__(self, "x2", self.x2 % self.p)

    @classmethod
    def from_code(cls, code, p):
        return cls(code % p, code // p, p)

    @property
    def code(self):
        return self.x1 + self.p * self.x2

    @property
    def is_unit(self):
        return self.x1 != 0

    @property
    def is_nilpotent(self):
        return self.x1 == 0

    def _same(self, other):
        if not isinstance(other, RingElem):
            other = RingElem(int(other), 0, self.p)
        if other.p != self.p:
            raise PreconditionError(f"modulus mismatch: {self.p} vs {other.p}")
        return other

    def __add__(self, other):
        other = self._same(other)
        return RingElem(self.x1 + other.x1, self.x2 + other.x2, self.p)

    __radd__ = __add__

    def __neg__(self):
        return RingElem(-self.x1, -self.x2, self.p)

    def __sub__(self, other):
        return self + (-self._same(other))

    def __rsub__(self, other):
        return self._same(other) - self

    def __mul__(self, other):
        return ring_mul(self, self._same(other))

    __rmul__ = __mul__

    def inverse(self):
        """(a1 + a2 t)^-1 = a1^-1 - a2 a1^-2 t, defined only for units."""
        if not self.is_unit:
            raise ZeroDivisionError(f"{self} is not a unit")
        inv1 = pow(self.x1, -1, self.p)
        return RingElem(inv1, -self.x2 * inv1 * inv1, self.p)

    def __repr__(self):
        return f"RingElem({self.x1}+{self.x2}t mod {self.p})"


def ring_mul(a: RingElem, b: RingElem) -> RingElem:
    if a.p != b.p:
        raise PreconditionError(f"modulus mismatch: {a.p} vs {b.p}")
    return RingElem(a.x1 * b.x1, a.x1 * b.x2 + a.x2 * b.x1, a.p)


def ring_elements(p):
    return [RingElem(x1, x2, p) for x2 in range(p) for x1 in range(p)]


@dataclass(frozen=True, order=True)
class RPoint3:
    x: RingElem
    y: RingElem
    z: RingElem

    @property
    def p(self):
        return self.x.p

    def in_sl2_set(self):
        return (self.z.x2 - (self.x.x1 * self.y.x2 - self.x.x2 * self.y.x1)) % self.p == 0

    @property
    def coarse(self):
        return (self.x.x1, self.y.x1, self.z.x1)

    @property
    def code(self):
        q = self.p * self.p
        return self.x.code + q * self.y.code + q * q * self.z.code

    @classmethod
    def from_code(cls, code, p):
        q = p * p
        return cls(RingElem.from_code(code % q, p),
                   RingElem.from_code((code // q) % q, p),
                   RingElem.from_code(code // (q * q), p))


@dataclass(frozen=True, order=True)
class RLine:
    """The line (a, b, 0) + s (c, d, 1), s in R."""
    a: RingElem
    b: RingElem
    c: RingElem
    d: RingElem

    @property
    def p(self):
        return self.a.p

    def point(self, s: RingElem) -> RPoint3:
        return RPoint3(self.a + s * self.c, self.b + s * self.d, s)

    def points(self):
        return frozenset(self.point(s) for s in ring_elements(self.p))

    def point_codes(self):
        t = _tables(self.p)
        s = np.arange(t.q)
        x = t.add[self.a.code, t.mul[s, self.c.code]]
        y = t.add[self.b.code, t.mul[s, self.d.code]]
        return np.sort(x + t.q * y + t.q * t.q * s)

    def as_tuple(self):
        return tuple((e.x1, e.x2) for e in (self.a, self.b, self.c, self.d))


@dataclass(frozen=True)
class RPlane:
    """Solution set of u x + v y + w z = s.  Some coefficient among u, v, w must
    be a unit, otherwise the set is empty or too large and is rejected."""
    u: RingElem
    v: RingElem
    w: RingElem
    s: RingElem

    def __post_init__(self):
        if not (self.u.is_unit or self.v.is_unit or self.w.is_unit):
            raise PreconditionError("plane needs a unit among (u, v, w); "
                                    "otherwise it does not have p^4 points")

    @property
    def p(self):
        return self.u.p

    def contains(self, pt: RPoint3):
        return (self.u * pt.x + self.v * pt.y + self.w * pt.z) == self.s

    def normalized(self):
        """Scale so the first unit coefficient becomes 1."""
        lead = next(e for e in (self.u, self.v, self.w) if e.is_unit)
        k = lead.inverse()
        return RPlane(self.u * k, self.v * k, self.w * k, self.s * k)

    def mask(self):
        t = _tables(self.p)
        return _plane_mask(t, self.u.code, self.v.code, self.w.code, self.s.code)


@dataclass(frozen=True)
class _Tables:
    p: int
    q: int
    add: np.ndarray
    mul: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray


@lru_cache(maxsize=None)
def _tables(p):
    q = p * p
    e = np.arange(q)
    e1, e2 = e % p, e // p
    add = (e1[:, None] + e1[None, :]) % p + p * ((e2[:, None] + e2[None, :]) % p)
    mul = (e1[:, None] * e1[None, :]) % p + p * ((e1[:, None] * e2[None, :] + e2[:, None] * e1[None, :]) % p)
    pts = np.arange(q**3)
    return _Tables(p, q, add, mul, pts % q, (pts // q) % q, pts // (q * q))


def _plane_mask(t, u, v, w, s):
    lhs = t.add[t.add[t.mul[u, t.xs], t.mul[v, t.ys]], t.mul[w, t.zs]]
    return lhs == s


def build_sl2_set(p, max_p=MAX_P_SET):
    """All points of R^3 with z2 = x1*y2 - x2*y1 (mod p)."""
    _check_prime(p)
    if p > max_p:
        raise ResourceError(f"p={p} exceeds the enumeration limit {max_p}")
    return frozenset(RPoint3.from_code(int(c), p) for c in sl2_set_codes(p))


def sl2_set_codes(p):
    t = _tables(p)
    x1, x2 = t.xs % p, t.xs // p
    y1, y2 = t.ys % p, t.ys // p
    z2 = t.zs // p
    keep = (z2 - (x1 * y2 - x2 * y1)) % p == 0
    return np.nonzero(keep)[0]


def _coarse_count(codes, p):
    t = _tables(p)
    coarse = t.xs[codes] % p + p * (t.ys[codes] % p) + p * p * (t.zs[codes] % p)
    return int(np.unique(coarse).size)


def build_sl2_lines(p):
    """The family {(1 + alpha t)(a, b, c, d) : ad - bc = 1 in F_p, alpha in F_p}."""
    _check_prime(p)
    out = set()
    for a, b, c, d in itertools.product(range(p), repeat=4):
        if (a * d - b * c) % p != 1:
            continue
        for alpha in range(p):
            out.add(RLine(*(RingElem(x, alpha * x, p) for x in (a, b, c, d))))
    return out


def coarse_projection(pts):
    return {pt.coarse for pt in pts}


@dataclass
class AxiomResult:
    name: str
    passed: bool | None
    witness: object = None

    def to_dict(self):
        return {"name": self.name, "pass": self.passed, "witness": self.witness}


@dataclass
class AxiomReport:
    p: int
    axioms: list
    cardinalities: dict

    @property
    def all_passed(self):
        return all(a.passed for a in self.axioms)

    def get(self, name):
        return next(a for a in self.axioms if a.name == name)

    def to_dict(self):
        return {"p": self.p, "axioms": [a.to_dict() for a in self.axioms],
                "cardinalities": dict(self.cardinalities)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


AXIOMS = (
    "line_count",
    "lines_per_plane",
    "pair_intersection",
    "intersecting_pairs_coplanar",
    "plane_pair_line_count",
    "triangle_unique_plane",
)
PLANE_AXIOMS = {"lines_per_plane", "intersecting_pairs_coplanar",
                "plane_pair_line_count", "triangle_unique_plane"}


def enumerate_planes(p):
    """Distinct valid planes as a boolean membership matrix (planes x points)."""
    t = _tables(p)
    seen = {}
    for u, v, w in itertools.product(range(t.q), repeat=3):
        if not (u % p or v % p or w % p):
            continue
        lhs = t.add[t.add[t.mul[u, t.xs], t.mul[v, t.ys]], t.mul[w, t.zs]]
        for s in range(t.q):
            m = lhs == s
            seen.setdefault(m.tobytes(), m)
    return np.array(list(seen.values()))


def verify_ring_axioms(lines, p, checks=AXIOMS, max_plane_p=MAX_P_PLANES,
                       max_pair_p=MAX_P_PAIRS):
    """Check the six incidence axioms of the SL2 example exhaustively.

    Plane-quantified axioms need every plane of R^3 and are refused above
    ``max_plane_p``; pairwise axioms are refused above ``max_pair_p``.
    """
    _check_prime(p)
    checks = tuple(checks)
    unknown = set(checks) - set(AXIOMS)
    if unknown:
        raise PreconditionError(f"unknown axioms: {sorted(unknown)}")
    too_big = [c for c in checks if (c in PLANE_AXIOMS and p > max_plane_p)
               or (c not in PLANE_AXIOMS and c != "line_count" and p > max_pair_p)]
    if too_big:
        raise ResourceError(f"p={p} too large; skipped axioms: {', '.join(too_big)}")

    lines = sorted(lines)
    n = len(lines)
    q = p * p
    pts = [ln.point_codes() for ln in lines]
    union = np.unique(np.concatenate(pts)) if pts else np.array([], int)
    xset = sl2_set_codes(p) if p <= MAX_P_SET else None
    card = {
        "X": int(xset.size) if xset is not None else None,
        "L": n,
        "union": int(union.size),
        "projection": _coarse_count(xset, p) if xset is not None else None,
    }

    need_pairs = any(c != "line_count" for c in checks)
    inter = None
    if need_pairs:
        member = np.zeros((n, q**3), dtype=bool)
        for i, codes in enumerate(pts):
            member[i, codes] = True
        m8 = member.astype(np.int32)
        inter = m8 @ m8.T
        np.fill_diagonal(inter, 0)

    need_planes = any(c in PLANE_AXIOMS for c in checks)
    if need_planes:
        planes = enumerate_planes(p)
        contains = np.array([[pl[c].all() for c in pts] for pl in planes])
        ci = contains.astype(np.int32)
        common = ci.T @ ci

    results = []
    for name in checks:
        if name == "line_count":
            ok = p**4 - p**2 <= n <= p**4
            results.append(AxiomResult(name, bool(ok), None if ok else {"count": n, "target": p**4}))
        elif name == "lines_per_plane":
            per = contains.sum(axis=1)
            worst = int(per.argmax())
            ok = per.max() <= q
            wit = None if ok else {"plane_index": worst, "lines": int(per[worst])}
            results.append(AxiomResult(name, bool(ok), wit))
        elif name == "pair_intersection":
            i, j = np.unravel_index(inter.argmax(), inter.shape)
            ok = inter.max() <= 1
            wit = None if ok else {"lines": [lines[i].as_tuple(), lines[j].as_tuple()],
                                   "points": int(inter[i, j])}
            results.append(AxiomResult(name, bool(ok), wit))
        elif name == "intersecting_pairs_coplanar":
            bad = np.argwhere((inter >= 1) & (common == 0))
            ok = bad.size == 0
            wit = None if ok else {"lines": [lines[bad[0][0]].as_tuple(), lines[bad[0][1]].as_tuple()]}
            results.append(AxiomResult(name, bool(ok), wit))
        elif name == "plane_pair_line_count":
            off = common.copy()
            np.fill_diagonal(off, 0)
            bad = np.argwhere(off > 1)
            ok = bad.size == 0
            wit = None if ok else {"lines": [lines[bad[0][0]].as_tuple(), lines[bad[0][1]].as_tuple()],
                                   "common_planes": int(off[bad[0][0], bad[0][1]])}
            results.append(AxiomResult(name, bool(ok), wit))
        elif name == "triangle_unique_plane":
            results.append(_check_triangles(lines, pts, inter, contains))
    return AxiomReport(p, results, card)


def _check_triangles(lines, pts, inter, contains):
    """Pairwise-intersecting, non-concurrent triples must share exactly one plane."""
    n = len(lines)
    meets = inter >= 1
    total = failures = 0
    witness = None
    for i in range(n):
        nbr = np.nonzero(meets[i, i + 1:])[0] + i + 1
        for jj, j in enumerate(nbr):
            for k in nbr[jj + 1:]:
                if not meets[j, k]:
                    continue
                if np.intersect1d(np.intersect1d(pts[i], pts[j]), pts[k]).size:
                    continue
                total += 1
                shared = int((contains[:, i] & contains[:, j] & contains[:, k]).sum())
                if shared != 1:
                    failures += 1
                    if witness is None:
                        witness = {"lines": [lines[i].as_tuple(), lines[j].as_tuple(), lines[k].as_tuple()],
                                   "common_planes": shared}
    ok = failures == 0
    if witness is not None:
        witness.update(failing_triples=failures, triples=total)
    return AxiomResult("triangle_unique_plane", ok, witness)
