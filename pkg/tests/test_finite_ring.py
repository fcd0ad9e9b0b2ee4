import itertools

import pytest
from hypothesis import given, strategies as st

from kakeya_lab.errors import PreconditionError, ResourceError
from kakeya_lab.finite_ring import (AXIOMS, RingElem, RLine, RPlane, RPoint3, build_sl2_lines,
                                    build_sl2_set, coarse_projection, enumerate_planes, is_prime,
                                    ring_elements, ring_mul, verify_ring_axioms)

PRIMES = [2, 3, 5, 7]


def elem(p):
    return st.builds(RingElem, st.integers(0, p - 1), st.integers(0, p - 1), st.just(p))


def test_nilpotent_square():
    t = RingElem(0, 1, 5)
    assert t * t == RingElem(0, 0, 5)
    assert t.is_nilpotent and not t.is_unit


def test_one_plus_t_times_one_minus_t():
    for p in PRIMES:
        one, t = RingElem(1, 0, p), RingElem(0, 1, p)
        assert (one + t) * (one - t) == one


def test_inverse_of_two_plus_t_by_brute_force():
    p = 5
    x = RingElem(2, 1, p)
    brute = [y for y in ring_elements(p) if x * y == RingElem(1, 0, p)]
    assert brute == [RingElem(3, 1, p)]
    assert x.inverse() == RingElem(3, 1, p)


def test_nilpotent_has_no_inverse():
    with pytest.raises(ZeroDivisionError):
        RingElem(0, 3, 5).inverse()


def test_mismatched_modulus():
    with pytest.raises(PreconditionError):
        ring_mul(RingElem(1, 1, 3), RingElem(1, 1, 5))


@pytest.mark.parametrize("p", PRIMES)
def test_ring_axioms_hold(p):
    @given(elem(p), elem(p), elem(p))
    def check(a, b, c):
        zero, one = RingElem(0, 0, p), RingElem(1, 0, p)
        assert a * (b + c) == a * b + a * c
        assert (a * b) * c == a * (b * c)
        assert a * b == b * a
        assert a + zero == a and a * one == a
        assert a - a == zero
        if a.is_unit:
            assert a * a.inverse() == one
        # dual-number rule (x1 + x2 t)(y1 + y2 t) = x1 y1 + (x1 y2 + x2 y1) t
        prod = ring_mul(a, b)
        assert prod.x1 == a.x1 * b.x1 % p
        assert prod.x2 == (a.x1 * b.x2 + a.x2 * b.x1) % p
    check()


@pytest.mark.parametrize("p, size", [(2, 32), (3, 243)])
def test_sl2_set_size(p, size):
    X = build_sl2_set(p)
    assert len(X) == size == p**5
    assert all(pt.in_sl2_set() for pt in X)


def test_sl2_set_matches_direct_enumeration():
    # independent oracle: loop over all p^6 points with plain integers
    p = 3
    direct = set()
    for x1, x2, y1, y2, z1, z2 in itertools.product(range(p), repeat=6):
        if (z2 - (x1 * y2 - x2 * y1)) % p == 0:
            direct.add((x1, x2, y1, y2, z1, z2))
    got = {(q.x.x1, q.x.x2, q.y.x1, q.y.x2, q.z.x1, q.z.x2) for q in build_sl2_set(p)}
    assert got == direct


def test_errors():
    with pytest.raises(PreconditionError):
        build_sl2_set(4)
    with pytest.raises(PreconditionError):
        build_sl2_lines(9)
    with pytest.raises(ResourceError):
        build_sl2_set(11)
    assert not is_prime(1) and is_prime(13)


def _sl2_count(p):
    return sum((a * d - b * c) % p == 1 for a, b, c, d in itertools.product(range(p), repeat=4))


@pytest.mark.parametrize("p, count", [(2, 12), (3, 72)])
def test_line_count(p, count):
    lines = build_sl2_lines(p)
    assert len(lines) == count == p * _sl2_count(p) == p**4 - p**2


@pytest.mark.parametrize("p", [2, 3, 5])
def test_lines_inside_set(p):
    X = build_sl2_set(p)
    for ln in build_sl2_lines(p):
        pts = ln.points()
        assert len(pts) == p * p
        assert pts <= X


def test_point_codes_agree_with_objects():
    for ln in build_sl2_lines(3):
        assert sorted(q.code for q in ln.points()) == ln.point_codes().tolist()
        for q in ln.points():
            assert RPoint3.from_code(q.code, 3) == q


def test_coarse_projection():
    assert len(coarse_projection(build_sl2_set(3))) == 27
    assert coarse_projection(set()) == set()
    t = RingElem(0, 1, 3)
    z = RingElem(0, 0, 3)
    assert coarse_projection({RPoint3(t, t, z)}) == {(0, 0, 0)}


def test_planes_need_a_unit():
    z = RingElem(0, 1, 3)
    with pytest.raises(PreconditionError):
        RPlane(z, z, z, RingElem(0, 0, 3))


def _all_planes_brute(p):
    """Distinct point sets of every valid plane, built from RPlane objects."""
    pts = [RPoint3(*xyz) for xyz in itertools.product(ring_elements(p), repeat=3)]
    seen = set()
    for u, v, w, s in itertools.product(ring_elements(p), repeat=4):
        if not (u.is_unit or v.is_unit or w.is_unit):
            continue
        seen.add(frozenset(q for q in pts if RPlane(u, v, w, s).contains(q)))
    return seen


def _planes_containing(p, pts):
    """Distinct planes (as point sets) through every point of ``pts``."""
    allpts = [RPoint3(*xyz) for xyz in itertools.product(ring_elements(p), repeat=3)]
    found = set()
    for u, v, w, s in itertools.product(ring_elements(p), repeat=4):
        if not (u.is_unit or v.is_unit or w.is_unit):
            continue
        pl = RPlane(u, v, w, s)
        if all(pl.contains(q) for q in pts):
            found.add(frozenset(q for q in allpts if pl.contains(q)))
    return found


def test_p2_planes_and_lines_per_plane_brute_force():
    p = 2
    planes = _all_planes_brute(p)
    assert len(planes) == len(enumerate_planes(p))
    assert all(len(pl) == p**4 for pl in planes)
    lines = [ln.points() for ln in build_sl2_lines(p)]
    worst = max(sum(ln <= pl for ln in lines) for pl in planes)
    assert worst <= p * p
    rep = verify_ring_axioms(build_sl2_lines(p), p)
    assert rep.get("lines_per_plane").passed


def test_p2_pairs_meet_at_most_once_brute_force():
    lines = [ln.points() for ln in build_sl2_lines(2)]
    assert max(len(a & b) for a, b in itertools.combinations(lines, 2)) <= 1


def test_p2_all_axioms_pass():
    rep = verify_ring_axioms(build_sl2_lines(2), 2)
    assert [a.name for a in rep.axioms] == list(AXIOMS)
    assert rep.all_passed
    assert rep.cardinalities == {"X": 32, "L": 12, "union": 24, "projection": 8}


def test_p3_union_is_reported():
    rep = verify_ring_axioms(build_sl2_lines(3), 3, checks=("line_count",))
    assert rep.cardinalities["X"] == 243
    assert rep.cardinalities["union"] == 216
    union = set().union(*(ln.points() for ln in build_sl2_lines(3)))
    assert len(union) == 216


def test_p3_triangle_axiom_has_a_checkable_witness():
    rep = verify_ring_axioms(build_sl2_lines(3), 3, checks=("triangle_unique_plane",))
    res = rep.get("triangle_unique_plane")
    assert res.passed is False
    tri = res.witness["lines"]
    p = 3
    lines = [RLine(*(RingElem(x1, x2, p) for x1, x2 in row)).points() for row in tri]
    for a, b in itertools.combinations(lines, 2):
        assert a & b
    assert not (lines[0] & lines[1] & lines[2])
    shared = len(_planes_containing(p, set().union(*lines)))
    assert shared == res.witness["common_planes"] != 1


def test_axiom_resource_refusal_names_axioms():
    with pytest.raises(ResourceError, match="lines_per_plane"):
        verify_ring_axioms(build_sl2_lines(5), 5, checks=("lines_per_plane",))
    with pytest.raises(PreconditionError):
        verify_ring_axioms(build_sl2_lines(2), 2, checks=("bogus",))


def test_report_json_round_trip():
    import json
    rep = verify_ring_axioms(build_sl2_lines(2), 2)
    obj = json.loads(rep.to_json())
    assert obj["p"] == 2 and len(obj["axioms"]) == 6
