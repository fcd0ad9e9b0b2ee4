import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from kakeya_lab.errors import DegeneracyError, PreconditionError
from kakeya_lab.geometry import (CANONICAL_QUADRIC, CANONICAL_TRIPLE, AffineMap, Line3,
                                 affine_normalize, curvature_identity, fit_regulus,
                                 gauss_curvature, gauss_curvature_pair, heisenberg_line,
                                 heisenberg_membership, line_distance, ruling_line, separation,
                                 skewness, tetrahedron_volume, transversal_through_point,
                                 xij_determinant)
from kakeya_lab.geometry.regulus import coplanarity, sample_admissible_triple

X_AXIS = Line3([0, 0, 0], [1, 0, 0])
LIFTED_Y = Line3([0, 0, 1], [0, 1, 0])

finite = st.floats(-1, 1, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def nonzero(v):
    return np.linalg.norm(v) > 1e-3


def _meets(L, M, tol=1e-8):
    return coplanarity(L, M) < tol and np.linalg.norm(np.cross(L.direction, M.direction)) > 1e-9


# ---- line primitives -------------------------------------------------------

@given(vec3, vec3.filter(nonzero))
def test_chart_round_trip(base, d):
    d = d.copy()
    d[2] = 0.5 + abs(d[2])
    L = Line3(base, d)
    M = Line3.from_chart(*L.chart())
    assert L.same_line(M, tol=1e-9)


def test_json_forms():
    L = Line3([1, 2, 3], [0, 1, 2], length=1.5)
    assert Line3.from_json(L.to_json()).length == 1.5
    assert Line3.from_json(L.to_json("chart")).same_line(L)


def test_horizontal_line_has_no_chart():
    with pytest.raises(DegeneracyError):
        X_AXIS.chart()


# ---- separation ------------------------------------------------------------

def test_separation_worked_example():
    lo, hi = separation(X_AXIS, LIFTED_Y)
    assert lo == pytest.approx(1.0, abs=1e-14)
    assert hi == pytest.approx(math.sqrt(2.0), abs=1e-14)


def test_separation_parallel_and_crossing():
    assert separation(X_AXIS, Line3([0, 1, 0], [1, 0, 0])) == pytest.approx((1.0, 1.0))
    assert separation(X_AXIS, Line3([0.2, 0, 0], [0, 1, 1]))[0] == pytest.approx(0.0, abs=1e-14)


@given(vec3.map(lambda v: 0.5 * v), vec3.filter(nonzero), vec3, vec3.filter(nonzero))
def test_separation_matches_dense_sampling(b1, d1, b2, d2):
    L1, L2 = Line3(b1, d1), Line3(b2, d2)
    lo, hi = separation(L1, L2)
    t0, t1 = L1.ball_chord(1.0)
    dist = L2.distance_to_points(L1.point(np.linspace(t0, t1, 4001)))
    assert lo <= dist.min() + 1e-12
    assert hi == pytest.approx(dist.max(), abs=1e-9)
    assert dist.min() - lo < 1e-3


def test_separation_needs_ball():
    with pytest.raises(PreconditionError):
        separation(Line3([0, 0, 5], [1, 0, 0]), X_AXIS)


# ---- skewness --------------------------------------------------------------

def _skewness_oracle(L1, L2, n_phi=4000, n_t=801):
    """Brute force: planes through L1 by normal angle, points of L2 in B(0, 2)."""
    v = L1.direction
    a = np.array([1.0, 0, 0]) if abs(v[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(v, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(v, e1)
    t0, t1 = L2.ball_chord(2.0)
    w = L2.point(np.linspace(t0, t1, n_t)) - L1.base
    p1, p2 = w @ e1, w @ e2

    def worst(phi):
        num = np.abs(np.cos(phi) * p1 + np.sin(phi) * p2)
        den = np.abs(-np.sin(phi) * p1 + np.cos(phi) * p2)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(num < 1e-15, 0.0, num / den).max()

    phis = np.linspace(0, np.pi, n_phi, endpoint=False)
    vals = np.array([worst(f) for f in phis])
    # second pass on a fine grid around the coarse minimum
    f0, step = phis[vals.argmin()], np.pi / n_phi
    fine = np.linspace(f0 - step, f0 + step, 2001)
    return min(vals.min(), min(worst(f) for f in fine))


def test_skewness_worked_example_vs_dense_oracle():
    got = skewness(X_AXIS, LIFTED_Y)
    assert got == pytest.approx(_skewness_oracle(X_AXIS, LIFTED_Y), abs=1e-4)


def test_skewness_trivial_cases():
    assert skewness(X_AXIS, X_AXIS) == 0.0
    assert skewness(X_AXIS, Line3([0, 0.3, 0], [1, 1, 0])) == pytest.approx(0.0, abs=1e-12)


def test_skewness_random_lines_vs_oracle(rng):
    for _ in range(5):
        L1 = Line3(rng.uniform(-0.3, 0.3, 3), rng.normal(size=3))
        L2 = Line3(rng.uniform(-0.3, 0.3, 3), rng.normal(size=3))
        got = skewness(L1, L2)
        oracle = _skewness_oracle(L1, L2)
        assert got <= oracle + 1e-9
        assert got == pytest.approx(oracle, rel=5e-3, abs=1e-4)


def test_skewness_requires_window():
    with pytest.raises(PreconditionError):
        skewness(X_AXIS, Line3([0, 0, 5], [1, 0, 0]))


# ---- chart determinant -----------------------------------------------------

def test_xij_worked_examples():
    z_axis = Line3.from_chart(0, 0, 0, 0)
    other = Line3.from_chart(1, 0, 0, 1)
    assert xij_determinant(z_axis, other) == pytest.approx(1.0)
    vol = tetrahedron_volume([0, 0, 0], [0, 0, 1], [1, 0, 0], [1, 1, 1])
    assert abs(6 * vol) == pytest.approx(1.0)
    assert xij_determinant(z_axis, z_axis) == 0.0
    assert xij_determinant(z_axis, Line3.from_chart(1, 0, 0, 0)) == 0.0


@given(st.lists(finite, min_size=8, max_size=8))
def test_xij_is_six_tetrahedron_volumes(c):
    Li, Lj = Line3.from_chart(*c[:4]), Line3.from_chart(*c[4:])
    # points at heights 0 and 1 on each line span the tetrahedron
    vol = tetrahedron_volume(Li.point(-Li.base[2] / Li.direction[2]),
                             Li.point((1 - Li.base[2]) / Li.direction[2]),
                             Lj.point(-Lj.base[2] / Lj.direction[2]),
                             Lj.point((1 - Lj.base[2]) / Lj.direction[2]))
    assert abs(xij_determinant(Li, Lj)) == pytest.approx(6 * abs(vol), abs=1e-9)


# ---- regulus fitting -------------------------------------------------------

def test_canonical_fit_matches_symbolic_quadric():
    R = fit_regulus(*CANONICAL_TRIPLE)
    c = R.quadric.coeffs
    target = CANONICAL_QUADRIC / CANONICAL_QUADRIC[np.argmax(np.abs(CANONICAL_QUADRIC))]
    k = c @ target / (target @ target)
    assert np.abs(c - k * target).max() <= 1e-10
    x, y, z, s = sp.symbols("x y z s")
    Q = x * y - x * z - y * z + z
    for base, d in (((0, 0, 0), (1, 0, 0)), ((0, 1, 0), (0, 0, 1)), ((1, 0, 1), (0, 1, 0))):
        pt = [b + s * e for b, e in zip(base, d)]
        assert sp.expand(Q.subs({x: pt[0], y: pt[1], z: pt[2]})) == 0


def test_planar_triple_is_degenerate():
    lines = [Line3([0, 0, 0], [1, 0, 0]), Line3([0, 1, 0], [1, 1, 0]), Line3([1, 0, 0], [0, 1, 0])]
    with pytest.raises(DegeneracyError):
        fit_regulus(*lines)


def test_concurrent_triple_is_degenerate():
    lines = [Line3([0, 0, 0], d) for d in ([1, 0, 0], [0, 1, 0], [0, 0, 1])]
    with pytest.raises(DegeneracyError):
        fit_regulus(*lines)


def test_random_triples_vanish_on_lines(rng):
    for _ in range(100):
        lines = sample_admissible_triple(rng)
        R = fit_regulus(*lines)
        for L in lines:
            c = L.foot_parameter(np.zeros(3))
            pts = L.point(c + np.linspace(-1, 1, 30))
            assert R.quadric.distance_proxy(pts).max() <= 1e-10


def test_affine_normalize_canonical_is_identity():
    T = affine_normalize(*CANONICAL_TRIPLE)
    assert np.allclose(T.A, np.eye(3), atol=1e-12)
    assert np.allclose(T.b, 0, atol=1e-12)
    assert T.det == pytest.approx(1.0)


def test_affine_normalize_random_round_trip(rng):
    for _ in range(100):
        lines = sample_admissible_triple(rng)
        T = affine_normalize(*lines)
        Ti = T.inverse()
        for L, target in zip(lines, CANONICAL_TRIPLE):
            pts = L.point(np.linspace(-1, 1, 7))
            assert target.distance_to_points(T(pts)).max() <= 1e-9
            assert np.abs(Ti(T(pts)) - pts).max() <= 1e-8


def test_affine_normalize_rejects_paraboloid_triple():
    # third direction in the plane of the first two
    lines = [Line3([0, 0, 0], [1, 0, 0]), Line3([0, 0, 1], [0, 1, 0]), Line3([0, 0, 2], [1, 1, 0])]
    with pytest.raises(DegeneracyError):
        affine_normalize(*lines)


def test_affine_map_composition():
    f = AffineMap(np.array([[1, 2, 0], [0, 1, 0], [3, 0, 1]]), [1, -1, 2])
    g = AffineMap.from_function(lambda q: np.array([q[2], q[0] + 1, 2 * q[1]]))
    x = np.array([0.3, -0.2, 0.9])
    assert np.allclose(f.then(g)(x), g(f(x)))
    assert np.allclose(f.inverse()(f(x)), x)


# ---- ruling lines, transversals, curvature ---------------------------------

def test_ruling_at_zero_points_along_theta(rng):
    for _ in range(20):
        R = fit_regulus(*sample_admissible_triple(rng))
        F = R.frame
        d = F.rotation @ ruling_line(R, 0.0).direction
        target = np.array([0.0, np.sin(F.theta), np.cos(F.theta)])
        assert np.linalg.norm(np.cross(d, target)) <= 1e-9


def test_ruling_lines_meet_generators(rng):
    for _ in range(20):
        R = fit_regulus(*sample_admissible_triple(rng))
        for s in np.linspace(-0.5, 0.5, 5):
            T = ruling_line(R, s)
            assert all(_meets(T, G) for G in R.generators)


def test_first_ruling_component_changes_sign_once(rng):
    for _ in range(20):
        R = fit_regulus(*sample_admissible_triple(rng))
        c0, c1, c2 = R.frame.ruling_coefficients()
        s = np.linspace(-50, 50, 20001)
        y1 = c0[0] + s * c1[0] + s * s * c2[0]
        flips = np.count_nonzero(np.diff(np.sign(y1[np.abs(y1) > 1e-12])))
        assert flips == 1


def test_transversal_through_point_on_canonical_regulus():
    L1, L2, L3 = CANONICAL_TRIPLE
    p = L1.point(0.3)
    T = transversal_through_point(p, L1, L2, L3)
    assert T.distance_to_points(p) < 1e-12
    assert _meets(T, L2) and _meets(T, L3)
    # direct construction: the transversal through (x, 0, 0) is (x, 0, 0) + R(0, x, 1 - x)...
    # ...checked against the quadric
    R = fit_regulus(*CANONICAL_TRIPLE)
    assert R.quadric.distance_proxy(T.point(np.linspace(-2, 2, 9))).max() < 1e-12


def test_transversal_rejects_points_off_regulus():
    L1, L2, L3 = CANONICAL_TRIPLE
    with pytest.raises(PreconditionError):
        transversal_through_point(np.array([0.3, 0.1, 0.1]) + [0, 0, 0.1], L1, L2, L3)


def test_saddle_curvature_at_origin():
    # z = xy is ruled by the lines x = a, z = a y
    lines = [Line3([a, 0, 0], [0, 1, a]) for a in (-1.0, 0.5, 2.0)]
    R = fit_regulus(*lines, require_hyperboloid=False)
    assert R.quadric.implicit_gauss_curvature(np.zeros(3)) == pytest.approx(-1.0, rel=1e-12)
    assert gauss_curvature(R, np.zeros(3)) == pytest.approx(-1.0, rel=1e-9)


def test_curvature_methods_agree_with_implicit_formula(rng):
    for _ in range(50):
        R = fit_regulus(*sample_admissible_triple(rng))
        L1 = R.generators[0]
        p = L1.point(L1.foot_parameter(np.zeros(3)) + 0.2)
        k1, k2 = gauss_curvature_pair(R, p)
        k3 = R.quadric.implicit_gauss_curvature(p)
        assert k1 == pytest.approx(k2, rel=1e-6)
        assert k1 == pytest.approx(k3, rel=1e-6)
        assert k1 < 0


def test_curvature_where_the_ruling_is_nearly_parallel_to_the_base():
    # the ruling through this point meets the first generator about 2000 units out
    rng = np.random.default_rng(3)
    for _ in range(736):
        lines = sample_admissible_triple(rng)
    R = fit_regulus(*lines)
    p = lines[1].closest_point_to(np.zeros(3))
    k1, k2 = gauss_curvature_pair(R, p)
    k3 = R.quadric.implicit_gauss_curvature(p)
    assert k1 == pytest.approx(k3, rel=1e-6) and k2 == pytest.approx(k3, rel=1e-6)


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.integers(0, 2))
def test_curvature_pair_anywhere_on_a_generator(seed, t, k):
    R = fit_regulus(*sample_admissible_triple(np.random.default_rng(seed)))
    L = R.generators[k]
    p = L.point(L.foot_parameter(np.zeros(3)) + t)
    k1, k2 = gauss_curvature_pair(R, p)
    k3 = R.quadric.implicit_gauss_curvature(p)
    assert k1 == pytest.approx(k3, rel=1e-6) and k2 == pytest.approx(k3, rel=1e-6)


def test_curvature_identity_random(rng):
    for _ in range(100):
        out = curvature_identity(fit_regulus(*sample_admissible_triple(rng)))
        assert abs(out["lhs"] - out["rhs"]) <= 1e-8 * abs(out["rhs"])


def test_curvature_rejects_points_off_surface():
    R = fit_regulus(*CANONICAL_TRIPLE)
    with pytest.raises(PreconditionError):
        gauss_curvature_pair(R, np.array([0.3, 0.3, 0.9]))


# ---- Heisenberg group ------------------------------------------------------

def test_heisenberg_real_axis():
    for s in np.linspace(-3, 3, 7):
        assert heisenberg_membership(complex(s), 0, 0)
    L = heisenberg_line(0, 0, 0)
    s = np.exp(1j * np.linspace(0, 6, 100)) * np.linspace(0.1, 2, 100)
    assert np.all(np.abs(L.defects(s)) <= 1e-12)


@given(st.floats(-2, 2), st.floats(-2, 2), st.complex_numbers(max_magnitude=2),
       st.complex_numbers(max_magnitude=2))
def test_heisenberg_lines_are_contained(a, b, w, s):
    x, y, z = heisenberg_line(a, b, w).point(s)
    assert heisenberg_membership(complex(x), complex(y), complex(z), tol=1e-12)


def test_heisenberg_rejects_generic_point():
    assert not heisenberg_membership(1j, 1, 0)


def test_line_distance_skew_example():
    assert line_distance(X_AXIS, LIFTED_Y) == pytest.approx(1.0)
