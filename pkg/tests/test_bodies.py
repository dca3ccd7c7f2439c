import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from randpoly import (AffineMap, Ball, BodyError, ConversionError,
                      DegenerateBodyError, Ellipsoid, HPolytope,
                      UnboundedBodyError, VPolytope, affine_image,
                      body_from_dict, unit_ball_volume)

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
SYM_SQUARE = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def square_h() -> HPolytope:
    return HPolytope(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]),
                     np.array([1.0, 0.0, 1.0, 0.0]))


def random_body(seed: int):
    rng = np.random.default_rng(seed)
    kind = rng.integers(4)
    d = int(rng.integers(2, 4))
    if kind == 0:
        return Ball(rng.standard_normal(d), float(rng.random() + 0.1))
    if kind == 1:
        m = rng.standard_normal((d, d)) + 2 * np.eye(d)
        return Ellipsoid(rng.standard_normal(d), m @ m.T + 0.2 * np.eye(d))
    if kind == 2:
        return VPolytope(rng.standard_normal((d + 4, d)))
    v = VPolytope(rng.standard_normal((d + 4, d)))
    return HPolytope(v._facet_normals, v._facet_offsets)


class TestConstruction:
    def test_zero_radius_rejected(self):
        with pytest.raises(DegenerateBodyError):
            Ball(np.zeros(2), 0.0)

    def test_flat_polytope_rejected(self):
        with pytest.raises(DegenerateBodyError):
            VPolytope(np.array([[0.0, 0], [1, 1], [2, 2], [3, 3]]))

    def test_too_few_vertices_rejected(self):
        with pytest.raises(DegenerateBodyError):
            VPolytope(np.array([[0.0, 0], [1, 0]]))

    def test_indefinite_ellipsoid_rejected(self):
        with pytest.raises(DegenerateBodyError):
            Ellipsoid(np.zeros(2), np.diag([1.0, -1.0]))

    def test_unbounded_hpolytope_rejected(self):
        with pytest.raises(UnboundedBodyError):
            HPolytope(np.array([[1.0, 0.0], [0.0, 1.0]]), np.ones(2))

    def test_empty_hpolytope_rejected(self):
        with pytest.raises(DegenerateBodyError):
            HPolytope(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]),
                      np.array([-1.0, -1.0, 1.0, 1.0]))

    def test_one_dimensional_rejected(self):
        with pytest.raises(BodyError):
            Ball(np.zeros(1), 1.0)

    def test_interior_vertex_dropped(self):
        p = VPolytope(np.vstack([UNIT_SQUARE, [[0.5, 0.5]]]))
        assert p.vertices.shape == (4, 2)


class TestContains:
    def test_ball_center(self):
        assert Ball(np.zeros(3), 1.0).contains(np.zeros(3))

    def test_ball_outside(self):
        assert not Ball(np.zeros(3), 1.0).contains([2.0, 0.0, 0.0])

    def test_square_inside_outside(self):
        # oracle: the unit square is the set 0 <= x, y <= 1, checked directly
        sq = VPolytope(UNIT_SQUARE)
        assert sq.contains([0.5, 0.5])
        assert not sq.contains([1.0001, 0.5])
        hsq = square_h()
        assert hsq.contains([0.5, 0.5])
        assert not hsq.contains([1.0001, 0.5])

    def test_hpolytope_boundary_exact(self):
        assert square_h().contains([1.0, 0.5])
        assert not square_h().contains([np.nextafter(1.0, 2.0), 0.5])

    def test_dimension_mismatch(self):
        with pytest.raises(BodyError):
            Ball(np.zeros(2), 1.0).contains([0.0, 0.0, 0.0])


class TestSupport:
    def test_ball_any_direction(self):
        b = Ball(np.zeros(3), 1.0)
        u = np.array([1.0, 2.0, -1.0])
        u /= np.linalg.norm(u)
        assert b.support(u) == pytest.approx(1.0, abs=1e-15)

    def test_square_axis_and_diagonal(self):
        sq = VPolytope(SYM_SQUARE)
        assert sq.support([1.0, 0.0]) == pytest.approx(1.0)
        s = math.sqrt(2) / 2
        # oracle: max over the four vertices
        assert sq.support([s, s]) == pytest.approx(math.sqrt(2))

    def test_ellipsoid_axis(self):
        e = Ellipsoid(np.zeros(2), np.diag([1.0, 4.0]))
        assert e.support([0.0, 1.0]) == pytest.approx(0.5)  # sqrt(1/4)

    def test_non_unit_direction_rejected(self):
        with pytest.raises(BodyError):
            Ball(np.zeros(2), 1.0).support([1.0, 1.0])


class TestVolume:
    def test_ball_2d(self):
        assert Ball(np.zeros(2), 1.0).volume() == pytest.approx(math.pi)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_standard_simplex(self, d):
        simplex = VPolytope(np.vstack([np.zeros(d), np.eye(d)]))
        assert simplex.volume() == pytest.approx(1.0 / math.factorial(d), rel=1e-12)

    def test_ellipsoid_closed_form(self):
        e = Ellipsoid(np.zeros(2), np.diag([1.0, 0.25]))
        assert e.volume() == pytest.approx(2 * math.pi, rel=1e-12)

    def test_hpolytope_square(self):
        assert square_h().volume() == pytest.approx(1.0, rel=1e-12)

    def test_h_to_v_dimension_cap(self):
        d = 7
        normals = np.vstack([np.eye(d), -np.eye(d)])
        offsets = np.ones(2 * d)
        box = HPolytope(normals, offsets)
        with pytest.raises(ConversionError):
            box.volume()


class TestAffine:
    def test_identity(self):
        sq = VPolytope(UNIT_SQUARE)
        img = affine_image(AffineMap.identity(2), sq)
        assert np.array_equal(img.vertices, sq.vertices)

    def test_scaling_ball(self):
        img = affine_image(AffineMap.from_diagonal([2.0, 2.0]), Ball(np.zeros(2), 1.0))
        assert isinstance(img, Ball)
        assert img.radius == pytest.approx(2.0)
        assert img.volume() == pytest.approx(4 * math.pi, rel=1e-12)

    def test_unimodular_square(self):
        img = affine_image(AffineMap.from_diagonal([2.0, 0.5]), VPolytope(UNIT_SQUARE))
        assert img.volume() == pytest.approx(1.0, rel=1e-12)

    def test_singular_rejected(self):
        with pytest.raises(BodyError):
            AffineMap(np.array([[1.0, 0.0], [2.0, 0.0]]), np.zeros(2))

    def test_round_trip_identity(self):
        t = AffineMap(np.array([[2.0, 1.0], [0.5, 3.0]]), np.array([0.3, -1.2]))
        simplex = np.vstack([np.zeros(2), np.eye(2)])
        back = t.inverse()(t(simplex))
        assert np.allclose(back, simplex, rtol=1e-12, atol=1e-12)

    @given(st.integers(0, 10 ** 6))
    def test_volume_scales_by_det(self, seed):
        body = random_body(seed)
        rng = np.random.default_rng(seed + 1)
        m = rng.standard_normal((body.dim, body.dim)) + 2 * np.eye(body.dim)
        t = AffineMap(m, rng.standard_normal(body.dim))
        expected = abs(t.det) * body.volume()
        assert abs(affine_image(t, body).volume() - expected) <= 1e-9 * expected


class TestBoundingBox:
    def test_ball(self):
        lo, hi = Ball(np.zeros(3), 1.0).bounding_box()
        assert np.allclose(lo, -1.0) and np.allclose(hi, 1.0)

    def test_triangle_vertex_extrema(self):
        t = VPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
        lo, hi = t.bounding_box()
        assert np.allclose(lo, [0, 0]) and np.allclose(hi, [1, 1])

    def test_ellipsoid_half_widths(self):
        a = np.array([[2.0, 0.5], [0.5, 1.0]])
        c = np.array([1.0, -2.0])
        e = Ellipsoid(c, a)
        lo, hi = e.bounding_box()
        half = np.sqrt(np.diag(np.linalg.inv(a)))
        assert np.allclose(hi - c, half, rtol=1e-12)
        assert np.allclose(c - lo, half, rtol=1e-12)

    @given(st.integers(0, 10 ** 6))
    def test_box_contains_body(self, seed):
        body = random_body(seed)
        lo, hi = body.bounding_box()
        rng = np.random.default_rng(seed + 2)
        dirs = rng.standard_normal((64, body.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        sup = body.support_many(dirs)
        box_sup = np.maximum(dirs, 0.0) @ hi + np.minimum(dirs, 0.0) @ lo
        assert np.all(sup <= box_sup + 1e-9)


class TestInvariants:
    @given(st.integers(0, 10 ** 6),
           st.floats(0.01, 100.0, allow_nan=False, allow_infinity=False))
    def test_support_homogeneous_in_body_scaling(self, seed, lam):
        body = random_body(seed)
        scaled = affine_image(AffineMap.from_diagonal([lam] * body.dim), body)
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(body.dim)
        u /= np.linalg.norm(u)
        h, hs = body.support(u), scaled.support(u)
        assert abs(hs - lam * h) <= 1e-12 * max(1.0, abs(lam * h))

    def test_mc_hit_rate_matches_volume_ratio(self):
        # 4 standard errors at 1e6 samples, one seeded draw per body kind
        rng = np.random.default_rng(5)
        for seed in (11, 12, 13, 14):
            body = random_body(seed)
            lo, hi = body.bounding_box()
            n = 10 ** 6
            pts = lo + rng.random((n, body.dim)) * (hi - lo)
            p = float(np.mean(body.contains_many(pts)))
            target = body.volume() / float(np.prod(hi - lo))
            se = math.sqrt(target * (1 - target) / n)
            assert abs(p - target) <= 4 * se

    @given(st.integers(0, 10 ** 6))
    def test_contains_agrees_with_support_test(self, seed):
        # the support test certifies one direction only: a violated support
        # inequality proves the point is outside, while passing all 1000
        # sampled directions makes it merely "likely inside"
        body = random_body(seed)
        rng = np.random.default_rng(seed + 3)
        dirs = rng.standard_normal((1000, body.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        sup = body.support_many(dirs)
        lo, hi = body.bounding_box()
        pts = lo - 0.2 + rng.random((32, body.dim)) * (hi - lo + 0.4)
        for p in pts:
            violated = np.any(dirs @ p > sup + 1e-9 * (1 + np.abs(sup)))
            if body.contains(p):
                assert not violated
            if violated:
                assert not body.contains(p)


class TestJson:
    @given(st.integers(0, 10 ** 6))
    def test_round_trip_bit_exact(self, seed):
        body = random_body(seed)
        spec = json.loads(json.dumps(body.to_dict()))
        again = body_from_dict(spec)
        assert again.to_dict() == body.to_dict()

    def test_unknown_type_rejected(self):
        with pytest.raises(BodyError):
            body_from_dict({"dim": 2, "type": "torus"})

    def test_dim_mismatch_rejected(self):
        with pytest.raises(BodyError):
            body_from_dict({"dim": 3, "type": "ball", "center": [0, 0], "radius": 1})

    def test_beta_d_values(self):
        assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
        assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)
