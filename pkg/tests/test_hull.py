import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import gift_wrap_vertices, in_convex_polygon, mc_volume
from randpoly import (AffineMap, Ball, DegenerateHullError,
                      SampleOutsideBodyError, VPolytope, convex_hull,
                      make_stream, missing_volume, polytope_volume,
                      sample_uniform)

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def disc_points(seed, n):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 2))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * np.sqrt(rng.random((n, 1)))


class TestConvexHull:
    def test_interior_point_dropped(self):
        h = convex_hull(np.vstack([UNIT_SQUARE, [[0.5, 0.5]]]))
        assert np.array_equal(h.vertices, np.array(sorted(map(tuple, UNIT_SQUARE))))

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_simplex_facet_count(self, d):
        h = convex_hull(np.vstack([np.zeros(d), np.eye(d)]))
        assert h.vertices.shape == (d + 1, d)
        assert h.facet_indices.shape[0] == d + 1

    def test_too_few_points(self):
        with pytest.raises(DegenerateHullError):
            convex_hull(np.array([[0.0, 0.0], [1.0, 1.0]]))

    def test_flat_points(self):
        with pytest.raises(DegenerateHullError):
            convex_hull(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))

    def test_input_order_irrelevant(self):
        pts = disc_points(3, 60)
        h1 = convex_hull(pts)
        rng = np.random.default_rng(0)
        h2 = convex_hull(pts[rng.permutation(60)])
        assert np.array_equal(h1.vertices, h2.vertices)
        assert np.array_equal(h1.facet_indices, h2.facet_indices)

    def test_facet_inequalities_hold_for_all_inputs(self):
        pts = disc_points(11, 500)
        h = convex_hull(pts)
        slack = pts @ h.facet_normals.T - h.facet_offsets
        assert slack.max() <= 1e-10 * (1 + np.abs(h.facet_offsets).max())

    def test_ridges_shared_by_two_facets(self):
        pts = np.random.default_rng(21).standard_normal((40, 3))
        h = convex_hull(pts)
        from collections import Counter

        ridges = Counter()
        for row in h.facet_indices:
            for skip in range(len(row)):
                ridges[tuple(sorted(np.delete(row, skip)))] += 1
        assert set(ridges.values()) == {2}

    def test_interior_point_strictly_inside(self):
        pts = disc_points(5, 80)
        h = convex_hull(pts)
        assert np.all(h.facet_normals @ h.interior_point < h.facet_offsets)

    def test_matches_gift_wrapping_on_random_and_gridded_instances(self):
        rng = np.random.default_rng(42)
        for trial in range(1000):
            if trial % 3 == 2:
                # grid points force exactly collinear triples on hull edges
                pts = rng.integers(0, 7, size=(rng.integers(6, 25), 2)).astype(float)
            else:
                pts = disc_points(1000 + trial, int(rng.integers(5, 60)))
            try:
                expected = gift_wrap_vertices(pts)
            except ValueError:
                with pytest.raises(DegenerateHullError):
                    convex_hull(pts)
                continue
            got = convex_hull(pts).vertices
            assert np.array_equal(got, expected), f"trial {trial}"


class TestPolytopeVolume:
    def test_unit_square(self):
        assert polytope_volume(convex_hull(UNIT_SQUARE)) == pytest.approx(1.0)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_simplex(self, d):
        h = convex_hull(np.vstack([np.zeros(d), np.eye(d)]))
        assert polytope_volume(h) == pytest.approx(1 / math.factorial(d), rel=1e-12)

    def test_matches_qhull_volume(self):
        # scipy's own facet-area accumulation is an independent second route
        from scipy.spatial import ConvexHull as Qhull

        for seed, d in [(1, 2), (2, 3), (3, 4)]:
            pts = np.random.default_rng(seed).standard_normal((120, d))
            assert polytope_volume(convex_hull(pts)) == pytest.approx(
                Qhull(pts).volume, rel=1e-10)

    def test_hull_of_disc_points_vs_membership_mc(self):
        pts = disc_points(7, 1000)
        h = convex_hull(pts)
        vol = polytope_volume(h)
        assert 0 < vol < math.pi
        ccw = h.vertices[np.argsort(np.arctan2(*(h.vertices - h.vertices.mean(0)).T[::-1]))]
        est, se = mc_volume(lambda p: in_convex_polygon(ccw, p),
                            [-1, -1], [1, 1], 10 ** 6, np.random.default_rng(8))
        assert abs(vol - est) <= 4 * se


class TestMissingVolume:
    def test_square_vertices_cover_square(self):
        sq = VPolytope(UNIT_SQUARE)
        assert missing_volume(sq, UNIT_SQUARE) == 0.0

    def test_degenerate_sample_misses_everything(self):
        disc = Ball(np.zeros(2), 1.0)
        assert missing_volume(disc, disc_points(1, 2)) == disc.volume()

    def test_sample_outside_rejected(self):
        disc = Ball(np.zeros(2), 1.0)
        pts = np.vstack([disc_points(2, 10), [[1.5, 0.0]]])
        with pytest.raises(SampleOutsideBodyError, match="sample not in body"):
            missing_volume(disc, pts)

    def test_bounds(self):
        disc = Ball(np.zeros(2), 1.0)
        v = missing_volume(disc, disc_points(3, 50))
        assert 0.0 <= v <= disc.volume()

    def test_monotone_under_prefixes(self):
        disc = Ball(np.zeros(2), 1.0)
        pts = disc_points(4, 200)
        vols = [missing_volume(disc, pts[:k]) for k in (3, 10, 30, 100, 200)]
        assert all(a >= b - 1e-12 for a, b in zip(vols, vols[1:]))

    @pytest.mark.slow
    def test_disc_n50_vs_membership_mc(self):
        disc = Ball(np.zeros(2), 1.0)
        pts = sample_uniform(disc, 50, make_stream(97, 0))
        v = missing_volume(disc, pts)
        h = convex_hull(pts)
        ccw = h.vertices[np.argsort(np.arctan2(*(h.vertices - h.vertices.mean(0)).T[::-1]))]

        def in_disc_not_hull(p):
            return (np.linalg.norm(p, axis=1) <= 1.0) & ~in_convex_polygon(ccw, p)

        est, se = mc_volume(in_disc_not_hull, [-1, -1], [1, 1], 10 ** 7,
                            np.random.default_rng(98))
        assert abs(v - est) <= 4 * se


class TestAffineEquivariance:
    @given(st.integers(0, 10 ** 5))
    def test_hull_commutes_with_affine_maps(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 4))
        pts = rng.standard_normal((30, d))
        m = rng.standard_normal((d, d)) + 2 * np.eye(d)
        t = AffineMap(m, rng.standard_normal(d))
        h_img = convex_hull(t(pts))
        img_h = t(convex_hull(pts).vertices)
        img_h = img_h[np.lexsort(img_h.T[::-1])]
        assert np.array_equal(h_img.vertices, img_h)
        assert polytope_volume(h_img) == pytest.approx(
            abs(t.det) * polytope_volume(convex_hull(pts)), rel=1e-9)
