import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvature_lab import comparison as cmp
from curvature_lab import geodesics as geo
from curvature_lab import jacobi as jb
from curvature_lab import manifolds as mf
from curvature_lab.manifolds import GeometryError

SPH = mf.Sphere(2, 1.0)
NORTH = np.array([0.0, 0.0, 1.0])


class TestComparisonFunction:
    def test_values(self):
        assert abs(cmp.comparison_value(cmp.ComparisonFunction(1.0, "zero"),
                                        math.pi / 2) - 1.0) < 1e-15
        assert cmp.comparison_value(cmp.ComparisonFunction(0.0, "zero"), 0.7) == 0.7
        got = cmp.comparison_value(cmp.ComparisonFunction(-1.0, "one"), 1.0)
        assert abs(got - 1.5430806348152437) < 1e-12

    @pytest.mark.parametrize("k,mode", [(1.0, "zero"), (1.0, "one"),
                                        (0.0, "zero"), (0.0, "one"),
                                        (-2.0, "zero"), (-2.0, "one")])
    def test_defining_ode_residual(self, k, mode):
        f = cmp.ComparisonFunction(k, mode)
        h = 1e-4
        for s in (0.2, 0.9, 1.7):
            second = (f.value(s + h) - 2 * f.value(s) + f.value(s - h)) / h**2
            assert abs(second + k * f.value(s)) < 1e-6
            fd = (f.value(s + h) - f.value(s - h)) / (2 * h)
            assert abs(fd - f.derivative(s)) < 1e-7

    def test_mode_validation(self):
        with pytest.raises(GeometryError):
            cmp.ComparisonFunction(1.0, "other")


class TestModelHinge:
    def test_flat_right_angle(self):
        assert abs(cmp.model_hinge_distance(0.0, 3.0, 4.0, math.pi / 2)
                   - 5.0) < 1e-14

    def test_spherical_right_octant(self):
        got = cmp.model_hinge_distance(1.0, math.pi / 2, math.pi / 2,
                                       math.pi / 2)
        assert abs(got - math.pi / 2) < 1e-14

    @pytest.mark.parametrize("h", [-1.0, 0.0, 1.0])
    def test_degenerate_straight_hinge(self, h):
        got = cmp.model_hinge_distance(h, 0.3, 0.4, math.pi)
        assert abs(got - 0.7) < 1e-12

    def test_capped_at_model_wraparound(self):
        got = cmp.model_hinge_distance(1.0, 2.5, 2.5, math.pi)
        assert abs(got - (2 * math.pi - 5.0)) < 1e-12

    def test_domain_errors(self):
        with pytest.raises(GeometryError):
            cmp.model_hinge_distance(1.0, 3.5, 1.0, 1.0)
        with pytest.raises(GeometryError):
            cmp.model_hinge_distance(0.0, -1.0, 1.0, 1.0)
        with pytest.raises(GeometryError):
            cmp.model_hinge_distance(0.0, 1.0, 1.0, 0.0)

    def test_cross_validated_against_builtin_distances(self):
        # 1000 random hinges checked against geodesic endpoints on the
        # matching built-in surface
        rng = np.random.default_rng(10)
        specs = {0.0: mf.Euclidean(2), 1.3: mf.Sphere(2, 1.3),
                 -0.8: mf.Hyperbolic(2, -0.8)}
        for h, spec in specs.items():
            cap = math.pi / math.sqrt(h) if h > 0 else 2.5
            for _ in range(334):
                l1 = rng.uniform(0.05, 0.95 * cap / 2)
                l2 = rng.uniform(0.05, 0.95 * cap / 2)
                alpha = rng.uniform(0.05, math.pi)
                x = mf.random_point(spec, rng)
                d1 = mf.random_unit_tangent(spec, x, rng).components
                w = mf.random_unit_tangent(spec, x, rng,
                                           against=(d1,)).components
                d2 = math.cos(alpha) * d1 + math.sin(alpha) * w
                a = geo.exp_map(spec, x, l1 * d1)
                b = geo.exp_map(spec, x, l2 * d2)
                measured = geo.distance(spec, a, b)
                model = cmp.model_hinge_distance(h, l1, l2, alpha)
                assert abs(measured - model) < 1e-7

    @given(st.floats(0.2, 3.0), st.floats(0.2, 1.4), st.floats(0.3, 2.8))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_curvature(self, l1, l2, alpha):
        # higher model curvature pulls the endpoints together; this is the
        # direction that makes the lower-bound model an upper envelope
        vals = [cmp.model_hinge_distance(h, l1, l2, alpha)
                for h in (-1.0, -0.5, 0.0, 0.5, 1.0)]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


class TestModelTriangle:
    def test_flat_pythagorean(self):
        tri = cmp.model_triangle_angles(0.0, 3.0, 4.0, 5.0)
        assert abs(tri.angles[2] - math.pi / 2) < 1e-14
        assert tri.unique

    def test_spherical_octant(self):
        tri = cmp.model_triangle_angles(1.0, math.pi / 2, math.pi / 2,
                                        math.pi / 2)
        assert np.allclose(tri.angles, math.pi / 2, atol=1e-12)

    def test_degenerate_collinear(self):
        tri = cmp.model_triangle_angles(0.0, 1.0, 2.0, 3.0)
        assert abs(tri.angles[2] - math.pi) < 1e-6
        assert abs(tri.angles[0]) < 1e-6

    def test_uniqueness_flag(self):
        # a side hitting the antipodal distance leaves the triangle
        # underdetermined: flagged, with indeterminate flanking angles
        tri = cmp.model_triangle_angles(1.0, 1.0, math.pi, math.pi - 1.0)
        assert not tri.unique
        assert math.isnan(tri.angles[0]) and math.isnan(tri.angles[2])
        assert abs(tri.angles[1] - math.pi) < 1e-7
        assert cmp.model_triangle_angles(1.0, 1.0, 1.2, 1.4).unique

    def test_inadmissible_rejected(self):
        with pytest.raises(GeometryError):
            cmp.model_triangle_angles(0.0, 1.0, 1.0, 5.0)
        with pytest.raises(GeometryError):
            cmp.model_triangle_angles(4.0, 2.0, 1.0, 1.5)


class TestWeakRauch:
    def test_sphere_equality(self):
        rep = cmp.weak_rauch_check(SPH, NORTH, [1.0, 0, 0], 3.0)
        assert rep.passed
        assert abs(rep.slack_min) < 1e-8

    def test_euclidean_ratio_one(self):
        e = mf.Euclidean(3)
        rep = cmp.weak_rauch_check(e, [0.0, 0, 0], [1.0, 0, 0], 2.0)
        assert rep.passed and abs(rep.slack_min) < 1e-10

    def test_quadric_sandwich_strict_inside(self):
        spec = mf.clustered_focal_quadric(5)
        x0 = np.zeros(5)
        x0[1] = 1.0
        v0 = np.zeros(5)
        v0[0] = 1.0
        rep = cmp.weak_rauch_check(spec, x0, v0, 3.0, seed=0)
        assert rep.passed
        assert rep.slack_min >= -1e-6
        # swapped ordering must fail on a genuinely pinched geodesic
        assert rep.params["swapped_ordering_slack"] < -1e-3

    def test_upper_bound_radius_precondition(self):
        with pytest.raises(GeometryError, match="conjugate radius"):
            cmp.weak_rauch_check(SPH, NORTH, [1.0, 0, 0], 3.2)


def _sphere_paths(k_m, k_n, length, step=1e-3):
    sm = mf.Sphere(2, k_m)
    sn = mf.Sphere(2, k_n)
    xm = np.array([0.0, 0, 1.0 / math.sqrt(k_m)])
    xn = np.array([0.0, 0, 1.0 / math.sqrt(k_n)])
    v = np.array([1.0, 0, 0])
    return (geo.integrate_geodesic(sm, xm, v, length, step),
            geo.integrate_geodesic(sn, xn, v, length, step))


class TestRauchBergerCompare:
    def test_flat_dominates_sphere(self):
        e = mf.Euclidean(3)
        pm = geo.integrate_geodesic(e, [0.0, 0, 0], [1.0, 0, 0], math.pi, 1e-3)
        pn = geo.integrate_geodesic(SPH, NORTH, [1.0, 0, 0], math.pi, 1e-3)
        rep = cmp.rauch_compare(pm, pn)
        assert rep.passed and rep.slack_min >= -1e-7

    def test_quarter_curvature_dominates(self):
        pm, pn = _sphere_paths(0.25, 1.0, math.pi)
        rep = cmp.rauch_compare(pm, pn)
        assert rep.passed
        # oracle: max of 2 sin(t/2) - sin(t) on [0, pi] is 2 at t = pi
        assert abs(rep.params["max_slack"] - 2.0) < 1e-6

    def test_equal_specs_saturate(self):
        pm, pn = _sphere_paths(1.0, 1.0, math.pi)
        rep = cmp.rauch_compare(pm, pn)
        assert abs(rep.slack_min) < 1e-9
        assert abs(rep.params["max_slack"]) < 1e-9

    def test_hypothesis_ordering_enforced(self):
        pm, pn = _sphere_paths(1.0, 0.25, math.pi)
        with pytest.raises(GeometryError, match="curvature hypothesis"):
            cmp.rauch_compare(pm, pn)

    def test_mismatched_lengths_rejected(self):
        pm, _ = _sphere_paths(0.25, 1.0, 2.0)
        _, pn = _sphere_paths(0.25, 1.0, 1.0)
        with pytest.raises(GeometryError, match="same length"):
            cmp.rauch_compare(pm, pn)

    def test_mismatched_data_norms_rejected(self):
        pm, pn = _sphere_paths(0.25, 1.0, 1.0)
        with pytest.raises(GeometryError, match="matching norms"):
            cmp.rauch_compare(pm, pn, w_m=[1.0], w_n=[2.0])

    def test_berger_flat_vs_sphere(self):
        e = mf.Euclidean(3)
        pm = geo.integrate_geodesic(e, [0.0, 0, 0], [1.0, 0, 0],
                                    math.pi / 2, 1e-3)
        pn = geo.integrate_geodesic(SPH, NORTH, [1.0, 0, 0], math.pi / 2, 1e-3)
        rep = cmp.berger_compare(pm, pn)
        assert rep.passed
        assert abs(rep.params["max_slack"] - 1.0) < 1e-6  # 1 - cos(pi/2)

    def test_berger_quarter_vs_full(self):
        pm, pn = _sphere_paths(0.25, 1.0, math.pi / 2)
        rep = cmp.berger_compare(pm, pn)
        assert rep.passed and rep.slack_min >= -1e-7

    def test_berger_quadric_vs_sphere(self):
        # clustered quadric along its equator has curvature below one
        spec = mf.clustered_focal_quadric(3)
        pm = geo.integrate_geodesic(spec, [0.0, 1.0, 0], [1.0, 0, 0],
                                    math.pi / 2, 1e-3)
        pn = geo.integrate_geodesic(SPH, NORTH, [1.0, 0, 0], math.pi / 2, 1e-3)
        rep = cmp.berger_compare(pm, pn)
        assert rep.passed
        # cos(2t/3) >= cos(t) strictly inside
        assert rep.params["max_slack"] > 0.1

    def test_berger_rejects_focal_in_window(self):
        pm, pn = _sphere_paths(0.25, 1.0, 0.9 * math.pi)
        with pytest.raises(GeometryError, match="singular"):
            cmp.berger_compare(pm, pn)


class TestCurveLengthComparison:
    def test_same_spec_equality(self):
        pn = geo.integrate_geodesic(SPH, NORTH, [1.0, 0, 0], 1.0, 2e-3)
        lm, ln, rep = cmp.curve_length_comparison(pn, pn, lambda t: 0.4)
        assert abs(lm - ln) < 1e-7
        assert rep.passed

    def test_flat_tube_vs_sphere_tube(self):
        e = mf.Euclidean(3)
        pm = geo.integrate_geodesic(e, [0.0, 0, 0], [1.0, 0, 0], 1.0, 1e-3)
        pn = geo.integrate_geodesic(SPH, NORTH, [1.0, 0, 0], 1.0, 1e-3)
        lm, ln, rep = cmp.curve_length_comparison(pm, pn, lambda t: 0.3)
        assert abs(lm - 1.0) < 1e-9
        assert abs(ln - math.cos(0.3)) < 1e-9
        assert rep.passed

    def test_sine_profile_variation_length(self):
        # the sine-profile tube above a full meridian: length excess over
        # the model value is quartic in the amplitude, tiny at 0.3
        pn = geo.integrate_geodesic(SPH, NORTH, [1.0, 0, 0], math.pi, 1e-3)
        lm, ln, rep = cmp.curve_length_comparison(
            pn, pn, lambda t: 0.3 * math.sin(t))
        assert abs(lm - ln) < 1e-9
        assert abs(lm - math.pi) < 1e-4
        small, _, _ = cmp.curve_length_comparison(
            pn, pn, lambda t: 0.05 * math.sin(t))
        assert abs(small - math.pi) < 1e-7

    def test_focal_radius_precondition(self):
        e = mf.Euclidean(3)
        pm = geo.integrate_geodesic(e, [0.0, 0, 0], [1.0, 0, 0], 1.0, 2e-3)
        pn = geo.integrate_geodesic(SPH, NORTH, [1.0, 0, 0], 1.0, 2e-3)
        with pytest.raises(GeometryError, match="focal radius"):
            cmp.curve_length_comparison(pm, pn, lambda t: 1.6)


class TestConjugateDistanceBounds:
    def test_sphere_saturation(self):
        path = geo.integrate_geodesic(SPH, NORTH, [1.0, 0, 0], 3.3, 1e-3)
        rep = cmp.conjugate_distance_bounds_check(SPH, path, 1.0, 1.0)
        assert rep.passed
        assert abs(rep.params["first"]["conjugate"] - math.pi) < 1e-6
        assert abs(rep.params["first"]["focal"] - math.pi / 2) < 1e-6

    def test_scaled_sphere(self):
        s4 = mf.Sphere(2, 4.0)
        path = geo.integrate_geodesic(s4, [0, 0, 0.5], [1.0, 0, 0], 1.7, 1e-3)
        rep = cmp.conjugate_distance_bounds_check(s4, path, 4.0, 4.0)
        assert abs(rep.params["first"]["conjugate"] - math.pi / 2) < 1e-6

    def test_clustered_quadric_window(self):
        spec = mf.clustered_focal_quadric(3)
        length = 1.05 * math.pi / math.sqrt(4 / 9)
        path = geo.integrate_geodesic(spec, [0.0, 1.0, 0], [1.0, 0, 0],
                                      length, 2e-3)
        rep = cmp.conjugate_distance_bounds_check(spec, path, 1.0, 4 / 9)
        assert rep.passed
        assert abs(rep.params["first"]["focal"] - 3 * math.pi / 4) < 1e-6

    def test_bad_bounds_rejected(self):
        path = geo.integrate_geodesic(SPH, NORTH, [1.0, 0, 0], 1.0, 1e-2)
        with pytest.raises(GeometryError):
            cmp.conjugate_distance_bounds_check(SPH, path, 0.5, 1.0)
        with pytest.raises(GeometryError, match="leaves"):
            cmp.conjugate_distance_bounds_check(SPH, path, 0.9, 0.5)


class TestExpImageCurveLength:
    def test_sphere_meridian_values(self):
        for radius in (0.3, 0.8, 1.2):
            t, curve = cmp.meridian_curve(SPH, NORTH, radius, seed=1)
            got = cmp.exp_image_curve_length(SPH, NORTH, curve, t)
            assert abs(got - math.pi * math.sin(radius)) < 1e-6

    def test_euclidean_returns_plain_length(self):
        e = mf.Euclidean(3)
        t = np.linspace(0.0, 1.0, 101)
        curve = np.stack([np.array([math.cos(a), math.sin(a), 0.0])
                          for a in t])
        got = cmp.exp_image_curve_length(e, [0.0, 0, 0], curve, t)
        assert abs(got - 1.0) < 1e-9

    def test_quadric_bound_nonnegative_slack(self):
        spec = mf.Quadric((1.0, 1.0, 4 / 9))
        x, _ = np.array([0.0, 1.0, 0.0]), None
        for radius in (0.4, 1.0):
            t, curve = cmp.meridian_curve(spec, x, radius, n=101, seed=2)
            got = cmp.exp_image_curve_length(spec, x, curve, t)
            bound = (math.pi / math.sqrt(4 / 9)
                     * math.sin(radius * math.sqrt(4 / 9)))
            assert bound - got >= 0.0


def _hinge_on(spec, rng, l1, l2, alpha, step=2e-3):
    x = mf.random_point(spec, rng)
    d1 = mf.random_unit_tangent(spec, x, rng).components
    w = mf.random_unit_tangent(spec, x, rng, against=(d1,)).components
    d2 = math.cos(alpha) * d1 + math.sin(alpha) * w
    return cmp.Hinge(spec=spec, vertex=x, dir_away=d1, dir_out=d2,
                     l1=l1, l2=l2, step=step)


class TestToponogovHinge:
    def test_sphere_saturates_model(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            hinge = _hinge_on(SPH, rng, rng.uniform(0.2, 1.4),
                              rng.uniform(0.2, 1.4),
                              rng.uniform(0.2, math.pi - 0.2))
            rep = cmp.toponogov_hinge_check(SPH, hinge, 1.0)
            assert abs(rep.slack_min) < 1e-6
            assert not rep.conditional_flags

    def test_sphere_vs_smaller_bound_strict(self):
        rng = np.random.default_rng(4)
        hinge = _hinge_on(SPH, rng, 0.9, 1.1, 1.2)
        rep = cmp.toponogov_hinge_check(SPH, hinge, 0.5)
        assert rep.slack_min > 1e-3

    def test_flat_vs_hyperbolic_model(self):
        e = mf.Euclidean(2)
        rng = np.random.default_rng(5)
        hinge = _hinge_on(e, rng, 1.0, 1.3, 0.9)
        rep = cmp.toponogov_hinge_check(e, hinge, -1.0)
        # oracle: hyperbolic law of cosines via geodesic construction
        hyp = mf.Hyperbolic(2, -1.0)
        hh = _hinge_on(hyp, rng, 1.0, 1.3, 0.9)
        measured = geo.distance(hyp, hh.far1(), hh.far2())
        assert abs(rep.params["model"] - measured) < 1e-7
        assert rep.slack_min > 0

    def test_side_cap_enforced(self):
        rng = np.random.default_rng(6)
        hinge = _hinge_on(SPH, rng, 0.5, 1.8, 1.0)
        with pytest.raises(GeometryError, match="antipodal"):
            cmp.toponogov_hinge_check(SPH, hinge, 4.0)

    def test_same_vertex_reading_reported(self):
        rng = np.random.default_rng(7)
        hinge = _hinge_on(SPH, rng, 0.7, 0.9, 1.1)
        rep = cmp.toponogov_hinge_check(SPH, hinge, 1.0)
        assert abs(rep.params["same_vertex_reading"]["slack"]) < 1e-9

    def test_right_hinge_consistent_with_focal_comparison(self):
        # cross-module coherence: a right hinge on the model saturates the
        # hinge bound exactly when the focal field comparison saturates
        rng = np.random.default_rng(8)
        hinge = _hinge_on(SPH, rng, 0.8, 0.6, math.pi / 2)
        rep = cmp.toponogov_hinge_check(SPH, hinge, 1.0)
        pm, pn = _sphere_paths(1.0, 1.0, 0.6)
        fieldrep = cmp.berger_compare(pm, pn)
        assert abs(rep.slack_min) < 1e-6
        assert abs(fieldrep.slack_min) < 1e-9

    def test_hinge_validation(self):
        with pytest.raises(GeometryError, match="unit"):
            cmp.Hinge(spec=SPH, vertex=mf.Point(NORTH),
                      dir_away=[2.0, 0, 0], dir_out=[0, 1.0, 0],
                      l1=1.0, l2=1.0)
        with pytest.raises(GeometryError, match="positive"):
            cmp.Hinge(spec=SPH, vertex=mf.Point(NORTH),
                      dir_away=[1.0, 0, 0], dir_out=[0, 1.0, 0],
                      l1=-1.0, l2=1.0)

    def test_hinge_sides_consistent_with_integration(self):
        # endpoints from the closed-form exponential coincide with the
        # integrated side geodesics
        quad = mf.Quadric((1.0, 1.0, 4 / 9))
        rng = np.random.default_rng(21)
        for spec in (SPH, quad):
            hinge = _hinge_on(spec, rng, 0.6, 0.9, 1.2)
            for direction, ln, endpoint in (
                (hinge.dir_away, hinge.l1, hinge.far1()),
                (hinge.dir_out, hinge.l2, hinge.far2()),
            ):
                path = geo.integrate_geodesic(spec, hinge.vertex, direction,
                                              ln, 1e-3)
                assert np.linalg.norm(path.x[-1] - endpoint.coords) < 1e-9


class TestTriangles:
    def test_octant_triangle_saturates(self):
        pts = [np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
               np.array([0, 0, 1.0])]
        tri = cmp.triangle_from_points(SPH, *pts)
        assert np.allclose(tri.lengths, math.pi / 2, atol=1e-12)
        assert np.allclose(tri.angles, math.pi / 2, atol=1e-12)
        rep = cmp.triangle_comparison_check(SPH, tri, 1.0)
        assert rep.passed
        assert abs(rep.slack_min) < 1e-9
        assert rep.params["perimeter_slack"] >= 0

    def test_vertices_close_up(self):
        rng = np.random.default_rng(9)
        pts = [mf.random_point(SPH, rng).coords for _ in range(3)]
        tri = cmp.triangle_from_points(SPH, *pts)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            w = geo.log_map(SPH, pts[j], pts[k]).components
            end = geo.exp_map(SPH, pts[j], w).coords
            assert np.linalg.norm(end - pts[k]) < 1e-9
        if all(tri.minimal):
            for i in range(3):
                assert tri.lengths[i] <= (tri.lengths[(i + 1) % 3]
                                          + tri.lengths[(i + 2) % 3] + 1e-9)

    def test_quadric_triangle_dominates_model(self):
        spec = mf.Quadric((1.0, 1.0, 4 / 9))
        rng = np.random.default_rng(11)
        x = mf.random_point(spec, rng)
        d1 = mf.random_unit_tangent(spec, x, rng).components
        w = mf.random_unit_tangent(spec, x, rng, against=(d1,)).components
        d2 = math.cos(1.0) * d1 + math.sin(1.0) * w
        pts = [x, geo.exp_map(spec, x, 0.6 * d1), geo.exp_map(spec, x, 0.5 * d2)]
        tri = cmp.triangle_from_points(spec, *pts)
        rep = cmp.triangle_comparison_check(spec, tri, 4 / 9)
        assert rep.passed
        assert rep.slack_min >= -1e-6

    def test_equality_saturation_across_checks(self):
        # every comparison run with the model against itself stays within
        # the saturation tolerance
        rng = np.random.default_rng(12)
        hinge = _hinge_on(SPH, rng, 0.5, 0.8, 1.3)
        assert abs(cmp.toponogov_hinge_check(SPH, hinge, 1.0).slack_min) < 1e-6
        pm, pn = _sphere_paths(1.0, 1.0, 2.0)
        assert abs(cmp.rauch_compare(pm, pn).slack_min) < 1e-6
        pm, pn = _sphere_paths(1.0, 1.0, 1.2)
        assert abs(cmp.berger_compare(pm, pn).slack_min) < 1e-6


class TestSmallnessPredicates:
    def test_small_hinge_passes(self):
        rng = np.random.default_rng(13)
        hinge = _hinge_on(SPH, rng, 0.1, 0.02, 1.0)
        preds = cmp.hinge_smallness(SPH, hinge, 1.0, 1.0)
        assert preds["perimeter_ok"] and preds["l2_ok"]

    def test_large_second_side_fails(self):
        rng = np.random.default_rng(14)
        hinge = _hinge_on(SPH, rng, 0.4, 1.4, 1.0)
        preds = cmp.hinge_smallness(SPH, hinge, 1.0, 1.0)
        assert not preds["l2_ok"]

    def test_subdivision_rows(self):
        rng = np.random.default_rng(15)
        hinge = _hinge_on(SPH, rng, 0.4, 0.6, 1.0)
        rows = cmp.hinge_subdivision_report(SPH, hinge, 1.0, 1.0, 8)
        assert len(rows) == 8
        assert all("l2_ok" in r for r in rows if "error" not in r)
        # fine subdivision makes every sub-side small enough
        assert all(r.get("l2_ok") for r in rows if "error" not in r)


class TestPinchConstants:
    def test_values(self):
        pc = cmp.pinch_constants()
        assert pc.h_toponogov == 4.0 / 9.0
        assert 0.70 < pc.h_rauch < 0.78
        assert pc.rauch_residual <= 1e-12
        assert abs(math.sin(math.pi * math.sqrt(pc.h_rauch))
                   - math.sqrt(pc.h_rauch) / 2.0) <= 1e-12

    def test_alternative_reading_recorded(self):
        pc = cmp.pinch_constants()
        assert pc.h_alternative is not None
        assert pc.h_alternative > 1.0
        assert pc.alternative_residual <= 1e-12


class TestMaximalDiameterProbe:
    def test_unit_curvature(self):
        rep = cmp.maximal_diameter_probe(curvature=1.0, dim=3, n_fields=4,
                                         n_t=801, seed=0)
        assert rep.passed
        assert rep.params["max_length_deviation"] <= 1e-6
        assert rep.params["max_curvature_deviation"] <= 1e-7
        assert abs(rep.params["sine_index_form"]) <= 1e-7

    def test_scaled_curvature(self):
        rep = cmp.maximal_diameter_probe(curvature=4.0, dim=3, n_fields=2,
                                         n_t=801, seed=1)
        assert rep.passed
        assert abs(rep.params["model_length"] - math.pi / 2) < 1e-15

    def test_report_schema(self):
        rep = cmp.maximal_diameter_probe(n_fields=1, n_t=401)
        payload = rep.to_json_dict()
        assert set(payload) == {"check", "spec", "params", "slack_min",
                                "slack_argmin", "conditional_flags", "pass"}
