import io
import math

import numpy as np
import pytest

from curvature_lab import geodesics as geo
from curvature_lab import manifolds as mf
from curvature_lab.manifolds import GeometryError


def great_circle(x0, v0, s):
    # closed-form unit-sphere geodesic, the integration oracle
    return math.cos(s) * np.asarray(x0) + math.sin(s) * np.asarray(v0)


class TestIntegrateGeodesic:
    def test_quadric_unit_circle_is_geodesic(self):
        q = mf.Quadric((1.0, 1.0, 4 / 9))
        path = geo.integrate_geodesic(q, [0, 1.0, 0], [1.0, 0, 0],
                                      math.pi / 2, 1e-3)
        expected = np.stack([(math.sin(s), math.cos(s), 0.0) for s in path.s])
        assert np.max(np.abs(path.x - expected)) < 1e-9

    def test_euclidean_straight_line(self):
        e = mf.Euclidean(3)
        path = geo.integrate_geodesic(e, [1.0, 2, 3], [0, 1.0, 0], 2.0, 1e-2)
        expected = np.array([1.0, 2, 3]) + np.outer(path.s, [0, 1.0, 0])
        assert np.max(np.abs(path.x - expected)) < 1e-12

    def test_sphere_closed_loop(self):
        s = mf.Sphere(2, 1.0)
        path = geo.integrate_geodesic(s, [0, 0, 1.0], [1.0, 0, 0],
                                      2 * math.pi, 1e-3)
        assert np.linalg.norm(path.x[-1] - [0, 0, 1.0]) < 1e-6

    def test_sphere_matches_great_circle_oracle(self):
        s = mf.Sphere(2, 1.0)
        path = geo.integrate_geodesic(s, [0, 0, 1.0], [1.0, 0, 0], 3.0, 1e-3)
        worst = max(np.linalg.norm(path.x[i]
                                   - great_circle([0, 0, 1.0], [1, 0, 0],
                                                  path.s[i]))
                    for i in range(0, len(path.s), 50))
        assert worst < 1e-10

    def test_non_unit_velocity_rejected(self):
        s = mf.Sphere(2, 1.0)
        with pytest.raises(GeometryError, match="unit speed"):
            geo.integrate_geodesic(s, [0, 0, 1.0], [2.0, 0, 0], 1.0, 1e-2)

    def test_unit_speed_drift(self):
        s = mf.Sphere(2, 1.0)
        path = geo.integrate_geodesic(s, [0, 0, 1.0], [1.0, 0, 0],
                                      2 * math.pi, 1e-3)
        drift = np.abs(np.linalg.norm(path.v, axis=1) - 1.0)
        assert np.max(drift) < 1e-8

    def test_step_halving_fourth_order(self):
        s = mf.Sphere(2, 1.0)
        err = {}
        for h in (4e-3, 2e-3):
            path = geo.integrate_geodesic(s, [0, 0, 1.0], [1.0, 0, 0],
                                          math.pi, h)
            err[h] = np.linalg.norm(path.x[-1]
                                    - great_circle([0, 0, 1], [1, 0, 0],
                                                   math.pi))
        assert err[4e-3] / err[2e-3] >= 8.0

    def test_frames_orthonormal_and_parallel(self):
        q = mf.Quadric((1.0, 1.0, 4 / 9))
        v0 = np.array([math.cos(0.4), 0.0, math.sin(0.4)])
        path = geo.integrate_geodesic(q, [0, 1.0, 0], v0, 1.5, 1e-3)
        for i in (0, len(path.s) // 2, len(path.s) - 1):
            gram = path.frame[i] @ path.frame[i].T
            assert np.max(np.abs(gram - np.eye(path.dim))) < 1e-8
            assert np.allclose(path.frame[i][0],
                               path.v[i] / np.linalg.norm(path.v[i]),
                               atol=1e-10)
        # independent transport check: carry frame(s_i) to s_{i+1} with
        # four fine substeps and compare against the stored frame
        for i in (10, 400, 1000):
            x, v, rows = path.x[i], path.v[i], path.frame[i]
            for _ in range(4):
                x, v, rows = geo._rk4_step(q, x, v, rows, path.step / 4)
                x, v, rows = geo._retract(q, x, v, rows)
            assert np.max(np.abs(rows - path.frame[i + 1])) < 1e-7

    def test_even_interval_count_and_step(self):
        s = mf.Sphere(2, 1.0)
        path = geo.integrate_geodesic(s, [0, 0, 1.0], [1.0, 0, 0],
                                      1.0, 3e-3)
        assert (len(path.s) - 1) % 2 == 0
        assert path.step <= 3e-3 + 1e-15
        assert abs(path.s[-1] - 1.0) < 1e-15


class TestStateAt:
    def test_matches_nodes_and_interpolates(self):
        s = mf.Sphere(2, 1.0)
        path = geo.integrate_geodesic(s, [0, 0, 1.0], [1.0, 0, 0], 2.0, 1e-3)
        x, v, rows = geo.state_at(path, 1.0)
        assert np.linalg.norm(x - great_circle([0, 0, 1], [1, 0, 0], 1.0)) < 1e-10
        x2, _, _ = geo.state_at(path, 0.7775)
        assert np.linalg.norm(x2 - great_circle([0, 0, 1], [1, 0, 0], 0.7775)) < 1e-10
        with pytest.raises(GeometryError, match="out of range"):
            geo.state_at(path, 2.5)


class TestExpMap:
    def test_sphere_antipodal(self):
        s = mf.Sphere(2, 1.0)
        got = geo.exp_map(s, [0, 0, 1.0], [math.pi, 0, 0])
        assert np.allclose(got.coords, [0, 0, -1.0], atol=1e-12)

    def test_zero_vector(self):
        q = mf.Quadric((1.0, 1.0, 4 / 9))
        got = geo.exp_map(q, [0, 1.0, 0], [0.0, 0, 0])
        assert np.allclose(got.coords, [0, 1.0, 0])

    def test_quadric_richardson_consistency(self):
        q = mf.Quadric((1.0, 1.0, 4 / 9))
        v = np.array([math.cos(0.3), 0.0, math.sin(0.3)])
        a = geo.exp_map(q, [0, 1.0, 0], 1.2 * v, step=2e-3).coords
        b = geo.exp_map(q, [0, 1.0, 0], 1.2 * v, step=1e-3).coords
        assert np.linalg.norm(a - b) < 1e-8

    def test_hyperbolic_closed_form(self):
        h = mf.Hyperbolic(2, -1.0)
        got = geo.exp_map(h, [1.0, 0, 0], [0, 1.5, 0]).coords
        assert np.allclose(got, [math.cosh(1.5), math.sinh(1.5), 0.0],
                           atol=1e-12)


class TestParallelTransport:
    def test_euclidean_unchanged(self):
        e = mf.Euclidean(3)
        path = geo.integrate_geodesic(e, [0.0, 0, 0], [1.0, 0, 0], 1.0, 1e-2)
        got = geo.parallel_transport(path, [0, 2.0, 1.0], 1.0)
        assert np.allclose(got.components, [0, 2.0, 1.0], atol=1e-12)

    def test_velocity_is_parallel(self):
        s = mf.Sphere(2, 1.0)
        path = geo.integrate_geodesic(s, [0, 0, 1.0], [1.0, 0, 0], 2.0, 1e-3)
        got = geo.parallel_transport(path, [1.0, 0, 0], 2.0)
        assert np.allclose(got.components, path.v[-1], atol=1e-9)

    def test_matches_rotation_oracle(self):
        # transport along a great circle acts as the rotation in the
        # (point, velocity) plane and fixes the orthogonal complement
        s = mf.Sphere(3, 1.0)
        x0 = np.array([0.0, 0, 0, 1.0])
        v0 = np.array([1.0, 0, 0, 0])
        rng = np.random.default_rng(0)
        u = mf.random_unit_tangent(s, x0, rng, against=(v0,)).components
        u = (u + 0.5 * v0) / math.sqrt(1.25)
        path = geo.integrate_geodesic(s, x0, v0, math.pi, 1e-3)
        t = math.pi
        rot = (np.eye(4) + math.sin(t) * (np.outer(v0, x0) - np.outer(x0, v0))
               + (math.cos(t) - 1) * (np.outer(x0, x0) + np.outer(v0, v0)))
        got = geo.parallel_transport(path, u, t)
        assert np.allclose(got.components, rot @ u, atol=1e-8)

    def test_preserves_inner_products(self):
        q = mf.Quadric((1.0, 1.0, 4 / 9))
        v0 = np.array([math.cos(0.5), 0.0, math.sin(0.5)])
        path = geo.integrate_geodesic(q, [0, 1.0, 0], v0, 1.4, 1e-3)
        rng = np.random.default_rng(1)
        a = mf.random_unit_tangent(q, [0, 1.0, 0], rng).components
        b = mf.random_unit_tangent(q, [0, 1.0, 0], rng).components
        ta = geo.parallel_transport(path, a, 1.4).components
        tb = geo.parallel_transport(path, b, 1.4).components
        assert abs(np.linalg.norm(ta) - np.linalg.norm(a)) < 1e-8
        assert abs(np.dot(ta, tb) - np.dot(a, b)) < 1e-8

    def test_out_of_range(self):
        e = mf.Euclidean(2)
        path = geo.integrate_geodesic(e, [0.0, 0], [1.0, 0], 1.0, 1e-2)
        with pytest.raises(GeometryError, match="out of range"):
            geo.parallel_transport(path, [0, 1.0], 1.5)


class TestDistance:
    def test_sphere_antipodal(self):
        s = mf.Sphere(2, 1.0)
        assert abs(geo.distance(s, [0, 0, 1.0], [0, 0, -1.0]) - math.pi) < 1e-12

    def test_euclidean(self):
        e = mf.Euclidean(3)
        assert abs(geo.distance(e, [0.0, 0, 0], [3.0, 4.0, 0]) - 5.0) < 1e-12

    def test_quadric_circle_quarter(self):
        q = mf.Quadric((1.0, 1.0, 4 / 9))
        res = geo.distance_result(q, [0, 1.0, 0], [1.0, 0, 0])
        assert res.converged
        assert abs(res.length - math.pi / 2) < 1e-5

    def test_symmetry_and_triangle_inequality(self):
        for spec in (mf.Sphere(2, 1.0), mf.Hyperbolic(2, -0.5)):
            rng = np.random.default_rng(2)
            for _ in range(30):
                a = mf.random_point(spec, rng)
                b = mf.random_point(spec, rng)
                c = mf.random_point(spec, rng)
                dab = geo.distance(spec, a, b)
                dba = geo.distance(spec, b, a)
                assert abs(dab - dba) < 1e-8
                assert dab <= geo.distance(spec, a, c) \
                    + geo.distance(spec, c, b) + 1e-8

    def test_quadric_symmetry(self):
        q = mf.Quadric((1.0, 1.0, 4 / 9))
        rng = np.random.default_rng(3)
        a = mf.random_point(q, rng)
        b = mf.random_point(q, rng)
        assert abs(geo.distance(q, a, b) - geo.distance(q, b, a)) < 1e-6


class TestLiftCurve:
    def test_geodesic_lifts_to_ray(self):
        s = mf.Sphere(2, 1.0)
        p = np.array([0.0, 0, 1.0])
        v = np.array([1.0, 0, 0])
        ts = np.linspace(0.0, 1.0, 21)
        curve = [great_circle(p, v, t) for t in ts]
        lift = geo.lift_curve(s, p, curve, 1.0, t=ts)
        expected = np.outer(ts, v)
        assert np.max(np.abs(lift.xi - expected)) < 1e-7

    def test_euclidean_lift_is_translation(self):
        e = mf.Euclidean(2)
        p = np.array([1.0, 1.0])
        ts = np.linspace(0.0, 1.0, 11)
        curve = [p + np.array([t, t * t]) for t in ts]
        lift = geo.lift_curve(e, p, curve, 0.0, t=ts)
        assert np.max(np.abs(lift.xi - (np.array(curve) - p))) < 1e-9

    def test_latitude_circle_reexponentiates(self):
        s = mf.Sphere(2, 1.0)
        p = np.array([0.0, 0, 1.0])
        v = np.array([1.0, 0, 0])
        w = np.array([0.0, 1.0, 0])
        r = 0.5
        ts = np.linspace(0.0, 2 * math.pi, 81)
        curve = [geo.exp_map(s, p, r * (math.cos(a) * v + math.sin(a) * w)).coords
                 for a in ts]
        start = curve[0]
        lift = geo.lift_curve(s, start, curve, 1.0, t=ts)
        worst = 0.0
        for i in range(len(ts)):
            back = geo.exp_map(s, start, lift.xi[i]).coords
            worst = max(worst, np.linalg.norm(back - curve[i]))
        assert worst < 1e-7
        # oracle: the closed-form inverse of exp at the start point
        for i in (20, 40, 60):
            expect = geo.log_map(s, start, curve[i]).components
            assert np.linalg.norm(lift.xi[i] - expect) < 1e-7

    def test_budget_error(self):
        s = mf.Sphere(2, 1.0)
        p = np.array([0.0, 0, 1.0])
        ts = np.linspace(0.0, 1.0, 101)
        curve = [great_circle(p, [1.0, 0, 0], 3.3 * t) for t in ts]
        with pytest.raises(GeometryError, match="length budget"):
            geo.lift_curve(s, p, curve, 1.0, t=ts)

    def test_lift_after_exp_is_identity_on_radial_segments(self):
        s = mf.Sphere(2, 1.0)
        p = np.array([0.0, 0, 1.0])
        v = np.array([0.0, 1.0, 0])
        ts = np.linspace(0.0, 1.0, 26)
        curve = [geo.exp_map(s, p, 2.5 * t * v).coords for t in ts]
        lift = geo.lift_curve(s, p, curve, 1.0, t=ts)
        assert np.max(np.abs(lift.xi - np.outer(2.5 * ts, v))) < 1e-7


class TestDistanceRatio:
    def test_euclidean_exact(self):
        e = mf.Euclidean(2)
        assert abs(geo.distance_ratio(e, [0.0, 0], [1.0, 0], [0, 1.0], 0.3)
                   - 1.0) < 1e-12

    def test_sphere_proportional_rays(self):
        s = mf.Sphere(2, 1.0)
        x = [0.0, 0, 1.0]
        v = [1.0, 0, 0]
        for t in (0.1, 0.4, 1.2):
            ratio = geo.distance_ratio(s, x, v, [2.0, 0, 0], t)
            assert abs(ratio - 1.0) < 1e-12

    def test_sphere_orthogonal_monotone_from_below(self):
        s = mf.Sphere(2, 1.0)
        x = [0.0, 0, 1.0]
        prev = -1.0
        for j in range(8, 1, -1):
            ratio = geo.distance_ratio(s, x, [1.0, 0, 0], [0, 1.0, 0], 2.0 ** -j)
            assert ratio <= 1.0 + 1e-12
            assert abs(ratio - 1.0) <= (2.0 ** -j) ** 2
        seq = [geo.distance_ratio(s, x, [1.0, 0, 0], [0, 1.0, 0], 2.0 ** -j)
               for j in range(2, 9)]
        assert all(a <= b + 1e-15 for a, b in zip(seq, seq[1:]))


class TestRotationIsometry:
    def test_unit_block_displacement(self):
        scan = geo.rotation_isometry_displacement(4)
        assert abs(dict(scan.displacements)[1] - 1.0) < 1e-12

    def test_min_displacement_n64(self):
        scan = geo.rotation_isometry_displacement(64)
        assert abs(scan.min_displacement - 1.0 / 32.0) < 1e-9

    def test_distance_preservation_and_no_fixed_point(self):
        scan = geo.rotation_isometry_displacement(16, sample_count=100000,
                                                  seed=0)
        assert scan.max_distance_residual < 1e-9
        assert scan.min_sample_move > 0.0

    def test_validation(self):
        with pytest.raises(GeometryError):
            geo.rotation_isometry_displacement(5)
        with pytest.raises(GeometryError):
            geo.rotation_isometry_displacement(2)


class TestCsvDumps:
    def test_path_columns(self):
        e = mf.Euclidean(2)
        path = geo.integrate_geodesic(e, [0.0, 0], [1.0, 0], 0.1, 0.05)
        buf = io.StringIO()
        path.to_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "s,x_1,x_2,v_1,v_2"
        assert len(lines) == len(path.s) + 1

    def test_lifted_columns(self):
        e = mf.Euclidean(2)
        ts = np.linspace(0.0, 1.0, 5)
        curve = [np.array([t, 0.0]) for t in ts]
        lift = geo.lift_curve(e, [0.0, 0], curve, 0.0, t=ts)
        buf = io.StringIO()
        geo.lifted_to_csv(lift, buf)
        assert buf.getvalue().splitlines()[0] == "t,xi_1,xi_2"
