"""Tests for sweeps, coordinate lines, ridges, and chaining utilities."""

import numpy as np
import pytest

import conjlocus as cl
from conjlocus.locus import fibonacci_directions


@pytest.fixture(scope="module")
def small_sweep(frame, t_max):
    return cl.sweep(frame, 16, 32, t_max)


class TestSweep:
    def test_shapes(self, small_sweep):
        sw = small_sweep
        assert sw.sheet1.R.shape == (16, 32)
        assert sw.sheet2.R.shape == (16, 32)
        assert len(sw.records) == 16 * 32
        assert sw.sheet1.points_ambient.shape == (16, 32, 4)

    def test_nesting(self, small_sweep):
        assert np.all(small_sweep.sheet1.R <= small_sweep.sheet2.R + 1e-12)

    def test_all_kinds_valid(self, small_sweep):
        kinds = {r.kind for r in small_sweep.records}
        assert kinds <= {cl.KIND_GENERIC, cl.KIND_NEAR_UMBILIC, cl.KIND_UMBILIC}

    def test_area_vanishes_on_sheets(self, small_sweep, chart, frame, t_max):
        # Spot-check: the vertices really sit at zeros of the transverse area.
        rs = [r for r in small_sweep.records if r.kind == cl.KIND_GENERIC]
        for rec in rs[:: max(1, len(rs) // 8)]:
            traj = cl.integrate(
                chart,
                cl.LaunchSpec(cl.PAPER_BASE_POINT, tuple(rec.direction_velocity), t_max),
            )
            scale = np.max(np.abs(traj.node_areas))
            assert abs(traj.area_at(rec.R1)) < 1e-7 * scale
            assert abs(traj.area_at(rec.R2)) < 1e-7 * scale

    def test_pole_retry_wrapper(self, chart, t_max):
        sw = cl.sweep_with_pole_retry(chart, cl.PAPER_BASE_POINT, 16, 32, t_max)
        assert sw.sheet1.R.shape == (16, 32)
        assert np.all(np.isfinite(sw.sheet1.R))

    def test_distance_spheres(self, small_sweep):
        s1, s2 = cl.distance_spheres(small_sweep)
        assert s1.shape == (16, 32, 3)
        assert s2.shape == (16, 32, 3)
        assert np.all(np.isfinite(s1)) and np.all(np.isfinite(s2))


class TestUmbilics:
    def test_round_sphere_has_none(self, t_max):
        chart = cl.EllipsoidChart((1.0, 1.0, 1.0, 1.0))
        frame = cl.TangentSphereFrame.build(chart, cl.PAPER_BASE_POINT)
        sw = cl.sweep(frame, 16, 32, 1.25 * np.pi)
        found = cl.find_umbilic_directions(sw)
        assert not found

    def test_quadraxial_has_two_antipodal_pairs(self, verifier):
        um = verifier.umbilics
        assert len(um) == 4
        dirs = np.array([u[0] for u in um])
        gaps = np.array([u[2] for u in um])
        assert np.all(gaps < 1e-8)
        # Pair up antipodes exactly.
        used = set()
        pairs = 0
        for i in range(4):
            if i in used:
                continue
            for j in range(i + 1, 4):
                if j in used:
                    continue
                if np.linalg.norm(dirs[i] + dirs[j]) < 1e-6:
                    used |= {i, j}
                    pairs += 1
        assert pairs == 2


class TestChaining:
    def test_closed_circle(self, rng):
        t = np.linspace(0, 2 * np.pi, 40, endpoint=False)
        pts = np.column_stack([np.cos(t), np.sin(t), 0 * t])
        pts = pts[rng.permutation(40)]
        chains = cl.chain_points(pts)
        assert len(chains) == 1
        idx, closed = chains[0]
        assert closed
        assert len(idx) == 40

    def test_gapped_arc_splits(self, rng):
        t1 = np.linspace(0.0, 1.0, 25)
        t2 = np.linspace(3.0, 4.0, 25)
        t = np.concatenate([t1, t2])
        pts = np.column_stack([t, 0 * t, 0 * t])
        pts = pts[rng.permutation(len(t))]
        chains = cl.chain_points(pts)
        assert len(chains) == 2
        assert all(not closed for _, closed in chains)
        assert sorted(len(i) for i, _ in chains) == [25, 25]

    def test_thinning_removes_duplicates(self):
        t = np.linspace(0, 2 * np.pi, 30, endpoint=False)
        pts = np.column_stack([np.cos(t), np.sin(t), 0 * t])
        noisy = np.vstack([pts, pts + 1e-4])
        chains = cl.chain_points(noisy, thin=0.05)
        assert len(chains) == 1
        idx, closed = chains[0]
        assert closed
        assert len(idx) == 30


@pytest.fixture(scope="module")
def lines(frame, t_max):
    u = cl.jacobi_coordinate_line(frame, (1.1, 0.7), "u", t_max, step=0.03, rtol=1e-8, atol=1e-10)
    v = cl.jacobi_coordinate_line(frame, (1.1, 0.7), "v", t_max, step=0.03, rtol=1e-8, atol=1e-10)
    return u, v


class TestCoordinateLines:
    def test_both_close(self, lines):
        u, v = lines
        assert u.closed and v.closed
        assert u.space == "tangent_sphere"
        assert len(u.points) > 20 and len(v.points) > 20

    def test_points_unit(self, lines):
        for line in lines:
            nrm = np.linalg.norm(line.points, axis=1)
            np.testing.assert_allclose(nrm, 1.0, atol=1e-9)

    def test_R_varies_smoothly(self, lines):
        for line in lines:
            for key in ("R1", "R2"):
                R = np.asarray(line.values[key])
                assert np.all(np.isfinite(R))
                assert np.max(np.abs(np.diff(R))) < 0.1

    def test_ridges_balanced(self, lines):
        u, v = lines
        ru = cl.find_ridges(u, "R1")
        rv = cl.find_ridges(v, "R2")
        n_max_u = sum(1 for r in ru if r.ext_type == "max")
        n_min_u = sum(1 for r in ru if r.ext_type == "min")
        assert n_max_u == n_min_u > 0
        assert all(r.which == "R2" for r in rv)

    def test_line_element_check(self, frame, lines):
        u, v = lines
        rep = cl.sheet_line_element_check(frame, u, v, rtol=1e-8, atol=1e-10)
        assert rep.u_residual < 1e-2
        assert rep.v_residual < 1e-2
        assert rep.cross_residual < 1e-2


class TestDirections:
    def test_fibonacci_cover(self):
        d = fibonacci_directions(50)
        assert d.shape == (50, 3)
        np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12)
        # Reasonably spread: no two directions nearly identical.
        gram = d @ d.T - np.eye(50)
        assert gram.max() < 0.999
