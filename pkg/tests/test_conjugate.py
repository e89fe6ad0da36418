"""Tests for conjugate-time detection and classification."""

import numpy as np
import pytest

import conjlocus as cl


# [DERIVED] conjugate radii of the reference generic direction
# (-0.730, 0.425, -0.774), cross-checked against the independent
# finite-difference Jacobi oracle (agreement 1e-9).
FIG2_DIRECTION = (-0.730, 0.425, -0.774)
FIG2_R1 = 3.415395662
FIG2_R2 = 3.634378728
FIG2_ALPHA1 = 2.899984138
FIG2_ALPHA2 = 1.329187812

# [DERIVED] one of the four umbilic directions (frame coordinates), refined
# from the sweep to a double-root gap below 1e-11.
UMBILIC_FRAME = (0.53536434, 0.55278843, -0.63860001)
UMBILIC_R = 3.504219191


@pytest.fixture(scope="module")
def fig2_traj(chart, t_max):
    return cl.integrate(chart, cl.LaunchSpec(cl.PAPER_BASE_POINT, FIG2_DIRECTION, t_max))


class TestGenericDirection:
    def test_frozen_radii(self, fig2_traj):
        res = cl.analyze(fig2_traj)
        assert abs(res.R1 - FIG2_R1) < 1e-6
        assert abs(res.R2 - FIG2_R2) < 1e-6
        assert res.kind == cl.KIND_GENERIC

    def test_area_vanishes_at_roots(self, fig2_traj):
        res = cl.analyze(fig2_traj)
        scale = np.max(np.abs(fig2_traj.node_areas))
        assert abs(fig2_traj.area_at(res.R1)) < 1e-10 * scale
        assert abs(fig2_traj.area_at(res.R2)) < 1e-10 * scale

    def test_roots_are_simple(self, fig2_traj):
        res = cl.analyze(fig2_traj)
        scale = np.max(np.abs(fig2_traj.node_areas))
        for t in (res.R1, res.R2):
            assert abs(fig2_traj.area_rate_at(t)) > 1e-3 * scale

    def test_analyze_record(self, chart, frame, t_max):
        g = chart.metric_at(cl.PAPER_BASE_POINT)
        v = np.asarray(FIG2_DIRECTION)
        v = v / np.sqrt(v @ g @ v)
        th, ph = frame.angles_of(frame.to_frame(v))
        rec = cl.analyze_direction(frame, th, ph, t_max)
        assert abs(rec.R1 - FIG2_R1) < 1e-6
        assert abs(rec.R2 - FIG2_R2) < 1e-6
        assert abs(rec.alpha1 - FIG2_ALPHA1) < 1e-4
        assert abs(rec.alpha2 - FIG2_ALPHA2) < 1e-4
        assert rec.kind == cl.KIND_GENERIC


class TestUmbilicDirection:
    def test_double_root(self, frame, t_max):
        th, ph = frame.angles_of(np.asarray(UMBILIC_FRAME))
        rec = cl.analyze_direction(frame, th, ph, t_max)
        assert rec.kind == cl.KIND_UMBILIC
        assert abs(rec.R1 - UMBILIC_R) < 1e-5
        assert abs(rec.R2 - rec.R1) < 1e-5

    def test_near_umbilic_is_generic(self, frame, t_max):
        # Regression: directions a short distance from an umbilic have two
        # distinct simple roots inside a single integrator step.  The
        # detector must resolve the pair, not report a double root.
        w = np.asarray(UMBILIC_FRAME) + np.array([0.01, -0.006, 0.008])
        w = w / np.linalg.norm(w)
        th, ph = frame.angles_of(w)
        rec = cl.analyze_direction(frame, th, ph, t_max)
        assert rec.kind == cl.KIND_GENERIC
        assert rec.R2 - rec.R1 > 1e-4


class TestOracleAgreement:
    def test_matches_fd_oracle(self, chart, frame, t_max, rng):
        for _ in range(6):
            w = rng.standard_normal(3)
            w = w / np.linalg.norm(w)
            th, ph = frame.angles_of(w)
            rec = cl.analyze_direction(frame, th, ph, t_max)
            if rec.kind != cl.KIND_GENERIC:
                continue
            o1, o2 = cl.oracle_conjugate_times(chart, frame, th, ph, t_max)
            assert abs(rec.R1 - o1) < 1e-4
            assert abs(rec.R2 - o2) < 1e-4


class TestAlpha:
    def test_alpha_is_area_null_direction(self, fig2_traj):
        # At a simple conjugate time the Jacobi matrix has a rank-1 kernel;
        # alpha parametrizes the collapsing initial direction.  Check the
        # 2x2 transverse Jacobi block annihilates (cos a, sin a).
        res = cl.analyze(fig2_traj)
        for t, a in ((res.R1, res.alpha1), (res.R2, res.alpha2)):
            J = fig2_traj.jacobi_matrix_at(t)
            u = np.array([np.cos(a), np.sin(a)])
            resid = np.linalg.norm(J @ u)
            scale = np.linalg.norm(J)
            assert resid < 1e-6 * max(scale, 1.0)


class TestGauge:
    def test_radii_gauge_invariant(self, chart, t_max):
        base = cl.LaunchSpec(cl.PAPER_BASE_POINT, FIG2_DIRECTION, t_max)
        r0 = cl.analyze(cl.integrate(chart, base))
        for ang in (0.3, 1.2, 2.9):
            r = cl.analyze(cl.integrate(chart, base, gauge_angle=ang))
            assert abs(r.R1 - r0.R1) < 1e-8
            assert abs(r.R2 - r0.R2) < 1e-8
            # alpha shifts by exactly the gauge angle, modulo pi.
            d = (r.alpha1 - r0.alpha1 + ang) % np.pi
            assert min(d, np.pi - d) < 1e-5
