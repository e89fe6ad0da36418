"""Tests for the geodesic + Jacobi bundle integrator."""

import numpy as np
import pytest

import conjlocus as cl
from conftest import BASE


def launch(frame, theta, phi, t_max):
    return cl.LaunchSpec(tuple(frame.base_point), tuple(frame.direction(theta, phi)), t_max)


@pytest.fixture(scope="module")
def round_traj():
    chart = cl.EllipsoidChart((1.0, 1.0, 1.0, 1.0))
    frame = cl.TangentSphereFrame.build(chart, BASE)
    traj = cl.integrate(chart, launch(frame, 1.1, 0.4, 2.5 * np.pi))
    return chart, traj


@pytest.fixture(scope="module")
def traj(chart, frame, t_max):
    return cl.integrate(chart, launch(frame, 1.9, -0.7, t_max))


class TestRoundSphere:
    def test_stays_on_unit_sphere(self, round_traj):
        chart, traj = round_traj
        for t in np.linspace(0, traj.t_end, 40):
            x = traj.position_ambient_at(t)
            assert abs(np.linalg.norm(x) - 1.0) < 1e-10

    def test_great_circle_period(self, round_traj):
        chart, traj = round_traj
        x0 = traj.position_ambient_at(0.0)
        x2pi = traj.position_ambient_at(2 * np.pi)
        np.testing.assert_allclose(x2pi, x0, atol=1e-8)

    def test_area_is_sin_squared(self, round_traj):
        chart, traj = round_traj
        ts = np.linspace(0.05, traj.t_end, 60)
        areas = np.array([traj.area_at(t) for t in ts])
        np.testing.assert_allclose(areas, np.sin(ts) ** 2, atol=1e-8)


class TestPaperTrajectory:
    def test_unit_speed_preserved(self, traj):
        assert traj.unit_speed_error() < 1e-9

    def test_frame_gram_preserved(self, traj):
        assert traj.frame_gram_error() < 1e-8

    def test_dense_output_matches_nodes(self, traj):
        areas_nodes = traj.node_areas
        for t, a in zip(traj.ts[::5], areas_nodes[::5]):
            assert abs(traj.area_at(t) - a) < 1e-12

    def test_dense_areas_matches_pointwise(self, traj):
        ts, areas = traj.dense_areas(spacing=0.01)
        assert np.all(np.diff(ts) > 0)
        idx = np.linspace(0, len(ts) - 1, 50).astype(int)
        for i in idx:
            assert abs(areas[i] - traj.area_at(ts[i])) < 1e-12

    def test_area_rate_matches_fd(self, traj):
        h = 1e-6
        for t in np.linspace(0.5, traj.t_end - 0.5, 15):
            fd = (traj.area_at(t + h) - traj.area_at(t - h)) / (2 * h)
            assert abs(traj.area_rate_at(t) - fd) < 1e-6

    def test_area_curvature_matches_fd(self, traj):
        h = 1e-4
        for t in np.linspace(0.5, traj.t_end - 0.5, 10):
            fd = (
                traj.area_at(t + h) - 2 * traj.area_at(t) + traj.area_at(t - h)
            ) / h**2
            assert abs(traj.area_curvature_at(t) - fd) < 1e-5

    def test_ambient_position_continuous_across_chart_switches(self, traj):
        # The chart index can change along the trajectory; the ambient image
        # must stay smooth regardless.
        ts = np.linspace(0.0, traj.t_end, 400)
        xs = np.array([traj.position_ambient_at(t) for t in ts])
        steps = np.linalg.norm(np.diff(xs, axis=0), axis=1)
        assert steps.max() < 2.5 * (ts[1] - ts[0])

    def test_identity_suite(self, traj):
        rep = cl.verify_identities(traj)
        assert rep.first_derivative_residual < 1e-5
        assert rep.second_derivative_residual < 1e-5
        assert rep.frame_gram_error < 1e-7
        assert rep.unit_speed_error < 1e-9


class TestErrors:
    def test_horizon_too_short(self, chart, frame):
        with pytest.raises(cl.HorizonTooShort):
            traj = cl.integrate(chart, launch(frame, 1.9, -0.7, 0.5))
            cl.find_conjugate_times(traj)

    def test_bad_base_point_rejected(self, chart):
        with pytest.raises(cl.DomainError):
            cl.integrate(chart, cl.LaunchSpec((0.0, 1.0, 0.2), (1.0, 0.0, 0.0), 1.0))
