"""Integration of the geodesic + parallel-frame + Jacobi bundle.

A single adaptive integration carries the geodesic, the parallel normals
N and B, and two Jacobi scalar pairs (the fields with frame initial slopes
(1, 0) and (0, 1)).  The dense-output interpolant of every accepted step is
kept so conjugate times can be refined to high accuracy afterwards.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as k
from .errors import FrameError, IntegrationError
from .manifold import CHART_PERMS, EllipsoidChart, pick_chart


def orthonormal_frame_at(chart, p, T, tol=1e-8):
    """Deterministic gauge for the normals (N, B) of a unit tangent T.

    Gram-Schmidt of the chart coordinate basis in fixed order against T,
    skipping any basis vector whose residual is negligible, with the
    orientation fixed so det[T N B] > 0 in chart coordinates.
    """
    g = chart.metric_at(p)
    T = np.asarray(T, float)
    frame = [T / np.sqrt(T @ g @ T)]
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        w = e.copy()
        for u in frame:
            w -= (e @ g @ u) * u
        nrm = np.sqrt(w @ g @ w)
        if nrm < tol:
            continue
        frame.append(w / nrm)
        if len(frame) == 3:
            break
    if len(frame) < 3:
        raise FrameError("degenerate coordinate basis at base point")
    T, N, B = frame
    if np.linalg.det(np.column_stack([T, N, B])) < 0:
        B = -B
    return N, B


def rotate_gauge(N, B, angle):
    """Rotate the normal pair by `angle` in the {N, B} plane."""
    c, s = np.cos(angle), np.sin(angle)
    return c * N + s * B, -s * N + c * B


@dataclass(frozen=True)
class LaunchSpec:
    """Base point plus a launch direction and an integration horizon.

    `velocity` is a raw coordinate velocity; it is normalized to unit
    metric norm before integration.
    """

    base_point: tuple
    velocity: tuple
    t_max: float

    def unit_velocity(self, chart):
        p = np.asarray(self.base_point, float)
        return chart.normalize(p, np.asarray(self.velocity, float))


@dataclass
class Trajectory:
    """An integrated bundle trajectory with per-step dense output."""

    start_chart: EllipsoidChart
    ts: np.ndarray
    ys: np.ndarray
    Ks: np.ndarray
    chart_ids: np.ndarray
    N0: np.ndarray
    B0: np.ndarray
    launch: LaunchSpec = None
    meta: dict = field(default_factory=dict)

    @property
    def axes(self):
        return self.start_chart.axes

    @property
    def t_end(self):
        return self.ts[-1]

    @property
    def n_steps(self):
        return len(self.ts) - 1

    def _step_index(self, t):
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        return min(max(i, 0), self.n_steps - 1)

    def state_at(self, t):
        """Dense-output state at arc length t, with the active chart id."""
        i = self._step_index(t)
        h = self.ts[i + 1] - self.ts[i]
        sigma = (t - self.ts[i]) / h
        y = k.interp_step(self.ys[i], self.Ks[i], h, sigma)
        return y, int(self.chart_ids[i])

    def states_at(self, ts):
        ts = np.atleast_1d(np.asarray(ts, float))
        out = np.empty((len(ts), 20))
        charts = np.empty(len(ts), int)
        for n, t in enumerate(ts):
            out[n], charts[n] = self.state_at(t)
        return out, charts

    # -- Jacobi scalars -----------------------------------------------------

    def area_at(self, t):
        """The area scalar [J_xi, J_eta] = xi1*eta2 - xi2*eta1."""
        if np.isscalar(t):
            y, _ = self.state_at(t)
            return y[12] * y[17] - y[16] * y[13]
        ys, _ = self.states_at(t)
        return ys[:, 12] * ys[:, 17] - ys[:, 16] * ys[:, 13]

    def area_rate_at(self, t):
        """Exact d/dt of the area scalar from the carried derivatives."""
        y, _ = self.state_at(t)
        return (
            y[14] * y[17] + y[12] * y[19] - y[18] * y[13] - y[16] * y[15]
        )

    @property
    def node_areas(self):
        ys = self.ys
        return ys[:, 12] * ys[:, 17] - ys[:, 16] * ys[:, 13]

    def dense_areas(self, spacing=0.005):
        """Area scalar sampled at most `spacing` apart, using the dense
        output of every accepted step.  Returns (ts, areas) including the
        step endpoints.

        Each step contributes the four Jacobi components as quartic
        polynomials in the step fraction, so the whole evaluation is a
        handful of small matrix products per step.
        """
        comps = (12, 13, 16, 17)
        ts_out = [np.array([self.ts[0]])]
        a0 = self.ys[0]
        A_out = [np.array([a0[12] * a0[17] - a0[16] * a0[13]])]
        for i in range(len(self.ts) - 1):
            h = self.ts[i + 1] - self.ts[i]
            m = max(1, int(np.ceil(h / spacing)))
            sigma = np.arange(1, m + 1) / m
            S = sigma[:, None] ** np.arange(1, 5)[None, :]
            C = k.DP_P.T @ self.Ks[i][:, comps]      # 4 poly coeffs x 4 comps
            V = self.ys[i][list(comps)] + h * (S @ C)
            ts_out.append(self.ts[i] + sigma * h)
            A_out.append(V[:, 0] * V[:, 3] - V[:, 2] * V[:, 1])
        return np.concatenate(ts_out), np.concatenate(A_out)

    def area_curvature_at(self, t):
        """Exact d2/dt2 of the area scalar via the curvature identity
        A'' = -tr(M) A + 2 [J1', J2']."""
        y, cid = self.state_at(t)
        ax = self.axes[CHART_PERMS[cid]]
        m11, _, m22 = k.curvature_matrix_entries(
            y[0:3], ax, y[3:6], y[6:9], y[9:12]
        )
        A = y[12] * y[17] - y[16] * y[13]
        rate_cross = y[14] * y[19] - y[18] * y[15]
        return -(m11 + m22) * A + 2 * rate_cross

    def jacobi_matrix_at(self, t):
        """2x2 matrix with columns (xi1, eta1) and (xi2, eta2) at t."""
        y, _ = self.state_at(t)
        return np.array([[y[12], y[16]], [y[13], y[17]]])

    # -- geometry along the trajectory -------------------------------------

    def chart_at(self, t):
        return self.start_chart.companion(self.state_at(t)[1])

    def position_ambient_at(self, t):
        y, cid = self.state_at(t)
        return k.ambient_from_chart(y[0:3], self.axes, CHART_PERMS[cid])

    def frame_ambient_at(self, t):
        """Ambient 4-vectors of (T, N, B) at arc length t."""
        y, cid = self.state_at(t)
        perm = CHART_PERMS[cid]
        axP = self.axes[perm]
        J = k.embed_jacobian(y[0:3], axP)
        out = []
        for off in (3, 6, 9):
            slot = J @ y[off : off + 3]
            amb = np.empty(4)
            amb[perm] = slot
            out.append(amb)
        return out

    def position_chart0_at(self, t):
        """Chart-0 coordinates of the point at t (via the ambient point)."""
        x = self.position_ambient_at(t)
        q, _ = k.chart_coords_from_ambient(x, self.axes, CHART_PERMS[0])
        return q

    # -- diagnostics --------------------------------------------------------

    def unit_speed_error(self):
        worst = 0.0
        for i in range(len(self.ts)):
            y = self.ys[i]
            g = k.metric(y[0:3], self.axes[CHART_PERMS[self.chart_ids[i]]])
            worst = max(worst, abs(y[3:6] @ g @ y[3:6] - 1.0))
        return worst

    def frame_gram_error(self):
        worst = 0.0
        eye = np.eye(3)
        for i in range(len(self.ts)):
            y = self.ys[i]
            g = k.metric(y[0:3], self.axes[CHART_PERMS[self.chart_ids[i]]])
            F = np.column_stack([y[3:6], y[6:9], y[9:12]])
            worst = max(worst, np.max(np.abs(F.T @ g @ F - eye)))
        return worst


def initial_state(chart, p, v_unit, N, B):
    y0 = np.zeros(20)
    y0[0:3] = p
    y0[3:6] = v_unit
    y0[6:9] = N
    y0[9:12] = B
    # J_xi: slopes (1, 0); J_eta: slopes (0, 1)
    y0[14] = 1.0
    y0[19] = 1.0
    return y0


def integrate(chart, launch, rtol=1e-10, atol=1e-12, gauge_angle=0.0,
              h_max=0.05, switch_threshold=0.1, max_steps=20000):
    """Integrate the bundle for a launch and return a Trajectory.

    `gauge_angle` rotates the automatic (N, B) gauge; downstream conjugate
    distances are invariant under it (tested), only the alpha angles shift.
    """
    p = np.asarray(launch.base_point, float)
    chart.check_domain(p)
    # start in the best chart for the base point
    v = chart.normalize(p, np.asarray(launch.velocity, float))
    x0 = k.ambient_from_chart(p, chart.axes, chart.perm)
    cid0 = pick_chart(chart.axes, x0, threshold=switch_threshold)
    chart0 = chart.companion(cid0)
    if cid0 != chart.chart_id:
        y = np.zeros(20)
        y[0:3] = p
        y[3:6] = v
        y2 = k.transition_state(y, chart.axes, chart.perm, chart0.perm)
        p, v = y2[0:3].copy(), y2[3:6].copy()
    N, B = orthonormal_frame_at(chart0, p, v)
    if gauge_angle != 0.0:
        N, B = rotate_gauge(N, B, gauge_angle)
    y0 = initial_state(chart0, p, v, N, B)
    n, ts, ys, Ks, chart_ids, status = k.integrate_kernel(
        chart.axes, CHART_PERMS, cid0, y0, float(launch.t_max),
        rtol, atol, h_max, switch_threshold, max_steps,
    )
    if status == k.STATUS_STEP_UNDERFLOW:
        raise IntegrationError(
            f"step-size underflow at t={ts[-1]:.6f} (direction {launch.velocity})"
        )
    if status == k.STATUS_MAX_STEPS:
        raise IntegrationError(
            f"step budget exhausted at t={ts[-1]:.6f}; raise max_steps"
        )
    return Trajectory(
        start_chart=chart0,
        ts=ts.copy(), ys=ys.copy(), Ks=Ks.copy(),
        chart_ids=chart_ids.copy(), N0=N, B0=B, launch=launch,
        meta={"rtol": rtol, "atol": atol, "gauge_angle": gauge_angle},
    )


def rhs(chart, y):
    """Bundle derivative at a raw state (thin wrapper over the kernel)."""
    return k.rhs(np.asarray(y, float), chart.slot_axes)
