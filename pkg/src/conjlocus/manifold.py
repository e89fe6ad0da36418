"""Metric charts of the quadraxial ellipsoid in 4-space.

The ellipsoid x1^2/a^2 + x2^2/b^2 + x3^2/c^2 + x4^2/d^2 = 1 is covered by
spherical-polar type charts

    (A sin(theta) sin(phi) cos(psi), B sin(theta) sin(phi) sin(psi),
     C sin(theta) cos(phi), D cos(theta)),

theta, phi in (0, pi), psi periodic.  A chart is an assignment of ambient
axes to the four slots above (a permutation); the chart degenerates on the
circle where the first two slot coordinates vanish, and companion charts
with permuted axes cover that set.  All curvature quantities are closed
form; the heavy lifting is delegated to the compiled kernels so the ODE
right-hand side and these public operations share one implementation.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as k
from .errors import ChartSingularError, DomainError, FrameError

# Chart 0 is the identity assignment; its singular circle is {x1 = x2 = 0}.
# The companions move other ambient pairs into the leading slots so that the
# singular circles of the family have empty triple intersection: every point
# of the ellipsoid is comfortably interior to at least one chart.
CHART_PERMS = np.array(
    [
        [0, 1, 2, 3],
        [2, 3, 0, 1],
        [1, 2, 3, 0],
    ],
    dtype=np.int64,
)
N_CHARTS = CHART_PERMS.shape[0]


@dataclass(frozen=True)
class EllipsoidChart:
    """One chart of the quadraxial ellipsoid.

    `semi_axes` are the ambient semi-axes (a, b, c, d); `chart_id` selects
    the slot permutation.  Immutable and safe to share across threads.
    """

    semi_axes: tuple
    chart_id: int = 0

    def __post_init__(self):
        ax = np.asarray(self.semi_axes, dtype=float)
        if ax.shape != (4,) or not np.all(ax > 0):
            raise DomainError("semi_axes must be 4 strictly positive reals")
        if not 0 <= self.chart_id < N_CHARTS:
            raise DomainError(f"chart_id must be in 0..{N_CHARTS - 1}")
        object.__setattr__(self, "semi_axes", tuple(float(a) for a in ax))

    @property
    def axes(self):
        return np.array(self.semi_axes)

    @property
    def perm(self):
        return CHART_PERMS[self.chart_id]

    @property
    def slot_axes(self):
        """Semi-axes in slot order for this chart."""
        return self.axes[self.perm]

    def companion(self, chart_id):
        return EllipsoidChart(self.semi_axes, chart_id)

    # -- chart domain -------------------------------------------------------

    def check_domain(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (3,):
            raise DomainError("chart point must have 3 coordinates")
        if not (0.0 < q[0] < np.pi) or not (0.0 < q[1] < np.pi):
            raise DomainError(f"theta, phi must lie in (0, pi); got {q[:2]}")
        return q

    def near_singular(self, q, threshold=0.1):
        """True when the point is inside the chart-switch band."""
        return min(abs(np.sin(q[0])), abs(np.sin(q[1]))) < threshold

    # -- geometry -----------------------------------------------------------

    def embed(self, q):
        """Ambient 4-space point of chart coordinates q."""
        q = self.check_domain(q)
        return k.ambient_from_chart(q, self.axes, self.perm)

    def embed_jacobian(self, q):
        """4x3 Jacobian of `embed` (rows in ambient order)."""
        q = self.check_domain(q)
        J = k.embed_jacobian(q, self.slot_axes)
        out = np.empty((4, 3))
        out[self.perm] = J
        return out

    def metric_at(self, q):
        q = self.check_domain(q)
        return k.metric(q, self.slot_axes)

    def christoffel_at(self, q):
        q = self.check_domain(q)
        return k.christoffel(q, self.slot_axes)

    def riemann_at(self, q):
        q = self.check_domain(q)
        r1212, r1313, r2323 = k.riemann_components(q, self.slot_axes)
        return CurvaturePack(
            r1212=r1212,
            r1313=r1313,
            r2323=r2323,
            metric=self.metric_at(q),
            christoffel=self.christoffel_at(q),
        )

    def curvature_matrix(self, q, T, N, B, tol=1e-6):
        """Symmetric 2x2 matrix M of the Jacobi system (xi'', eta'')^T =
        -M (xi, eta)^T for the parallel frame {T, N, B}."""
        q = self.check_domain(q)
        T = np.asarray(T, float)
        N = np.asarray(N, float)
        B = np.asarray(B, float)
        g = self.metric_at(q)
        F = np.column_stack([T, N, B])
        gram = F.T @ g @ F
        if np.max(np.abs(gram - np.eye(3))) > tol:
            raise FrameError(
                "frame {T,N,B} is not orthonormal w.r.t. the metric "
                f"(max Gram deviation {np.max(np.abs(gram - np.eye(3))):.2e})"
            )
        m11, m12, m22 = k.curvature_matrix_entries(q, self.slot_axes, T, N, B)
        return np.array([[m11, m12], [m12, m22]])

    def normalize(self, q, v):
        """Rescale v to unit metric norm at q."""
        v = np.asarray(v, dtype=float)
        g = self.metric_at(q)
        return v / np.sqrt(v @ g @ v)

    def coords_from_ambient(self, x):
        """Chart coordinates of an ambient point on the ellipsoid."""
        q, _ = k.chart_coords_from_ambient(
            np.asarray(x, float), self.axes, self.perm
        )
        return q


@dataclass(frozen=True)
class CurvaturePack:
    """The three independent coordinate Riemann components at a point in
    index order (theta, phi, psi) = (1, 2, 3), together with the metric and
    Christoffel symbols the ODEs need."""

    r1212: float
    r1313: float
    r2323: float
    metric: np.ndarray
    christoffel: np.ndarray

    def full_tensor(self):
        """Lowered R_{ijkl}, all components, reconstructed from the three
        independent ones by the standard symmetries (everything outside the
        three pairs is zero in this chart)."""
        R = np.zeros((3, 3, 3, 3))
        for (a, b), val in (
            ((0, 1), self.r1212),
            ((0, 2), self.r1313),
            ((1, 2), self.r2323),
        ):
            R[a, b, a, b] = val
            R[b, a, b, a] = val
            R[a, b, b, a] = -val
            R[b, a, a, b] = -val
        return R


def pick_chart(axes, x_ambient, threshold=0.1):
    """Chart index with the best singularity clearance at an ambient point.

    Raises if no chart clears `threshold` (cannot happen for the shipped
    chart family, but guards future additions).
    """
    axes = np.asarray(axes, float)
    best, best_score = -1, -1.0
    for c in range(N_CHARTS):
        _, score = k.chart_coords_from_ambient(x_ambient, axes, CHART_PERMS[c])
        if score > best_score:
            best, best_score = c, score
    if best_score < threshold:
        raise ChartSingularError(
            f"ambient point {x_ambient} is near-singular in every chart"
        )
    return best


def chart_transition(chart_from, chart_to, q, vectors=()):
    """Map a point and tangent vectors between charts of the same ellipsoid.

    Returns (q2, [vectors2]).  Vectors are pushed forward through the
    ambient embedding; metric norms are preserved to rounding.
    """
    if chart_from.semi_axes != chart_to.semi_axes:
        raise DomainError("charts belong to different ellipsoids")
    q = chart_from.check_domain(q)
    y = np.zeros(20)
    y[0:3] = q
    vecs = [np.asarray(v, float) for v in vectors]
    out_vecs = []
    for v in vecs:
        y[3:6] = v
        y2 = k.transition_state(
            y, chart_from.axes, chart_from.perm, chart_to.perm
        )
        out_vecs.append(y2[3:6].copy())
    if not vecs:
        y2 = k.transition_state(
            y, chart_from.axes, chart_from.perm, chart_to.perm
        )
    q2 = y2[0:3].copy()
    x_from = chart_from.embed(q)
    x_to = chart_to.embed(chart_to.check_domain(q2))
    if np.max(np.abs(x_from - x_to)) > 1e-10:
        raise ChartSingularError(
            "chart transition did not preserve the ambient point "
            f"(residual {np.max(np.abs(x_from - x_to)):.2e})"
        )
    return q2, out_vecs
