"""Conjugate-point detection along an integrated trajectory.

The detector tracks the area scalar [J_xi, J_eta] (the 2x2 determinant of
the two Jacobi pairs' frame components), which changes sign at a simple
conjugate point and has a double root at an umbilic direction.  Roots are
bracketed on the accepted steps and refined by bisection on the dense
interpolant; the collapsing-direction angles come from the null vector of
the 2x2 Jacobi matrix at the root.
"""

from dataclasses import dataclass

import numpy as np

from .errors import HorizonTooShort, UmbilicAmbiguity
from .geodesic import LaunchSpec, integrate
from . import _kernels as k
from .manifold import CHART_PERMS

KIND_GENERIC = "generic"
KIND_NEAR_UMBILIC = "near_umbilic"
KIND_UMBILIC = "umbilic"


@dataclass
class ConjugateRecord:
    """Per-direction result of first conjugate-point detection."""

    direction_angles: tuple        # (Theta, Phi) on the tangent sphere, or None
    direction_velocity: tuple      # unit coordinate velocity at the base point
    R1: float
    R2: float
    alpha1: float                  # collapsing direction angle at R1, in [0, pi)
    alpha2: float                  # collapsing direction angle at R2, in [0, pi)
    kind: str
    inv_product: float             # 1/(R1*R2), the global-Gauss-curvature scalar
    dA_R1: float                   # |dA/dt| at R1
    dA_R2: float
    min_area_between: float        # min |A| on (R1, R2)

    CSV_FIELDS = (
        "Theta", "Phi", "v_theta", "v_phi", "v_psi",
        "R1", "R2", "alpha1", "alpha2", "kind", "inv_product",
        "dA_R1", "dA_R2", "min_area_between",
    )

    def csv_row(self):
        th, ph = self.direction_angles if self.direction_angles else (np.nan, np.nan)
        vals = [th, ph, *self.direction_velocity, self.R1, self.R2,
                self.alpha1, self.alpha2]
        row = [f"{v:.17g}" for v in vals]
        row.append(self.kind)
        row += [f"{v:.17g}" for v in
                (self.inv_product, self.dA_R1, self.dA_R2, self.min_area_between)]
        return row


def area(state):
    """Area scalar of a raw 20-component bundle state."""
    y = np.asarray(state, float)
    return y[12] * y[17] - y[16] * y[13]


def _bisect_root(f, lo, hi, flo, width=1e-10):
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _newton_root(traj, t, t_lo, t_hi):
    """Polish a root estimate of the area scalar with exact derivatives."""
    for _ in range(30):
        r = traj.area_rate_at(t)
        if r == 0.0:
            break
        dt = -traj.area_at(t) / r
        t = min(max(t + dt, t_lo), t_hi)
        if abs(dt) < 1e-13:
            break
    return t


def _analyze_dip(traj, t, t_lo, t_hi, scale, umbilic_area_tol):
    """Resolve a near-tangency of the area scalar at a dip of |A|.

    Newton on A' locates the local extremum; the exact Taylor coefficients
    (A, A', A'') there decide between a missed pair of simple roots and a
    genuine double root.  Returns a list of 0, 1 (double, repeated later)
    or 2 root times.
    """
    for _ in range(40):
        c = traj.area_curvature_at(t)
        if c == 0.0:
            return []
        dt = -traj.area_rate_at(t) / c
        t = min(max(t + dt, t_lo), t_hi)
        if abs(dt) < 1e-13:
            break
    a0 = traj.area_at(t)
    a1 = traj.area_rate_at(t)
    a2 = traj.area_curvature_at(t)
    disc = a1 * a1 - 2.0 * a0 * a2
    if disc > 0.0 and a2 != 0.0:
        u1 = (-a1 - np.sqrt(disc)) / a2
        u2 = (-a1 + np.sqrt(disc)) / a2
        pair = sorted((t + u1, t + u2))
        if pair[1] - pair[0] > 1e-8:
            pair = [_newton_root(traj, r, t_lo, t_hi) for r in pair]
        # accept only if the polished values really vanish
        if all(abs(traj.area_at(r)) < 1e-7 * scale for r in pair):
            return pair
        return []
    if abs(a0) < umbilic_area_tol * scale:
        return [t, t]
    return []


def find_conjugate_times(traj, umbilic_tol=1e-5, umbilic_area_tol=1e-8,
                         refine_width=1e-10, dense_spacing=0.005):
    """First two conjugate times along a trajectory.

    Returns (R1, R2, kind).  Sign changes of the area scalar on a dense
    sampling of the dense output (at most `dense_spacing` apart) are
    refined by bisection.  Dips of |A| that do not change sign are resolved
    by an exact local quadratic: two closely spaced simple roots inside one
    sample interval are recovered, and a tangency below `umbilic_area_tol`
    (relative to the trajectory's area scale) counts as a double root.
    Raises HorizonTooShort when fewer than two roots (a double root counts
    twice) exist before t_max.
    """
    ts_d, A = traj.dense_areas(dense_spacing)
    scale = np.max(np.abs(A))
    n = len(ts_d)
    # skip the launch region, where A ~ t^2 vanishes by design
    i0 = int(np.searchsorted(ts_d, traj.ts[1])) + 1
    roots = []
    for i in range(i0, n):
        a0, a1 = A[i - 1], A[i]
        if a0 != 0.0 and (a1 > 0) != (a0 > 0):
            roots.append(
                _bisect_root(traj.area_at, ts_d[i - 1], ts_d[i], a0,
                             refine_width)
            )
            if len(roots) == 2:
                break
    if len(roots) < 2:
        # a pair of roots closer than the sampling, or a double root, shows
        # up as a dip of |A| without a sign change
        absA = np.abs(A)
        for i in range(max(i0, 1), n - 1):
            if not (absA[i] <= absA[i - 1] and absA[i] <= absA[i + 1]):
                continue
            if absA[i] > 0.01 * scale:
                continue
            if any(abs(ts_d[i] - r) < 2 * dense_spacing for r in roots):
                continue
            found = _analyze_dip(
                traj, ts_d[i], ts_d[i - 1], ts_d[i + 1], scale,
                umbilic_area_tol,
            )
            roots.extend(found)
            if len(roots) >= 2:
                break
    if len(roots) < 2:
        raise HorizonTooShort(
            f"found {len(roots)} conjugate root(s) before "
            f"t_max={traj.ts[-1]:.4f}; raise t_max",
            direction=None if traj.launch is None else traj.launch.velocity,
        )
    R1, R2 = sorted(roots[:2])
    if R2 - R1 < umbilic_tol:
        kind = KIND_UMBILIC
    elif R2 - R1 < 100 * umbilic_tol:
        kind = KIND_NEAR_UMBILIC
    else:
        kind = KIND_GENERIC
    return R1, R2, kind


def alpha_at(traj, R, kind=KIND_GENERIC):
    """Collapsing-direction angle at a conjugate time, as a line direction
    in [0, pi).

    The 2x2 matrix with columns (xi1, eta1), (xi2, eta2) drops to rank <= 1
    at t=R; alpha comes from its right null vector (the coefficient pair
    (cos a, sin a) with J_a(R) = 0).
    """
    if kind == KIND_UMBILIC:
        raise UmbilicAmbiguity(
            "collapsing direction is not unique at an umbilic direction"
        )
    J = traj.jacobi_matrix_at(R)
    _, _, vt = np.linalg.svd(J)
    w = vt[-1]
    a = np.arctan2(w[1], w[0]) % np.pi
    return a


def alpha_by_scan(traj, R, n=200001):
    """Grid-scan reference for alpha_at: argmin over alpha of |J_alpha(R)|."""
    J = traj.jacobi_matrix_at(R)
    alphas = np.linspace(0.0, np.pi, n)
    vecs = J @ np.vstack([np.cos(alphas), np.sin(alphas)])
    norms = np.hypot(vecs[0], vecs[1])
    return alphas[np.argmin(norms)] % np.pi


def alpha_residual(traj, R, alpha):
    """|J_alpha(R)| relative to the field's maximum magnitude along the
    trajectory."""
    w = np.array([np.cos(alpha), np.sin(alpha)])
    at_R = np.linalg.norm(traj.jacobi_matrix_at(R) @ w)
    ys = traj.ys
    mats = np.stack(
        [np.stack([ys[:, 12], ys[:, 16]], axis=-1),
         np.stack([ys[:, 13], ys[:, 17]], axis=-1)], axis=1
    )
    mx = np.max(np.linalg.norm(mats @ w, axis=1))
    return at_R / mx


def analyze(traj, umbilic_tol=1e-5, umbilic_area_tol=1e-8,
            direction_angles=None):
    """Full per-direction detection: conjugate times, kind, alphas,
    diagnostics, bundled as a ConjugateRecord."""
    R1, R2, kind = find_conjugate_times(traj, umbilic_tol, umbilic_area_tol)
    if kind == KIND_UMBILIC:
        a1 = a2 = np.nan
    else:
        a1 = alpha_at(traj, R1, kind)
        a2 = alpha_at(traj, R2, kind)
    if R2 > R1:
        mids = np.linspace(R1, R2, 256)[1:-1]
        min_between = float(np.min(np.abs(traj.area_at(mids))))
    else:
        min_between = 0.0
    v = traj.launch.velocity if traj.launch is not None else (np.nan,) * 3
    return ConjugateRecord(
        direction_angles=direction_angles,
        direction_velocity=tuple(v),
        R1=R1, R2=R2, alpha1=a1, alpha2=a2, kind=kind,
        inv_product=1.0 / (R1 * R2),
        dA_R1=abs(traj.area_rate_at(R1)),
        dA_R2=abs(traj.area_rate_at(R2)),
        min_area_between=min_between,
    )


# ---------------------------------------------------------------------------
# Independent oracle: zeros of the finite-difference exponential-map Jacobian.

def oracle_conjugate_times(chart, frame, theta, phi, t_max, h=1e-5,
                           rtol=1e-10, atol=1e-12, n_scan=2000):
    """Conjugate times from a finite-difference Jacobian of the exponential
    map, independent of the Jacobi-field integration.

    Four neighbouring geodesics (central differences in the two
    tangent-sphere angles) give the derivative of the ambient exponential
    map with respect to direction; its components in the central
    trajectory's {N, B} plane form a 2x2 determinant whose sign changes
    locate conjugate points.  Test oracle only.
    """
    p = frame.base_point
    trajs = {}
    for key, (dth, dph) in {
        "c": (0.0, 0.0), "tp": (h, 0.0), "tm": (-h, 0.0),
        "pp": (0.0, h), "pm": (0.0, -h),
    }.items():
        v = frame.direction(theta + dth, phi + dph)
        trajs[key] = integrate(
            chart, LaunchSpec(tuple(p), tuple(v), t_max), rtol=rtol, atol=atol
        )

    def det_at(t):
        _, N, B = trajs["c"].frame_ambient_at(t)
        dth_vec = (trajs["tp"].position_ambient_at(t)
                   - trajs["tm"].position_ambient_at(t)) / (2 * h)
        dph_vec = (trajs["pp"].position_ambient_at(t)
                   - trajs["pm"].position_ambient_at(t)) / (2 * h)
        return (dth_vec @ N) * (dph_vec @ B) - (dth_vec @ B) * (dph_vec @ N)

    tgrid = np.linspace(1e-3, trajs["c"].t_end, n_scan)
    vals = np.array([det_at(t) for t in tgrid])
    roots = []
    for i in range(1, len(tgrid)):
        if (vals[i] > 0) != (vals[i - 1] > 0):
            roots.append(
                _bisect_root(det_at, tgrid[i - 1], tgrid[i], vals[i - 1], 1e-12)
            )
        if len(roots) == 2:
            break
    if len(roots) < 2:
        raise HorizonTooShort(
            "oracle found fewer than two conjugate roots", direction=(theta, phi)
        )
    return tuple(sorted(roots))


# ---------------------------------------------------------------------------
# Determinant-identity verification.

@dataclass
class IdentityReport:
    first_derivative_residual: float    # d/dt[J1,J2] vs [J1',J2] + [J1,J2']
    second_derivative_residual: float   # d2/dt2[J1,J2] vs -Tr(M)[J1,J2] + 2[J1',J2']
    simple_zero_rates: tuple            # |A'(R_i)| for the detected roots
    unit_speed_error: float
    frame_gram_error: float


def verify_identities(traj, n_samples=60, fd_step=0.02, roots=None):
    """Residuals of the two determinant identities along a trajectory,
    using finite differences of the integrated area scalar against the
    analytically assembled right-hand sides."""
    t0 = 2 * fd_step + 1e-6
    t1 = traj.t_end - 2 * fd_step - 1e-6
    samples = np.linspace(t0, t1, n_samples)
    r1 = r2 = 0.0
    d = fd_step
    for t in samples:
        Am2, Am1, A0, Ap1, Ap2 = traj.area_at(
            np.array([t - 2 * d, t - d, t, t + d, t + 2 * d])
        )
        # 4th-order central differences
        dA_fd = (Am2 - 8 * Am1 + 8 * Ap1 - Ap2) / (12 * d)
        d2A_fd = (-Am2 + 16 * Am1 - 30 * A0 + 16 * Ap1 - Ap2) / (12 * d * d)
        y, cid = traj.state_at(t)
        axP = traj.axes[CHART_PERMS[cid]]
        xi1, eta1, dxi1, deta1 = y[12:16]
        xi2, eta2, dxi2, deta2 = y[16:20]
        rhs1 = (dxi1 * eta2 - xi2 * deta1) + (xi1 * deta2 - dxi2 * eta1)
        m11, m12, m22 = k.curvature_matrix_entries(
            y[0:3], axP, y[3:6], y[6:9], y[9:12]
        )
        trM = m11 + m22
        rhs2 = -trM * A0 + 2 * (dxi1 * deta2 - dxi2 * deta1)
        r1 = max(r1, abs(dA_fd - rhs1))
        r2 = max(r2, abs(d2A_fd - rhs2))
    rates = ()
    if roots is not None:
        rates = tuple(abs(traj.area_rate_at(R)) for R in roots)
    return IdentityReport(
        first_derivative_residual=r1,
        second_derivative_residual=r2,
        simple_zero_rates=rates,
        unit_speed_error=traj.unit_speed_error(),
        frame_gram_error=traj.frame_gram_error(),
    )
