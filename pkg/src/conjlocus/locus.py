"""Reconstruction of the first conjugate locus over the unit tangent sphere.

A sweep over a latitude-longitude lattice of launch directions yields the
two sheets (the exponential-map images at t=R1 and t=R2), the Jacobi
coordinate lines are integral curves of the collapsing-direction line field
on the tangent sphere, ridges are stationary points of R_i along those
lines, and ribs are their images on the sheets.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import conjugate as cj
from .errors import HorizonTooShort, UmbilicAmbiguity
from .geodesic import LaunchSpec, integrate, orthonormal_frame_at
from .manifold import EllipsoidChart


# ---------------------------------------------------------------------------
# Tangent-sphere frame

@dataclass(frozen=True)
class TangentSphereFrame:
    """A fixed orthonormal basis of the tangent space at the base point.

    Directions are addressed by sphere angles (Theta, Phi) with
    v = cos(Theta) E3 + sin(Theta) (cos(Phi) E1 + sin(Phi) E2), or by unit
    3-vectors of frame components ("frame coordinates"), in which all
    tangent-sphere geometry is Euclidean.
    """

    chart: EllipsoidChart
    base_point: np.ndarray
    basis: np.ndarray      # (3,3), columns are E1, E2, E3 in chart coordinates
    metric: np.ndarray     # metric at the base point

    @classmethod
    def build(cls, chart, base_point, rotation=None):
        p = chart.check_domain(base_point)
        g = chart.metric_at(p)
        cols = []
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1.0
            w = e.copy()
            for u in cols:
                w -= (e @ g @ u) * u
            w /= np.sqrt(w @ g @ w)
            cols.append(w)
        E = np.column_stack(cols)
        if rotation is not None:
            E = E @ np.asarray(rotation, float)
        return cls(chart=chart, base_point=p, basis=E, metric=g)

    def direction(self, theta, phi):
        """Unit coordinate velocity for sphere angles (Theta, Phi)."""
        s = np.array(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi),
             np.cos(theta)]
        )
        return self.basis @ s

    def from_frame(self, s):
        return self.basis @ np.asarray(s, float)

    def to_frame(self, v):
        """Frame components of a coordinate tangent vector at the base
        point."""
        return self.basis.T @ self.metric @ np.asarray(v, float)

    def angles_of(self, s):
        s = np.asarray(s, float)
        return np.arccos(np.clip(s[2], -1, 1)), np.arctan2(s[1], s[0])


def rotation_about(axis, angle):
    """3x3 rotation matrix, for re-seeding the frame away from umbilics."""
    axis = np.asarray(axis, float)
    axis = axis / np.linalg.norm(axis)
    K = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


# ---------------------------------------------------------------------------
# Per-direction analysis

def analyze_direction(frame, theta, phi, t_max, rtol=1e-10, atol=1e-12,
                      umbilic_tol=1e-5, umbilic_area_tol=1e-8,
                      want_trajectory=False):
    """Integrate one lattice direction and detect its conjugate data."""
    v = frame.direction(theta, phi)
    traj = integrate(
        frame.chart, LaunchSpec(tuple(frame.base_point), tuple(v), t_max),
        rtol=rtol, atol=atol,
    )
    rec = cj.analyze(
        traj, umbilic_tol=umbilic_tol, umbilic_area_tol=umbilic_area_tol,
        direction_angles=(theta, phi),
    )
    return (rec, traj) if want_trajectory else rec


# ---------------------------------------------------------------------------
# Sweep

@dataclass
class SheetMesh:
    """Structured (Theta, Phi) grid of one conjugate-locus sheet."""

    thetas: np.ndarray
    phis: np.ndarray
    points_chart: np.ndarray     # (nT, nP, 3) chart-0 coordinates
    points_ambient: np.ndarray   # (nT, nP, 4)
    R: np.ndarray                # (nT, nP)
    kind: np.ndarray             # (nT, nP) int: 0 generic, 1 near-umbilic, 2 umbilic
    ridge_flag: np.ndarray       # (nT, nP) bool
    sheet_index: int = 1

    def quad_faces(self, wrap_phi=True):
        nT, nP = self.R.shape
        faces = []
        for i in range(nT - 1):
            for j in range(nP if wrap_phi else nP - 1):
                j2 = (j + 1) % nP
                faces.append(
                    (i * nP + j, i * nP + j2, (i + 1) * nP + j2, (i + 1) * nP + j)
                )
        return faces


KIND_CODE = {cj.KIND_GENERIC: 0, cj.KIND_NEAR_UMBILIC: 1, cj.KIND_UMBILIC: 2}


@dataclass
class SweepResult:
    frame: TangentSphereFrame
    thetas: np.ndarray
    phis: np.ndarray
    records: list                # row-major over (theta_i, phi_j)
    sheet1: SheetMesh
    sheet2: SheetMesh
    meta: dict = field(default_factory=dict)

    @property
    def R1(self):
        return self.sheet1.R

    @property
    def R2(self):
        return self.sheet2.R

    @property
    def kind_grid(self):
        return self.sheet1.kind


def _n_threads(requested=None):
    env = os.environ.get("CONJLOCUS_THREADS")
    if env:
        return max(1, int(env))
    if requested:
        return max(1, int(requested))
    return min(8, os.cpu_count() or 1)


def sweep(frame, n_theta, n_phi, t_max, rtol=1e-10, atol=1e-12,
          umbilic_tol=1e-5, umbilic_area_tol=1e-8, n_threads=None):
    """Detect conjugate data over an (n_theta x n_phi) direction lattice
    and assemble the two sheets.

    Lattice latitudes are interior (no exact poles); results are written to
    preallocated slots indexed by lattice position, so output is
    deterministic regardless of thread count.
    """
    if n_theta < 16 or n_phi < 32:
        raise ValueError("grid resolution must be at least 16x32")
    thetas = np.pi * (np.arange(n_theta) + 0.5) / n_theta
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    records = [None] * (n_theta * n_phi)
    failures = []

    def work(idx):
        i, j = divmod(idx, n_phi)
        try:
            records[idx] = analyze_direction(
                frame, thetas[i], phis[j], t_max, rtol=rtol, atol=atol,
                umbilic_tol=umbilic_tol, umbilic_area_tol=umbilic_area_tol,
            )
        except HorizonTooShort:
            failures.append((thetas[i], phis[j]))

    nt = _n_threads(n_threads)
    if nt == 1:
        for idx in range(len(records)):
            work(idx)
    else:
        with ThreadPoolExecutor(max_workers=nt) as ex:
            list(ex.map(work, range(len(records))))
    if failures:
        raise HorizonTooShort(
            f"sweep aborted: t_max={t_max} too short for "
            f"{len(failures)} direction(s), first {failures[0]}",
            direction=failures[0],
        )

    sheets = []
    for si in (1, 2):
        pts_c = np.empty((n_theta, n_phi, 3))
        pts_a = np.empty((n_theta, n_phi, 4))
        R = np.empty((n_theta, n_phi))
        kind = np.empty((n_theta, n_phi), int)
        sheets.append(
            SheetMesh(thetas, phis, pts_c, pts_a, R, kind,
                      np.zeros((n_theta, n_phi), bool), sheet_index=si)
        )
    # second pass: map conjugate points through the exponential map (cheap
    # re-integration at sweep tolerances, dense output evaluated at R_i)
    def fill(idx):
        i, j = divmod(idx, n_phi)
        rec = records[idx]
        v = frame.direction(thetas[i], phis[j])
        traj = integrate(
            frame.chart,
            LaunchSpec(tuple(frame.base_point), tuple(v), rec.R2 * 1.0001),
            rtol=rtol, atol=atol,
        )
        for sh, R in ((sheets[0], rec.R1), (sheets[1], rec.R2)):
            sh.R[i, j] = R
            sh.kind[i, j] = KIND_CODE[rec.kind]
            sh.points_ambient[i, j] = traj.position_ambient_at(R)
            sh.points_chart[i, j] = traj.position_chart0_at(R)

    if nt == 1:
        for idx in range(len(records)):
            fill(idx)
    else:
        with ThreadPoolExecutor(max_workers=nt) as ex:
            list(ex.map(fill, range(len(records))))
    return SweepResult(
        frame=frame, thetas=thetas, phis=phis, records=records,
        sheet1=sheets[0], sheet2=sheets[1],
        meta={"t_max": t_max, "rtol": rtol, "atol": atol},
    )


def sweep_with_pole_retry(chart, base_point, n_theta, n_phi, t_max,
                          umbilic_band=1e-3, max_retries=3, **kw):
    """Build a frame, rotating it if a lattice pole lands in the umbilic
    band, then sweep."""
    rot = None
    for attempt in range(max_retries + 1):
        frame = TangentSphereFrame.build(chart, base_point, rotation=rot)
        ok = True
        for sgn in (1.0, -1.0):
            v = sgn * frame.basis[:, 2]
            traj = integrate(
                chart, LaunchSpec(tuple(frame.base_point), tuple(v), t_max),
                rtol=kw.get("rtol", 1e-10), atol=kw.get("atol", 1e-12),
            )
            try:
                R1, R2, kind = cj.find_conjugate_times(traj)
            except HorizonTooShort:
                ok = False
                break
            if R2 - R1 < umbilic_band:
                ok = False
                break
        if ok:
            return sweep(frame, n_theta, n_phi, t_max, **kw)
        rot = rotation_about((1.0, 0.3, 0.0), 0.35 * (attempt + 1))
    return sweep(frame, n_theta, n_phi, t_max, **kw)


# ---------------------------------------------------------------------------
# Jacobi coordinate lines

@dataclass
class PolyLine:
    """Ordered point sequence with per-point scalars.

    `points` live on the unit tangent sphere (frame coordinates), in chart
    coordinates, or in ambient 4-space depending on `space`.
    """

    points: np.ndarray
    label: str            # u_coordinate_line, v_coordinate_line, ridge_R1,
                          # ridge_R2, rib, umbilic_set
    closed: bool = False
    space: str = "tangent_sphere"
    values: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


class _LineField:
    """The collapsing-direction line field w(v) on the tangent sphere.

    Each evaluation integrates the direction's geodesic bundle and extracts
    alpha, so field evaluations dominate the cost of a coordinate line.
    """

    def __init__(self, frame, which, t_max, rtol, atol, umbilic_tol,
                 umbilic_area_tol):
        self.frame = frame
        self.which = which
        self.t_max = t_max
        self.rtol = rtol
        self.atol = atol
        self.umbilic_tol = umbilic_tol
        self.umbilic_area_tol = umbilic_area_tol

    def __call__(self, s):
        """Returns (w, R1, R2, kind): w is the line direction (unit, frame
        coordinates, defined up to sign), tangent to the sphere at s."""
        frame = self.frame
        v = frame.from_frame(s)
        traj = integrate(
            frame.chart,
            LaunchSpec(tuple(frame.base_point), tuple(v), self.t_max),
            rtol=self.rtol, atol=self.atol,
        )
        R1, R2, kind = cj.find_conjugate_times(
            traj, self.umbilic_tol, self.umbilic_area_tol
        )
        if kind == cj.KIND_UMBILIC:
            raise UmbilicAmbiguity(
                "line field undefined at an umbilic direction"
            )
        R = R1 if self.which == "u" else R2
        a = cj.alpha_at(traj, R, kind)
        w_coord = np.cos(a) * traj.N0 + np.sin(a) * traj.B0
        # express in the fixed frame; trajectory may have started in a
        # companion chart, so go through the ambient embedding
        w = self._coord_to_frame(traj, w_coord)
        w /= np.linalg.norm(w)
        return w, R1, R2, kind

    def _coord_to_frame(self, traj, w_coord):
        frame = self.frame
        if traj.start_chart.chart_id == frame.chart.chart_id:
            return frame.to_frame(w_coord)
        from .manifold import chart_transition

        q0 = traj.ys[0][0:3]
        _, (w2,) = chart_transition(
            traj.start_chart, frame.chart, q0, [w_coord]
        )
        return frame.to_frame(w2)


def _align(w, ref):
    return w if np.dot(w, ref) >= 0 else -w


def jacobi_coordinate_line(frame, start, which, t_max, step=0.02,
                           max_steps=2000, closure_tol=0.03,
                           rtol=1e-9, atol=1e-11, umbilic_tol=1e-5,
                           umbilic_area_tol=1e-8, near_umbilic_stop=True):
    """Integrate one Jacobi coordinate line on the unit tangent sphere.

    `start` is either (Theta, Phi) or a unit frame-coordinate 3-vector;
    `which` is 'u' (integral curve of the R1-collapsing directions) or 'v'
    (R2).  Fourth-order Runge-Kutta on the sphere with renormalization and
    sign continuation of the line field; terminates on closure, on entering
    the near-umbilic band, or at max_steps.
    """
    field_fn = _LineField(
        frame, which, t_max, rtol, atol, umbilic_tol, umbilic_area_tol
    )
    s = np.asarray(start, float)
    if s.shape == (2,):
        th, ph = s
        s = np.array(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]
        )
    s = s / np.linalg.norm(s)
    w0, R1, R2, kind = field_fn(s)
    if kind == cj.KIND_NEAR_UMBILIC:
        raise UmbilicAmbiguity("start direction is inside the near-umbilic band")
    pts = [s.copy()]
    vals = {"R1": [R1], "R2": [R2]}
    ref = w0
    w_here = w0
    termination = "max_steps"
    for it in range(max_steps):
        try:
            w1 = _align(w_here, ref)
            k1 = w1
            w2a, *_ = field_fn(_unit(pts[-1] + 0.5 * step * k1))
            k2 = _align(w2a, w1)
            w3a, *_ = field_fn(_unit(pts[-1] + 0.5 * step * k2))
            k3 = _align(w3a, w1)
            w4a, *_ = field_fn(_unit(pts[-1] + step * k3))
            k4 = _align(w4a, w1)
        except (UmbilicAmbiguity, HorizonTooShort):
            termination = "umbilic_band"
            break
        s_new = _unit(pts[-1] + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
        try:
            w_new, R1n, R2n, kind_n = field_fn(s_new)
        except (UmbilicAmbiguity, HorizonTooShort):
            termination = "umbilic_band"
            break
        if near_umbilic_stop and kind_n == cj.KIND_NEAR_UMBILIC:
            pts.append(s_new)
            vals["R1"].append(R1n)
            vals["R2"].append(R2n)
            termination = "umbilic_band"
            break
        if abs(np.dot(_align(w_new, ref), ref)) < 0.2:
            raise UmbilicAmbiguity(
                "sign continuation ambiguous (near-orthogonal consecutive "
                "line directions)"
            )
        ref = _align(w_new, ref)
        w_here = w_new
        pts.append(s_new)
        vals["R1"].append(R1n)
        vals["R2"].append(R2n)
        if it >= 10 and np.linalg.norm(s_new - pts[0]) < closure_tol:
            termination = "closed"
            break
    closed = termination == "closed"
    return PolyLine(
        points=np.array(pts),
        label=("u_coordinate_line" if which == "u" else "v_coordinate_line"),
        closed=closed,
        values={k2: np.array(v) for k2, v in vals.items()},
        meta={"termination": termination, "which": which, "step": step},
    )


def _unit(x):
    return x / np.linalg.norm(x)


# ---------------------------------------------------------------------------
# Ridges

@dataclass
class RidgePoint:
    point: np.ndarray     # frame coordinates on the tangent sphere
    R: float
    which: str            # 'R1' or 'R2'
    ext_type: str         # 'max' or 'min'


def find_ridges(line, which_R):
    """Stationary points of R_i along a coordinate line.

    Locates sign changes of the centred finite-difference derivative,
    refines by a quadratic fit over the bracketing triple, and classifies
    max/min by the second difference.
    """
    R = line.values[which_R]
    pts = line.points
    n = len(R)
    if n < 5:
        return []
    idx = np.arange(n)
    if line.closed:
        dR = (np.roll(R, -1) - np.roll(R, 1)) / 2.0
        valid = idx
    else:
        dR = np.empty(n)
        dR[1:-1] = (R[2:] - R[:-2]) / 2.0
        dR[0] = dR[1]
        dR[-1] = dR[-2]
        valid = idx[1:-2]
    out = []
    for i in valid:
        j = (i + 1) % n
        if not line.closed and j >= n - 1:
            continue
        if dR[i] == 0.0 or (dR[j] > 0) == (dR[i] > 0):
            continue
        # quadratic fit of R over the triple around the crossing
        i0, i1, i2 = (i - 1) % n, i, j
        y0, y1, y2 = R[i0], R[i1], R[i2]
        # vertex of the parabola through (-1, y0), (0, y1), (1, y2)
        denom = y0 - 2 * y1 + y2
        off = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        off = np.clip(off, -1.0, 1.5)
        if off <= 0:
            pa, pb, w = pts[i0], pts[i1], off + 1.0
        else:
            pa, pb, w = pts[i1], pts[i2], off
        p = _unit(pa * (1 - w) + pb * w)
        Rstar = y1 - 0.25 * (y0 - y2) * off
        ext = "min" if denom > 0 else "max"
        out.append(RidgePoint(point=p, R=float(Rstar), which=which_R, ext_type=ext))
    return out


def ridge_points_from_lines(lines, which_R):
    pts = []
    for ln in lines:
        pts.extend(find_ridges(ln, which_R))
    return pts


def chain_points(points, gap_factor=5.0, closure_factor=2.0, min_gap=0.0,
                 thin=0.0):
    """Order scattered points into polylines.

    Greedy nearest-neighbour chaining, split at gaps larger than gap_factor
    times the (global) median consecutive gap, then end-to-end merging of
    the resulting pieces back together under the same threshold.  `min_gap`
    puts an absolute floor on the split/merge/closure threshold, for point
    sets whose density grows unevenly during incremental filling, and
    `thin` drops near-duplicate points closer than that radius to an
    already kept one (dense duplicates derail the greedy walk).

    Returns a list of (indices, closed) chains, indices into `points`.
    """
    pts = np.asarray(points, float)
    n = len(pts)
    if n == 0:
        return []
    idx = np.arange(n)
    if thin > 0.0 and n > 1:
        kept = []
        for i in range(n):
            if all(np.linalg.norm(pts[i] - pts[j]) >= thin for j in kept):
                kept.append(i)
        idx = np.array(kept)
    P = pts[idx]
    m = len(P)
    if m == 1:
        return [([int(idx[0])], False)]
    used = np.zeros(m, bool)
    d2 = np.sum((P[:, None, :] - P[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    raw_chains = []
    while not used.all():
        start = int(np.argmin(used))  # first unused index
        chain = [start]
        used[start] = True
        # grow both ends with no gap limit; outlier links are cut below
        for endsel in (True, False):
            while True:
                tip = chain[-1] if endsel else chain[0]
                dists = np.sqrt(d2[tip])
                dists[used] = np.inf
                j = int(np.argmin(dists))
                if not np.isfinite(dists[j]):
                    break
                used[j] = True
                if endsel:
                    chain.append(j)
                else:
                    chain.insert(0, j)
        raw_chains.append(chain)
    all_gaps = [
        g for chain in raw_chains if len(chain) > 1
        for g in np.linalg.norm(P[chain[1:]] - P[chain[:-1]], axis=1)
    ]
    med = np.median(all_gaps) if all_gaps else 0.0
    threshold = max(gap_factor * med, min_gap)
    pieces = []
    for chain in raw_chains:
        gaps = np.linalg.norm(P[chain[1:]] - P[chain[:-1]], axis=1)
        cuts = [k + 1 for k, g in enumerate(gaps) if g > threshold]
        pieces.extend(chain[a:b] for a, b in
                      zip([0] + cuts, cuts + [len(chain)]))
    # the greedy walk strands arcs when it jumps across a junction; stitch
    # pieces back together while some pair of ends is within the threshold
    while len(pieces) > 1:
        best = None
        for i in range(len(pieces)):
            for j in range(i + 1, len(pieces)):
                a, b = pieces[i], pieces[j]
                combos = (
                    (np.linalg.norm(P[a[-1]] - P[b[0]]), a, b),
                    (np.linalg.norm(P[a[-1]] - P[b[-1]]), a, b[::-1]),
                    (np.linalg.norm(P[a[0]] - P[b[0]]), a[::-1], b),
                    (np.linalg.norm(P[a[0]] - P[b[-1]]), b, a),
                )
                for d, first, second in combos:
                    if best is None or d < best[0]:
                        best = (d, i, j, first, second)
        if best is None or best[0] > threshold:
            break
        _, i, j, first, second = best
        pieces = [p for k, p in enumerate(pieces) if k not in (i, j)]
        pieces.append(list(first) + list(second))
    chains = []
    for piece in pieces:
        closed = (
            len(piece) > 3
            and np.linalg.norm(P[piece[0]] - P[piece[-1]])
            <= max(closure_factor * med, min_gap)
        )
        chains.append(([int(idx[k]) for k in piece], closed))
    return chains


def fibonacci_directions(n):
    """n roughly equidistributed unit vectors (golden-angle spiral)."""
    ga = np.pi * (3.0 - np.sqrt(5.0))
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(1.0 - z * z)
    ph = ga * i
    return np.stack([r * np.cos(ph), r * np.sin(ph), z], axis=1)


def trace_line_family(frame, which, t_max, n_seeds=26, **line_kw):
    """Jacobi coordinate lines of one family from equidistributed seeds.

    Seeds inside the near-umbilic band (or whose line cannot be continued)
    are skipped.
    """
    lines = []
    for s in fibonacci_directions(n_seeds):
        try:
            lines.append(jacobi_coordinate_line(frame, s, which, t_max,
                                                **line_kw))
        except (UmbilicAmbiguity, HorizonTooShort):
            continue
    return lines


def _near_umbilic(umbilics, p, band):
    if umbilics is None:
        return False
    return bool(np.min(np.linalg.norm(umbilics - p, axis=1)) < band)


def _fill_family(frame, which, which_R, lines, t_max, umbilics, band,
                 rounds, fill_step, gap_factor, min_gap, thin, line_kw):
    """Grow the ridge-point set of one line family until its chains either
    close up or terminate at umbilic directions.

    Open chain ends away from any umbilic get a fresh coordinate line
    seeded just beyond the end; each closed new line contributes its R_i
    stationary points.  Points inside the umbilic exclusion band are
    dropped throughout (tiny leaves around an umbilic put both their maxima
    and minima arbitrarily close to it, which would pollute the chains).
    """
    def keep(rp):
        return not _near_umbilic(umbilics, rp.point, band)

    # open lines (terminated by the umbilic band or the step cap) still
    # carry valid interior stationary points
    points = [rp for rp in ridge_points_from_lines(lines, which_R)
              if keep(rp)]
    blocked = []
    for _ in range(rounds):
        target = None
        by_ext = {"min": [], "max": []}
        for rp in points:
            by_ext[rp.ext_type].append(rp)
        for ext in ("min", "max"):
            pts = np.array([rp.point for rp in by_ext[ext]])
            if len(pts) < 3:
                continue
            for chain, closed in chain_points(pts, gap_factor=gap_factor,
                                              min_gap=min_gap, thin=thin):
                if closed or len(chain) < 3:
                    continue
                for e_i, p_i in ((chain[-1], chain[-2]), (chain[0], chain[1])):
                    e, pr = pts[e_i], pts[p_i]
                    if _near_umbilic(umbilics, e, 1.5 * band):
                        continue  # partial ridge resting at an umbilic
                    if any(np.linalg.norm(e - b) < 1e-7 for b in blocked):
                        continue  # already tried from here, no progress
                    target = (e, pr)
                    break
                if target is not None:
                    break
            if target is not None:
                break
        if target is None:
            break
        e, pr = target
        blocked.append(e.copy())
        d = e - pr
        nd = np.linalg.norm(d)
        if nd == 0.0:
            continue
        seed = _unit(e + min(fill_step, max(3.0 * nd, 0.03)) * d / nd)
        try:
            ln = jacobi_coordinate_line(frame, seed, which, t_max, **line_kw)
        except (UmbilicAmbiguity, HorizonTooShort):
            continue
        lines.append(ln)
        points.extend(rp for rp in find_ridges(ln, which_R) if keep(rp))
    return points


@dataclass
class RidgeNetwork:
    lines_u: list          # PolyLine coordinate lines traced (u family)
    lines_v: list
    ridge_points: list     # RidgePoint, both families
    ridge_lines: list      # chained PolyLines on the tangent sphere
    ribs: list             # their exponential-map images
    umbilics: object       # unit frame vectors used for the exclusion band


def ridge_network(frame, t_max, umbilics=None, n_seeds=26,
                  fill_rounds=80, fill_step=0.12, umbilic_band=0.1,
                  gap_factor=5.0, chain_min_gap=0.25, chain_thin=0.02,
                  step=0.03, rtol=1e-8, atol=1e-10):
    """Full ridge extraction: coordinate-line families from equidistributed
    seeds, gap-filling until every ridge chain closes or ends at an
    umbilic, then chaining and exponential-map imaging."""
    line_kw = dict(step=step, rtol=rtol, atol=atol)
    if umbilics is None:
        umb = None
    else:
        # Accept either bare direction vectors or the (direction, R, gap)
        # tuples returned by find_umbilic_directions.
        umb = np.array([u[0] if isinstance(u, tuple) else u for u in umbilics],
                       float)
    lines_u = trace_line_family(frame, "u", t_max, n_seeds, **line_kw)
    lines_v = trace_line_family(frame, "v", t_max, n_seeds, **line_kw)
    pts = _fill_family(frame, "u", "R1", lines_u, t_max, umb, umbilic_band,
                       fill_rounds, fill_step, gap_factor, chain_min_gap,
                       chain_thin, line_kw)
    pts += _fill_family(frame, "v", "R2", lines_v, t_max, umb, umbilic_band,
                        fill_rounds, fill_step, gap_factor, chain_min_gap,
                        chain_thin, line_kw)
    ridge_lines, ribs = assemble_ribs(frame, pts, t_max,
                                      gap_factor=gap_factor,
                                      min_gap=chain_min_gap,
                                      thin=chain_thin)
    return RidgeNetwork(
        lines_u=lines_u, lines_v=lines_v, ridge_points=pts,
        ridge_lines=ridge_lines, ribs=ribs, umbilics=umb,
    )


def assemble_ribs(frame, ridge_points, t_max, rtol=1e-9, atol=1e-11,
                  gap_factor=5.0, min_gap=0.0, thin=0.0, min_chain=3):
    """Map ridge points through the exponential map and chain their images
    into rib polylines (one per ridge chain).  Chains shorter than
    `min_chain` (isolated spurious extrema) are dropped."""
    ribs = []
    ridge_lines = []
    by_key = {}
    for rp in ridge_points:
        by_key.setdefault((rp.which, rp.ext_type), []).append(rp)
    for (which, ext), rps in sorted(by_key.items()):
        pts = np.array([rp.point for rp in rps])
        for chain, closed in chain_points(pts, gap_factor=gap_factor,
                                          min_gap=min_gap, thin=thin):
            if len(chain) < min_chain:
                continue
            sub = [rps[i] for i in chain]
            sphere_pts = np.array([rp.point for rp in sub])
            ridge_lines.append(
                PolyLine(
                    points=sphere_pts,
                    label=f"ridge_{which}", closed=closed,
                    values={"R": np.array([rp.R for rp in sub])},
                    meta={"ext_type": ext},
                )
            )
            amb = np.empty((len(sub), 4))
            crd = np.empty((len(sub), 3))
            for m, rp in enumerate(sub):
                v = frame.from_frame(rp.point)
                traj = integrate(
                    frame.chart,
                    LaunchSpec(tuple(frame.base_point), tuple(v), rp.R * 1.0001),
                    rtol=rtol, atol=atol,
                )
                amb[m] = traj.position_ambient_at(rp.R)
                crd[m] = traj.position_chart0_at(rp.R)
            ribs.append(
                PolyLine(
                    points=crd, label="rib", closed=closed, space="chart",
                    values={"R": np.array([rp.R for rp in sub])},
                    meta={
                        "which": which, "ext_type": ext, "ambient": amb,
                        "sheet": 1 if which == "R1" else 2,
                    },
                )
            )
    return ridge_lines, ribs


# ---------------------------------------------------------------------------
# Umbilic directions

def find_umbilic_directions(sweep_result, band=None, refine=True,
                            rtol=1e-10, atol=1e-12):
    """Cluster lattice directions inside the umbilic band and refine each
    cluster by minimizing R2 - R1 over the sphere.

    Returns a list of (unit frame vector, common distance, gap).  On a
    round manifold every direction is umbilic; the degenerate all-sphere
    case is signalled by returning None.
    """
    res = sweep_result
    gap = res.R2 - res.R1
    if band is None:
        # adaptive: grid points markedly closer to degeneracy than typical
        band = max(0.05 * np.max(gap), 1e-4)
    mask = gap < band
    if mask.mean() > 0.5:
        return None  # round / everywhere-umbilic case
    nT, nP = gap.shape
    # union-find clustering over the lattice (phi wraps)
    parent = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    cells = [(i, j) for i in range(nT) for j in range(nP) if mask[i, j]]
    for c in cells:
        parent[c] = c
    cellset = set(cells)
    for (i, j) in cells:
        for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
            nb = (i + di, (j + dj) % nP)
            if nb in cellset:
                union((i, j), nb)
    clusters = {}
    for c in cells:
        clusters.setdefault(find(c), []).append(c)

    frame = res.frame
    out = []
    for members in clusters.values():
        # seed at the member with the smallest gap
        i0, j0 = min(members, key=lambda c: gap[c])
        th0, ph0 = res.thetas[i0], res.phis[j0]
        if not refine:
            s = np.array([np.sin(th0) * np.cos(ph0),
                          np.sin(th0) * np.sin(ph0), np.cos(th0)])
            out.append((s, 0.5 * (res.R1[i0, j0] + res.R2[i0, j0]),
                        gap[i0, j0]))
            continue

        def objective(x):
            th, ph = x
            try:
                rec = analyze_direction(
                    frame, th, ph, res.meta["t_max"], rtol=rtol, atol=atol
                )
            except HorizonTooShort:
                return 1e3
            return rec.R2 - rec.R1

        r = minimize(
            objective, np.array([th0, ph0]), method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 200},
        )
        th, ph = r.x
        rec = analyze_direction(frame, th, ph, res.meta["t_max"],
                                rtol=rtol, atol=atol)
        s = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph),
                      np.cos(th)])
        out.append((s, 0.5 * (rec.R1 + rec.R2), rec.R2 - rec.R1))
    # merge clusters that refined to the same direction
    merged = []
    for s, R, g in out:
        if all(np.linalg.norm(s - s2) > 1e-3 for s2, _, _ in merged):
            merged.append((s, R, g))
    return merged


# ---------------------------------------------------------------------------
# Distance spheres

def distance_spheres(sweep_result):
    """The polar surfaces r=R1 and r=R2 in the tangent space, as meshes of
    frame-coordinate points over the sweep lattice."""
    res = sweep_result
    nT, nP = res.R1.shape
    th = res.thetas[:, None]
    ph = res.phis[None, :]
    u = np.stack(
        [np.sin(th) * np.cos(ph) * np.ones_like(ph),
         np.sin(th) * np.sin(ph) * np.ones_like(ph),
         np.cos(th) * np.ones_like(ph)], axis=-1
    )
    return u * res.R1[:, :, None], u * res.R2[:, :, None]


# ---------------------------------------------------------------------------
# Line-element check (Theorem-3-style numeric witness)

@dataclass
class LineElementReport:
    u_residual: float       # |c1_u - R1_u gamma'| / scale along a u-line
    v_residual: float       # | |c1_v - R1_v gamma'| - |J_v(R1)| | / |J_v(R1)|
    cross_residual: float   # |<c1_v - R1_v gamma', gamma'>| / |c1_v|


def sheet_line_element_check(frame, u_line, v_line, which_R="R1",
                             rtol=1e-10, atol=1e-12, ridge_margin=0.2):
    """Compare finite differences of the reconstructed sheet against the
    diagonal line element ds^2 = dR1^2 + |J_v(R1)|^2 dv^2.

    Along a u-line the sheet tangent must be purely radial (the u-Jacobi
    field vanishes at R1); along a v-line the non-radial part must have the
    norm of the second Jacobi field and no radial cross-term.  Points
    within `ridge_margin` (arc length on the sphere) of a stationary point
    of R1 are excluded.
    """
    t_max = _line_t_max(u_line, v_line)

    def sheet_data(s):
        v = frame.from_frame(s)
        traj = integrate(
            frame.chart,
            LaunchSpec(tuple(frame.base_point), tuple(v), t_max),
            rtol=rtol, atol=atol,
        )
        R1, R2, kind = cj.find_conjugate_times(traj)
        R = R1 if which_R == "R1" else R2
        x = traj.position_ambient_at(R)
        T, N, B = traj.frame_ambient_at(R)
        a2 = cj.alpha_at(traj, R2 if which_R == "R1" else R1, kind)
        # norm of the transverse Jacobi field at t=R: the field collapsing
        # at the *other* conjugate time
        Jm = traj.jacobi_matrix_at(R)
        w = np.array([np.cos(a2), np.sin(a2)])
        Jnorm = np.linalg.norm(Jm @ w)
        return x, R, T, Jnorm

    def residuals(line, du, is_u):
        pts = line.points
        n = len(pts)
        Rarr = line.values[which_R]
        # exclude neighbourhoods of stationary points of R along the line
        ridge_idx = [i for i in range(1, n - 1)
                     if (Rarr[i] - Rarr[i - 1]) * (Rarr[i + 1] - Rarr[i]) < 0]
        keep = []
        for i in range(2, n - 2, max(1, (n - 4) // 12)):
            if all(abs(i - ri) * du > ridge_margin for ri in ridge_idx):
                keep.append(i)
        worst_u = worst_v = worst_x = 0.0
        for i in keep:
            xm, Rm, _, _ = sheet_data(pts[i - 1])
            xp, Rp, _, _ = sheet_data(pts[i + 1])
            x0, R0, T0, Jn = sheet_data(pts[i])
            c_s = (xp - xm) / (2 * du)
            R_s = (Rp - Rm) / (2 * du)
            if is_u:
                resid = np.linalg.norm(c_s - R_s * T0)
                scale = max(np.linalg.norm(c_s), abs(R_s), 1e-12)
                worst_u = max(worst_u, resid / scale)
            else:
                rem = c_s - R_s * T0
                worst_v = max(worst_v, abs(np.linalg.norm(rem) - Jn) / max(Jn, 1e-12))
                worst_x = max(
                    worst_x, abs(rem @ T0) / max(np.linalg.norm(c_s), 1e-12)
                )
        return worst_u, worst_v, worst_x

    du = u_line.meta["step"]
    dv = v_line.meta["step"]
    wu, _, _ = residuals(u_line, du, is_u=(which_R == "R1"))
    _, wv, wx = residuals(v_line, dv, is_u=False)
    return LineElementReport(u_residual=wu, v_residual=wv, cross_residual=wx)


def _line_t_max(u_line, v_line):
    return float(
        max(np.max(u_line.values["R2"]), np.max(v_line.values["R2"]))
    ) * 1.3
