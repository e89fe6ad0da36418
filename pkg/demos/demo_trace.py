"""Trace the transverse area determinant along a single geodesic.

Integrates the geodesic + Jacobi bundle for one launch direction on the
quadraxial ellipsoid, prints both conjugate radii with their kernel
angles, and shows a coarse text profile of the area determinant so the
two sign changes are visible at a glance.

Run:  python3 demos/demo_trace.py
"""

import numpy as np

import conjlocus as cl


def main():
    chart = cl.EllipsoidChart(cl.PAPER_SEMI_AXES)
    t_max = cl.RunConfig().resolved_t_max()

    # A generic direction: the two conjugate radii are well separated.
    velocity = (-0.730, 0.425, -0.774)
    traj = cl.integrate(chart, cl.LaunchSpec(cl.PAPER_BASE_POINT, velocity, t_max))
    rec = cl.analyze(traj)

    print(f"semi-axes      : {cl.PAPER_SEMI_AXES}")
    print(f"base point     : {tuple(round(c, 6) for c in cl.PAPER_BASE_POINT)}")
    print(f"launch velocity: {velocity}")
    print()
    print(f"R1 = {rec.R1:.9f}   alpha1 = {rec.alpha1:.6f}")
    print(f"R2 = {rec.R2:.9f}   alpha2 = {rec.alpha2:.6f}")
    print(f"kind = {rec.kind}")
    print()

    ts = np.linspace(0.05, t_max, 60)
    areas = np.array([traj.area_at(t) for t in ts])
    peak = np.max(np.abs(areas))
    print("area determinant along the geodesic (x marks the zero line):")
    for t, a in zip(ts[::2], areas[::2]):
        bar = int(30 * a / peak)
        lo, hi = min(0, bar), max(0, bar)
        line = [" "] * 61
        for i in range(lo, hi + 1):
            line[30 + i] = "#"
        line[30] = "x" if abs(a) < 0.02 * peak else line[30]
        print(f"  t={t:5.2f} {''.join(line)}")


if __name__ == "__main__":
    main()
