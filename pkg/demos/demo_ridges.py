"""Build the full ridge network: umbilic directions, ridges, and ribs.

Sweeps the tangent sphere, refines the four umbilic directions, traces
coordinate-line families on both sheets, and assembles the ridge lines.
Expected structure for the quadraxial case study:

  sheet 1 (R1): one closed ridge of minima + two partial arcs of maxima
  sheet 2 (R2): one closed ridge of maxima + two partial arcs of minima

and the four partial arcs join through the four umbilic directions into a
single closed cycle with alternating sheet labels.

This is the most expensive demo (a few minutes).

Run:  python3 demos/demo_ridges.py
"""

import numpy as np

import conjlocus as cl


def main():
    cfg = cl.RunConfig(n_theta=32, n_phi=64)
    chart = cl.EllipsoidChart(cfg.semi_axes)
    frame = cl.TangentSphereFrame.build(chart, cfg.base_point)
    t_max = cfg.resolved_t_max()

    print("sweeping directions ...")
    sw = cl.sweep(frame, cfg.n_theta, cfg.n_phi, t_max)
    umbilics = cl.find_umbilic_directions(sw)
    print(f"umbilic directions: {len(umbilics)}")
    for d, R, gap in umbilics:
        print(f"  dir {np.round(d, 6)}  R = {R:.6f}  double-root gap = {gap:.1e}")

    print("tracing coordinate-line families and chaining ridges ...")
    net = cl.ridge_network(frame, t_max, umbilics=umbilics)

    for line in net.ridge_lines:
        shape = "closed ring" if line.closed else "partial arc"
        print(
            f"  {line.label} ({line.meta['ext_type']}): "
            f"{len(line.points)} points, {shape}"
        )
    print(f"ribs (chart-space images): {len(net.ribs)}")


if __name__ == "__main__":
    main()
