"""Trace a pair of Jacobi coordinate lines on the tangent sphere.

Starting from one direction, follows the two collapsing-direction line
fields (the "u" and "v" families) until each curve closes, then reports
the extrema of R1 along the u-line and of R2 along the v-line.  These
extrema are the seeds of the ridge lines on the two sheets.

Run:  python3 demos/demo_coords.py
"""

import numpy as np

import conjlocus as cl


def main():
    chart = cl.EllipsoidChart(cl.PAPER_SEMI_AXES)
    frame = cl.TangentSphereFrame.build(chart, cl.PAPER_BASE_POINT)
    t_max = cl.RunConfig().resolved_t_max()

    start = (1.1, 0.7)
    for which, which_R in (("u", "R1"), ("v", "R2")):
        line = cl.jacobi_coordinate_line(
            frame, start, which, t_max, step=0.03, rtol=1e-8, atol=1e-10
        )
        R = np.asarray(line.values[which_R])
        print(f"{which}-line: {len(line.points)} points, closed={bool(line.closed)}")
        print(f"  {which_R} range [{R.min():.6f}, {R.max():.6f}]")
        for rp in cl.find_ridges(line, which_R):
            th, ph = frame.angles_of(rp.point)
            print(
                f"  ridge point: {which_R} {rp.ext_type} = {rp.R:.6f} "
                f"at (Theta, Phi) = ({th:.4f}, {ph:.4f})"
            )

    rep = cl.sheet_line_element_check(
        frame,
        cl.jacobi_coordinate_line(frame, start, "u", t_max, step=0.03, rtol=1e-8, atol=1e-10),
        cl.jacobi_coordinate_line(frame, start, "v", t_max, step=0.03, rtol=1e-8, atol=1e-10),
        rtol=1e-8,
        atol=1e-10,
    )
    print(
        "line-element residuals: "
        f"u {rep.u_residual:.2e}, v {rep.v_residual:.2e}, cross {rep.cross_residual:.2e}"
    )


if __name__ == "__main__":
    main()
