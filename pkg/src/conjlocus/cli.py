"""Command-line surface.

Subcommands: trace, sweep, sheets, coords, ridges, verify.
Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure (diagnostics written next to the outputs).
"""

import argparse
import os
import sys
import traceback

import numpy as np

from . import conjugate as cj
from . import io as cio
from . import locus as lc
from .config import parse_config
from .errors import ConfigError, ConjLocusError
from .geodesic import LaunchSpec, integrate
from .manifold import EllipsoidChart
from .verify import FIG2_GENERIC_DIRECTION, Verifier, format_table


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--semi-axes", dest="semi_axes",
                        help="a,b,c,d (overrides config)")
    common.add_argument("--base-point", dest="base_point",
                        help="theta,phi,psi (overrides config)")
    common.add_argument("--t-max", dest="t_max", help="integration horizon")
    common.add_argument("--grid", help="NTHETAxNPHI sweep resolution")
    common.add_argument("--out-dir", dest="out_dir", help="output directory")
    common.add_argument("--seed", help="random seed for test sampling")
    common.add_argument("--threads", dest="n_threads",
                        help="sweep worker threads (0 = automatic)")
    common.add_argument("--ply-binary", dest="ply_binary",
                        action="store_true", default=None,
                        help="binary little-endian PLY output")
    common.add_argument("--ambient", dest="ambient_output",
                        action="store_true", default=None,
                        help="emit ambient 4-space coordinates in PLY")
    p = argparse.ArgumentParser(
        prog="conjlocus",
        description="First conjugate locus of a base point on a convex "
                    "3-manifold (quadraxial ellipsoid case study built in).",
    )
    sub = p.add_subparsers(dest="command", required=True)
    t = sub.add_parser("trace", parents=[common],
                       help="area scalar along one direction")
    t.add_argument("--direction",
                   help="Theta,Phi frame angles or v1,v2,v3 chart velocity "
                        "(default: the built-in generic example direction)")
    sub.add_parser("sweep", parents=[common],
                   help="full-lattice conjugate records + distance spheres")
    sub.add_parser("sheets", parents=[common],
                   help="the two conjugate-locus sheet meshes")
    c = sub.add_parser("coords", parents=[common],
                       help="Jacobi coordinate lines on the tangent sphere")
    c.add_argument("--n-lines", type=int, default=8,
                   help="seeds per family (default 8)")
    sub.add_parser("ridges", parents=[common],
                   help="ridge/rib polylines and umbilic directions")
    v = sub.add_parser("verify", parents=[common],
                       help="run the acceptance checks")
    v.add_argument("--check", action="append",
                   help="run only the named check (repeatable)")
    return p


def _config_from_args(args):
    overrides = {}
    for key in ("semi_axes", "base_point", "t_max", "out_dir", "seed",
                "n_threads", "ply_binary", "ambient_output"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    grid = getattr(args, "grid", None)
    if grid:
        try:
            n_theta, n_phi = (int(x) for x in grid.lower().split("x"))
        except ValueError:
            raise ConfigError(f"grid: expected NTHETAxNPHI, got {grid!r}")
        overrides["n_theta"] = n_theta
        overrides["n_phi"] = n_phi
    return parse_config(getattr(args, "config", None), overrides)


def _parse_direction(frame, text):
    if text is None:
        return np.asarray(FIG2_GENERIC_DIRECTION, float)
    parts = [float(x) for x in text.split(",")]
    if len(parts) == 2:
        return frame.direction(parts[0], parts[1])
    if len(parts) == 3:
        return np.asarray(parts, float)
    raise ConfigError("direction: expected 2 angles or 3 velocity components")


def _sweep(cfg, chart):
    return lc.sweep_with_pole_retry(
        chart, tuple(cfg.base_point), cfg.n_theta, cfg.n_phi,
        cfg.resolved_t_max(), rtol=cfg.rtol, atol=cfg.atol,
        umbilic_tol=cfg.umbilic_tol, umbilic_area_tol=cfg.umbilic_area_tol,
        n_threads=cfg.n_threads or None,
    )


def _sphere_mesh(res, sphere_pts, R, index):
    nT, nP = R.shape
    return lc.SheetMesh(
        thetas=res.thetas, phis=res.phis, points_chart=sphere_pts,
        points_ambient=np.zeros((nT, nP, 4)), R=R,
        kind=res.sheet1.kind, ridge_flag=np.zeros_like(R, dtype=bool),
        sheet_index=index,
    )


def cmd_trace(cfg, args):
    chart = EllipsoidChart(tuple(cfg.semi_axes))
    frame = lc.TangentSphereFrame.build(chart, tuple(cfg.base_point))
    v = _parse_direction(frame, getattr(args, "direction", None))
    traj = integrate(
        chart, LaunchSpec(tuple(cfg.base_point), tuple(v),
                          cfg.resolved_t_max()),
        rtol=cfg.rtol, atol=cfg.atol,
    )
    ts, areas = traj.dense_areas(0.005)
    out = os.path.join(cio.ensure_out_dir(cfg), "trace.csv")
    cio.write_trace_csv(out, ts, areas, config=cfg)
    rec = cj.analyze(traj, umbilic_tol=cfg.umbilic_tol,
                     umbilic_area_tol=cfg.umbilic_area_tol)
    print(f"wrote {out}")
    print(f"R1 = {rec.R1:.9f}  R2 = {rec.R2:.9f}  kind = {rec.kind}")
    return 0


def cmd_sweep(cfg, args):
    chart = EllipsoidChart(tuple(cfg.semi_axes))
    res = _sweep(cfg, chart)
    out_dir = cio.ensure_out_dir(cfg)
    rec_path = os.path.join(out_dir, "sweep.csv")
    cio.write_records_csv(rec_path, res.records, config=cfg)
    s1, s2 = lc.distance_spheres(res)
    for name, pts, R, i in (("distance_sphere_R1.ply", s1, res.R1, 1),
                            ("distance_sphere_R2.ply", s2, res.R2, 2)):
        path = os.path.join(out_dir, name)
        cio.write_sheet_ply(path, _sphere_mesh(res, pts, R, i), config=cfg,
                            binary=cfg.ply_binary)
        print(f"wrote {path}")
    print(f"wrote {rec_path}")
    return 0


def cmd_sheets(cfg, args):
    chart = EllipsoidChart(tuple(cfg.semi_axes))
    res = _sweep(cfg, chart)
    out_dir = cio.ensure_out_dir(cfg)
    for mesh, name in ((res.sheet1, "sheet1.ply"), (res.sheet2, "sheet2.ply")):
        path = os.path.join(out_dir, name)
        cio.write_sheet_ply(path, mesh, config=cfg, binary=cfg.ply_binary,
                            ambient=cfg.ambient_output)
        print(f"wrote {path}")
    return 0


def cmd_coords(cfg, args):
    chart = EllipsoidChart(tuple(cfg.semi_axes))
    frame = lc.TangentSphereFrame.build(chart, tuple(cfg.base_point))
    out_dir = cio.ensure_out_dir(cfg)
    for which in ("u", "v"):
        lines = lc.trace_line_family(
            frame, which, cfg.resolved_t_max(), n_seeds=args.n_lines,
            step=cfg.line_step, closure_tol=cfg.closure_tol,
        )
        path = os.path.join(out_dir, f"coords_{which}.csv")
        cio.write_polyline_csv(path, lines, config=cfg)
        print(f"wrote {path} ({len(lines)} lines, "
              f"{sum(l.closed for l in lines)} closed)")
    return 0


def cmd_ridges(cfg, args):
    chart = EllipsoidChart(tuple(cfg.semi_axes))
    res = _sweep(cfg, chart)
    umb = lc.find_umbilic_directions(res)
    U = None if umb is None else np.array([w for w, _, _ in umb])
    net = lc.ridge_network(res.frame, cfg.resolved_t_max(), umbilics=U)
    out_dir = cio.ensure_out_dir(cfg)
    ridge_path = os.path.join(out_dir, "ridges.csv")
    cio.write_polyline_csv(ridge_path, net.ridge_lines, config=cfg)
    rib_path = os.path.join(out_dir, "ribs.csv")
    cio.write_polyline_csv(rib_path, net.ribs, config=cfg)
    umb_path = os.path.join(out_dir, "umbilics.csv")
    rows = [] if umb is None else [
        (i, *w, R, gap) for i, (w, R, gap) in enumerate(umb)
    ]
    cio.write_csv(umb_path, "umbilic_directions",
                  ("index", "w1", "w2", "w3", "R", "gap"), rows, config=cfg)
    for path in (ridge_path, rib_path, umb_path):
        print(f"wrote {path}")
    return 0


def cmd_verify(cfg, args):
    outcomes = Verifier(cfg).run(names=getattr(args, "check", None))
    print(format_table(outcomes))
    return 0 if all(o.passed for o in outcomes) else 1


COMMANDS = {
    "trace": cmd_trace,
    "sweep": cmd_sweep,
    "sheets": cmd_sheets,
    "coords": cmd_coords,
    "ridges": cmd_ridges,
    "verify": cmd_verify,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (ConjLocusError, FloatingPointError) as e:
        diag = os.path.join(cio.ensure_out_dir(cfg), "diagnostics.txt")
        with open(diag, "w") as fh:
            fh.write(f"{type(e).__name__}: {e}\n\n")
            fh.write(traceback.format_exc())
            fh.write("\nresolved config:\n" + cfg.to_json() + "\n")
        print(f"numerical failure: {e} (diagnostics in {diag})",
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
