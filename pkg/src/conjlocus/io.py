"""Deterministic CSV / PLY emission with provenance headers.

Every CSV carries `# schema=<name>/v<n>` and `# config=<hash>` comment
lines; every output file gets a JSON sidecar with the fully resolved
configuration.  Floats are printed with %.17g so identical runs produce
byte-identical files.
"""

import os
import struct

import numpy as np

from .config import SCHEMA_VERSION

FLOAT_FMT = "%.17g"


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % x
    return str(x)


def write_sidecar(path, config):
    with open(path + ".meta.json", "w") as fh:
        fh.write(config.to_json() + "\n")


def _csv_header(schema, config):
    lines = [f"# schema={schema}/v{SCHEMA_VERSION}"]
    if config is not None:
        lines.append(f"# config={config.hash()}")
    return lines


def write_csv(path, schema, columns, rows, config=None):
    """Rows of already-ordered cells under named columns."""
    lines = _csv_header(schema, config)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(c) for c in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if config is not None:
        write_sidecar(path, config)


def write_records_csv(path, records, config=None):
    from .conjugate import ConjugateRecord
    write_csv(path, "conjugate_records", ConjugateRecord.CSV_FIELDS,
              (r.csv_row() for r in records), config=config)


def write_trace_csv(path, ts, areas, config=None):
    write_csv(path, "area_trace", ("t", "area"),
              zip(ts, areas), config=config)


def write_polyline_csv(path, lines, config=None):
    """PolyLines to CSV: label, index, point components, value columns."""
    value_keys = sorted({k for ln in lines for k in ln.values})
    columns = ["label", "index", "closed", "c1", "c2", "c3"] + value_keys
    rows = []
    for ln in lines:
        for i, p in enumerate(ln.points):
            row = [ln.label, i, int(ln.closed)] + list(p[:3])
            for k in value_keys:
                row.append(ln.values[k][i] if k in ln.values else "")
            rows.append(row)
    write_csv(path, "polylines", columns, rows, config=config)


def write_sheet_ply(path, mesh, config=None, binary=False, ambient=False):
    """SheetMesh to PLY: vertices with coordinates, R, kind, ridge_flag,
    and quad faces.

    Vertex x,y,z are chart coordinates by default; with `ambient` they are
    the first three ambient embedding components (property w carries the
    fourth).
    """
    nT, nP = mesh.R.shape
    if ambient:
        pts = mesh.points_ambient.reshape(-1, 4)
    else:
        pts = mesh.points_chart.reshape(-1, 3)
    R = mesh.R.reshape(-1)
    kind = mesh.kind.reshape(-1).astype(np.int32)
    ridge = mesh.ridge_flag.reshape(-1).astype(np.int32)
    faces = mesh.quad_faces()
    header = ["ply"]
    header.append("format binary_little_endian 1.0" if binary
                  else "format ascii 1.0")
    header.append(f"comment schema=sheet_mesh/v{SCHEMA_VERSION}")
    if config is not None:
        header.append(f"comment config={config.hash()}")
    header.append(f"element vertex {len(pts)}")
    for prop in ("x", "y", "z") + (("w",) if ambient else ()):
        header.append(f"property double {prop}")
    header.append("property double R")
    header.append("property int kind")
    header.append("property int ridge_flag")
    header.append(f"element face {len(faces)}")
    header.append("property list uchar int vertex_indices")
    header.append("end_header")
    if binary:
        with open(path, "wb") as fh:
            fh.write(("\n".join(header) + "\n").encode("ascii"))
            for i in range(len(pts)):
                fh.write(struct.pack("<" + "d" * (pts.shape[1] + 1),
                                     *pts[i], R[i]))
                fh.write(struct.pack("<ii", kind[i], ridge[i]))
            for f in faces:
                fh.write(struct.pack("<B4i", 4, *f))
    else:
        lines = list(header)
        for i in range(len(pts)):
            cells = [FLOAT_FMT % v for v in pts[i]] + [FLOAT_FMT % R[i],
                                                       str(kind[i]),
                                                       str(ridge[i])]
            lines.append(" ".join(cells))
        for f in faces:
            lines.append("4 " + " ".join(str(v) for v in f))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    if config is not None:
        write_sidecar(path, config)


def read_csv(path):
    """Read back a CSV written by write_csv: (meta, columns, rows)."""
    meta = {}
    columns = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            if columns is None:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    return meta, columns, rows


def ensure_out_dir(config):
    os.makedirs(config.out_dir, exist_ok=True)
    return config.out_dir
