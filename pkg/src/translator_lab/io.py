"""Plain-text exports: CSV tables and legacy VTK structured points."""

from __future__ import annotations

import csv
import os

import numpy as np

from .solitons import BowlProfile

BOWL_HEADER = ("r", "u", "du", "d2u")
GROWTH_HEADER = ("R", "f_R", "ratio")
SWEEP_HEADER = ("a", "sup_value", "lambda1")


def _fmt(x) -> str:
    return "%.17g" % float(x)


def write_csv(path, header, rows):
    """Write ``rows`` with ``%.17g`` formatting under an exact header line."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_csv(path):
    """Return ``(header, array)`` for a numeric CSV written by :func:`write_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        data = [[float(v) for v in row] for row in reader if row]
    return header, np.array(data, dtype=float).reshape(-1, len(header))


def write_diagnostics_csv(diag, path):
    return write_csv(path, diag.CSV_HEADER.split(","), diag.rows())


def read_diagnostics_csv(path):
    header, data = read_csv(path)
    return {name: data[:, i] for i, name in enumerate(header)}


def write_bowl_csv(profile: BowlProfile, path):
    rows = zip(profile.radii, profile.u, profile.du, profile.d2u)
    return write_csv(path, BOWL_HEADER, rows)


def read_bowl_csv(path, n: int, r_series: float | None = None) -> BowlProfile:
    header, data = read_csv(path)
    if header != BOWL_HEADER:
        raise ValueError(f"unexpected bowl header {header}")
    r, u, du, d2u = data.T
    return BowlProfile(n=n, radii=r, u=u, du=du, d2u=d2u,
                       r_series=float(r[0] if r_series is None else r_series))


def write_growth_csv(report, path):
    return write_csv(path, GROWTH_HEADER, zip(report.R, report.f_R, report.ratio))


def write_sweep_csv(rows, path):
    """Rows ``(a, sup_value, lambda1)`` of a stability sweep."""
    return write_csv(path, SWEEP_HEADER, rows)


def write_field_csv(state, path):
    """``x,f1..fk`` for a one-dimensional flow, lattice and boundary nodes sorted by x."""
    g = state.grid
    if g.n != 1:
        raise ValueError("field CSV export is for n = 1; use write_field_vtk for n = 2")
    x = g.coords[:, 0]
    order = np.argsort(x, kind="stable")
    header = ["x"] + [f"f{a + 1}" for a in range(state.k)]
    rows = (np.concatenate([[x[i]], state.V[i]]) for i in order)
    return write_csv(path, header, rows)


def write_field_vtk(state, path, title="translator_lab field"):
    """Legacy ASCII VTK ``STRUCTURED_POINTS`` of the lattice values for ``n = 2``.

    Lattice points outside the domain carry 0 and an ``inside`` mask of 0;
    boundary cut points are not lattice points and are omitted.
    """
    g = state.grid
    if g.n != 2:
        raise ValueError("VTK export is for n = 2")
    idx = g.index
    lo = idx.min(axis=0)
    dims = idx.max(axis=0) - lo + 1
    origin = g.spec.shape.anchor + g.h * lo
    flat = (idx[:, 1] - lo[1]) * dims[0] + (idx[:, 0] - lo[0])   # x fastest
    npts = int(dims[0] * dims[1])
    inside = np.zeros(npts, dtype=int)
    inside[flat] = 1
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title.replace("\n", " ")[:255] + "\n")
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {dims[0]} {dims[1]} 1\n")
        fh.write(f"ORIGIN {_fmt(origin[0])} {_fmt(origin[1])} 0\n")
        fh.write(f"SPACING {_fmt(g.h)} {_fmt(g.h)} 1\n")
        fh.write(f"POINT_DATA {npts}\n")
        for a in range(state.k):
            vals = np.zeros(npts)
            vals[flat] = state.f[:, a]
            fh.write(f"SCALARS f{a + 1} double 1\nLOOKUP_TABLE default\n")
            fh.write("\n".join(_fmt(v) for v in vals) + "\n")
        fh.write("SCALARS inside int 1\nLOOKUP_TABLE default\n")
        fh.write("\n".join(str(v) for v in inside) + "\n")
    return path


def write_text(lines, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        for line in lines:
            fh.write(line + "\n")
    return path
