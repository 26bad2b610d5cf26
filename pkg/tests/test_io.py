import math

import meshio
import numpy as np
import pytest

from translator_lab import analysis as an
from translator_lab import flow
from translator_lab import io as tio
from translator_lab import solitons as so


@pytest.fixture(scope="module")
def run_1d():
    cfg = flow.FlowConfig(h=0.05, T_max=0.5, record_every=200)
    return flow.run(flow.interval(-1, 1), flow.BoundaryData.zero(), [1.0], cfg)


def test_diagnostics_csv_roundtrip(tmp_path, run_1d):
    _, diag = run_1d
    path = tio.write_diagnostics_csv(diag, tmp_path / "d.csv")
    with open(path) as fh:
        assert fh.readline().rstrip("\n") == "t,sup_f,sup_fbar,sup_bdry_grad,steady_res,area,dissipation,barrier_margin"
    back = tio.read_diagnostics_csv(path)
    rows = np.array(list(diag.rows()))
    for i, name in enumerate(diag.CSV_HEADER.split(",")):
        assert np.allclose(back[name], rows[:, i], rtol=1e-12, atol=0)


def test_field_csv(tmp_path, run_1d):
    state, _ = run_1d
    header, data = tio.read_csv(tio.write_field_csv(state, tmp_path / "f.csv"))
    assert header == ("x", "f1")
    assert np.all(np.diff(data[:, 0]) > 0)
    assert data[0, 0] == -1.0 and data[-1, 0] == 1.0 and data[0, 1] == 0.0
    assert len(data) == state.grid.size


def test_field_vtk_meshio(tmp_path):
    cfg = flow.FlowConfig(h=0.05, T_max=0.05, record_every=500)
    state, _ = flow.run(flow.disc([0, 0], 0.4), flow.BoundaryData.zero(2, 2), [0.6, 0.8], cfg)
    path = tio.write_field_vtk(state, tmp_path / "f.vtk")
    with open(path) as fh:
        head = [fh.readline().strip() for _ in range(4)]
    assert head[2] == "ASCII" and head[3] == "DATASET STRUCTURED_POINTS"
    mesh = meshio.read(path)
    assert set(mesh.point_data) == {"f1", "f2", "inside"}
    inside = mesh.point_data["inside"].reshape(-1).astype(bool)
    assert inside.sum() == state.grid.n_lattice
    assert np.all(mesh.point_data["f1"].reshape(-1)[~inside] == 0)
    # points (with x fastest) line up with the lattice coordinates
    pts = mesh.points[inside][:, :2]
    lat = state.grid.lattice_coords
    order = np.lexsort((lat[:, 0], lat[:, 1]))
    assert np.allclose(pts, lat[order], atol=1e-12)
    assert np.allclose(mesh.point_data["f2"].reshape(-1)[inside], state.f[order, 1], rtol=1e-15)


def test_bowl_roundtrip(tmp_path):
    prof = so.bowl_profile(2, R_max=2.0, step=1e-3)
    path = tio.write_bowl_csv(prof, tmp_path / "bowl.csv")
    with open(path) as fh:
        assert fh.readline().strip() == "r,u,du,d2u"
    back = tio.read_bowl_csv(path, n=2, r_series=prof.r_series)
    for name in ("radii", "u", "du", "d2u"):
        assert np.allclose(getattr(back, name), getattr(prof, name), rtol=1e-12, atol=1e-15)
    r = np.linspace(0, 2, 37)
    assert np.allclose(back.evaluate(r)[0], prof.evaluate(r)[0], atol=1e-12)


def test_growth_and_sweep_csv(tmp_path):
    rep = an.weighted_volume_growth(so.Hyperplane(1), 2.0, 1.0, 2.0, n_radii=5)
    header, data = tio.read_csv(tio.write_growth_csv(rep, tmp_path / "g.csv"))
    assert header == ("R", "f_R", "ratio") and data.shape == (5, 3)
    header, data = tio.read_csv(tio.write_sweep_csv([(1.0, 0.0, 1.25)], tmp_path / "s.csv"))
    assert header == ("a", "sup_value", "lambda1") and data[0, 2] == 1.25


def test_vtk_needs_2d(tmp_path, run_1d):
    with pytest.raises(ValueError):
        tio.write_field_vtk(run_1d[0], tmp_path / "x.vtk")
