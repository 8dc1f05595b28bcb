import csv

import numpy as np
import pytest

from leapdg.discretization import build_discretization
from leapdg.io import TimeSeriesWriter, _subtriangles, read_vtk_point_data, write_nodal_csv, write_vtk
from leapdg.mesh import generate_structured_square


@pytest.mark.parametrize("order", [1, 2, 4])
def test_subtriangles_tile_reference_triangle(order):
    from leapdg.reference import build_reference_operators
    ops = build_reference_operators(order)
    cells = _subtriangles(order)
    assert len(cells) == order**2
    r, s = ops.r, ops.s
    a = r[cells]
    b = s[cells]
    area = 0.5 * ((a[:, 1] - a[:, 0]) * (b[:, 2] - b[:, 0]) - (a[:, 2] - a[:, 0]) * (b[:, 1] - b[:, 0]))
    assert (area > 0).all()
    assert area.sum() == pytest.approx(2.0)


def test_vtk_round_trip(tmp_path):
    disc = build_discretization(generate_structured_square(3), 2)
    f = np.sin(disc.x) * disc.y
    path = write_vtk(tmp_path / "s.vtk", disc, {"f": f, "g": 2 * f})
    text = path.read_text()
    assert text.startswith("# vtk DataFile Version")
    assert "UNSTRUCTURED_GRID" in text and "POLYDATA" not in text
    points, fields = read_vtk_point_data(path)
    # one point per element node: interface points are duplicated on purpose
    assert points.shape == (disc.K * disc.Np, 3)
    np.testing.assert_allclose(points[:, 0], disc.x.ravel())
    np.testing.assert_allclose(fields["f"], f.ravel(), rtol=1e-15)
    np.testing.assert_allclose(fields["g"], 2 * f.ravel(), rtol=1e-15)
    cell_types = text.split("CELL_TYPES")[1].split()[1:1 + disc.K * 4]
    assert set(cell_types) == {"5"}


def test_nodal_csv(tmp_path):
    disc = build_discretization(generate_structured_square(2), 1)
    write_nodal_csv(tmp_path / "n.csv", disc, {"u": disc.x + disc.y})
    with open(tmp_path / "n.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == disc.K * disc.Np
    for row in rows:
        assert float(row["u"]) == pytest.approx(float(row["x"]) + float(row["y"]))


def test_time_series_writer(tmp_path):
    with TimeSeriesWriter(tmp_path / "t.csv", ["a", "b"]) as ts:
        ts.write(0.0, [1, 2])
        ts.write(0.5, [3.25, 4])
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines == ["t,a,b", "0.0,1.0,2.0", "0.5,3.25,4.0"]
