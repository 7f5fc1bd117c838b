import csv
import io
import json
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from betaflow.flow import evolve, evolve_rescaled
from betaflow.io import (
    TRAJECTORY_HEADER,
    dump_json,
    fmt,
    polygon_from_csv,
    polygon_from_json,
    polygon_to_csv,
    polygon_to_json,
    read_polygon,
    trajectory_summary,
    write_polygon,
    write_rows_csv,
    write_trajectory_csv,
)
from betaflow.polygon import regular_polygon
from betaflow.svg import polygons_svg, write_svg

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
polys = st.lists(st.tuples(finite, finite), min_size=3, max_size=12).map(
    lambda v: np.array([complex(x, y) for x, y in v])
)


@given(polys)
def test_json_round_trip_exact(P):
    assert np.array_equal(polygon_from_json(polygon_to_json(P)), P)


@given(polys)
def test_csv_round_trip_exact(P):
    assert np.array_equal(polygon_from_csv(polygon_to_csv(P)), P)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x


def test_fmt_special():
    assert fmt(None) == ""
    assert fmt(float("nan")) == "nan"


def test_json_accepts_object_form():
    P = polygon_from_json(json.dumps({"vertices": [[0, 0], [1, 0], [0, 1]]}))
    assert np.array_equal(P, [0, 1, 1j])


def test_csv_rejects_bad_indices():
    with pytest.raises(ValueError):
        polygon_from_csv("j,x,y\n0,0,0\n2,1,0\n3,0,1\n")


def test_csv_rows_in_any_order():
    P = polygon_from_csv("j,x,y\n2,0,1\n0,0,0\n1,1,0\n")
    assert np.array_equal(P, [0, 1, 1j])


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_read_write_by_extension(tmp_path, suffix):
    P = 1.3 * regular_polygon(5)
    path = tmp_path / f"p{suffix}"
    write_polygon(path, P)
    text = path.read_text()
    assert text.startswith("j,x,y") == (suffix == ".csv")
    assert np.array_equal(read_polygon(path), P)


def _read_csv(path):
    return list(csv.reader(io.StringIO(path.read_text())))


def test_trajectory_csv(tmp_path):
    tr = evolve(regular_polygon(5, 1), 1.0, 0.2, checkpoints=[0.1])
    path = tmp_path / "t.csv"
    write_trajectory_csv(path, tr)
    rows = _read_csv(path)
    assert rows[0] == TRAJECTORY_HEADER
    assert len(rows) == 1 + 5 * len(tr.t)
    body = rows[1:]
    assert [int(r[1]) for r in body[:5]] == list(range(5))
    assert all(r[7] != "" for r in body)
    assert float(body[0][7]) == 1.0
    # vertex coordinates round-trip exactly
    assert float(body[5 * (len(tr.t) - 1)][2]) == tr.final[0].real


def test_trajectory_csv_rho_empty(tmp_path):
    for tr in (evolve(regular_polygon(4, 1), 0.0, 0.1), evolve_rescaled(regular_polygon(4, 1), 1.0, 0.5)):
        path = tmp_path / "t.csv"
        write_trajectory_csv(path, tr)
        assert all(r[7] == "" for r in _read_csv(path)[1:])


def test_rows_csv_and_json(tmp_path):
    write_rows_csv(tmp_path / "r.csv", ["a", "b", "c"], [(1, 0.1, "x"), (2, np.float64(1 / 3), "y")])
    rows = _read_csv(tmp_path / "r.csv")
    assert rows[1] == ["1", "0.10000000000000001", "x"]
    assert float(rows[2][1]) == 1 / 3
    dump_json(tmp_path / "d.json", {"b": np.bool_(True), "a": np.int64(3), "z": 1 + 2j, "l": (np.float32(0.5),)})
    text = (tmp_path / "d.json").read_text()
    assert json.loads(text) == {"a": 3, "b": True, "l": [0.5], "z": [1.0, 2.0]}
    assert text.index('"a"') < text.index('"b"')


def test_trajectory_summary():
    tr = evolve(regular_polygon(6, 1) + 0.5, 1.0, 0.3)
    s = trajectory_summary(tr, {"F_alpha": True, "dist": False, "drift": 1e-3}, extra_key=1)
    assert s["N"] == 6 and s["beta"] == 1.0 and s["t_end"] == 0.3
    assert s["monotone_checks"] == {"F_alpha": "pass", "dist": "fail", "drift": 1e-3}
    assert s["final_center_of_mass"] == pytest.approx([0.5, 0.0], abs=1e-12)
    assert s["extra_key"] == 1
    json.dumps(s)


def test_svg_structure(tmp_path):
    polys = [regular_polygon(n, 1) for n in (3, 4, 7)]
    text = polygons_svg(polys, titles=["a", "b", "c"], reproducible=True)
    root = ET.fromstring(text.split("\n", 1)[1])
    ns = "{http://www.w3.org/2000/svg}"
    panels = root.findall(f"{ns}svg")
    assert len(panels) == 3
    assert [len(p.findall(f"{ns}circle")) for p in panels] == [3, 4, 7]
    assert all(p.find(f"{ns}path").get("d").endswith("Z") for p in panels)
    assert [t.text for t in root.findall(f"{ns}text")] == ["a", "b", "c"]


def test_svg_timestamp_only_without_reproducible(tmp_path):
    polys = [regular_polygon(5, 1)]
    a = polygons_svg(polys, reproducible=True)
    assert "generated" not in a
    assert a == polygons_svg(polys, reproducible=True)
    b = polygons_svg(polys)
    assert re.search(r"<!-- generated \d{4}-\d\d-\d\dT", b)
    assert re.sub(r"<!-- generated .*-->\n", "", b) == a
    write_svg(tmp_path / "s.svg", polys, reproducible=True)
    assert (tmp_path / "s.svg").read_text() == a


def test_svg_tiny_polygon_keeps_its_shape():
    text = polygons_svg([1e-9 * regular_polygon(4, 1)], reproducible=True)
    assert 'viewBox="0 0' in text
    assert "nan" not in text
