import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mfchaos.errors import DimError, ParamError
from mfchaos.io import (cloud_from_json, cloud_to_json, dump_json, initial_cloud,
                        levy_from_json, levy_to_json, load_mapping, matrix_from_json,
                        read_cloud_csv, write_cloud_csv)
from mfchaos.ot_core import DiscreteLevyMeasure, PointCloud


@settings(max_examples=30, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 3)),
              elements=st.floats(-1e300, 1e300)))
def test_csv_round_trip_is_exact(tmp_path_factory, pts):
    path = tmp_path_factory.mktemp("csv") / "c.csv"
    write_cloud_csv(path, PointCloud(pts))
    assert np.array_equal(read_cloud_csv(path).points, pts)


def test_csv_header_checked(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ParamError):
        read_cloud_csv(p)


def test_json_round_trips():
    pc = PointCloud([[1.5, -2.0], [0.0, 3.25]])
    assert np.array_equal(cloud_from_json(json.loads(json.dumps(cloud_to_json(pc)))).points,
                          pc.points)
    m = DiscreteLevyMeasure([[1.0, 0.0], [0.0, -2.0]], [0.5, 1.5])
    back = levy_from_json(json.loads(json.dumps(levy_to_json(m))))
    assert back.same_base(m)
    assert levy_from_json({"atoms": []}, 2).size == 0
    with pytest.raises(DimError):
        levy_from_json({"atoms": []})


def test_matrix_from_json():
    assert np.array_equal(matrix_from_json(2.0, 3), 2.0 * np.eye(3))
    assert matrix_from_json([[1, 2], [3, 4]]).shape == (2, 2)
    with pytest.raises(DimError):
        matrix_from_json([[1, 2], [3, 4]], 3)


def test_load_mapping_json_and_toml(tmp_path):
    (tmp_path / "a.json").write_text('{"x": 1, "y": [1, 2]}')
    (tmp_path / "a.toml").write_text('x = 1\ny = [1, 2]\n')
    assert load_mapping(tmp_path / "a.json") == load_mapping(tmp_path / "a.toml")
    dump_json(tmp_path / "o.json", {"b": 1, "a": 2})
    assert (tmp_path / "o.json").read_text().index('"a"') < (
        tmp_path / "o.json").read_text().index('"b"')


def test_initial_cloud_kinds(tmp_path):
    n = initial_cloud({"distribution": "normal", "mean": 2.0, "std": 0.5}, 4000, 1, 0)
    assert n.mean()[0] == pytest.approx(2.0, abs=0.05)
    u = initial_cloud({"distribution": "uniform", "low": -1, "high": 1}, 100, 2, 0)
    assert u.points.min() >= -1 and u.points.max() <= 1
    r = initial_cloud({"distribution": "rademacher"}, 100, 1, 0)
    assert set(r.points.ravel()) == {-1.0, 1.0}
    p = initial_cloud({"distribution": "point", "at": [1.0, 2.0]}, 3, 2, 0)
    assert np.array_equal(p.points, [[1.0, 2.0]] * 3)
    write_cloud_csv(tmp_path / "c.csv", p)
    assert np.array_equal(initial_cloud({"csv": str(tmp_path / "c.csv")}, 3, 2, 0).points,
                          p.points)
    with pytest.raises(DimError):
        initial_cloud({"csv": str(tmp_path / "c.csv")}, 3, 1, 0)
    with pytest.raises(ParamError):
        initial_cloud({"distribution": "cauchy"}, 3, 1, 0)
    assert np.array_equal(initial_cloud(None, 5, 1, 7).points, initial_cloud(None, 5, 1, 7).points)
