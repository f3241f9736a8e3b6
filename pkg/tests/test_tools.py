import json
import os
from collections import OrderedDict

import numpy as np
import pytest

from envelope import TimeSeries, make_grid
from tools import (ParameterSet, create_directory, emit_csv, format_value, read_csv, save_params,
                   to_serializable, write_report)


class PulseParameters(ParameterSet):
    type = "pulse"

    def __init__(self):
        self.Omega0 = 2.0
        self.x1 = 0.99 - 0.01j
        self.grid = np.arange(3)


def test_emit_csv_layout(tmp_path):
    grid = make_grid(1.0, 3)
    series = OrderedDict([("energy", TimeSeries(grid, [0.0, 0.1, 1.0 / 3.0], "energy"))])
    path = emit_csv(series, str(tmp_path / "one.csv"))
    with open(path, "rb") as f:
        content = f.read()
    assert b"\r" not in content
    lines = content.decode().splitlines()
    assert lines == ["t,energy", "0.0,0.0", "0.5,0.1", "1.0,0.3333333333333333"]


def test_emit_csv_round_trip_is_exact(tmp_path, rng):
    grid = make_grid(7.0, 50)
    series = OrderedDict((name, TimeSeries(grid, rng.normal(size=50), name)) for name in ("b", "a"))
    header, data = read_csv(emit_csv(series, str(tmp_path / "two.csv")))
    assert header == ["t", "b", "a"]
    assert np.array_equal(data[:, 0], grid)
    assert np.array_equal(data[:, 1], series["b"].y)
    assert np.array_equal(data[:, 2], series["a"].y)


def test_emit_csv_index_name(tmp_path):
    grid = make_grid(4.0, 3)
    path = emit_csv({"energy": TimeSeries(grid, grid)}, str(tmp_path / "sweep.csv"), index_name="omega_c")
    assert read_csv(path)[0] == ["omega_c", "energy"]


def test_read_csv_keeps_a_single_row_two_dimensional(tmp_path):
    path = emit_csv({"energy": TimeSeries([0.5], [2.0])}, str(tmp_path / "one.csv"))
    header, data = read_csv(path)
    assert header == ["t", "energy"]
    assert data.shape == (1, 2)
    assert data[0].tolist() == [0.5, 2.0]


def test_emit_csv_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_csv({}, str(tmp_path / "empty.csv"))
    series = {"a": TimeSeries(make_grid(1.0, 3), np.zeros(3)), "b": TimeSeries(make_grid(2.0, 3), np.zeros(3))}
    with pytest.raises(ValueError):
        emit_csv(series, str(tmp_path / "mismatch.csv"))
    with pytest.raises(OSError):
        emit_csv({"a": series["a"]}, str(tmp_path / "missing" / "a.csv"))


def test_format_value():
    assert format_value(True) == "pass"
    assert format_value(np.bool_(False)) == "fail"
    assert format_value(0.1) == "0.1"
    assert format_value(np.float64(1e-20)) == "1e-20"
    assert format_value(np.int64(3)) == "3"
    assert format_value("ok") == "ok"


def test_write_report_is_deterministic(tmp_path):
    entries = OrderedDict([("scenario", "fig3"), ("rate.eit.ergotropy", 4.95e-4), ("passed", True)])
    first = write_report(entries, str(tmp_path / "a.txt"))
    second = write_report(entries, str(tmp_path / "b.txt"))
    with open(first, "rb") as f, open(second, "rb") as g:
        content = f.read()
        assert content == g.read()
    assert content.decode().splitlines() == ["scenario=fig3", "rate.eit.ergotropy=0.000495", "passed=pass"]


def test_parameter_set_save(tmp_path):
    path = PulseParameters().save(str(tmp_path))
    assert os.path.basename(path) == "pulse_params.txt"
    with open(path) as f:
        saved = json.load(f)
    assert saved == {"Omega0": 2.0, "grid": [0, 1, 2], "x1": [0.99, -0.01]}
    with pytest.raises(FileNotFoundError):
        PulseParameters().save(str(tmp_path / "missing"))


def test_to_serializable_and_save_params(tmp_path):
    value = to_serializable({"a": np.float32(0.5), "b": (1, 2j), "c": np.zeros(2)})
    assert value == {"a": 0.5, "b": [1, [0.0, 2.0]], "c": [0.0, 0.0]}
    path = save_params({"z": 1, "a": 2}, str(tmp_path / "run_params.txt"))
    with open(path) as f:
        content = f.read()
    assert content.index('"a"') < content.index('"z"')
    assert json.loads(content) == {"a": 2, "z": 1}


def test_create_directory(tmp_path):
    target = str(tmp_path / "run")
    assert create_directory(target)
    assert not create_directory(target)
    open(os.path.join(target, "file.txt"), "w").close()
    with pytest.raises(FileExistsError):
        create_directory(target)
    assert not create_directory(target, safe=False)
