import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracporo.io import (
    InputError,
    RunConfig,
    TimeSeries,
    list_presets,
    load_preset,
    preset_path,
    read_parameter_table_csv,
    read_params_file,
    read_timeseries_csv,
    write_params_file,
    write_rows_csv,
    write_timeseries_csv,
)
from fracporo.material import IncompressibleParams, MaterialParams


def test_read_three_rows(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("# creep trace\ntime_s,displacement_m\n0,0\n1,1.5e-5\n2,2.5e-5\n")
    ts = read_timeseries_csv(p)
    assert len(ts) == 3
    assert ts.unit == "m" and ts.name == "displacement_m"
    assert ts.v[2] == 2.5e-5


def test_non_monotone_time_names_line(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("time_s,displacement_m\n0,0\n2,1\n1,2\n")
    with pytest.raises(InputError, match=r"c\.csv:4"):
        read_timeseries_csv(p)


@pytest.mark.parametrize(
    "body,pattern",
    [
        ("time_s,displacement_m\n0,0\n1,abc\n", r":3: malformed"),
        ("time_s,displacement_m\n0,0\n1\n", r":3: expected 2 fields"),
        ("t,displacement_m\n0,0\n", r"first column"),
        ("", r"no header"),
        ("time_s,displacement_m\n0,nan\n", r"non-finite"),
    ],
)
def test_malformed_inputs(tmp_path, body, pattern):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(InputError, match=pattern):
        read_timeseries_csv(p)


def test_unit_mismatch(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("time_s,force_n\n0,1\n")
    assert read_timeseries_csv(p).unit == "N"
    with pytest.raises(InputError, match="unit"):
        read_timeseries_csv(p, unit="m")


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="no such file"):
        read_timeseries_csv(tmp_path / "nope.csv")


finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300)


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_round_trip_is_lossless(tmp_path_factory, data):
    t = np.unique(data.draw(st.lists(st.floats(min_value=0, max_value=1e6), min_size=1, max_size=40)))
    v = np.array(data.draw(st.lists(finite, min_size=t.size, max_size=t.size)))
    ts = TimeSeries(t, v, unit="m", name="displacement_m")
    path = tmp_path_factory.mktemp("rt") / "ts.csv"
    write_timeseries_csv(path, ts, comments=["round trip"])
    back = read_timeseries_csv(path)
    assert np.array_equal(back.t, ts.t) and np.array_equal(back.v, ts.v)


def test_write_rows_round_trip(tmp_path):
    rows = [["a", 0.1 + 0.2, 1e-300], ["b", math.pi, -2.5e17]]
    p = tmp_path / "rows.csv"
    write_rows_csv(p, ["name", "x", "y"], rows, comments=["two rows"])
    back = read_parameter_table_csv(p, required=("name", "x"))
    assert back[0]["x"] == 0.1 + 0.2 and back[1]["y"] == -2.5e17 and back[0]["name"] == "a"


def test_timeseries_validation():
    with pytest.raises(InputError):
        TimeSeries(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
    with pytest.raises(InputError):
        TimeSeries(np.array([0.0, 1.0]), np.array([1.0]))
    with pytest.raises(InputError):
        TimeSeries(np.array([0.0]), np.array([1.0]), unit="furlong")


def test_params_file_round_trip(tmp_path):
    p = MaterialParams(K=1.67e5, G=7.69e4, alpha=0.65, B=0.88, lambda_beta=8.33e-8, beta=0.2)
    path = tmp_path / "m.txt"
    write_params_file(path, p, comments=["table"])
    assert read_params_file(path) == p


@pytest.mark.parametrize(
    "text,pattern",
    [
        ("K_pa = 1\n", "missing keys"),
        ("K_pa 1\n", "expected 'key = value'"),
        ("K_pa = one\n", "malformed number"),
        ("Kpa = 1\n", "unknown key"),
        ("K_pa = 1\nG_pa = 1\nalpha = 0.5\nB = 0.5\nlambda_beta = 1e-9\nbeta = 1.5\n", "beta"),
    ],
)
def test_params_file_errors(tmp_path, text, pattern):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(InputError, match=pattern):
        read_params_file(path)


def test_presets_present_and_loadable():
    names = list_presets()
    for name in ("draft-table-1", "final-table-1", "tk11bc", "fitted-parameters", "classical-parameters"):
        assert name in names
    assert isinstance(load_preset("final-table-1"), MaterialParams)
    assert isinstance(load_preset("tk11bc"), IncompressibleParams)
    with pytest.raises(InputError):
        load_preset("fitted-parameters")
    with pytest.raises(InputError, match="unknown preset"):
        preset_path("nope")
    assert (preset_path("final-table-1").parent / "README").is_file()


def test_fitted_parameter_table():
    rows = read_parameter_table_csv(preset_path("fitted-parameters"), required=("sample", "h_mm", "M_pa", "beta", "lambda_beta", "rms"))
    assert len(rows) == 29
    tk = next(r for r in rows if r["sample"] == "TK11BC")
    assert (tk["M_pa"], tk["beta"], tk["lambda_beta"], tk["rms"], tk["h_mm"]) == (127000.0, 0.73, 2.95e-12, 1.42e-5, 3.7)
    classical = read_parameter_table_csv(preset_path("classical-parameters"))
    assert all(r["beta"] == 0.0 for r in classical)


def test_run_config():
    p = load_preset("final-table-1")
    cfg = RunConfig(params=p, h=3e-3, P_A=7e4, dt=0.1, t_max=400.0)
    assert cfg.nt == 4000
    for bad in ({"h": 0.0}, {"P_A": -1.0}, {"nz": 2}, {"dt": 0.0}):
        with pytest.raises(InputError):
            RunConfig(**{"params": p, "h": 3e-3, "P_A": 7e4, **bad})
