"""CSV time series, parameter files, presets and run configuration."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from fracporo.material import IncompressibleParams, MaterialParams, aggregate_modulus

__all__ = [
    "InputError",
    "TimeSeries",
    "read_timeseries_csv",
    "write_timeseries_csv",
    "read_params_file",
    "write_params_file",
    "load_preset",
    "list_presets",
    "preset_path",
    "read_parameter_table_csv",
    "write_rows_csv",
    "RunConfig",
    "UNITS",
]

UNITS = ("m", "N", "Pa", "kg", "s", "m/s", "1")
_SUFFIX_UNITS = {"m": "m", "n": "N", "pa": "Pa", "kg": "kg", "s": "s", "m_s": "m/s"}
PARAM_KEYS = ("K_pa", "G_pa", "alpha", "B", "lambda_beta", "beta")


class InputError(ValueError):
    """Malformed or inconsistent user input (CLI exit status 2)."""


def _fmt(x: float) -> str:
    # 17 significant digits round-trip every double
    return repr(float(x)) if math.isfinite(x) else str(float(x))


@dataclass(frozen=True)
class TimeSeries:
    t: np.ndarray
    v: np.ndarray
    unit: str = "m"
    name: str = "value"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise InputError("t and v must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise InputError("time series values must be finite")
        if np.any(np.diff(t) <= 0):
            k = int(np.flatnonzero(np.diff(t) <= 0)[0]) + 1
            raise InputError(f"time must be strictly increasing (sample {k})")
        if self.unit not in UNITS:
            raise InputError(f"unknown unit {self.unit!r}; expected one of {UNITS}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)

    def __len__(self) -> int:
        return self.t.size


def _unit_from_header(col: str) -> str | None:
    m = re.search(r"_([A-Za-z_]+)$", col)
    if not m:
        return None
    return _SUFFIX_UNITS.get(m.group(1).lower())


def _data_lines(path: Path):
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            yield lineno, s


def read_timeseries_csv(path, column: str | None = None, unit: str | None = None) -> TimeSeries:
    """Read a two-column (or wider) CSV whose first column is ``time_s``.

    ``column`` picks the value column (default: the second one). ``unit``, if
    given, must match the unit implied by the column suffix.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    lines = list(_data_lines(path))
    if not lines:
        raise InputError(f"{path}: no header row")
    header_no, header = lines[0]
    cols = [c.strip() for c in next(csv.reader([header]))]
    if cols[0] != "time_s":
        raise InputError(f"{path}:{header_no}: first column must be 'time_s', got {cols[0]!r}")
    if len(cols) < 2:
        raise InputError(f"{path}:{header_no}: need a value column")
    if column is None:
        vi = 1
    elif column in cols:
        vi = cols.index(column)
    else:
        raise InputError(f"{path}:{header_no}: no column {column!r}")
    col_unit = _unit_from_header(cols[vi]) or "1"
    if unit is not None and unit != col_unit:
        raise InputError(f"{path}:{header_no}: column {cols[vi]!r} has unit {col_unit}, expected {unit}")
    t, v = [], []
    prev = -math.inf
    for lineno, s in lines[1:]:
        row = next(csv.reader([s]))
        if len(row) != len(cols):
            raise InputError(f"{path}:{lineno}: expected {len(cols)} fields, got {len(row)}")
        try:
            ti = float(row[0])
            vi_val = float(row[vi])
        except ValueError:
            raise InputError(f"{path}:{lineno}: malformed number in {row!r}") from None
        if not (math.isfinite(ti) and math.isfinite(vi_val)):
            raise InputError(f"{path}:{lineno}: non-finite value")
        if ti <= prev:
            raise InputError(f"{path}:{lineno}: time {ti} does not increase")
        prev = ti
        t.append(ti)
        v.append(vi_val)
    return TimeSeries(np.array(t), np.array(v), unit=col_unit, name=cols[vi])


def write_timeseries_csv(path, ts: TimeSeries, comments: list[str] | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for c in comments or []:
            fh.write(f"# {c}\n")
        fh.write(f"time_s,{ts.name}\n")
        for ti, vi in zip(ts.t, ts.v):
            fh.write(f"{_fmt(ti)},{_fmt(vi)}\n")


def write_rows_csv(path_or_fh, header: list[str], rows, comments: list[str] | None = None) -> None:
    """Write rows with floats at full precision; ``path_or_fh`` may be an open file."""

    def emit(fh):
        for c in comments or []:
            fh.write(f"# {c}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) if isinstance(x, (float, np.floating)) else str(x) for x in row) + "\n")

    if hasattr(path_or_fh, "write"):
        emit(path_or_fh)
    else:
        with open(path_or_fh, "w", newline="") as fh:
            emit(fh)


# --- parameter files -------------------------------------------------------


def read_params_file(path) -> MaterialParams | IncompressibleParams:
    """Flat ``key = value`` file with keys K_pa, G_pa, alpha, B, lambda_beta, beta.

    ``alpha = B = 1`` denotes incompressible constituents and yields an
    :class:`IncompressibleParams` with M = (3K + 4G)/3.
    """
    path = Path(path)
    vals = {}
    for lineno, s in _data_lines(path):
        if "=" not in s:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (x.strip() for x in s.split("=", 1))
        if key not in PARAM_KEYS:
            raise InputError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            vals[key] = float(val.split("#", 1)[0])
        except ValueError:
            raise InputError(f"{path}:{lineno}: malformed number {val!r}") from None
    missing = [k for k in PARAM_KEYS if k not in vals]
    if missing:
        raise InputError(f"{path}: missing keys {missing}")
    try:
        if vals["alpha"] == 1.0 and vals["B"] == 1.0:
            return IncompressibleParams(
                M=aggregate_modulus(vals["K_pa"], vals["G_pa"]),
                beta=vals["beta"],
                lambda_beta=vals["lambda_beta"],
            )
        return MaterialParams(
            K=vals["K_pa"],
            G=vals["G_pa"],
            alpha=vals["alpha"],
            B=vals["B"],
            lambda_beta=vals["lambda_beta"],
            beta=vals["beta"],
        )
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_params_file(path, params: MaterialParams, comments: list[str] | None = None) -> None:
    with open(path, "w") as fh:
        for c in comments or []:
            fh.write(f"# {c}\n")
        for key, val in zip(
            PARAM_KEYS, (params.K, params.G, params.alpha, params.B, params.lambda_beta, params.beta)
        ):
            fh.write(f"{key} = {_fmt(val)}\n")


def preset_path(name: str) -> Path:
    base = resources.files("fracporo") / "presets"
    for cand in (name, f"{name}.txt", f"{name}.csv"):
        p = base / cand
        if p.is_file():
            return Path(str(p))
    raise InputError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")


def list_presets() -> list[str]:
    base = resources.files("fracporo") / "presets"
    return sorted(p.name.rsplit(".", 1)[0] for p in base.iterdir() if p.name.endswith((".txt", ".csv")))


def load_preset(name: str):
    """Material preset by name (``draft-table-1``, ``final-table-1``, ``tk11bc``, ...)."""
    p = preset_path(name)
    if p.suffix == ".csv":
        raise InputError(f"preset {name!r} is a table; use read_parameter_table_csv")
    return read_params_file(p)


def read_parameter_table_csv(path, required: tuple = ("sample",)) -> list[dict]:
    """Rows of a CSV (``#`` comments allowed) as dicts; numeric fields become floats."""
    path = Path(path)
    lines = list(_data_lines(path))
    if not lines:
        raise InputError(f"{path}: empty table")
    header = [c.strip() for c in next(csv.reader([lines[0][1]]))]
    for r in required:
        if r not in header:
            raise InputError(f"{path}:{lines[0][0]}: missing column {r!r}")
    rows = []
    for lineno, s in lines[1:]:
        fields = next(csv.reader([s]))
        if len(fields) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        row = {}
        for k, v in zip(header, fields):
            v = v.strip()
            try:
                row[k] = float(v)
            except ValueError:
                row[k] = v
        rows.append(row)
    return rows


@dataclass(frozen=True)
class RunConfig:
    """Validated inputs for a CLI run (SI units)."""

    params: MaterialParams | IncompressibleParams
    h: float
    P_A: float
    nz: int = 61
    dt: float = 0.1
    t_max: float = 400.0
    out: Path | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.h > 0:
            raise InputError("h must be positive")
        if not self.P_A > 0:
            raise InputError("P_A must be positive")
        if self.nz < 3:
            raise InputError("grid needs at least 3 nodes")
        if not (self.dt > 0 and self.t_max > 0):
            raise InputError("dt and t_max must be positive")

    @property
    def nt(self) -> int:
        return max(1, int(round(self.t_max / self.dt)))
