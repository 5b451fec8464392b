"""Group summaries and one-way ANOVA over fitted parameter tables."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import betainc

from fracporo.io import InputError, read_parameter_table_csv

__all__ = [
    "ParameterRow",
    "ParameterTable",
    "parse_sample_id",
    "GroupStats",
    "group_summary",
    "iqr_outliers",
    "AnovaResult",
    "AnovaTable",
    "anova_table",
    "anova_one_way",
    "f_distribution_sf",
    "pooled_t_statistic",
    "DirectionComparison",
    "compare_groups",
    "REGIONS",
    "DIRECTIONS",
    "FIELDS",
]

REGIONS = {"B": "body", "A": "anterior", "P": "posterior"}
DIRECTIONS = {"C": "circumferential", "R": "radial", "V": "vertical"}
FIELDS = ("M", "beta", "lambda_beta", "rms")
_ID = re.compile(r"^(?P<stem>.*?)(?P<region>[BAP])(?P<direction>[CRV])\d*$")


def parse_sample_id(sample_id: str) -> tuple[str, str]:
    """Region and direction from the id suffix, e.g. 'TK16BC1' -> ('body', 'circumferential').

    Trailing digits are a repeat counter; the two letters before them give the
    location (B/A/P) and orientation (C/R/V).
    """
    m = _ID.match(sample_id.strip())
    if not m:
        raise InputError(f"sample id {sample_id!r} does not end in a region/direction code like 'BC'")
    return REGIONS[m.group("region")], DIRECTIONS[m.group("direction")]


@dataclass(frozen=True)
class ParameterRow:
    sample_id: str
    region: str
    direction: str
    M: float
    beta: float
    lambda_beta: float
    rms: float = math.nan
    h: float = math.nan

    @property
    def part(self) -> str:
        return f"{self.region}-{self.direction}"


@dataclass(frozen=True)
class ParameterTable:
    rows: tuple[ParameterRow, ...]

    @classmethod
    def from_records(cls, records) -> "ParameterTable":
        """Records are dicts with sample, M_pa, beta, lambda_beta and optionally rms, h_mm (SI)."""
        rows = []
        for r in records:
            sid = str(r["sample"])
            region, direction = parse_sample_id(sid)
            rows.append(
                ParameterRow(
                    sample_id=sid,
                    region=region,
                    direction=direction,
                    M=float(r["M_pa"]),
                    beta=float(r["beta"]),
                    lambda_beta=float(r["lambda_beta"]),
                    rms=float(r.get("rms", math.nan)),
                    h=float(r["h_mm"]) * 1e-3 if "h_mm" in r else math.nan,
                )
            )
        return cls(tuple(rows))

    @classmethod
    def from_csv(cls, path) -> "ParameterTable":
        return cls.from_records(read_parameter_table_csv(path, required=("sample", "M_pa", "beta", "lambda_beta")))

    def __len__(self) -> int:
        return len(self.rows)

    def where(self, region: str | None = None, direction: str | None = None) -> "ParameterTable":
        return ParameterTable(
            tuple(
                r
                for r in self.rows
                if (region is None or r.region == region) and (direction is None or r.direction == direction)
            )
        )

    def groups(self, field: str, group_by: str = "direction") -> dict[str, list[tuple[str, float]]]:
        """(sample_id, value) lists keyed by group, in first-seen order."""
        if field not in FIELDS:
            raise InputError(f"unknown field {field!r}; expected one of {FIELDS}")
        if group_by not in ("region", "direction", "part"):
            raise InputError("group_by must be 'region', 'direction' or 'part'")
        out: dict[str, list[tuple[str, float]]] = {}
        for r in self.rows:
            out.setdefault(getattr(r, group_by), []).append((r.sample_id, getattr(r, field)))
        return out


# --- summaries --------------------------------------------------------------


@dataclass(frozen=True)
class GroupStats:
    n: int
    mean: float
    sd: float
    single: bool  # SD is 0 by convention for one-element groups
    excluded: tuple[str, ...] = ()


def iqr_outliers(values, k: float = 1.5) -> np.ndarray:
    """Mask of points beyond k*IQR outside the quartiles (boxplot whisker rule).

    Quartiles use the (i - 0.5)/n plotting positions of common boxplot tools.
    Groups of fewer than 4 points have no outliers.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 4:
        return np.zeros(v.size, dtype=bool)
    q1, q3 = np.quantile(v, [0.25, 0.75], method="hazen")
    w = k * (q3 - q1)
    return (v < q1 - w) | (v > q3 + w)


def _moments(v: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(v))
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return mean, sd


def group_summary(
    table: ParameterTable, field: str, group_by: str = "direction", exclude_outliers: bool = False
) -> dict[str, GroupStats]:
    """Sample mean and SD (n - 1 denominator) of ``field`` per group."""
    out = {}
    for g, items in table.groups(field, group_by).items():
        ids = [s for s, _ in items]
        v = np.array([x for _, x in items])
        drop = iqr_outliers(v) if exclude_outliers else np.zeros(v.size, dtype=bool)
        kept = v[~drop]
        if kept.size == 0:
            raise InputError(f"group {g!r} is empty")
        mean, sd = _moments(kept)
        out[g] = GroupStats(
            n=int(kept.size),
            mean=mean,
            sd=sd,
            single=kept.size == 1,
            excluded=tuple(s for s, d in zip(ids, drop) if d),
        )
    return out


# --- ANOVA ------------------------------------------------------------------


def f_distribution_sf(F: float, d1: float, d2: float) -> float:
    """Upper tail P(X > F) of the F(d1, d2) distribution.

    Uses P = I_x(d2/2, d1/2) with x = d2/(d2 + d1 F), the regularized incomplete beta.
    """
    if not (d1 >= 1 and d2 >= 1):
        raise ValueError(f"degrees of freedom must be >= 1, got {d1}, {d2}")
    if math.isnan(F) or F < 0:
        raise ValueError(f"F must be non-negative, got {F}")
    if math.isinf(F):
        return 0.0
    x = d2 / (d2 + d1 * F)
    return float(betainc(d2 / 2.0, d1 / 2.0, x))


@dataclass(frozen=True)
class AnovaTable:
    ss_between: float
    ss_within: float
    df_between: int
    df_within: int
    F: float
    p: float

    @property
    def ms_between(self) -> float:
        return self.ss_between / self.df_between

    @property
    def ms_within(self) -> float:
        return self.ss_within / self.df_within


class AnovaResult(NamedTuple):
    F: float
    p: float


def anova_table(groups) -> AnovaTable:
    """Classical one-way ANOVA over a list of samples."""
    gs = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(gs) < 2:
        raise ValueError("need at least two groups")
    if any(g.size == 0 for g in gs):
        raise ValueError("empty group")
    if not all(np.all(np.isfinite(g)) for g in gs):
        raise ValueError("observations must be finite")
    n = sum(g.size for g in gs)
    k = len(gs)
    if n <= k:
        raise ValueError("total sample size must exceed the number of groups")
    # centre first so that large offsets do not cost precision
    shift = float(np.mean(np.concatenate(gs)))
    gs = [g - shift for g in gs]
    grand = float(np.mean(np.concatenate(gs)))
    means = [float(np.mean(g)) for g in gs]
    ssb = float(sum(g.size * (m - grand) ** 2 for g, m in zip(gs, means)))
    ssw = float(sum(np.sum((g - m) ** 2) for g, m in zip(gs, means)))
    dfb, dfw = k - 1, n - k
    scale = max(float(np.max(np.abs(np.concatenate(gs)))), 1e-300)
    if ssw <= (1e-14 * scale) ** 2 * n:
        if ssb <= (1e-14 * scale) ** 2 * n:
            raise ValueError("zero within-group variance and equal means: F is undefined")
        F = math.inf
    else:
        F = (ssb / dfb) / (ssw / dfw)
    return AnovaTable(ssb, ssw, dfb, dfw, F, f_distribution_sf(F, dfb, dfw))


def anova_one_way(groups) -> AnovaResult:
    t = anova_table(groups)
    return AnovaResult(t.F, t.p)


def pooled_t_statistic(a, b) -> float:
    """Two-sample t statistic with pooled variance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = a.size, b.size
    if na + nb <= 2:
        raise ValueError("need more than two observations")
    sp2 = (np.sum((a - a.mean()) ** 2) + np.sum((b - b.mean()) ** 2)) / (na + nb - 2)
    return float((a.mean() - b.mean()) / math.sqrt(sp2 * (1.0 / na + 1.0 / nb)))


@dataclass(frozen=True)
class DirectionComparison:
    field: str
    region: str | None
    groups: dict[str, list[tuple[str, float]]]
    excluded: dict[str, list[str]]
    result: AnovaTable


def compare_groups(
    table: ParameterTable,
    field: str,
    region: str | None = "body",
    group_by: str = "direction",
    exclude_outliers: bool = True,
) -> DirectionComparison:
    """ANOVA of ``field`` across groups within a region, after the IQR outlier rule."""
    sub = table.where(region=region)
    if len(sub) == 0:
        raise InputError(f"no rows for region {region!r}")
    kept, excluded = {}, {}
    for g, items in sub.groups(field, group_by).items():
        v = np.array([x for _, x in items])
        drop = iqr_outliers(v) if exclude_outliers else np.zeros(v.size, dtype=bool)
        kept[g] = [it for it, d in zip(items, drop) if not d]
        excluded[g] = [it[0] for it, d in zip(items, drop) if d]
    res = anova_table([[x for _, x in items] for items in kept.values()])
    return DirectionComparison(field=field, region=region, groups=kept, excluded=excluded, result=res)
