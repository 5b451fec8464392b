"""PNG figures for CLI outputs, drawn without pyplot global state."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = [
    "figure_path",
    "plot_field",
    "plot_series",
    "plot_creep_fit",
    "plot_groups",
    "plot_validation",
]

STYLE = {"dpi": 150, "lw": 1.5}


def figure_path(out: Path, suffix: str = "") -> Path:
    """PNG path next to a CSV output: result.csv -> result.png (or result-suffix.png)."""
    out = Path(out)
    stem = out.stem + (f"-{suffix}" if suffix else "")
    return out.with_name(stem + ".png")


def _new(ncols: int = 1, width: float = 5.0, height: float = 3.4):
    fig = Figure(figsize=(width * ncols, height), layout="constrained")
    FigureCanvasAgg(fig)
    axes = [fig.add_subplot(1, ncols, i + 1) for i in range(ncols)]
    for ax in axes:
        ax.grid(True, color="0.88", lw=0.6)
    return fig, axes


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=STYLE["dpi"])
    return path


def plot_field(z, t, values, label: str, path, n_lines: int = 5) -> Path:
    """History at a few depths and profiles at a few times of a (z, t) field."""
    z = np.asarray(z)
    t = np.asarray(t)
    v = np.asarray(values)
    fig, (a1, a2) = _new(2)
    pos = t > 0  # log time: consolidation fields change over decades
    for i in np.unique(np.linspace(0, z.size - 1, n_lines).round().astype(int)):
        a1.plot(t[pos], v[i, pos], lw=STYLE["lw"], label=f"z = {z[i] * 1e3:.2f} mm")
    a1.set_xscale("log")
    a1.set_xlabel("t (s)")
    a1.set_ylabel(label)
    a1.legend(fontsize=7)
    for k in np.unique(np.geomspace(1, t.size - 1, n_lines).round().astype(int)) if t.size > 1 else [0]:
        a2.plot(z * 1e3, v[:, k], lw=STYLE["lw"], label=f"t = {t[k]:.3g} s")
    a2.set_xlabel("z (mm)")
    a2.set_ylabel(label)
    a2.legend(fontsize=7)
    return _save(fig, path)


def plot_series(t, series: dict, ylabel: str, path, logx: bool = False) -> Path:
    fig, (ax,) = _new()
    for name, y in series.items():
        ax.plot(t, y, lw=STYLE["lw"], label=name)
    ax.set_xlabel("t (s)")
    ax.set_ylabel(ylabel)
    if logx:
        ax.set_xscale("log")
    if len(series) > 1:
        ax.legend(fontsize=7)
    return _save(fig, path)


def plot_creep_fit(t, u, curves: dict, path, title: str = "") -> Path:
    """Measured creep points with fitted model curves."""
    fig, (ax,) = _new()
    ax.plot(t, np.asarray(u) * 1e3, ".", ms=2.5, color="0.45", label="data")
    for name, y in curves.items():
        ax.plot(t, np.asarray(y) * 1e3, lw=STYLE["lw"], label=name)
    ax.set_xlabel("t (s)")
    ax.set_ylabel("top displacement (mm)")
    if title:
        ax.set_title(title, fontsize=9)
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_groups(groups: dict, excluded: dict, ylabel: str, path, title: str = "") -> Path:
    """Box plots per group with the kept points overlaid and excluded points marked."""
    fig, (ax,) = _new()
    names = list(groups)
    data = [np.asarray(groups[g], dtype=float) for g in names]
    ax.boxplot(data, whis=1.5, showfliers=False)
    rng = np.random.default_rng(0)  # fixed jitter so figures are reproducible
    for i, d in enumerate(data, start=1):
        ax.plot(i + rng.uniform(-0.08, 0.08, d.size), d, "o", ms=3.5, color="C0")
        out = np.asarray(excluded.get(names[i - 1], []), dtype=float)
        if out.size:
            ax.plot(np.full(out.size, i), out, "x", ms=6, color="C3")
    ax.set_xticks(range(1, len(names) + 1), names)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=9)
    return _save(fig, path)


def plot_validation(names, measured, tolerance, relation, path) -> Path:
    """Margin of each check: log10(measured / tolerance), signed so that left of 0 passes."""
    m = np.asarray(measured, dtype=float)
    tol = np.asarray(tolerance, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.asarray(relation) == "<=", m / tol, tol / m)
        margin = np.log10(np.where(ratio > 0, ratio, 1e-17))
    margin = np.where(np.isfinite(margin), margin, -17.0)
    fig, (ax,) = _new(width=6.0, height=0.25 * len(names) + 1.0)
    colors = ["C2" if x <= 0 else "C3" for x in margin]
    y = np.arange(len(names))
    ax.barh(y, margin, color=colors)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_yticks(y, names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("log10 of error / tolerance")
    return _save(fig, path)
