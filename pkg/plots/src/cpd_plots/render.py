"""Benchmark CSV rendering.

Consumes the detector benchmark CSV format (one row per method and threshold,
`#`-prefixed metadata lines allowed before the header) and draws one panel per
manifold with ARL on the x-axis and MDD on the y-axis, one curve per method.
The plotted coordinates are exactly the CSV values; nothing is recomputed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

REQUIRED_COLUMNS = [
    "method",
    "manifold",
    "xi",
    "arl",
    "mdd",
    "n_runs",
    "censored_arl",
    "censored_mdd",
    "pre_change_false_alarms",
]


class PlotDataError(RuntimeError):
    """CSV is missing required structure or contains no data."""


@dataclass(frozen=True)
class MethodCurve:
    label: str
    arl: tuple[float, ...]
    mdd: tuple[float, ...]
    censored: tuple[bool, ...]


@dataclass(frozen=True)
class CurveSet:
    manifold: str
    methods: list[MethodCurve]


def load_curves(csv_path: Union[str, Path]) -> list[CurveSet]:
    """Parse the benchmark CSV into per-manifold curve sets, sorted by ARL."""
    lines = [
        ln
        for ln in Path(csv_path).read_text(encoding="utf-8").splitlines()
        if ln.strip() and not ln.startswith("#")
    ]
    if not lines:
        raise PlotDataError(f"{csv_path}: no header line found")
    reader = csv.DictReader(lines)
    header = reader.fieldnames or []
    for column in REQUIRED_COLUMNS:
        if column not in header:
            raise PlotDataError(f"{csv_path}: missing column {column!r}")
    grouped: dict[str, dict[str, list[tuple[float, float, bool]]]] = {}
    for row in reader:
        censored = (
            int(row["censored_arl"]) > 0 or int(row["censored_mdd"]) > 0
        )
        grouped.setdefault(row["manifold"], {}).setdefault(
            row["method"], []
        ).append((float(row["arl"]), float(row["mdd"]), censored))
    if not grouped:
        raise PlotDataError(f"{csv_path}: no data rows")
    out = []
    for manifold in sorted(grouped):
        methods = []
        for label in sorted(grouped[manifold]):
            pts = sorted(grouped[manifold][label])
            methods.append(
                MethodCurve(
                    label=label,
                    arl=tuple(p[0] for p in pts),
                    mdd=tuple(p[1] for p in pts),
                    censored=tuple(p[2] for p in pts),
                )
            )
        out.append(CurveSet(manifold=manifold, methods=methods))
    return out


def build_figure(curve_sets: list[CurveSet]) -> Figure:
    """One panel per manifold; censored operating points get hollow markers."""
    if not curve_sets:
        raise PlotDataError("nothing to plot")
    n = len(curve_sets)
    fig = Figure(figsize=(6.0 * n, 4.5))
    FigureCanvasAgg(fig)
    axes = fig.subplots(1, n, squeeze=False)[0]
    for ax, cs in zip(axes, curve_sets):
        for curve in cs.methods:
            (line,) = ax.plot(curve.arl, curve.mdd, marker="", label=curve.label)
            color = line.get_color()
            solid = [i for i, c in enumerate(curve.censored) if not c]
            hollow = [i for i, c in enumerate(curve.censored) if c]
            ax.plot(
                [curve.arl[i] for i in solid],
                [curve.mdd[i] for i in solid],
                linestyle="none", marker="o", color=color, markersize=4,
            )
            ax.plot(
                [curve.arl[i] for i in hollow],
                [curve.mdd[i] for i in hollow],
                linestyle="none", marker="o", markerfacecolor="none",
                color=color, markersize=4,
            )
        ax.set_xlabel("ARL (mean samples to first false alarm)")
        ax.set_ylabel("MDD (mean detection delay)")
        ax.set_title(cs.manifold)
        ax.legend()
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def render_curves(csv_path: Union[str, Path], out_path: Union[str, Path]) -> None:
    fig = build_figure(load_curves(csv_path))
    fig.savefig(out_path)
