"""Turn <scenario>.csv / <scenario>.json report pairs into rate figures.

The renderer only reads the report files; it never imports the harness.
Output is deterministic: fixed style, salted SVG ids, no timestamps.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

EXPECTED_HEADER = ["scenario", "n", "epsilon", "t", "norm", "value"]


@dataclass(frozen=True)
class FigureSpec:
    """How one scenario's raw table becomes a figure."""

    scenario: str
    x_column: str  # "t" or "n" (n is plotted as 2^n)
    group_columns: tuple  # row keys that distinguish the plotted series
    norms: tuple = ()  # norm names to include; empty = all
    fixed: dict = field(default_factory=dict)  # column -> required value
    guide_fit_prefix: str = ""  # fits whose target slope to overlay
    x_label: str = ""
    title: str = ""


FIGURE_SPECS = {
    "E1": FigureSpec(
        scenario="E1", x_column="n", group_columns=("norm",),
        guide_fit_prefix="n_slope_sigma",
        x_label="2^n", title="data norms vs n"),
    "E2": FigureSpec(
        scenario="E2", x_column="t", group_columns=("n",),
        guide_fit_prefix="t_slope_n",
        x_label="t", title="free-flow difference vs t"),
    "E3": FigureSpec(
        scenario="E3", x_column="n", group_columns=("norm",), fixed={"t": 0.1},
        guide_fit_prefix="n_slope_bound_ubar2_Bs",
        x_label="2^n", title="Duhamel term vs n at t = 0.1"),
    "E4": FigureSpec(
        scenario="E4", x_column="t", group_columns=("norm", "n"),
        norms=("u3eps_Bs", "u3bar_Bs"),
        guide_fit_prefix="t_slope_u3bar_Bs",
        x_label="t", title="remainder vs t"),
    "E5": FigureSpec(
        scenario="E5", x_column="n", group_columns=("t",), norms=("D_Bs",),
        x_label="2^n", title="parabolic/hyperbolic gap vs n"),
    "E6": FigureSpec(
        scenario="E6", x_column="n", group_columns=("norm", "epsilon"),
        norms=("ratio_Bs", "ratio_Bs1"),
        x_label="2^n", title="solution/data norm ratio vs n"),
}

_STYLE = {
    "figure.figsize": (6.4, 4.8),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


class ReportError(RuntimeError):
    """A report file is missing or malformed."""


def read_table(csv_path: str) -> list:
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ReportError(f"{csv_path}: empty file") from None
        if header != EXPECTED_HEADER:
            raise ReportError(f"{csv_path}: unexpected header {header!r}")
        rows = []
        for lineno, parts in enumerate(reader, start=2):
            if len(parts) != len(header):
                raise ReportError(f"{csv_path}:{lineno}: wrong column count")
            try:
                rows.append({
                    "scenario": parts[0],
                    "n": int(parts[1]),
                    "epsilon": float(parts[2]),
                    "t": float(parts[3]),
                    "norm": parts[4],
                    "value": float(parts[5]),
                })
            except ValueError as exc:
                raise ReportError(f"{csv_path}:{lineno}: {exc}") from None
    return rows


def read_fits(json_path: str) -> dict:
    if not os.path.exists(json_path):
        return {"fits": {}, "meta": {}}
    try:
        with open(json_path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"{json_path}: {exc}") from None
    return doc


def _x_of(row, spec):
    if spec.x_column == "n":
        return 2.0 ** row["n"]
    return row[spec.x_column]


def _series(rows, spec):
    groups = {}
    for row in rows:
        if spec.norms and row["norm"] not in spec.norms:
            continue
        if any(abs(row[k] - v) > 1e-12 for k, v in spec.fixed.items()):
            continue
        key = tuple(row[k] for k in spec.group_columns)
        groups.setdefault(key, []).append((_x_of(row, spec), row["value"]))
    for key in groups:
        groups[key].sort()
    return groups


def _guide_target(doc, spec):
    for name, fit in sorted(doc.get("fits", {}).items()):
        if spec.guide_fit_prefix and name.startswith(spec.guide_fit_prefix):
            return float(fit["target"])
    return None


def render_one(spec: FigureSpec, rows, doc, out_path: str) -> None:
    groups = _series(rows, spec)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for key, pts in sorted(groups.items()):
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            label = ", ".join(f"{c}={k:g}" if isinstance(k, (int, float)) else f"{c}={k}"
                              for c, k in zip(spec.group_columns, key))
            ax.plot(xs, ys, marker="o", markersize=3, linewidth=1, label=label)
        positive = all(y > 0 for pts in groups.values() for _, y in pts)
        if groups and positive:
            ax.set_xscale("log")
            ax.set_yscale("log")
        target = _guide_target(doc, spec)
        if target is not None and groups and positive:
            anchor = sorted(groups.items())[0][1]
            x0, y0 = anchor[0]
            xs = [p[0] for p in anchor]
            ys = [y0 * (x / x0) ** target for x in xs]
            ax.plot(xs, ys, "k--", linewidth=1,
                    label=f"target slope {target:+g}")
        ax.set_xlabel(spec.x_label)
        ax.set_ylabel("value")
        cfg_hash = doc.get("meta", {}).get("config_hash", "unknown")
        ax.set_title(f"{spec.scenario}: {spec.title}\nconfig {cfg_hash}")
        if groups:
            ax.legend(fontsize=7)
        fig.tight_layout()
        fmt = os.path.splitext(out_path)[1].lstrip(".")
        # fixed hashsalt and empty date keep reruns byte-identical
        plt.rcParams["svg.hashsalt"] = spec.scenario
        fig.savefig(out_path, format=fmt, metadata=_clean_metadata(fmt))
        plt.close(fig)


def _clean_metadata(fmt: str) -> dict:
    if fmt == "svg":
        return {"Date": None}
    if fmt == "png":
        return {"Software": None}
    return {}


def render(report_dir: str, out_dir: str, fmt: str = "svg") -> list:
    """Render one figure per scenario report found under report_dir.

    Malformed reports are reported on stderr and skipped; the remaining
    figures are still rendered. Returns the list of written image paths.
    """
    if fmt not in ("svg", "png"):
        raise ValueError(f"format must be svg or png, got {fmt!r}")
    written = []
    found = False
    os.makedirs(out_dir, exist_ok=True)
    for scenario in sorted(FIGURE_SPECS):
        csv_path = os.path.join(report_dir, f"{scenario}.csv")
        if not os.path.exists(csv_path):
            continue
        found = True
        try:
            rows = read_table(csv_path)
            doc = read_fits(os.path.join(report_dir, f"{scenario}.json"))
            out_path = os.path.join(out_dir, f"{scenario}.{fmt}")
            render_one(FIGURE_SPECS[scenario], rows, doc, out_path)
        except ReportError as exc:
            print(f"warning: skipping {scenario}: {exc}", file=sys.stderr)
            continue
        written.append(out_path)
    if not found:
        print(f"warning: no scenario reports found in {report_dir}", file=sys.stderr)
    return written
