"""
Static SVG charts for hamlearn sweeps
Interval width against the claimed error and against the hierarchy level
"""

from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# Fixed ids and no date keep the SVG bytes stable between runs
plt.rcParams["svg.hashsalt"] = "hamlearn"
SVG_METADATA = {"Date": None}


def _series(rows: List[Dict], x_key: str, group_key: str) -> Dict:
    """{group: ([x], [mean width])} over rows that produced a width"""
    grouped = defaultdict(lambda: defaultdict(list))
    for row in rows:
        width = row.get("max_width")
        if width in (None, ""):
            continue
        grouped[row[group_key]][row[x_key]].append(float(width))
    series = {}
    for group, points in sorted(grouped.items()):
        xs = sorted(points)
        series[group] = (xs, [sum(points[x]) / len(points[x]) for x in xs])
    return series


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def plot_width_vs_epsilon(rows: List[Dict], path: Union[str, Path]) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for level, (xs, ys) in _series(rows, "epsilon0", "level").items():
        ax.plot(xs, ys, marker="o", label=f"level {level}")
    ax.set_xscale("symlog", linthresh=1e-8)
    ax.set_yscale("log")
    ax.set_xlabel("claimed estimate error")
    ax.set_ylabel("largest interval width (seed mean)")
    ax.grid(True, which="both", alpha=0.3)
    if ax.lines:
        ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_width_vs_level(rows: List[Dict], path: Union[str, Path]) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for eps, (xs, ys) in _series(rows, "level", "epsilon0").items():
        ax.plot(xs, ys, marker="s", label=f"error {eps:g}")
    ax.set_yscale("log")
    ax.set_xlabel("hierarchy level")
    ax.set_ylabel("largest interval width (seed mean)")
    ax.grid(True, which="both", alpha=0.3)
    if ax.lines:
        ax.legend()
    fig.tight_layout()
    return _save(fig, path)
