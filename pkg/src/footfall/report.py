"""Render the store into an operator report: CSV plus figure files.

Writes `daily.csv` (the canonical export), `trend.png` (traffic and
conversion moving averages over the recorded dates) and `peak_hours.png`
(hourly finalization histogram for one date, busiest hour highlighted) into
an output directory.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analytics import trend
from .store import DailyTable, export_csv


def write_report(
    table: DailyTable,
    out_dir: Path,
    *,
    window: int = 7,
    peak_date: dt.date | None = None,
) -> list[Path]:
    """Write the CSV and figures; returns the paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    records = table.records()
    written: list[Path] = []

    csv_path = out_dir / "daily.csv"
    csv_path.write_text(export_csv(records), encoding="utf-8")
    written.append(csv_path)

    if records:
        written.append(_trend_figure(records, window, out_dir / "trend.png"))
        if peak_date is None:
            peak_date = records[-1].date
        histogram = table.histogram(peak_date)
        if histogram is not None:
            written.append(_peak_hours_figure(histogram, out_dir / "peak_hours.png"))
    return written


def _trend_figure(records, window: int, path: Path) -> Path:
    points = trend(records, window)
    dates = [p.date for p in points]
    traffic = [p.traffic_avg for p in points]

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(dates, traffic, marker="o", color="tab:blue", label=f"traffic ({window}-day avg)")
    ax.set_ylabel("visitors/day")
    ax.set_xlabel("date")
    ax.grid(alpha=0.3)

    with_rates = [(p.date, p.conversion_avg) for p in points if p.conversion_avg is not None]
    if with_rates:
        ax2 = ax.twinx()
        ax2.plot(
            [d for d, _ in with_rates],
            [c for _, c in with_rates],
            marker="s",
            color="tab:orange",
            label=f"conversion % ({window}-day avg)",
        )
        ax2.set_ylabel("conversion rate (%)")
        lines, labels = ax.get_legend_handles_labels()
        lines2, labels2 = ax2.get_legend_handles_labels()
        ax.legend(lines + lines2, labels + labels2, loc="upper left", fontsize=8)
    else:
        ax.legend(loc="upper left", fontsize=8)

    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _peak_hours_figure(histogram, path: Path) -> Path:
    buckets = list(histogram.buckets)
    colors = ["tab:blue"] * 24
    if any(buckets):
        colors[buckets.index(max(buckets))] = "tab:red"

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(range(24), buckets, color=colors)
    ax.set_xticks(range(0, 24, 2))
    ax.set_xlabel("hour of day")
    ax.set_ylabel("crossings finalized")
    ax.set_title(f"peak hours {histogram.date.isoformat()}")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
