"""Figure emission: accuracy-vs-SNR curves and sample-efficiency plots."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "rf-sslkit"

import matplotlib.pyplot as plt
import numpy as np

from .errors import ConfigurationError
from .evaluation import EvalReport, SweepRow


def snr_series(reports: list[tuple[str, EvalReport]]) -> tuple[list[int], dict[str, np.ndarray]]:
    """Align reports on the union SNR axis; missing points become NaN gaps.

    No interpolation: a series simply breaks where it has no measurement.
    """
    if not reports:
        raise ConfigurationError("at least one report is required")
    union = sorted({snr for _, report in reports for snr in report.per_snr_accuracy})
    series = {}
    for label, report in reports:
        series[label] = np.array(
            [report.per_snr_accuracy.get(snr, np.nan) for snr in union], dtype=float
        )
    return union, series


def plot_reports(
    reports: list[tuple[str, EvalReport]], out_dir: str | Path,
    basename: str = "accuracy_vs_snr",
) -> list[Path]:
    """One accuracy-vs-SNR curve per report, written as SVG and PNG."""
    union, series = snr_series(reports)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in series.items():
        ax.plot(union, values, marker="o", label=label)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Accuracy (%)")
    ax.set_ylim(0, 100)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    paths = [out_dir / f"{basename}.svg", out_dir / f"{basename}.png"]
    for path in paths:
        fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return paths


def efficiency_points(rows: list[SweepRow]) -> dict[str, list[tuple[float, float]]]:
    """Per init, (fraction, seed-averaged accuracy) points sorted by fraction."""
    points: dict[str, list[tuple[float, float]]] = {}
    for init in sorted({r.init for r in rows}):
        by_fraction: dict[float, list[float]] = {}
        for row in rows:
            if row.init == init:
                by_fraction.setdefault(row.fraction, []).append(row.accuracy)
        points[init] = [
            (fraction, float(np.mean(accs)))
            for fraction, accs in sorted(by_fraction.items())
        ]
    return points


def plot_sample_efficiency(
    rows: list[SweepRow], out_dir: str | Path, basename: str = "sample_efficiency"
) -> list[Path]:
    """Accuracy versus labeled fraction on a log x-axis, one curve per init."""
    if not rows:
        raise ConfigurationError("at least one sweep row is required")
    points = efficiency_points(rows)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(6, 4))
    for init, series in points.items():
        fractions = [f for f, _ in series]
        accs = [a for _, a in series]
        ax.plot(fractions, accs, marker="o", label=init)
    ax.set_xscale("log")
    ax.set_xlabel("Fraction of pool used for training")
    ax.set_ylabel("Accuracy (%)")
    ax.set_ylim(0, 100)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    paths = [out_dir / f"{basename}.svg", out_dir / f"{basename}.png"]
    for path in paths:
        fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return paths
