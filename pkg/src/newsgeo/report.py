"""Evaluation reporting: text tables, delimited files, and figures.

Figures render through the Agg backend so report generation works on
headless machines; files land next to the delimited metrics output.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import CDF_THRESHOLDS_KM, ComparisonRow, ErrorVector, EvalReport


def format_report(report: EvalReport) -> str:
    lines = [
        f"{'articles scored':<22}{report.n:>10d}",
        f"{'skipped':<22}{report.skipped:>10d}",
        f"{'MAE (km)':<22}{report.mae:>10.3f}",
        f"{'RMSE (km)':<22}{report.rmse:>10.3f}",
        f"{'median (km)':<22}{report.median:>10.3f}",
        f"{'mode (km)':<22}{report.mode:>10.3f}",
    ]
    for t in CDF_THRESHOLDS_KM:
        frac = report.cdf.get(t, 0.0)
        lines.append(f"{f'within {t:g} km':<22}{frac * 100:>9.1f}%")
    return "\n".join(lines)


def format_comparison(rows: list[ComparisonRow]) -> str:
    out = [f"{'metric':<12}{'baseline':>12}{'proposed':>12}{'delta':>14}"]
    for r in rows:
        unit = "% red." if r.delta_kind == "pct_reduction" else "points"
        out.append(f"{r.metric:<12}{r.baseline:>12.3f}{r.proposed:>12.3f}{r.delta:>+9.1f} {unit}")
    return "\n".join(out)


def write_metrics_delimited(
    report: EvalReport, path: str | Path, delimiter: str = ","
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(["metric", "value"])
        w.writerow(["n", report.n])
        w.writerow(["skipped", report.skipped])
        for name in ("mae", "rmse", "median", "mode"):
            w.writerow([f"{name}_km", f"{getattr(report, name):.6f}"])
        for t in CDF_THRESHOLDS_KM:
            w.writerow([f"cdf_{t:g}km", f"{report.cdf.get(t, 0.0):.6f}"])
    return path


def write_comparison_delimited(
    rows: list[ComparisonRow], path: str | Path, delimiter: str = ","
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(["metric", "baseline", "proposed", "delta", "delta_kind"])
        for r in rows:
            w.writerow([r.metric, f"{r.baseline:.6f}", f"{r.proposed:.6f}", f"{r.delta:.6f}", r.delta_kind])
    return path


def render_figures(ev: ErrorVector, out_dir: str | Path, stem: str = "eval") -> list[Path]:
    """Write the error CDF curve and histogram as PNG files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    errors = sorted(ev.errors)
    n = len(errors)
    paths: list[Path] = []

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    fractions = [(i + 1) / n for i in range(n)]
    ax.step(errors, fractions, where="post", color="#2a6f97", lw=1.8)
    for t in CDF_THRESHOLDS_KM:
        frac = sum(1 for e in errors if e <= t) / n
        ax.plot([t], [frac], "o", ms=5, color="#d1495b")
        ax.annotate(f"{frac * 100:.0f}%", (t, frac), textcoords="offset points",
                    xytext=(6, -10), fontsize=8)
    ax.set_xscale("log")
    ax.set_xlabel("error (km)")
    ax.set_ylabel("fraction of articles")
    ax.set_title("Error CDF")
    ax.grid(True, which="both", alpha=0.25)
    ax.set_ylim(0, 1.02)
    cdf_path = out_dir / f"{stem}_cdf.png"
    fig.savefig(cdf_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(cdf_path)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.hist(errors, bins=min(40, max(10, n // 3)), color="#2a6f97", alpha=0.85)
    mae = sum(errors) / n
    ax.axvline(mae, color="#d1495b", lw=1.5, label=f"MAE {mae:.2f} km")
    ax.set_xlabel("error (km)")
    ax.set_ylabel("articles")
    ax.set_title("Error distribution")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.25)
    hist_path = out_dir / f"{stem}_hist.png"
    fig.savefig(hist_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(hist_path)
    return paths
