"""Error vectors, aggregate accuracy metrics, and baseline comparison.

All distances are km. CDF proportions are stored as fractions in [0, 1]
and rendered as percentages at the presentation layer.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyVector, SchemaError
from .geo import GeoPoint, haversine

CDF_THRESHOLDS_KM = (0.5, 1.0, 2.0, 5.0)

# Mode over continuous errors needs a bin width; 10 m matches the grid
# dedup quantum.
MODE_BIN_KM = 0.01


def error_km(pred: GeoPoint, truth: GeoPoint) -> float:
    return haversine(pred, truth)


@dataclass(frozen=True)
class ErrorVector:
    errors: tuple[float, ...]
    article_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.article_ids and len(self.article_ids) != len(self.errors):
            raise ValueError("article_ids must align with errors")
        for e in self.errors:
            if not (math.isfinite(e) and e >= 0):
                raise ValueError(f"error value {e} must be finite and non-negative")


@dataclass(frozen=True)
class EvalReport:
    mae: float
    rmse: float
    median: float
    mode: float
    cdf: dict[float, float]  # threshold km -> fraction in [0, 1]
    n: int
    skipped: int = 0


def aggregate(ev: ErrorVector, skipped: int = 0) -> EvalReport:
    """Aggregate an error vector into the standard report."""
    if not ev.errors:
        raise EmptyVector("cannot aggregate an empty error vector")
    errors = ev.errors
    n = len(errors)
    # fsum keeps aggregation exactly permutation-invariant
    mae = math.fsum(errors) / n
    rmse = math.sqrt(math.fsum(e * e for e in errors) / n)
    median = statistics.median(errors)

    bins: dict[int, int] = {}
    for e in errors:
        b = round(e / MODE_BIN_KM)
        bins[b] = bins.get(b, 0) + 1
    mode_bin = min(bins, key=lambda b: (-bins[b], b))
    mode = mode_bin * MODE_BIN_KM

    cdf = {t: sum(1 for e in errors if e <= t) / n for t in CDF_THRESHOLDS_KM}
    return EvalReport(mae=mae, rmse=rmse, median=median, mode=mode, cdf=cdf, n=n, skipped=skipped)


# ---------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    baseline: float
    proposed: float
    delta: float
    delta_kind: str  # "pct_reduction" for km metrics, "points" for CDF rows


def compare(a: EvalReport, b: EvalReport) -> list[ComparisonRow]:
    """Side-by-side rows: km metrics get relative reduction, CDF rows get point deltas."""
    rows: list[ComparisonRow] = []
    for name in ("mae", "rmse", "median", "mode"):
        av = getattr(a, name)
        bv = getattr(b, name)
        reduction = 0.0 if av == 0 else (av - bv) / av * 100.0
        rows.append(ComparisonRow(name, av, bv, reduction, "pct_reduction"))
    for t in CDF_THRESHOLDS_KM:
        av = a.cdf.get(t, 0.0) * 100.0
        bv = b.cdf.get(t, 0.0) * 100.0
        rows.append(ComparisonRow(f"within_{t:g}km", av, bv, bv - av, "points"))
    return rows


# ---------------------------------------------------------------------------
# dataset and prediction files (line-delimited records)


@dataclass(frozen=True)
class DatasetRecord:
    article_id: str
    text: str
    truth: GeoPoint
    extra: dict


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    """Parse a dataset file; bad lines are rejected with their line number."""
    records: list[DatasetRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"unparseable record: {exc}", line_no=line_no)
            try:
                truth = GeoPoint(float(obj["lat"]), float(obj["lon"]))
                rec = DatasetRecord(
                    article_id=str(obj["article_id"]),
                    text=str(obj["text"]),
                    truth=truth,
                    extra={
                        k: v for k, v in obj.items() if k not in ("article_id", "text", "lat", "lon")
                    },
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"bad record fields: {exc}", line_no=line_no)
            except Exception as exc:  # GeoPoint bounds
                raise SchemaError(f"bad coordinates: {exc}", line_no=line_no)
            records.append(rec)
    return records


@dataclass(frozen=True)
class PredictionRecord:
    article_id: str
    status: str
    coords: GeoPoint | None


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    records: list[PredictionRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                status = str(obj["status"])
                if obj.get("lat") is None or obj.get("lon") is None:
                    coords = None
                else:
                    coords = GeoPoint(float(obj["lat"]), float(obj["lon"]))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"unparseable record: {exc}", line_no=line_no)
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"bad record fields: {exc}", line_no=line_no)
            except Exception as exc:
                raise SchemaError(f"bad coordinates: {exc}", line_no=line_no)
            records.append(PredictionRecord(article_id=str(obj["article_id"]), status=status, coords=coords))
    return records


def build_error_vector(
    predictions: list[PredictionRecord], dataset: list[DatasetRecord]
) -> tuple[ErrorVector, int]:
    """Pair predictions with ground truth; returns (vector, skipped count).

    Predictions without coordinates and predictions lacking a ground-truth
    record are skipped, not scored.
    """
    truth_by_id = {r.article_id: r.truth for r in dataset}
    errors: list[float] = []
    ids: list[str] = []
    skipped = 0
    for pred in predictions:
        truth = truth_by_id.get(pred.article_id)
        if pred.coords is None or truth is None:
            skipped += 1
            continue
        errors.append(error_km(pred.coords, truth))
        ids.append(pred.article_id)
    return ErrorVector(errors=tuple(errors), article_ids=tuple(ids)), skipped
