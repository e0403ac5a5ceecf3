"""Four-stage resolution pipeline from article text to coordinates.

Stage 1 extracts and triages location cues. Extremely vague articles stop
here: no screenshots, no model calls, no coordinates. Stage 2 tries the
extractor's suggestion strings against autocomplete and visually verifies
reranked candidates. Stage 3 geocodes the most specific administrative
unit and sweeps a coarse-to-fine grid around it. Stage 4 falls back to
the best geocodable admin center.

A Confirmed status is only ever set on the branch where the verifier
answered Yes; a gate-failed screenshot never reaches the verifier.
"""

from __future__ import annotations

import io
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

from PIL import Image

from .cues import (
    LocationCues,
    VaguenessClass,
    assess_vagueness,
    filter_suggestions,
    parse_extractor_output,
    pivot_unit,
    with_road_codes,
)
from .errors import (
    GazetteerUnavailable,
    MalformedExtraction,
    MalformedVerdict,
    NoCoordinatesInUrl,
    OcrEngineFailure,
    ProviderRefusal,
    ProviderTimeout,
    SessionCrashed,
)
from .fuzz import AliasMap, RoadGazetteer, normalize_text, road_lookup
from .geo import GeoPoint, GridPlan, grid_points
from .ocr import ocr_gate, run_chunked_ocr
from .providers.base import ProviderSet, Suggestion, parse_map_url

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Budgets:
    extract_attempts: int = 3
    max_verifications: int = 20  # stage-2 cap; stage 3 is bounded by the grid
    grid_extent_km: float = 6.0
    grid_steps_km: tuple[float, ...] = (6.0, 3.0, 1.0)
    map_zoom: float = 15.0

    def __post_init__(self) -> None:
        if self.extract_attempts < 1:
            raise ValueError("extract_attempts must be >= 1")
        if self.max_verifications < 1:
            raise ValueError("max_verifications must be >= 1")


@dataclass
class Telemetry:
    vlm_calls: int = 0
    verifier_calls: int = 0
    rerank_calls: int = 0
    ocr_actions: int = 0
    screenshots: int = 0
    grid_points_scanned: int = 0
    wall_time_s: float = 0.0


class ResultStatus(Enum):
    CONFIRMED_FIRST = "Confirmed1st"
    CONFIRMED_SECOND = "Confirmed2nd"
    FALLBACK = "Fallback"
    NOT_AVAILABLE = "NotAvailable"


@dataclass(frozen=True)
class TraceRecord:
    """One logical pipeline event.

    seq is a per-article logical clock, not a wall timestamp, so traces
    compare equal across runs regardless of scheduling.
    """

    seq: int
    stage: str
    event: str
    detail: str = ""


@dataclass
class PipelineResult:
    article_id: str
    status: ResultStatus
    point: GeoPoint | None
    vagueness: VaguenessClass | None
    cues: LocationCues
    telemetry: Telemetry = field(default_factory=Telemetry)
    trace: tuple[TraceRecord, ...] = ()

    def to_prediction(self) -> dict:
        rec: dict = {"article_id": self.article_id, "status": self.status.value}
        if self.point is not None:
            rec["lat"] = self.point.lat
            rec["lon"] = self.point.lon
        else:
            rec["lat"] = None
            rec["lon"] = None
        return rec


class _Tracer:
    def __init__(self) -> None:
        self.records: list[TraceRecord] = []

    def __call__(self, stage: str, event: str, detail: str = "") -> None:
        self.records.append(TraceRecord(len(self.records), stage, event, detail))


def _keep_suggestion(s: Suggestion) -> bool:
    return bool(filter_suggestions([s.display_text]))


def run_article(
    article_id: str,
    text: str,
    providers: ProviderSet,
    *,
    alias_map: AliasMap | None = None,
    gazetteer: RoadGazetteer | None = None,
    budgets: Budgets | None = None,
) -> PipelineResult:
    budgets = budgets or Budgets()
    tele = Telemetry()
    trace = _Tracer()
    t0 = time.perf_counter()

    cues = _stage1(article_id, text, providers, alias_map, gazetteer, budgets, trace)
    vagueness = assess_vagueness(cues)
    trace("stage1", "triage", vagueness.value)

    status = ResultStatus.NOT_AVAILABLE
    point: GeoPoint | None = None

    if vagueness is not VaguenessClass.EXTREMELY_VAGUE:
        restarted = False
        session_dead = False

        def restart_once() -> bool:
            nonlocal restarted
            if restarted:
                return False
            restarted = True
            ok = providers.restart_session()
            trace("session", "restart", "ok" if ok else "no factory")
            return ok

        def attempt(stage: str, fn):
            nonlocal session_dead
            if session_dead:
                trace(stage, "skipped", "session dead")
                return None
            try:
                return fn()
            except SessionCrashed as exc:
                trace(stage, "session_crashed", str(exc))
                if restart_once():
                    try:
                        return fn()
                    except SessionCrashed as exc2:
                        trace(stage, "session_crashed", str(exc2))
                session_dead = True
                return None

        point = attempt(
            "stage2", lambda: _stage2(article_id, text, cues, providers, budgets, tele, trace)
        )
        if point is not None:
            status = ResultStatus.CONFIRMED_FIRST
        else:
            point = attempt(
                "stage3", lambda: _stage3(article_id, text, cues, providers, budgets, tele, trace)
            )
            if point is not None:
                status = ResultStatus.CONFIRMED_SECOND
            else:
                # always attempted, even after crashes; it needs no screenshots
                try:
                    point = _stage4(cues, providers, tele, trace)
                except SessionCrashed as exc:
                    trace("stage4", "session_crashed", str(exc))
                    point = None
                if point is not None:
                    status = ResultStatus.FALLBACK
    else:
        trace("stage1", "stop", "extremely vague; not locatable")

    tele.wall_time_s = time.perf_counter() - t0
    trace("done", "status", status.value)
    return PipelineResult(
        article_id=article_id,
        status=status,
        point=point,
        vagueness=vagueness,
        cues=cues,
        telemetry=tele,
        trace=tuple(trace.records),
    )


# ---------------------------------------------------------------------------
# stage 1: extraction and triage


def _stage1(
    article_id: str,
    text: str,
    providers: ProviderSet,
    alias_map: AliasMap | None,
    gazetteer: RoadGazetteer | None,
    budgets: Budgets,
    trace: _Tracer,
) -> LocationCues:
    cues = LocationCues()
    for attempt in range(budgets.extract_attempts):
        try:
            raw = providers.extractor.extract(text)
            cues = parse_extractor_output(raw, amap=alias_map)
            trace("stage1", "extracted", f"attempt {attempt + 1}")
            break
        except (MalformedExtraction, ProviderTimeout, ProviderRefusal) as exc:
            trace("stage1", "extract_failed", f"attempt {attempt + 1}: {exc}")
    else:
        trace("stage1", "extract_exhausted", f"{budgets.extract_attempts} attempts")
        return cues

    if gazetteer is not None:
        try:
            codes = road_lookup(cues.place_names(), gazetteer, alias_map)
        except GazetteerUnavailable as exc:
            trace("stage1", "gazetteer_unavailable", str(exc))
            codes = []
        if codes:
            trace("stage1", "road_codes", ",".join(codes))
            cues = with_road_codes(cues, codes)
    return cues


# ---------------------------------------------------------------------------
# shared screenshot-and-gate step


def _gated_verify(
    article_id: str,
    text: str,
    cues: LocationCues,
    vocab: list[str],
    view_id: str,
    providers: ProviderSet,
    tele: Telemetry,
    trace: _Tracer,
    stage: str,
) -> bool | None:
    """Screenshot the current viewport, gate it, verify if gated in.

    Returns True on a verified Yes, False on a No, and None when the view
    never reached the verifier (gate fail or OCR failure).
    """
    png = providers.session.screenshot()
    tele.screenshots += 1
    try:
        result = run_chunked_ocr(Image.open(io.BytesIO(png)), providers.ocr_engine, view_id=view_id)
    except OcrEngineFailure as exc:
        trace(stage, "ocr_failed", f"{view_id}: {exc}")
        return None
    tele.ocr_actions += result.ocr_actions
    gate = ocr_gate(result.lines, vocab)
    if not gate.passed:
        best = f"best {gate.best.score} on {gate.best.place!r}" if gate.best else "no lines"
        trace(stage, "gate_failed", f"{view_id}: {best}")
        return None
    tele.vlm_calls += 1
    tele.verifier_calls += 1
    ocr_text = "\n".join(l.text for l in result.lines)
    try:
        verdict = providers.verifier.verify(text, png, ocr_text, list(cues.road_codes))
    except (MalformedVerdict, ProviderTimeout, ProviderRefusal) as exc:
        trace(stage, "verify_failed", f"{view_id}: {exc}")
        return False
    trace(stage, "verified", f"{view_id}: {'Yes' if verdict.is_same else 'No'}")
    return verdict.is_same


def _confirmed_point(providers: ProviderSet, trace: _Tracer, stage: str) -> GeoPoint | None:
    try:
        return parse_map_url(providers.session.current_url()).center
    except NoCoordinatesInUrl as exc:
        trace(stage, "url_unparseable", str(exc))
        return None


# ---------------------------------------------------------------------------
# stage 2: first-degree candidates


def _stage2(
    article_id: str,
    text: str,
    cues: LocationCues,
    providers: ProviderSet,
    budgets: Budgets,
    tele: Telemetry,
    trace: _Tracer,
) -> GeoPoint | None:
    if not cues.sug_strings:
        trace("stage2", "no_suggestions")
        return None

    vocab = _stage2_vocab(cues)
    if not vocab:
        trace("stage2", "no_gate_vocab")
        return None

    groups: list[list[Suggestion]] = []
    for gi, sug in enumerate(cues.sug_strings):
        rows = providers.session.autocomplete(sug)
        kept = [replace(s, group_index=gi) for s in rows if _keep_suggestion(s)]
        trace("stage2", "autocomplete", f"{sug!r}: {len(rows)} rows, {len(kept)} kept")
        if kept:
            groups.append(kept)
    if not groups:
        trace("stage2", "no_candidates")
        return None

    tele.vlm_calls += 1
    tele.rerank_calls += 1
    try:
        chosen = providers.reranker.rerank(text, groups)
    except (ProviderTimeout, ProviderRefusal) as exc:
        trace("stage2", "rerank_failed", f"{exc}; using rank-0 rows")
        chosen = [min(g, key=lambda s: s.rank) for g in groups]
    trace("stage2", "reranked", "; ".join(s.display_text for s in chosen))

    seen: set[str] = set()
    for idx, candidate in enumerate(chosen):
        if candidate.display_text in seen:
            continue
        seen.add(candidate.display_text)
        if tele.verifier_calls >= budgets.max_verifications:
            trace("stage2", "verification_budget_exhausted", str(budgets.max_verifications))
            break
        providers.session.select(candidate)
        trace("stage2", "selected", candidate.display_text)
        outcome = _gated_verify(
            article_id, text, cues, vocab, f"{article_id}:2:{idx}",
            providers, tele, trace, "stage2",
        )
        if outcome is True:
            return _confirmed_point(providers, trace, "stage2")
    return None


def _stage2_vocab(cues: LocationCues) -> list[str]:
    names = [cues.road_name, cues.landmark]
    for bn, en in cues.place_list:
        names.extend((bn, en))
    out: list[str] = []
    for n in names:
        if normalize_text(n) and n not in out:
            out.append(n)
    return out


# ---------------------------------------------------------------------------
# stage 3: pivot grid sweep


def _stage3(
    article_id: str,
    text: str,
    cues: LocationCues,
    providers: ProviderSet,
    budgets: Budgets,
    tele: Telemetry,
    trace: _Tracer,
) -> GeoPoint | None:
    pivot_name = pivot_unit(cues)
    if not pivot_name:
        trace("stage3", "no_pivot_unit")
        return None
    vocab = _stage3_vocab(cues)
    if not vocab:
        trace("stage3", "no_gate_vocab")
        return None

    pivot = _geocode(pivot_name, providers, trace, "stage3")
    if pivot is None:
        trace("stage3", "pivot_not_geocodable", pivot_name)
        return None
    trace("stage3", "pivot", f"{pivot_name} @ {pivot.lat:.5f},{pivot.lon:.5f}")

    plan = GridPlan(pivot, budgets.grid_extent_km, budgets.grid_steps_km)
    for step in budgets.grid_steps_km:
        points = grid_points(plan, step)
        trace("stage3", "grid_pass", f"step {step:g} km: {len(points)} new points")
        for k, pt in enumerate(points):
            tele.grid_points_scanned += 1
            providers.session.goto(pt, budgets.map_zoom)
            outcome = _gated_verify(
                article_id, text, cues, vocab, f"{article_id}:3:{step:g}:{k}",
                providers, tele, trace, "stage3",
            )
            if outcome is True:
                return _confirmed_point(providers, trace, "stage3")
    trace("stage3", "grid_exhausted")
    return None


def _stage3_vocab(cues: LocationCues) -> list[str]:
    names = [cues.road_name, cues.landmark, *cues.road_codes]
    out: list[str] = []
    for n in names:
        if normalize_text(n) and n not in out:
            out.append(n)
    return out


# ---------------------------------------------------------------------------
# stage 4: administrative fallback


def _geocode(name: str, providers: ProviderSet, trace: _Tracer, stage: str) -> GeoPoint | None:
    rows = providers.session.autocomplete(name)
    kept = [s for s in rows if _keep_suggestion(s)]
    if not kept:
        return None
    providers.session.select(kept[0])
    try:
        return parse_map_url(providers.session.current_url()).center
    except NoCoordinatesInUrl as exc:
        trace(stage, "url_unparseable", str(exc))
        return None


def _stage4(
    cues: LocationCues,
    providers: ProviderSet,
    tele: Telemetry,
    trace: _Tracer,
) -> GeoPoint | None:
    for fieldname in ("union_", "thana", "upazilla", "zilla", "district"):
        name = getattr(cues, fieldname)
        if not normalize_text(name):
            continue
        point = _geocode(name, providers, trace, "stage4")
        if point is not None:
            trace("stage4", "fallback", f"{fieldname}={name}")
            return point
        trace("stage4", "not_geocodable", f"{fieldname}={name}")
    trace("stage4", "exhausted")
    return None


# ---------------------------------------------------------------------------
# batch running


def run_batch(
    records: list[dict],
    provider_factory,
    *,
    concurrency: int = 1,
    alias_map: AliasMap | None = None,
    gazetteer: RoadGazetteer | None = None,
    budgets: Budgets | None = None,
) -> list[PipelineResult]:
    """Resolve many articles with per-article isolation.

    Each record needs "article_id" and "text"; the whole record is handed
    to provider_factory so callers can smuggle their own context through.
    A crash in one article never takes down the batch: it yields a
    NotAvailable result carrying the error in its trace.
    """
    if concurrency < 1:
        raise ValueError("concurrency must be >= 1")

    def work(rec: dict) -> PipelineResult:
        providers = None
        try:
            providers = provider_factory(rec)
            return run_article(
                rec["article_id"],
                rec["text"],
                providers,
                alias_map=alias_map,
                gazetteer=gazetteer,
                budgets=budgets,
            )
        except Exception as exc:
            log.exception("article %s failed", rec["article_id"])
            return PipelineResult(
                article_id=rec["article_id"],
                status=ResultStatus.NOT_AVAILABLE,
                point=None,
                vagueness=None,
                cues=LocationCues(),
                trace=(TraceRecord(0, "batch", "error", repr(exc)),),
            )
        finally:
            if providers is not None:
                try:
                    providers.session.close()
                except Exception:
                    pass

    if concurrency == 1:
        return [work(r) for r in records]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(pool.map(work, records))


@dataclass(frozen=True)
class BatchSummary:
    total: int
    status_counts: dict
    mean_vlm_calls: float
    mean_verifier_calls_per_resolved: float
    total_screenshots: int
    total_grid_points: int


def summarize_batch(results: list[PipelineResult]) -> BatchSummary:
    counts: dict[str, int] = {s.value: 0 for s in ResultStatus}
    for r in results:
        counts[r.status.value] += 1
    n = len(results)
    resolved = [r for r in results if r.status is not ResultStatus.NOT_AVAILABLE]
    mean_vlm = sum(r.telemetry.vlm_calls for r in results) / n if n else 0.0
    mean_ver = (
        sum(r.telemetry.verifier_calls for r in resolved) / len(resolved) if resolved else 0.0
    )
    return BatchSummary(
        total=n,
        status_counts=counts,
        mean_vlm_calls=mean_vlm,
        mean_verifier_calls_per_resolved=mean_ver,
        total_screenshots=sum(r.telemetry.screenshots for r in results),
        total_grid_points=sum(r.telemetry.grid_points_scanned for r in results),
    )
