"""Command line entry point.

Five subcommands: extract (cue extraction only), geolocate (one article
end to end), batch (many articles plus a summary), simgen (synthetic
world and article corpus), and evaluate (metrics tables, delimited
output, and figures).

Exit codes: 0 for a completed run, including articles that resolve to
NotAvailable; 1 for input problems such as missing files, malformed
records, or unknown article ids; 2 for configuration and provider
problems. Configuration resolves as flags over environment variables
over the --config file over built-in defaults. Mock mode never touches
the network.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .cues import LocationCues, assess_vagueness, parse_extractor_output, with_road_codes
from .errors import (
    ConfigError,
    EmptyVector,
    MalformedExtraction,
    NewsgeoError,
    ProviderRefusal,
    ProviderTimeout,
    SchemaError,
)
from .fuzz import load_alias_map, load_road_gazetteer, road_lookup
from .geo import GeoPoint
from .metrics import aggregate, build_error_vector, compare, load_dataset, load_predictions
from .pipeline import Budgets, PipelineResult, run_article, run_batch, summarize_batch
from .providers.base import ProviderConfig
from .report import (
    format_comparison,
    format_report,
    render_figures,
    write_comparison_delimited,
    write_metrics_delimited,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONFIG = 2


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = EXIT_INPUT):
        super().__init__(message)
        self.exit_code = exit_code


# ---------------------------------------------------------------------------
# configuration


_CONFIG_FIELDS = (
    "model_endpoint",
    "model_name",
    "api_key_env",
    "webdriver_endpoint",
    "ocr_endpoint",
    "timeout_s",
    "retries",
)


def _env_name(field: str) -> str:
    return "NEWSGEO_" + field.upper()


def resolve_config(args: argparse.Namespace) -> ProviderConfig:
    """Merge provider settings: flags > environment > config file > defaults.

    The config file never holds credentials; api_key_env names the
    environment variable the adapters read the key from at call time.
    """
    values: dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError(f"cannot read config file: {exc}", EXIT_CONFIG)
        except json.JSONDecodeError as exc:
            raise CliError(f"config file is not valid JSON: {exc}", EXIT_CONFIG)
        if not isinstance(doc, dict):
            raise CliError("config file must hold a JSON object", EXIT_CONFIG)
        unknown = sorted(set(doc) - set(_CONFIG_FIELDS))
        if unknown:
            raise CliError(f"unknown config keys: {', '.join(unknown)}", EXIT_CONFIG)
        values.update(doc)
    for field in _CONFIG_FIELDS:
        env = os.environ.get(_env_name(field))
        if env is not None:
            values[field] = env
    for field in _CONFIG_FIELDS:
        flag = getattr(args, field, None)
        if flag is not None:
            values[field] = flag
    try:
        if "timeout_s" in values:
            values["timeout_s"] = float(values["timeout_s"])
        if "retries" in values:
            values["retries"] = int(values["retries"])
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad numeric config value: {exc}", EXIT_CONFIG)
    return ProviderConfig(**values)


def _budgets(args: argparse.Namespace) -> Budgets:
    kwargs = {}
    if getattr(args, "max_verifications", None) is not None:
        kwargs["max_verifications"] = args.max_verifications
    try:
        return Budgets(**kwargs)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG)


# ---------------------------------------------------------------------------
# input loading


def _read_text_arg(args: argparse.Namespace) -> str:
    if getattr(args, "text", None):
        return args.text
    if getattr(args, "input", None):
        try:
            return Path(args.input).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read article file: {exc}")
    raise CliError("provide the article with --text or --input")


def _load_world(path: str):
    from .sim.world import load_world

    if not path:
        raise CliError("--world is required in mock mode")
    try:
        return load_world(path)
    except OSError as exc:
        raise CliError(f"cannot read world file: {exc}")
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"world file is malformed: {exc}")


def _load_articles(path: str) -> list[dict]:
    if not path:
        raise CliError("--articles is required in mock mode")
    records: list[dict] = []
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CliError(f"articles line {line_no}: not valid JSON: {exc}")
                if not isinstance(obj, dict) or "article_id" not in obj or "text" not in obj:
                    raise CliError(
                        f"articles line {line_no}: each record needs article_id and text"
                    )
                records.append(obj)
    except OSError as exc:
        raise CliError(f"cannot read articles file: {exc}")
    if not records:
        raise CliError("articles file holds no records")
    return records


class _ArticleHandle:
    """Duck-typed view of an article record for the mock provider set."""

    __slots__ = ("article_id", "text", "truth", "indexed", "landmark_en", "road_en", "union_en")

    def __init__(self, rec: dict):
        try:
            self.article_id = str(rec["article_id"])
            self.text = str(rec["text"])
            self.truth = GeoPoint(float(rec["lat"]), float(rec["lon"]))
            self.indexed = bool(rec["indexed"])
            self.landmark_en = str(rec["landmark"])
            self.road_en = str(rec["road"])
            self.union_en = str(rec["union"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(
                f"article {rec.get('article_id', '?')} lacks the fields mock mode "
                f"needs (lat, lon, landmark, road, union, indexed): {exc}"
            )


def _mock_runtime(args: argparse.Namespace):
    from .sim.world import world_gazetteer

    world = _load_world(args.world)
    return world, world_gazetteer(world)


def _mock_providers(world, rec: dict, args: argparse.Namespace):
    from .sim.mocks import sim_providers

    return sim_providers(world, _ArticleHandle(rec), noise_seed=args.noise_seed)


def _find_record(records: list[dict], article_id: str) -> dict:
    for rec in records:
        if rec.get("article_id") == article_id:
            return rec
    raise CliError(f"article id {article_id!r} not found in articles file")


# ---------------------------------------------------------------------------
# output helpers


def _safe_filename(article_id: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in article_id)


def _write_traces(results: list[PipelineResult], trace_dir: str) -> None:
    out = Path(trace_dir)
    out.mkdir(parents=True, exist_ok=True)
    for res in results:
        lines = [f"{t.seq}\t{t.stage}\t{t.event}\t{t.detail}" for t in res.trace]
        path = out / f"{_safe_filename(res.article_id)}.trace.txt"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cues_payload(cues: LocationCues, vagueness) -> dict:
    payload = asdict(cues)
    payload["sug_strings"] = list(cues.sug_strings)
    payload["place_list"] = [list(p) for p in cues.place_list]
    payload["road_codes"] = list(cues.road_codes)
    payload["vagueness"] = vagueness.value
    return payload


def _format_batch_summary(summary) -> str:
    lines = [
        f"articles            {summary.total}",
    ]
    for status, count in summary.status_counts.items():
        rate = 100.0 * count / summary.total if summary.total else 0.0
        lines.append(f"  {status:<17} {count} ({rate:.1f}%)")
    lines += [
        f"mean model calls    {summary.mean_vlm_calls:.2f}",
        f"mean verifications  {summary.mean_verifier_calls_per_resolved:.2f} per resolved article",
        f"screenshots         {summary.total_screenshots}",
        f"grid points         {summary.total_grid_points}",
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_extract(args: argparse.Namespace) -> int:
    text = _read_text_arg(args)
    if args.mock:
        from .sim.mocks import MockCueExtractor

        world, gazetteer = _mock_runtime(args)
        raw = MockCueExtractor(world).extract(text)
        amap = None
    else:
        from .providers.live import LiveCueExtractor

        config = resolve_config(args)
        raw = LiveCueExtractor(config).extract(text)
        amap = load_alias_map()
        gazetteer = load_road_gazetteer()
    cues = parse_extractor_output(raw, amap=amap)
    cues = with_road_codes(cues, road_lookup(cues.place_names(), gazetteer, amap))
    print(json.dumps(_cues_payload(cues, assess_vagueness(cues)), ensure_ascii=False, indent=2))
    return EXIT_OK


def _run_one(args: argparse.Namespace) -> PipelineResult:
    budgets = _budgets(args)
    if args.mock:
        world, gazetteer = _mock_runtime(args)
        records = _load_articles(args.articles)
        if not args.article_id:
            raise CliError("--article-id is required in mock mode")
        rec = _find_record(records, args.article_id)
        providers = _mock_providers(world, rec, args)
        alias_map = None
    else:
        from .providers.live import build_live_providers

        config = resolve_config(args)
        providers = build_live_providers(config)
        rec = {"article_id": args.article_id or "article-1", "text": _read_text_arg(args)}
        alias_map = load_alias_map()
        gazetteer = load_road_gazetteer()
    try:
        return run_article(
            rec["article_id"],
            rec["text"],
            providers,
            alias_map=alias_map,
            gazetteer=gazetteer,
            budgets=budgets,
        )
    finally:
        try:
            providers.session.close()
        except Exception:
            pass


def _cmd_geolocate(args: argparse.Namespace) -> int:
    result = _run_one(args)
    if args.trace_dir:
        _write_traces([result], args.trace_dir)
    print(json.dumps(result.to_prediction(), ensure_ascii=False))
    return EXIT_OK


def _cmd_batch(args: argparse.Namespace) -> int:
    if args.concurrency < 1:
        raise CliError("--concurrency must be at least 1", EXIT_CONFIG)
    budgets = _budgets(args)
    if args.mock:
        world, gazetteer = _mock_runtime(args)
        records = _load_articles(args.articles)
        factory = lambda rec: _mock_providers(world, rec, args)  # noqa: E731
        alias_map = None
    else:
        from .providers.live import build_live_providers

        config = resolve_config(args)
        records = _load_articles(args.articles)
        factory = lambda rec: build_live_providers(config)  # noqa: E731
        alias_map = load_alias_map()
        gazetteer = load_road_gazetteer()
    results = run_batch(
        records,
        factory,
        concurrency=args.concurrency,
        alias_map=alias_map,
        gazetteer=gazetteer,
        budgets=budgets,
    )
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for res in results:
            fh.write(json.dumps(res.to_prediction(), ensure_ascii=False) + "\n")
    if args.trace_dir:
        _write_traces(results, args.trace_dir)
    print(_format_batch_summary(summarize_batch(results)))
    print(f"predictions written to {out}")
    return EXIT_OK


def _parse_vague_mix(raw: str) -> tuple[int, int, int]:
    parts = raw.split("/")
    if len(parts) != 3:
        raise CliError("--vague-mix must look like NOT/SLIGHTLY/EXTREMELY, e.g. 50/5/5")
    try:
        nv, sv, ev = (int(p) for p in parts)
    except ValueError:
        raise CliError("--vague-mix parts must be integers")
    if min(nv, sv, ev) < 0 or nv + sv + ev == 0:
        raise CliError("--vague-mix needs non-negative counts summing above zero")
    return nv, sv, ev


def _cmd_simgen(args: argparse.Namespace) -> int:
    from .sim.world import SimCounts, article_to_record, generate_article_set, generate_world, save_world

    nv, sv, ev = _parse_vague_mix(args.vague_mix)
    try:
        counts = SimCounts(
            districts=args.districts, roads=args.roads, landmarks=args.landmarks
        )
        world = generate_world(args.seed, counts)
        articles = generate_article_set(world, nv, sv, ev, args.unindexed)
    except (ValueError, RuntimeError) as exc:
        raise CliError(str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    world_path = out / "world.json"
    sha = save_world(world, world_path)
    articles_path = out / "articles.jsonl"
    with open(articles_path, "w", encoding="utf-8") as fh:
        for art in articles:
            fh.write(json.dumps(article_to_record(art), ensure_ascii=False) + "\n")
    unindexed = sum(1 for a in articles if not a.indexed)
    print(f"world    {world_path} (sha256 {sha})")
    print(
        f"articles {articles_path} ({len(articles)} total: {nv} clear / {sv} slightly "
        f"vague / {ev} extremely vague; {unindexed} unindexed)"
    )
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        predictions = load_predictions(args.predictions)
        dataset = load_dataset(args.dataset)
    except OSError as exc:
        raise CliError(f"cannot read input: {exc}")
    except SchemaError as exc:
        where = f" (line {exc.line_no})" if exc.line_no else ""
        raise CliError(f"bad record{where}: {exc}")
    ev, skipped = build_error_vector(predictions, dataset)
    try:
        report = aggregate(ev, skipped=skipped)
    except EmptyVector:
        raise CliError("no scorable predictions: every record was skipped")
    print(format_report(report))

    # shells pass --delimiter '\t' as two characters; accept that spelling
    delimiter = "\t" if args.delimiter == "\\t" else args.delimiter
    if len(delimiter) != 1:
        raise CliError("--delimiter must be a single character (or \\t)", EXIT_CONFIG)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = "tsv" if delimiter == "\t" else "csv"
    written: list[Path] = []
    metrics_path = out_dir / f"{args.stem}_metrics.{ext}"
    write_metrics_delimited(report, metrics_path, delimiter=delimiter)
    written.append(metrics_path)
    written.extend(render_figures(ev, out_dir, stem=args.stem))

    if args.baseline:
        try:
            base_preds = load_predictions(args.baseline)
        except OSError as exc:
            raise CliError(f"cannot read baseline: {exc}")
        except SchemaError as exc:
            where = f" (line {exc.line_no})" if exc.line_no else ""
            raise CliError(f"bad baseline record{where}: {exc}")
        base_ev, base_skipped = build_error_vector(base_preds, dataset)
        try:
            base_report = aggregate(base_ev, skipped=base_skipped)
        except EmptyVector:
            raise CliError("baseline has no scorable predictions")
        rows = compare(base_report, report)
        print()
        print(format_comparison(rows))
        cmp_path = out_dir / f"{args.stem}_comparison.{ext}"
        write_comparison_delimited(rows, cmp_path, delimiter=delimiter)
        written.append(cmp_path)

    print()
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("provider configuration")
    g.add_argument("--config", help="JSON file with provider settings (never credentials)")
    g.add_argument("--model-endpoint", dest="model_endpoint")
    g.add_argument("--model-name", dest="model_name")
    g.add_argument(
        "--api-key-env",
        dest="api_key_env",
        help="name of the environment variable holding the model API key",
    )
    g.add_argument("--webdriver-endpoint", dest="webdriver_endpoint")
    g.add_argument("--ocr-endpoint", dest="ocr_endpoint")
    g.add_argument("--timeout-s", dest="timeout_s", type=float)
    g.add_argument("--retries", dest="retries", type=int)


def _add_mock_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("mock mode")
    g.add_argument("--mock", action="store_true", help="run offline against a synthetic world")
    g.add_argument("--world", help="world file from simgen (mock mode)")
    g.add_argument("--noise-seed", type=int, default=0, help="mock OCR noise seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newsgeo",
        description="Infer road-accident coordinates from news articles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run cue extraction on one article")
    p.add_argument("--text", help="article text inline")
    p.add_argument("--input", help="file holding the article text")
    _add_mock_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("geolocate", help="resolve one article to coordinates")
    p.add_argument("--text", help="article text inline (live mode)")
    p.add_argument("--input", help="file holding the article text (live mode)")
    p.add_argument("--articles", help="articles file from simgen (mock mode)")
    p.add_argument("--article-id", help="which article to resolve")
    p.add_argument("--trace-dir", help="directory for per-article trace files")
    p.add_argument("--max-verifications", type=int, help="verification budget per article")
    _add_mock_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_geolocate)

    p = sub.add_parser("batch", help="resolve many articles and summarize")
    p.add_argument("--articles", required=True, help="line-delimited article records")
    p.add_argument("--out", required=True, help="where to write prediction records")
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--trace-dir", help="directory for per-article trace files")
    p.add_argument("--max-verifications", type=int, help="verification budget per article")
    _add_mock_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_batch)

    p = sub.add_parser("simgen", help="generate a synthetic world and article corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--districts", type=int, default=4)
    p.add_argument("--roads", type=int, default=12)
    p.add_argument("--landmarks", type=int, default=40)
    p.add_argument(
        "--vague-mix",
        default="50/5/5",
        help="article counts as NOT/SLIGHTLY/EXTREMELY vague (default 50/5/5)",
    )
    p.add_argument(
        "--unindexed",
        type=int,
        default=10,
        help="how many clear articles hide their landmark from autocomplete",
    )
    p.set_defaults(func=_cmd_simgen)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--predictions", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True, help="directory for figures and delimited files")
    p.add_argument("--baseline", help="prediction file to compare against")
    p.add_argument("--delimiter", default=",", help="delimiter for tabular output files")
    p.add_argument("--stem", default="eval", help="filename stem for outputs")
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ConfigError, ProviderTimeout, ProviderRefusal) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MalformedExtraction as exc:
        print(f"error: extractor output unusable: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NewsgeoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
