"""Network-backed providers: model endpoints, a WebDriver map session,
and the OCR sidecar client.

All HTTP goes through httpx with the timeout and retry budget from
ProviderConfig. Model adapters speak the common chat-completions JSON
shape; the verifier attaches the screenshot as a data URL image part.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import time

import httpx

from ..errors import (
    ConfigError,
    OcrEngineFailure,
    ProviderRefusal,
    ProviderTimeout,
    SessionCrashed,
)
from ..geo import GeoPoint
from .base import (
    ProviderConfig,
    ProviderSet,
    Suggestion,
    VerifierVerdict,
    choose_with_fallback,
    parse_verifier_reply,
)

log = logging.getLogger(__name__)

_EXTRACT_INSTRUCTIONS = """\
Read the news article below and pull out where the accident happened.
Reply with one line per field, formatted exactly as "field: value", for
these fields: road_name, road_type, landmark, union, zilla, upazilla,
thana, district. Leave a field's value empty if the article does not say.
Then emit up to 10 map search queries, each wrapped in its own
<sug_str>...</sug_str> tag, ordered most specific first. Finally list the
place names you used, one per line as "bangla || english", between
<place_list> and </place_list> tags.

Article:
"""

_RERANK_INSTRUCTIONS = """\
For each numbered candidate group below, pick the dropdown row that best
matches the accident location in the article. Answer with one tag per
group, exactly <best_G>R</best_G> where G is the group number and R is
the row number of your pick. No other text.

Article:
"""

_VERIFY_INSTRUCTIONS = """\
You are shown a map screenshot. Decide whether the view is centered on
the accident location described in the article. Consider the road names
and landmarks legible in the screenshot text below. Answer with exactly
<isSame>Yes</isSame> or <isSame>No</isSame>, then one short sentence of
reasoning.
"""


def _api_key(config: ProviderConfig) -> str:
    key = os.environ.get(config.api_key_env, "")
    if not key:
        raise ConfigError(f"environment variable {config.api_key_env} is not set")
    return key


class _ChatClient:
    """Minimal chat-completions caller with retry on timeout."""

    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        if not config.model_endpoint:
            raise ConfigError("model_endpoint is required for live providers")
        self.config = config
        self.client = client or httpx.Client(timeout=config.timeout_s)
        self._auth = {"Authorization": f"Bearer {_api_key(config)}"}

    def complete(self, content) -> str:
        body = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": content}],
        }
        url = self.config.model_endpoint.rstrip("/") + "/v1/chat/completions"
        last_exc: Exception | None = None
        for attempt in range(self.config.retries + 1):
            try:
                resp = self.client.post(url, json=body, headers=self._auth)
            except httpx.TimeoutException as exc:
                last_exc = exc
                log.warning("model call timed out (attempt %d)", attempt + 1)
                continue
            except httpx.HTTPError as exc:
                raise ProviderRefusal(f"transport failure: {exc}") from exc
            if resp.status_code >= 400:
                raise ProviderRefusal(f"model endpoint returned {resp.status_code}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, json.JSONDecodeError) as exc:
                raise ProviderRefusal(f"unexpected completion shape: {exc}") from exc
        raise ProviderTimeout(f"model call timed out after {self.config.retries + 1} attempts") from last_exc


class LiveCueExtractor:
    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        self.chat = _ChatClient(config, client)

    def extract(self, article_text: str) -> str:
        return self.chat.complete(_EXTRACT_INSTRUCTIONS + article_text)


class LiveReranker:
    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        self.chat = _ChatClient(config, client)

    def rerank(self, article_text: str, groups: list[list[Suggestion]]) -> list[Suggestion]:
        lines = [_RERANK_INSTRUCTIONS + article_text, ""]
        for gi, group in enumerate(groups):
            lines.append(f"Group {gi}:")
            for s in group:
                lines.append(f"  row {s.rank}: {s.display_text}")
        raw = self.chat.complete("\n".join(lines))
        return choose_with_fallback(raw, groups)


class LiveVerifier:
    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        self.chat = _ChatClient(config, client)

    def verify(
        self, article_text: str, screenshot: bytes, ocr_text: str, road_codes: list[str]
    ) -> VerifierVerdict:
        data_url = "data:image/png;base64," + base64.b64encode(screenshot).decode("ascii")
        codes = f"\nKnown road codes: {', '.join(road_codes)}" if road_codes else ""
        prompt = (
            f"{_VERIFY_INSTRUCTIONS}\nArticle:\n{article_text}\n\n"
            f"Screenshot text:\n{ocr_text}{codes}"
        )
        content = [
            {"type": "text", "text": prompt},
            {"type": "image_url", "image_url": {"url": data_url}},
        ]
        return parse_verifier_reply(self.chat.complete(content))


class SidecarOcrEngine:
    """Client for the OCR sidecar service.

    The sidecar receives one preprocessed chunk per call and must not
    re-crop it; the chunk context stays on this side of the wire.
    """

    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        if not config.ocr_endpoint:
            raise ConfigError("ocr_endpoint is required for the sidecar engine")
        self.base = config.ocr_endpoint.rstrip("/")
        self.client = client or httpx.Client(timeout=config.timeout_s)

    def recognize(self, png_bytes: bytes, languages=("bn", "en"), context=None) -> list[dict]:
        params = {"languages": ",".join(languages)}
        try:
            resp = self.client.post(
                self.base + "/ocr",
                content=png_bytes,
                params=params,
                headers={"Content-Type": "image/png"},
            )
        except httpx.HTTPError as exc:
            raise OcrEngineFailure(f"sidecar unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise OcrEngineFailure(f"sidecar returned {resp.status_code}: {resp.text[:200]}")
        try:
            lines = resp.json()["lines"]
            return [
                {
                    "text": str(l["text"]),
                    "bbox": tuple(int(v) for v in l["bbox"]),
                    "confidence": float(l["confidence"]),
                }
                for l in lines
            ]
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise OcrEngineFailure(f"sidecar reply malformed: {exc}") from exc

    def health(self) -> dict:
        try:
            resp = self.client.get(self.base + "/health")
        except httpx.HTTPError as exc:
            raise OcrEngineFailure(f"sidecar unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise OcrEngineFailure(f"sidecar health returned {resp.status_code}")
        return resp.json()


class WebDriverMapSession:
    """Map viewport driven over the W3C WebDriver wire protocol.

    One session per article. Map readiness is polled on the URL until it
    carries a "@lat,lon,zoom" viewport or the readiness cap elapses.
    WebDriver transport failures surface as SessionCrashed so the
    pipeline can restart the session once.
    """

    def __init__(
        self,
        config: ProviderConfig,
        map_url: str = "https://www.google.com/maps",
        client: httpx.Client | None = None,
    ):
        if not config.webdriver_endpoint:
            raise ConfigError("webdriver_endpoint is required for live map sessions")
        self.config = config
        self.base = config.webdriver_endpoint.rstrip("/")
        self.client = client or httpx.Client(timeout=config.timeout_s)
        self.map_url = map_url
        self.session_id = self._start()
        self._navigate(map_url)

    # -- wire helpers

    def _call(self, method: str, path: str, body: dict | None = None) -> dict:
        url = f"{self.base}{path}"
        try:
            resp = self.client.request(method, url, json=body)
        except httpx.HTTPError as exc:
            raise SessionCrashed(f"webdriver transport failure: {exc}") from exc
        if resp.status_code >= 400:
            raise SessionCrashed(f"webdriver returned {resp.status_code} for {path}")
        try:
            return resp.json().get("value", {})
        except json.JSONDecodeError as exc:
            raise SessionCrashed(f"webdriver reply not JSON: {exc}") from exc

    def _start(self) -> str:
        value = self._call(
            "POST",
            "/session",
            {"capabilities": {"alwaysMatch": {"browserName": "chrome"}}},
        )
        sid = value.get("sessionId")
        if not sid:
            raise SessionCrashed("webdriver session did not start")
        return sid

    def _navigate(self, url: str) -> None:
        self._call("POST", f"/session/{self.session_id}/url", {"url": url})
        time.sleep(self.config.map_settle_s)

    def _script(self, script: str, args: list | None = None):
        return self._call(
            "POST",
            f"/session/{self.session_id}/execute/sync",
            {"script": script, "args": args or []},
        )

    def _wait_for_viewport_url(self) -> str:
        deadline = time.monotonic() + self.config.map_ready_cap_s
        url = ""
        while time.monotonic() < deadline:
            url = str(self._call("GET", f"/session/{self.session_id}/url").get("url", ""))
            if "@" in url:
                return url
            time.sleep(0.25)
        return url  # caller's URL parse decides whether this is usable

    # -- MapSession protocol

    def autocomplete(self, query: str) -> list[Suggestion]:
        self._script(
            "const b=document.querySelector('input#searchboxinput');"
            "b.value='';b.focus();",
        )
        self._script(
            "const b=document.querySelector('input#searchboxinput');"
            "b.value=arguments[0];"
            "b.dispatchEvent(new Event('input',{bubbles:true}));",
            [query],
        )
        time.sleep(self.config.map_settle_s)
        value = self._script(
            "return Array.from(document.querySelectorAll("
            "'[role=\"listbox\"] [role=\"option\"]')).slice(0,8)"
            ".map(e=>e.textContent.trim());"
        )
        rows = value if isinstance(value, list) else []
        return [
            Suggestion(display_text=str(t), group_index=0, rank=i) for i, t in enumerate(rows)
        ]

    def select(self, suggestion: Suggestion) -> None:
        self._script(
            "const rows=Array.from(document.querySelectorAll("
            "'[role=\"listbox\"] [role=\"option\"]'));"
            "const hit=rows[arguments[0]]; if(hit) hit.click();",
            [suggestion.rank],
        )
        time.sleep(self.config.map_settle_s)
        self._wait_for_viewport_url()

    def goto(self, point: GeoPoint, zoom: float) -> None:
        self._navigate(f"{self.map_url}/@{point.lat:.6f},{point.lon:.6f},{zoom:g}z")
        self._wait_for_viewport_url()

    def screenshot(self) -> bytes:
        value = self._call("GET", f"/session/{self.session_id}/screenshot")
        data = value if isinstance(value, str) else value.get("data", "")
        try:
            return base64.b64decode(data)
        except (ValueError, TypeError) as exc:
            raise SessionCrashed(f"screenshot payload undecodable: {exc}") from exc

    def current_url(self) -> str:
        return str(self._call("GET", f"/session/{self.session_id}/url").get("url", ""))

    def close(self) -> None:
        try:
            self._call("DELETE", f"/session/{self.session_id}")
        except SessionCrashed:
            pass


def build_live_providers(config: ProviderConfig, client: httpx.Client | None = None) -> ProviderSet:
    """Wire a full live provider set; raises ConfigError on missing pieces."""
    shared = client or httpx.Client(timeout=config.timeout_s)
    session = WebDriverMapSession(config, client=shared)
    return ProviderSet(
        extractor=LiveCueExtractor(config, shared),
        reranker=LiveReranker(config, shared),
        verifier=LiveVerifier(config, shared),
        session=session,
        ocr_engine=SidecarOcrEngine(config, shared),
        session_factory=lambda: WebDriverMapSession(config, client=shared),
    )
