"""WebDriver client: render HTML to a screenshot plus extracted text blocks.

Talks the W3C WebDriver HTTP protocol to whatever endpoint
``WAFFLE_WEBDRIVER_URL`` (or the constructor argument) points at:
session create, window resize, navigation via a ``data:`` URL (temp-file
``file://`` navigation as a fallback for oversized documents),
execute-script for load-wait and block extraction, and screenshot.

The in-page extraction script ships as a package resource
(``resources/extract_blocks.js``); ``WAFFLE_EXTRACT_SCRIPT`` or the
``script_source`` argument overrides it.  Blank classification (every
pixel identical) happens client-side on the decoded PNG.
"""

from __future__ import annotations

import base64
import importlib.resources
import json
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from io import BytesIO
from pathlib import Path
from typing import Sequence

import requests
from PIL import Image as PILImage

from .errors import RenderError
from .metrics.image import Image, is_blank
from .metrics.llem import TextBlock

__all__ = [
    "RenderResult",
    "WebDriverClient",
    "render_many",
    "load_extract_script",
    "WEBDRIVER_URL_ENV",
    "EXTRACT_SCRIPT_ENV",
]

WEBDRIVER_URL_ENV = "WAFFLE_WEBDRIVER_URL"
EXTRACT_SCRIPT_ENV = "WAFFLE_EXTRACT_SCRIPT"

DEFAULT_VIEWPORT = (1280, 720)
DEFAULT_TIMEOUT_MS = 15000

# data: URLs beyond this many bytes go through a temp file instead
_DATA_URL_LIMIT = 1_500_000

_READY_SCRIPT = "return document.readyState;"


@dataclass(frozen=True)
class RenderResult:
    status: str  # ok | failed | blank
    image: Image | None = None
    blocks: tuple[TextBlock, ...] = ()
    timing_ms: float = 0.0
    reason: str | None = None


def load_extract_script(script_source: str | None = None) -> str:
    """Resolve the in-page extraction script: argument, env path, bundled copy."""
    if script_source is not None:
        return script_source
    env_path = os.environ.get(EXTRACT_SCRIPT_ENV)
    if env_path:
        return Path(env_path).read_text(encoding="utf-8")
    return (
        importlib.resources.files("waffle")
        .joinpath("resources/extract_blocks.js")
        .read_text(encoding="utf-8")
    )


def _parse_blocks(raw) -> tuple[TextBlock, ...]:
    if isinstance(raw, str):
        raw = json.loads(raw)
    blocks = []
    for item in raw:
        blocks.append(
            TextBlock(
                text=str(item["text"]),
                bbox=tuple(float(v) for v in item["bbox"]),
                color=tuple(int(v) for v in item["color"]),
            )
        )
    return tuple(blocks)


class WebDriverClient:
    """One WebDriver session; one in-flight command at a time."""

    def __init__(
        self,
        base_url: str | None = None,
        viewport: tuple[int, int] = DEFAULT_VIEWPORT,
        script_source: str | None = None,
        capabilities: dict | None = None,
        http_timeout: float = 60.0,
    ):
        url = base_url or os.environ.get(WEBDRIVER_URL_ENV)
        if not url:
            raise RenderError(
                f"no WebDriver endpoint configured (set {WEBDRIVER_URL_ENV})"
            )
        self.base_url = url.rstrip("/")
        self.viewport = viewport
        self.script = load_extract_script(script_source)
        self.capabilities = capabilities or _default_capabilities(viewport)
        self.http_timeout = http_timeout
        self._http = requests.Session()
        self.session_id: str | None = None
        self._temp_path: str | None = None

    # -- protocol plumbing -------------------------------------------------

    def _request(self, method: str, path: str, payload: dict | None = None):
        url = self.base_url + path
        try:
            resp = self._http.request(
                method,
                url,
                json=payload if payload is not None else ({} if method == "POST" else None),
                timeout=self.http_timeout,
            )
        except requests.RequestException as exc:
            raise RenderError(f"webdriver request {method} {path} failed: {exc}") from exc
        try:
            body = resp.json()
        except ValueError as exc:
            raise RenderError(f"non-JSON webdriver response from {path}") from exc
        if resp.status_code >= 400:
            value = body.get("value", {})
            raise RenderError(
                f"{value.get('error', resp.status_code)}: {value.get('message', '')}"
            )
        return body.get("value")

    def start(self) -> "WebDriverClient":
        if self.session_id is None:
            value = self._request(
                "POST", "/session", {"capabilities": {"alwaysMatch": self.capabilities}}
            )
            self.session_id = value.get("sessionId") or value.get("session_id")
            if not self.session_id:
                raise RenderError("webdriver session create returned no sessionId")
            self._session("POST", "/window/rect",
                          {"width": self.viewport[0], "height": self.viewport[1]})
        return self

    def close(self) -> None:
        self._drop_temp()
        if self.session_id is not None:
            try:
                self._request("DELETE", f"/session/{self.session_id}")
            except RenderError:
                pass  # endpoint already gone; nothing left to release
            finally:
                self.session_id = None

    def _drop_temp(self) -> None:
        if self._temp_path is not None:
            try:
                os.unlink(self._temp_path)
            except OSError:
                pass
            self._temp_path = None

    def __enter__(self) -> "WebDriverClient":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.close()

    def _session(self, method: str, path: str, payload: dict | None = None):
        if self.session_id is None:
            self.start()
        return self._request(method, f"/session/{self.session_id}{path}", payload)

    def execute(self, script: str, args: Sequence | None = None):
        return self._session(
            "POST", "/execute/sync", {"script": script, "args": list(args or ())}
        )

    # -- rendering ---------------------------------------------------------

    def _navigate(self, html: bytes) -> None:
        encoded = base64.b64encode(html).decode("ascii")
        data_url = "data:text/html;charset=utf-8;base64," + encoded
        if len(data_url) <= _DATA_URL_LIMIT:
            self._session("POST", "/url", {"url": data_url})
            return
        self._drop_temp()
        with tempfile.NamedTemporaryFile(
            suffix=".html", delete=False, dir=tempfile.gettempdir()
        ) as fh:
            fh.write(html)
            self._temp_path = fh.name
        self._session("POST", "/url", {"url": "file://" + self._temp_path})

    def _wait_loaded(self, deadline: float) -> None:
        while True:
            if self.execute(_READY_SCRIPT) == "complete":
                return
            if time.monotonic() > deadline:
                raise RenderError("page load timed out")
            time.sleep(0.05)

    def _screenshot(self) -> Image:
        encoded = self._session("GET", "/screenshot")
        png = base64.b64decode(encoded)
        with PILImage.open(BytesIO(png)) as img:
            rgb = img.convert("RGB")
            return Image(width=rgb.width, height=rgb.height, pixels=rgb.tobytes())

    def render(
        self,
        html: bytes | str,
        viewport: tuple[int, int] | None = None,
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
    ) -> RenderResult:
        """Load the document, screenshot it, and extract text blocks.

        Failures are reported in the result's status, never raised.
        """
        if isinstance(html, str):
            html = html.encode("utf-8")
        started = time.monotonic()
        deadline = started + timeout_ms / 1000.0
        try:
            self.start()
            if viewport is not None and viewport != self.viewport:
                self._session(
                    "POST", "/window/rect", {"width": viewport[0], "height": viewport[1]}
                )
                self.viewport = viewport
            self._navigate(html)
            self._wait_loaded(deadline)
            image = self._screenshot()
            blocks = _parse_blocks(self.execute(self.script))
        except RenderError as exc:
            return RenderResult(
                status="failed",
                reason=str(exc),
                timing_ms=(time.monotonic() - started) * 1000.0,
            )
        status = "blank" if is_blank(image) else "ok"
        return RenderResult(
            status=status,
            image=image,
            blocks=blocks,
            timing_ms=(time.monotonic() - started) * 1000.0,
        )


def _default_capabilities(viewport: tuple[int, int]) -> dict:
    # headless, animation-free flags for a chromium-family endpoint
    return {
        "goog:chromeOptions": {
            "args": [
                "--headless=new",
                "--disable-gpu",
                "--hide-scrollbars",
                "--force-device-scale-factor=1",
                "--disable-smooth-scrolling",
                "--animation-duration-scale=0",
                f"--window-size={viewport[0]},{viewport[1]}",
            ]
        }
    }


def render_many(
    documents: Sequence[bytes],
    base_url: str | None = None,
    viewport: tuple[int, int] = DEFAULT_VIEWPORT,
    jobs: int = 1,
    script_source: str | None = None,
) -> list[RenderResult]:
    """Render documents across a session pool; results keep input order.

    Each worker thread holds one long-lived session (one in-flight command
    per session); ``pool.map`` reassembles results by input index.
    """
    if jobs <= 1:
        with WebDriverClient(base_url, viewport, script_source) as client:
            return [client.render(doc) for doc in documents]

    local = threading.local()
    clients: list[WebDriverClient] = []
    clients_lock = threading.Lock()

    def worker(doc: bytes) -> RenderResult:
        client = getattr(local, "client", None)
        if client is None:
            client = WebDriverClient(base_url, viewport, script_source).start()
            local.client = client
            with clients_lock:
                clients.append(client)
        return client.render(doc)

    try:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, documents))
    finally:
        for client in clients:
            try:
                client.close()
            except RenderError:
                pass
