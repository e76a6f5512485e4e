"""In-process W3C WebDriver endpoint with deterministic canned rendering.

The "browser" draws a fixed pseudo-random pattern derived from the SHA-256
of the loaded document, so two documents render identically iff their bytes
are equal — a pinned, deterministic renderer for exercising the client,
html-match, and the mutant-group filters without a real browser.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
from PIL import Image as PILImage


class StubWebDriver:
    def __init__(self):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _make_handler(self))
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.sessions: dict[str, dict] = {}
        self.counter = 0
        self.lock = threading.Lock()
        self.screenshot_mode = "digest"  # digest | white
        self.script_result: str | None = None  # canned extract-script payload
        self.fail_next: str | None = None  # path fragment that should 500 once
        self.requests: list[tuple[str, str]] = []

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> "StubWebDriver":
        self.thread.start()
        return self

    def stop(self) -> None:
        self.server.shutdown()
        self.server.server_close()

    @property
    def url(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    # -- behavior -----------------------------------------------------------

    def new_session(self) -> str:
        with self.lock:
            self.counter += 1
            sid = f"stub-{self.counter}"
        self.sessions[sid] = {"html": b"", "viewport": (1280, 720)}
        return sid

    def screenshot_png(self, sid: str) -> bytes:
        session = self.sessions[sid]
        w, h = session["viewport"]
        if self.screenshot_mode == "white":
            arr = np.full((h, w, 3), 255, dtype=np.uint8)
        else:
            digest = hashlib.sha256(session["html"]).digest()
            rng = np.random.default_rng(np.frombuffer(digest, dtype=np.uint64))
            arr = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        buf = io.BytesIO()
        PILImage.fromarray(arr).save(buf, format="PNG")
        return buf.getvalue()

    def run_script(self, sid: str, script: str):
        if "document.readyState" in script:
            return "complete"
        if self.script_result is not None:
            return self.script_result
        return "[]"


def _make_handler(stub: StubWebDriver):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # keep test output quiet
            pass

        def _reply(self, value, status=200):
            body = json.dumps({"value": value}).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _payload(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if not length:
                return {}
            return json.loads(self.rfile.read(length))

        def _dispatch(self, method: str):
            path = self.path
            stub.requests.append((method, path))
            if stub.fail_next and stub.fail_next in path:
                stub.fail_next = None
                self._reply({"error": "unknown error", "message": "injected failure"}, 500)
                return
            if method == "POST" and path == "/session":
                sid = stub.new_session()
                self._reply({"sessionId": sid, "capabilities": {}})
                return
            m = re.match(r"^/session/([^/]+)(/.*)?$", path)
            if not m or m.group(1) not in stub.sessions:
                self._reply({"error": "invalid session id", "message": path}, 404)
                return
            sid, rest = m.group(1), m.group(2) or ""
            session = stub.sessions[sid]
            if method == "DELETE" and rest == "":
                del stub.sessions[sid]
                self._reply(None)
            elif method == "POST" and rest == "/url":
                url = self._payload()["url"]
                if url.startswith("data:"):
                    b64 = url.split("base64,", 1)[1]
                    session["html"] = base64.b64decode(b64)
                elif url.startswith("file://"):
                    with open(url[len("file://"):], "rb") as fh:
                        session["html"] = fh.read()
                else:
                    session["html"] = url.encode()
                self._reply(None)
            elif method == "POST" and rest == "/window/rect":
                payload = self._payload()
                session["viewport"] = (int(payload["width"]), int(payload["height"]))
                self._reply({"width": payload["width"], "height": payload["height"]})
            elif method == "POST" and rest == "/execute/sync":
                self._reply(stub.run_script(sid, self._payload().get("script", "")))
            elif method == "GET" and rest == "/screenshot":
                png = stub.screenshot_png(sid)
                self._reply(base64.b64encode(png).decode("ascii"))
            else:
                self._reply({"error": "unknown command", "message": path}, 404)

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        def do_DELETE(self):
            self._dispatch("DELETE")

    return Handler
