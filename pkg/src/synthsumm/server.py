"""HTTP facade for the annotation UI.

Endpoints (JSON bodies):
  GET  /api/assignments/next?annotator=ID  next unanswered item, blinded
  POST /api/responses                      record one EvalResponse
  GET  /api/progress?annotator=ID          {done, total}
  GET  /api/report                         ValidityReport, admin-token gated

The next-item payload never includes source or side fields; blinding is a
contract the annotation client tests against. Responses are serialized
through the append-only store; report aggregation reads an immutable
snapshot. CORS headers are permissive so the static UI can be served from
anywhere (including file://) during annotation sessions.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .humaneval import (Assignment, DuplicateResponseError, EvalOption,
                        EvalResponse, ResponseStore, UnknownItemError, aggregate)

DEFAULT_ADMIN_TOKEN_ENV = "SYNTHSUMM_ADMIN_TOKEN"


class EvalService:
    """Protocol state shared by all request handler threads."""

    def __init__(self, assignments: list[Assignment], store: ResponseStore,
                 admin_token_env: str = DEFAULT_ADMIN_TOKEN_ENV):
        self.assignments = {a.annotator_id: a for a in assignments}
        self.store = store
        self.admin_token_env = admin_token_env

    def next_item(self, annotator_id: str) -> dict | None:
        assignment = self.assignments.get(annotator_id)
        if assignment is None:
            return None
        answered = self.store.answered(annotator_id)
        total = len(assignment.items)
        done = sum(1 for item in assignment.items if item.item_id in answered)
        for item in assignment.items:
            if item.item_id not in answered:
                # Blinded payload: no source fields, no side flag.
                return {"item_id": item.item_id,
                        "summary_a": item.summary_a,
                        "summary_b": item.summary_b,
                        "progress": {"done": done, "total": total}}
        return {"done": True, "progress": {"done": done, "total": total}}

    def progress(self, annotator_id: str) -> dict | None:
        assignment = self.assignments.get(annotator_id)
        if assignment is None:
            return None
        answered = self.store.answered(annotator_id)
        done = sum(1 for item in assignment.items if item.item_id in answered)
        return {"done": done, "total": len(assignment.items)}

    def submit(self, payload: dict) -> tuple[int, dict]:
        try:
            option = EvalOption(payload.get("option"))
        except ValueError:
            return 400, {"error": f"option must be one of "
                                  f"{[o.value for o in EvalOption]}"}
        item_id = payload.get("item_id")
        annotator_id = payload.get("annotator_id")
        if not isinstance(item_id, str) or not isinstance(annotator_id, str):
            return 400, {"error": "item_id and annotator_id are required"}
        response = EvalResponse(item_id=item_id, annotator_id=annotator_id,
                                option=option,
                                submitted_at=datetime.now(timezone.utc)
                                .isoformat(timespec="seconds"))
        try:
            self.store.record(response)
        except DuplicateResponseError as exc:
            return 409, {"error": str(exc)}
        except UnknownItemError as exc:
            return 404, {"error": str(exc)}
        return 201, {"stored": True}

    def report(self, token: str | None) -> tuple[int, dict]:
        expected = os.environ.get(self.admin_token_env)
        if not expected or token != expected:
            return 403, {"error": "admin token required"}
        responses = self.store.load()
        if not responses:
            return 200, {"n": 0, "counts": {}, "note": "no responses yet"}
        items = [item for assignment in self.assignments.values()
                 for item in assignment.items]
        return 200, aggregate(responses, items).to_record()


class _Handler(BaseHTTPRequestHandler):
    service: EvalService = None  # type: ignore[assignment]
    static_dir: str | None = None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type, X-Admin-Token")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.end_headers()

    def do_GET(self):
        parsed = urlparse(self.path)
        query = parse_qs(parsed.query)
        if parsed.path == "/api/assignments/next":
            annotator = (query.get("annotator") or [""])[0]
            payload = self.service.next_item(annotator)
            if payload is None:
                self._send_json(404, {"error": f"unknown annotator {annotator!r}"})
            else:
                self._send_json(200, payload)
        elif parsed.path == "/api/progress":
            annotator = (query.get("annotator") or [""])[0]
            payload = self.service.progress(annotator)
            if payload is None:
                self._send_json(404, {"error": f"unknown annotator {annotator!r}"})
            else:
                self._send_json(200, payload)
        elif parsed.path == "/api/report":
            token = self.headers.get("X-Admin-Token") or (query.get("token") or [None])[0]
            status, payload = self.service.report(token)
            self._send_json(status, payload)
        elif self.static_dir:
            self._serve_static(parsed.path)
        else:
            self._send_json(404, {"error": "not found"})

    def do_POST(self):
        parsed = urlparse(self.path)
        if parsed.path != "/api/responses":
            self._send_json(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            payload = json.loads(raw.decode("utf-8")) if raw else {}
        except (json.JSONDecodeError, UnicodeDecodeError):
            self._send_json(400, {"error": "request body must be JSON"})
            return
        status, body = self.service.submit(payload)
        self._send_json(status, body)

    def _serve_static(self, path: str) -> None:
        name = "index.html" if path in ("", "/") else path.lstrip("/")
        full = os.path.normpath(os.path.join(self.static_dir, name))
        if not full.startswith(os.path.normpath(self.static_dir)) or not os.path.isfile(full):
            self._send_json(404, {"error": "not found"})
            return
        content_types = {".html": "text/html", ".js": "text/javascript",
                         ".css": "text/css", ".map": "application/json"}
        suffix = os.path.splitext(full)[1]
        with open(full, "rb") as handle:
            body = handle.read()
        self.send_response(200)
        self.send_header("Content-Type", content_types.get(suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)


def make_server(service: EvalService, port: int = 0,
                static_dir: str | None = None) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,),
                   {"service": service, "static_dir": static_dir})
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve_forever(service: EvalService, port: int,
                  static_dir: str | None = None) -> None:
    server = make_server(service, port=port, static_dir=static_dir)
    host, bound_port = server.server_address[:2]
    print(f"annotation service listening on http://{host}:{bound_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()


class ServerThread:
    """Run the facade on a background thread; used by tests and tooling."""

    def __init__(self, service: EvalService, static_dir: str | None = None):
        self.server = make_server(service, port=0, static_dir=static_dir)
        self.port = self.server.server_address[1]
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self) -> "ServerThread":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.server.shutdown()
        self.server.server_close()
        self._thread.join(timeout=5)
