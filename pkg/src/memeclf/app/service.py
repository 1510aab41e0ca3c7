"""JSON-over-HTTP service for the moderator workbench.

Read-only over the immutable artifact bundle; the only mutable resource is the
append-only decision log, serialized by a single lock.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlparse

from ..errors import DependencyError
from .config import ProjectConfig
from .pipeline import ExplanationBundle, decisions_path

VERDICTS = ("flag", "allow")


class DecisionLog:
    """Append-only JSONL log; replaying it reproduces the moderation audit trail."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()

    def append(self, meme_id: str, verdict: str, note: str = "") -> dict:
        if verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")
        record = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "meme_id": meme_id,
            "verdict": verdict,
            "note": note,
        }
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
        return record


class _Handler(BaseHTTPRequestHandler):
    bundle: ExplanationBundle
    decisions: DecisionLog
    static_dir: Path | None = None

    # quiet request logging; tests and scripts read stdout
    def log_message(self, fmt: str, *args) -> None:
        pass

    def _send_json(self, payload, status: int = 200) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, message: str) -> None:
        self._send_json({"error": {"code": status, "message": message}}, status=status)

    def _read_json_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise ValueError("empty request body")
        return json.loads(raw.decode("utf-8"))

    def do_GET(self) -> None:  # noqa: N802 (http.server naming)
        url = urlparse(self.path)
        route = url.path
        try:
            if route == "/healthz":
                self._send_json({"status": "ok"})
            elif route == "/api/models":
                self._send_json(self.bundle.models_payload())
            elif route.startswith("/api/memes/"):
                meme_id = unquote(route[len("/api/memes/") :])
                qs = parse_qs(url.query)
                task = qs.get("task", [None])[0]
                found = self.bundle.find_meme(meme_id, task)
                if found is None:
                    self._send_error_json(404, f"unknown meme id {meme_id!r}")
                    return
                t, split, entry = found
                self._send_json(
                    {
                        "id": entry.id,
                        "text": entry.text,
                        "image_path": entry.image_path,
                        "labels": entry.labels,
                        "task": t,
                        "split": split,
                    }
                )
            elif route == "/api/prototypes":
                qs = parse_qs(url.query)
                task = qs.get("task", [None])[0]
                model = qs.get("model", [None])[0]
                label = qs.get("label", [None])[0]
                if not task or not model:
                    self._send_error_json(400, "task and model query parameters are required")
                    return
                self._send_json(self.bundle.prototypes_payload(task, model, label))
            else:
                self._serve_static(route)
        except DependencyError as exc:
            self._send_error_json(404, str(exc))
        except Exception as exc:  # pragma: no cover - defensive 500
            self._send_error_json(500, f"{type(exc).__name__}: {exc}")

    def do_POST(self) -> None:  # noqa: N802
        url = urlparse(self.path)
        try:
            if url.path == "/api/explain":
                body = self._read_json_body()
                meme_id = body.get("meme_id")
                task = body.get("task")
                if not meme_id or not task:
                    self._send_error_json(400, "meme_id and task are required")
                    return
                try:
                    payload = self.bundle.explain(
                        meme_id, task, models=body.get("models"), k=body.get("k")
                    )
                except KeyError as exc:
                    self._send_error_json(404, str(exc.args[0]))
                    return
                self._send_json(payload)
            elif url.path == "/api/decisions":
                body = self._read_json_body()
                meme_id = body.get("meme_id")
                verdict = body.get("verdict")
                if not meme_id or verdict not in VERDICTS:
                    self._send_error_json(400, "meme_id and verdict ('flag'|'allow') are required")
                    return
                record = self.decisions.append(meme_id, verdict, body.get("note") or "")
                self._send_json(record, status=201)
            else:
                self._send_error_json(404, f"no such endpoint: {url.path}")
        except DependencyError as exc:
            self._send_error_json(404, str(exc))
        except (ValueError, json.JSONDecodeError) as exc:
            self._send_error_json(400, str(exc))
        except Exception as exc:  # pragma: no cover - defensive 500
            self._send_error_json(500, f"{type(exc).__name__}: {exc}")

    def _serve_static(self, route: str) -> None:
        if self.static_dir is None:
            self._send_error_json(404, f"no such endpoint: {route}")
            return
        rel = route.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            self._send_error_json(404, f"no such file: {route}")
            return
        body = target.read_bytes()
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(
    cfg: ProjectConfig,
    bundle: ExplanationBundle | None = None,
    listen: str | None = None,
    static_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; raises if no artifacts are servable."""
    bundle = bundle or ExplanationBundle(cfg)
    if not bundle.pairs():
        raise DependencyError("no (task, model) artifacts to serve; run the pipeline first")
    handler = type(
        "BoundHandler",
        (_Handler,),
        {
            "bundle": bundle,
            "decisions": DecisionLog(decisions_path(cfg)),
            "static_dir": Path(static_dir) if static_dir else None,
        },
    )
    if listen:
        host, _, port = listen.rpartition(":")
        addr = (host or "127.0.0.1", int(port))
    else:
        addr = cfg.host_port
    return ThreadingHTTPServer(addr, handler)


def serve_forever(cfg: ProjectConfig, listen: str | None = None, static_dir=None) -> None:
    server = make_server(cfg, listen=listen, static_dir=static_dir)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
