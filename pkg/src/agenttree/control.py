"""Local HTTP control surface for live observation and intervention.

Endpoints (all JSON unless noted):

    GET  /tree            current nodes with status badges
    GET  /log?from=N      line-delimited event records from sequence N
    GET  /variable?node=I&name=X   raw variable bytes with its media type
    POST /pause           stop before the next step
    POST /resume          continue
    POST /inject          {"target": "active"|<node id>, "body": "..."}

Single-operator local tool: binds loopback by default, no auth.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .runtime import Runtime


def tree_view(runtime: Runtime) -> dict:
    return {
        "paused": runtime.paused,
        "nodes": [
            {
                "node_id": node.node_id,
                "parent": node.parent,
                "child_name": node.child_name,
                "agent_type": node.spec.type_name,
                "status": node.status.value,
                "children": node.children,
                "llm_turns": node.llm_turns,
            }
            for node in runtime.registry.values()
        ],
    }


class ControlServer:
    """Runs the HTTP endpoint on a daemon thread beside the scheduler."""

    def __init__(self, runtime: Runtime, address: str = "127.0.0.1:0"):
        self.runtime = runtime
        host, _, port = address.rpartition(":")
        handler = _make_handler(runtime)
        self._httpd = ThreadingHTTPServer((host or "127.0.0.1", int(port)), handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> str:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self.address

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def _make_handler(runtime: Runtime):
    class Handler(BaseHTTPRequestHandler):
        # keep the scheduler's stdout clean
        def log_message(self, format, *args):
            pass

        def _send_json(self, payload: dict, status: int = 200) -> None:
            body = json.dumps(payload, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

        def do_GET(self):
            url = urlparse(self.path)
            if url.path == "/tree":
                self._send_json(tree_view(runtime))
            elif url.path == "/log":
                params = parse_qs(url.query)
                try:
                    start = int(params.get("from", ["0"])[0])
                except ValueError:
                    self._send_json({"error": "from must be an integer"}, 400)
                    return
                lines = [
                    json.dumps(record.to_json(), sort_keys=True)
                    for record in runtime.log.since(start)
                ]
                body = ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/x-ndjson")
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(body)
            elif url.path == "/variable":
                params = parse_qs(url.query)
                try:
                    node_id = int(params["node"][0])
                    name = params["name"][0]
                except (KeyError, ValueError):
                    self._send_json({"error": "need node=<id> and name=<variable>"}, 400)
                    return
                store = runtime.stores.get(node_id)
                variable = store.get(name) if store is not None else None
                if variable is None:
                    self._send_json({"error": f"no variable {name!r} on node {node_id}"}, 404)
                    return
                self.send_response(200)
                self.send_header("Content-Type", variable.media_type)
                self.send_header("Content-Length", str(variable.size))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(variable.content)
            else:
                self._send_json({"error": f"no such endpoint {url.path}"}, 404)

        def do_POST(self):
            url = urlparse(self.path)
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if url.path == "/pause":
                self._send_json({"result": runtime.pause()})
            elif url.path == "/resume":
                self._send_json({"result": runtime.resume()})
            elif url.path == "/inject":
                try:
                    payload = json.loads(raw.decode("utf-8")) if raw else {}
                except json.JSONDecodeError:
                    self._send_json({"error": "body must be JSON"}, 400)
                    return
                target = payload.get("target", "active")
                if isinstance(target, str) and target != "active":
                    if target.isdigit():
                        target = int(target)
                body = payload.get("body", "")
                if not str(body).strip():
                    self._send_json({"error": "body text required"}, 400)
                    return
                self._send_json({"result": runtime.inject_intervention(target, str(body))})
            else:
                self._send_json({"error": f"no such endpoint {url.path}"}, 404)

    return Handler
