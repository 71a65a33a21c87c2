"""Deterministic in-process chat-completion server for tests and offline runs."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .prompts import payload_from_user_text


def default_reply(request: dict) -> str:
    """Pick the middle numbered arrow, else the first token offered."""
    user = request["messages"][1]["content"]
    text = user[0]["text"] if isinstance(user, list) else user
    payload = payload_from_user_text(text)
    space = payload["action_space"]
    ints = [a for a in space if isinstance(a, int)]
    action = ints[(len(ints) - 1) // 2] if ints else space[0]
    return json.dumps({
        "observation": "Mock observation.",
        "goal_analysis": "Mock goal analysis.",
        "plan": ["Follow the chosen arrow."],
        "thought": f"Mock choice of {action!r}.",
        "action": action,
    })


class MockVLMServer:
    """Replies from ``script`` in order (strings, dicts with a ``status``, or callables), then defaults.

    Every request body is recorded in ``calls``.
    """

    def __init__(self, script=(), default=default_reply):
        self.script = list(script)
        self.default = default
        self.calls = []
        self._lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):  # noqa: N802
                n = int(self.headers.get("Content-Length", 0))
                req = json.loads(self.rfile.read(n))
                with server._lock:
                    server.calls.append(req)
                    item = server.script.pop(0) if server.script else server.default
                status, content = 200, None
                if isinstance(item, dict):
                    status = item.get("status", 200)
                    content = item.get("content", "")
                elif callable(item):
                    content = item(req)
                else:
                    content = item
                body = json.dumps({
                    "id": f"mock-{len(server.calls)}",
                    "object": "chat.completion",
                    "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
                }).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}/v1"

    def start(self):
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
