"""Newline-delimited JSON wire protocol for the target oracle.

One JSON object per line in each direction. Requests:

    {"op": "classify", "text": ...}            -> {"label": 1|2}
    {"op": "feedback", "text": ..., "label": ...} -> {"ok": true}
    {"op": "retrain"}                          -> {"ok": true}
    {"op": "advance_day"}                      -> {"day": n}        (admin)
    {"op": "stats"}                            -> {"calls_used_today": ..., "calls_per_day": ...,
                                                   "day": ..., "total_calls": ...}  (admin)

Errors: {"error": "rate_limited", "retry_after_days": 1} and
{"error": "invalid_input", "message": ...}. The client maps these back to the
same exceptions the in-process oracle raises, so attack code runs unchanged
against either.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
from contextlib import contextmanager

from .oracle import InvalidRequestError, RateLimitedError, TargetOracle


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class OracleServer:
    """Serves one TargetOracle over TCP; safe for concurrent clients."""

    def __init__(self, oracle: TargetOracle, host: str = "127.0.0.1", port: int = 0):
        self.oracle = oracle
        outer = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                for raw in self.rfile:
                    line = raw.strip()
                    if not line:
                        continue
                    response = outer._dispatch(line)
                    self.wfile.write((json.dumps(response, sort_keys=True) + "\n").encode("utf-8"))

        self._server = _Server((host, port), Handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._server.server_address[:2]
        return host, port

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def _dispatch(self, line: bytes) -> dict:
        try:
            request = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return {"error": "bad_request", "message": "not valid JSON"}
        if not isinstance(request, dict):
            return {"error": "bad_request", "message": "request must be a JSON object"}
        op = request.get("op")
        try:
            if op == "classify":
                return {"label": self.oracle.classify(request.get("text"))}
            if op == "feedback":
                self.oracle.submit_feedback(request.get("text"), request.get("label"))
                return {"ok": True}
            if op == "retrain":
                self.oracle.retrain_with_feedback()
                return {"ok": True}
            if op == "advance_day":
                return {"day": self.oracle.advance_day()}
            if op == "stats":
                return dict(self.oracle.stats())
            return {"error": "unknown_op", "message": str(op)}
        except RateLimitedError as exc:
            return {"error": "rate_limited", "retry_after_days": exc.retry_after_days}
        except InvalidRequestError as exc:
            return {"error": "invalid_input", "message": str(exc)}


class OracleClient:
    """Wire-protocol client exposing the same surface as TargetOracle."""

    def __init__(self, host: str, port: int, timeout: float = 60.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._rfile = self._sock.makefile("rb")
        self._lock = threading.Lock()

    def _call(self, payload: dict) -> dict:
        with self._lock:
            self._sock.sendall((json.dumps(payload) + "\n").encode("utf-8"))
            line = self._rfile.readline()
        if not line:
            raise ConnectionError("oracle server closed the connection")
        response = json.loads(line.decode("utf-8"))
        error = response.get("error")
        if error == "rate_limited":
            raise RateLimitedError(retry_after_days=response.get("retry_after_days", 1))
        if error == "invalid_input":
            raise InvalidRequestError(response.get("message", "invalid input"))
        if error is not None:
            raise RuntimeError(f"oracle error {error}: {response.get('message', '')}")
        return response

    def classify(self, text: str) -> int:
        return self._call({"op": "classify", "text": text})["label"]

    def submit_feedback(self, text: str, label: int) -> None:
        self._call({"op": "feedback", "text": text, "label": label})

    def retrain_with_feedback(self) -> None:
        self._call({"op": "retrain"})

    def advance_day(self) -> int:
        return self._call({"op": "advance_day"})["day"]

    def stats(self) -> dict:
        return self._call({"op": "stats"})

    def close(self) -> None:
        try:
            self._rfile.close()
        finally:
            self._sock.close()

    def __enter__(self) -> "OracleClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@contextmanager
def served_oracle(oracle: TargetOracle, host: str = "127.0.0.1", port: int = 0):
    """Run `oracle` behind a local server and yield a connected client."""
    server = OracleServer(oracle, host, port)
    server.start()
    client = OracleClient(*server.address)
    try:
        yield client
    finally:
        client.close()
        server.stop()


def parse_address(addr: str) -> tuple[str, int]:
    """Split "host:port" into its parts."""
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {addr!r}")
    return host, int(port)
