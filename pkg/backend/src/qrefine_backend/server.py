"""The reference HTTP server: protocol v1 over stdlib http.server.

Routes: ``GET /v1/health``, ``POST /v1/inpaint``, ``POST /v1/enhance``.
Classical mode is fully deterministic with zero model dependencies;
handlers are stateless, so concurrent requests are independent.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import classical
from .protocol import (
    BadRequest,
    encode_png_rgb,
    error_response,
    image_response,
    parse_enhance,
    parse_inpaint,
)

LOGGER = logging.getLogger("qrefine_backend")

DEFAULT_MAX_PAYLOAD = 32 * 1024 * 1024


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    mode: str = "classical"
    max_payload: int = DEFAULT_MAX_PAYLOAD
    label: str | None = None

    def __post_init__(self):
        if self.mode not in ("classical", "generative"):
            raise ValueError(f"unknown mode: {self.mode!r}")
        if self.label is None:
            object.__setattr__(self, "label", f"reference-{self.mode}")


def _classical_inpaint(parsed):
    if not parsed.mask.any() or parsed.strength == 0.0:
        return parsed.image_png  # verbatim echo: exact by construction
    result = classical.inpaint(parsed.image, parsed.mask, parsed.strength)
    return encode_png_rgb(result)


def _classical_enhance(parsed):
    if parsed.strength == 0.0:
        return parsed.image_png
    if parsed.prompt:
        LOGGER.info("classical mode ignores prompt: %r", parsed.prompt)
    return encode_png_rgb(classical.enhance(parsed.image, parsed.strength))


def build_server(cfg: ServerConfig) -> ThreadingHTTPServer:
    """Bind the server (raises ``OSError`` if the port is taken)."""
    if cfg.mode == "generative":
        from .generative import GenerativeEngine

        engine = GenerativeEngine()
        inpaint_fn = engine.inpaint
        enhance_fn = engine.enhance
    else:
        inpaint_fn = _classical_inpaint
        enhance_fn = _classical_enhance

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            LOGGER.debug(fmt, *args)

        def _send(self, code: int, payload: bytes):
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def do_GET(self):
            if self.path != "/v1/health":
                self._send(404, error_response(f"no such route: {self.path}"))
                return
            body = json.dumps({"status": "ok", "backend": cfg.label}).encode()
            self._send(200, body)

        def do_POST(self):
            if self.path not in ("/v1/inpaint", "/v1/enhance"):
                self._send(404, error_response(f"no such route: {self.path}"))
                return
            length = int(self.headers.get("Content-Length", 0))
            if length > cfg.max_payload:
                self._send(
                    413,
                    error_response(
                        f"payload {length} exceeds limit {cfg.max_payload}"
                    ),
                )
                return
            raw = self.rfile.read(length)
            try:
                if self.path == "/v1/inpaint":
                    png = inpaint_fn(parse_inpaint(raw))
                else:
                    png = enhance_fn(parse_enhance(raw))
            except BadRequest as exc:
                self._send(400, error_response(str(exc)))
                return
            except Exception as exc:  # handler bug or engine failure
                LOGGER.exception("request failed")
                self._send(500, error_response(str(exc)))
                return
            self._send(200, image_response(png, cfg.label))

    return ThreadingHTTPServer((cfg.host, cfg.port), Handler)


def serve(cfg: ServerConfig) -> None:
    """Run until interrupted."""
    server = build_server(cfg)
    LOGGER.info("serving %s mode on %s:%s", cfg.mode, cfg.host, server.server_port)
    try:
        server.serve_forever()
    finally:
        server.server_close()


class ServerThread:
    """In-process server for tests: binds an ephemeral port, runs in a thread."""

    def __init__(self, cfg: ServerConfig | None = None):
        self.cfg = cfg or ServerConfig(port=0)
        self.server = build_server(self.cfg)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        return f"http://{self.cfg.host}:{self.server.server_port}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
