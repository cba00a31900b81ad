"""HTTP facade over retrieval for the browse UI and other clients.

Endpoints:

* ``GET /similar/{id}?k=N``  - nearest neighbors of an indexed image
* ``POST /search?k=N``       - multipart upload (field ``image``), full embed
* ``GET /image/{id}``        - original corpus file bytes
* ``GET /thumb/{id}``        - the normalized 360x450 window as PNG
* ``GET /health``            - readiness, index size, model fingerprint

Non-2xx responses carry ``{"error": {"code", "message"}}``.  The model and
index live in one atomically swapped snapshot, so concurrent requests never
see a half-replaced pair.  Static UI assets, when configured, are served
from ``/``.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
import posixpath
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, unquote, urlparse

import numpy as np

from .errors import DecodeError, FingerprintMismatch, InfostyleError
from .imaging import decode_image, encode_png, normalize_window
from .metric import MetricModel
from .retrieval import SearchIndex, embed_image, query

logger = logging.getLogger(__name__)

MAX_UPLOAD_BYTES = 20 * 1024 * 1024
MAX_K = 100
DEFAULT_K = 5


class AppState:
    """Shared service state; the (model, index) pair swaps atomically."""

    def __init__(self, model: MetricModel | None = None, index: SearchIndex | None = None,
                 corpus_paths: dict[str, str] | None = None, ui_dir: str | None = None,
                 cors_origin: str | None = None, embed_workers: int | None = None):
        self.corpus_paths = corpus_paths or {}
        self.ui_dir = ui_dir
        self.cors_origin = cors_origin
        # Upload embedding is CPU-bound; cap how many run at once.
        self.embed_slots = threading.BoundedSemaphore(embed_workers or os.cpu_count() or 2)
        self._bundle: tuple[MetricModel, SearchIndex] | None = None
        if model is not None and index is not None:
            self.swap(model, index)

    def swap(self, model: MetricModel, index: SearchIndex) -> None:
        if index.fingerprint != model.fingerprint():
            raise FingerprintMismatch("index was not built with this model")
        self._bundle = (model, index)

    @property
    def ready(self) -> bool:
        return self._bundle is not None

    def bundle(self) -> tuple[MetricModel, SearchIndex]:
        return self._bundle


def _results_payload(query_id: str, results: list[tuple[str, float]]) -> dict:
    return {
        "query_id": query_id,
        "results": [
            {"id": image_id, "distance": dist, "thumbnail_url": f"/thumb/{image_id}"}
            for image_id, dist in results
        ],
    }


class Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "infostyle"

    @property
    def app(self) -> AppState:
        return self.server.app

    def log_message(self, fmt, *fmt_args):
        logger.debug("%s " + fmt, self.address_string(), *fmt_args)

    # -- response helpers ---------------------------------------------------

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        if self.app.cors_origin:
            self.send_header("Access-Control-Allow-Origin", self.app.cors_origin)
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, obj) -> None:
        self._send(status, json.dumps(obj).encode("utf-8"), "application/json")

    def _fail(self, status: int, code: str, message: str) -> None:
        self._send_json(status, {"error": {"code": code, "message": message}})

    def _require_ready(self):
        if not self.app.ready:
            self._fail(503, "not_ready", "model and index are not loaded yet")
            return None
        return self.app.bundle()

    def _parse_k(self, params) -> int | None:
        raw = params.get("k", [str(DEFAULT_K)])[-1]
        try:
            k = int(raw)
        except ValueError:
            self._fail(400, "bad_k", f"k must be an integer, got {raw!r}")
            return None
        if not 1 <= k <= MAX_K:
            self._fail(400, "bad_k", f"k must be in [1, {MAX_K}], got {k}")
            return None
        return k

    # -- routes ---------------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        if self.app.cors_origin:
            self.send_header("Access-Control-Allow-Origin", self.app.cors_origin)
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        url = urlparse(self.path)
        parts = [unquote(p) for p in url.path.split("/") if p]
        try:
            if url.path == "/health":
                self._get_health()
            elif len(parts) == 2 and parts[0] == "similar":
                self._get_similar(parts[1], parse_qs(url.query))
            elif len(parts) == 2 and parts[0] == "image":
                self._get_image(parts[1], thumbnail=False)
            elif len(parts) == 2 and parts[0] == "thumb":
                self._get_image(parts[1], thumbnail=True)
            else:
                self._get_static(url.path)
        except (InfostyleError, OSError) as exc:
            logger.warning("request %s failed: %s", self.path, exc)
            self._fail(500, "internal", str(exc))

    def _get_health(self):
        if not self.app.ready:
            self._fail(503, "not_ready", "model and index are not loaded yet")
            return
        model, index = self.app.bundle()
        self._send_json(200, {
            "status": "ok",
            "index_size": len(index),
            "model_fingerprint": model.fingerprint(),
        })

    def _get_similar(self, image_id: str, params):
        bundle = self._require_ready()
        if bundle is None:
            return
        model, index = bundle
        k = self._parse_k(params)
        if k is None:
            return
        if image_id not in index:
            self._fail(404, "unknown_id", f"id {image_id!r} is not in the index")
            return
        results = query(index, model, index.entries[image_id], k=k, exclude_id=image_id)
        self._send_json(200, _results_payload(image_id, results))

    def _get_image(self, image_id: str, thumbnail: bool):
        path = self.app.corpus_paths.get(image_id)
        if path is None or not os.path.isfile(path):
            self._fail(404, "unknown_id", f"id {image_id!r} is not in the corpus")
            return
        with open(path, "rb") as fh:
            data = fh.read()
        if thumbnail:
            self._send(200, encode_png(normalize_window(decode_image(data))), "image/png")
        else:
            content_type = mimetypes.guess_type(path)[0] or "application/octet-stream"
            self._send(200, data, content_type)

    def _get_static(self, path: str):
        ui_dir = self.app.ui_dir
        if ui_dir is None:
            self._fail(404, "not_found", f"no route for {path!r}")
            return
        rel = posixpath.normpath(unquote(path)).lstrip("/")
        if rel in ("", "."):
            rel = "index.html"
        full = os.path.join(ui_dir, rel)
        if not os.path.normpath(full).startswith(os.path.normpath(ui_dir)) or not os.path.isfile(full):
            self._fail(404, "not_found", f"no route for {path!r}")
            return
        content_type = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            self._send(200, fh.read(), content_type)

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/search":
            self._fail(404, "not_found", f"no route for {url.path!r}")
            return
        bundle = self._require_ready()
        if bundle is None:
            return
        model, index = bundle
        k = self._parse_k(parse_qs(url.query))
        if k is None:
            return
        length = int(self.headers.get("Content-Length", 0) or 0)
        if length > MAX_UPLOAD_BYTES:
            self._fail(413, "too_large", f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
            return
        body = self.rfile.read(length)
        try:
            fields = parse_multipart(body, self.headers.get("Content-Type", ""))
            image_bytes = fields["image"]
        except (ValueError, KeyError) as exc:
            self._fail(400, "bad_upload", f"expected multipart field 'image': {exc}")
            return
        try:
            img = decode_image(image_bytes)
        except DecodeError as exc:
            self._fail(400, "bad_image", str(exc))
            return
        with self.app.embed_slots:
            q = embed_image(model, img)
        results = query(index, model, np.asarray(q), k=k)
        self._send_json(200, _results_payload("upload", results))


def parse_multipart(body: bytes, content_type: str) -> dict[str, bytes]:
    """Minimal multipart/form-data parser: field name -> raw content bytes.

    Splits on CRLF + delimiter exactly, so binary payloads that begin or
    end with CR/LF bytes survive intact.
    """
    main, _, params = content_type.partition(";")
    if main.strip().lower() != "multipart/form-data":
        raise ValueError(f"content type {main.strip()!r} is not multipart/form-data")
    boundary = None
    for param in params.split(";"):
        key, _, value = param.strip().partition("=")
        if key.lower() == "boundary":
            boundary = value.strip('"')
    if not boundary:
        raise ValueError("missing multipart boundary")
    delimiter = b"--" + boundary.encode("utf-8")
    if not body.startswith(delimiter):
        raise ValueError("body does not start with the declared boundary")
    fields: dict[str, bytes] = {}
    for segment in body[len(delimiter):].split(b"\r\n" + delimiter):
        if segment.startswith(b"--"):
            break  # closing delimiter
        if not segment.startswith(b"\r\n"):
            continue  # transport padding after the boundary line
        header_blob, sep, content = segment[2:].partition(b"\r\n\r\n")
        if not sep:
            continue
        name = None
        for line in header_blob.split(b"\r\n"):
            text = line.decode("utf-8", "replace")
            if text.lower().startswith("content-disposition"):
                for piece in text.split(";"):
                    key, _, value = piece.strip().partition("=")
                    if key.lower() == "name":
                        name = value.strip('"')
        if name is not None:
            fields[name] = content
    return fields


def make_server(app: AppState, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), Handler)
    server.app = app
    return server


def serve(app: AppState, host: str, port: int) -> None:
    server = make_server(app, host, port)
    logger.info("serving on http://%s:%d/", *server.server_address)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
