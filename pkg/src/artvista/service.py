"""HTTP service: templates, sketches, generation, and paint sessions.

JSON errors use {"error": {"kind", "message"}} with 400 for validation,
404 for missing objects, 502 for backend failures, 504 for backend
timeouts. Stored objects are canonical JSON bytes; GET returns exactly the
bytes that were written, so round trips are byte-equal.

Per-session mutations run under a per-id lock (single-writer discipline);
templates are immutable once created.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from collections import defaultdict

from fastapi import FastAPI, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from . import exporter, genai, sessions, sketcher, store
from .raster import encode_gray_png, encode_png, load_image
from .regionizer import build_template

MAX_UPLOAD_BYTES = 16 * 1024 * 1024
MAX_INPUT_DIM = 4096

log = logging.getLogger("artvista.service")


class ApiError(Exception):
    def __init__(self, status: int, kind: str, message: str):
        super().__init__(message)
        self.status = status
        self.kind = kind


def _error_response(status: int, kind: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"kind": kind, "message": message}}
    )


class GenerateBody(BaseModel):
    prompt: str
    count: int = 1
    seed: int = 0
    style: str | None = None


class SessionBody(BaseModel):
    template_id: str


class FillBody(BaseModel):
    region_id: int = Field(ge=0)
    number: int = Field(ge=1)


def _canonical(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def create_app(data_dir, genai_cfg: genai.BackendConfig | None = None) -> FastAPI:
    app = FastAPI(title="artvista", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    file_store = store.FileStore(data_dir)
    cfg = genai_cfg if genai_cfg is not None else genai.BackendConfig.from_env()
    session_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
    locks_guard = threading.Lock()

    def session_lock(sid: str) -> threading.Lock:
        with locks_guard:
            return session_locks[sid]

    @app.middleware("http")
    async def request_log(request: Request, call_next):
        started = time.monotonic()
        response = await call_next(request)
        log.info(
            "%s",
            json.dumps(
                {
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                    "duration_ms": round((time.monotonic() - started) * 1000, 1),
                },
                sort_keys=True,
            ),
        )
        return response

    @app.exception_handler(ApiError)
    async def on_api_error(_req, exc: ApiError):
        return _error_response(exc.status, exc.kind, str(exc))

    @app.exception_handler(ValueError)
    async def on_value_error(_req, exc: ValueError):
        return _error_response(400, "validation", str(exc))

    @app.exception_handler(store.NotFoundError)
    async def on_not_found(_req, exc: store.NotFoundError):
        return _error_response(404, "not_found", f"no such object: {exc.args[0]}")

    @app.exception_handler(genai.GatewayError)
    async def on_gateway_error(_req, exc: genai.GatewayError):
        if isinstance(exc, genai.GatewayTimeoutError):
            return _error_response(504, "timeout", str(exc))
        if isinstance(exc, genai.BackendError):
            return _error_response(502, "backend", str(exc))
        return _error_response(502, "transport", str(exc))

    async def _read_upload(upload: UploadFile):
        data = await upload.read()
        if len(data) > MAX_UPLOAD_BYTES:
            raise ApiError(400, "validation", f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        try:
            img = load_image(data)
        except ValueError as exc:
            raise ApiError(400, "validation", str(exc)) from exc
        if max(img.width, img.height) > MAX_INPUT_DIM:
            raise ApiError(
                400, "validation", f"image exceeds {MAX_INPUT_DIM}px on its longest side"
            )
        return img

    @app.post("/api/v1/templates", status_code=201)
    async def create_template(
        image: UploadFile,
        k: int = 16,
        min_region_pct: float = 0.05,
        seed: int = 0,
    ):
        img = await _read_upload(image)
        template = build_template(
            img, k=k, seed=seed, min_area_fraction=min_region_pct / 100.0
        )
        doc = exporter.template_to_document(template)
        tid = store.new_id()
        file_store.put_json("templates", tid, exporter.template_to_json(template))
        return JSONResponse(status_code=201, content={"id": tid, "template": doc})

    @app.get("/api/v1/templates/{tid}.svg")
    async def get_template_svg(tid: str):
        template = exporter.template_from_json(file_store.get_json("templates", tid))
        return Response(
            content=exporter.render_template_svg(template), media_type="image/svg+xml"
        )

    @app.get("/api/v1/templates/{tid}")
    async def get_template(tid: str):
        return Response(
            content=file_store.get_json("templates", tid), media_type="application/json"
        )

    @app.post("/api/v1/sketches")
    async def create_sketch(image: UploadFile, level: str = "intermediate"):
        img = await _read_upload(image)
        sketch = sketcher.generate_sketch(img, level)
        return Response(content=encode_gray_png(sketch.strokes), media_type="image/png")

    @app.post("/api/v1/images:generate")
    async def generate_images(body: GenerateBody):
        req = genai.GenRequest(
            prompt=body.prompt, count=body.count, seed=body.seed, style=body.style
        )
        images = genai.generate_reference_images(cfg, req)
        ids = []
        for img in images:
            iid = store.new_id()
            file_store.put_image(iid, encode_png(img))
            ids.append(iid)
        return {"ids": ids}

    @app.get("/api/v1/images/{iid}")
    async def get_image(iid: str):
        return Response(content=file_store.get_image(iid), media_type="image/png")

    @app.post("/api/v1/sessions", status_code=201)
    async def create_session(body: SessionBody):
        # template must exist; raises NotFoundError -> 404 otherwise
        file_store.get_json("templates", body.template_id)
        sid = store.new_id()
        session = sessions.PaintSession.new(sid, body.template_id)
        file_store.put_json("sessions", sid, _canonical(sessions.session_to_document(session)))
        return JSONResponse(status_code=201, content={"id": sid})

    @app.post("/api/v1/sessions/{sid}/fills")
    async def add_fill(sid: str, body: FillBody):
        with session_lock(sid):
            session = sessions.session_from_document(
                json.loads(file_store.get_json("sessions", sid))
            )
            template = exporter.template_from_json(
                file_store.get_json("templates", session.template_id)
            )
            session = sessions.apply_fill(session, template, body.region_id, body.number)
            doc = sessions.session_to_document(session)
            file_store.put_json("sessions", sid, _canonical(doc))
        return doc

    @app.get("/api/v1/sessions/{sid}")
    async def get_session(sid: str):
        return Response(
            content=file_store.get_json("sessions", sid), media_type="application/json"
        )

    return app
