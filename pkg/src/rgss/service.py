"""HTTP API over a catalog store.

Handlers parse the raw JSON body themselves so that every failure, including
malformed JSON, comes back in one error shape::

    {"error": {"code": ..., "message": ..., "path": ...}}

Compute-heavy requests run in worker threads behind a bounded semaphore, so
at most ``max_workers`` queries are in flight and the rest wait their turn.
"""
from __future__ import annotations

import asyncio
import json
import logging
import os
import weakref

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import queries
from .catalog import CatalogStore, default_catalog
from .errors import RgssError

log = logging.getLogger(__name__)

DEFAULT_WORKERS = 4


class CanonicalJSON(Response):
    media_type = "application/json"

    def render(self, content) -> bytes:
        return queries.dumps(content).encode("utf-8")


def error_record(exc: Exception) -> dict:
    if isinstance(exc, RgssError):
        rec = exc.to_record()
    else:
        rec = {"code": "internal_error", "message": "internal error"}
    rec.setdefault("path", None)
    return {"error": rec}


def _error_response(exc: Exception) -> CanonicalJSON:
    status = exc.status if isinstance(exc, RgssError) else 500
    return CanonicalJSON(error_record(exc), status_code=status)


def create_app(store: CatalogStore | None = None, max_workers: int | None = None) -> FastAPI:
    """Build the application around ``store`` (the bundled catalog by default)."""
    store = store or CatalogStore(default_catalog())
    workers = max_workers or int(os.environ.get("RGSS_WORKERS", DEFAULT_WORKERS))
    gates = weakref.WeakKeyDictionary()  # one semaphore per event loop
    app = FastAPI(title="rgss", version="1.0", default_response_class=CanonicalJSON)
    app.state.store = store

    async def _body(request: Request):
        raw = await request.body()
        try:
            return json.loads(raw or b"null")
        except ValueError as exc:
            from .errors import ValidationError

            raise ValidationError(f"malformed JSON ({exc.msg})", "body") from None

    async def _run(fn, *args):
        loop = asyncio.get_running_loop()
        gate = gates.get(loop)
        if gate is None:
            gate = gates[loop] = asyncio.Semaphore(workers)
        async with gate:
            return await asyncio.to_thread(fn, *args)

    @app.exception_handler(RgssError)
    async def _rgss_error(request, exc):
        return _error_response(exc)

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request, exc):
        code = "not_found" if exc.status_code == 404 else "http_error"
        body = {"error": {"code": code, "message": str(exc.detail), "path": None}}
        return CanonicalJSON(body, status_code=exc.status_code)

    @app.exception_handler(RequestValidationError)
    async def _request_error(request, exc):
        body = {"error": {"code": "invalid_input", "message": "invalid request", "path": None}}
        return CanonicalJSON(body, status_code=422)

    @app.exception_handler(Exception)
    async def _unexpected(request, exc):
        log.exception("unhandled error")
        return _error_response(exc)

    @app.get("/v1/satellites")
    async def list_satellites():
        return CanonicalJSON(queries.satellites(store.snapshot()))

    @app.post("/v1/darktimes")
    async def darktimes(request: Request):
        body = await _body(request)
        return CanonicalJSON(await _run(queries.darktimes, store.snapshot(), body))

    @app.post("/v1/availability")
    async def availability(request: Request):
        body = await _body(request)
        return CanonicalJSON(await _run(queries.availability_query, store.snapshot(), body))

    @app.post("/v1/geofence")
    async def geofence(request: Request):
        body = await _body(request)
        return CanonicalJSON(await _run(queries.geofence, store.snapshot(), body))

    @app.post("/v1/coastal-filter")
    async def coastal(request: Request):
        body = await _body(request)
        return CanonicalJSON(await _run(queries.coastal, store.snapshot(), body))

    @app.post("/v1/mitigation-plan")
    async def mitigation(request: Request):
        body = await _body(request)
        return CanonicalJSON(await _run(queries.mitigation, body))

    return app
