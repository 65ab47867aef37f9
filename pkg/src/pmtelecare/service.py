"""HTTP/JSON API of the remote-physician service.

Endpoints (all bodies UTF-8 JSON):

    POST /api/v1/sessions                  ingest a full session -> 201 {id}
    GET  /api/v1/sessions?page=&page_size= manifest slice
    GET  /api/v1/sessions/{id}             full record
    GET  /api/v1/sessions/{id}/analysis    analysis payload (computed on
                                           first call, cached after)
    POST /api/v1/sessions/{id}/annotations append an annotation
    GET  /api/v1/health                    liveness + version

When the TELECARE_TOKEN environment variable is set, every endpoint except
/health requires `Authorization: Bearer <token>`.

Endpoints are plain sync handlers, so the framework serves them from its
thread pool: long-running analysis of one session never blocks reads of
another. Client-supplied `analysis` fields are ignored on ingest; the
server recomputes from raw data so cached analysis always equals its own
recomputation.
"""

from __future__ import annotations

import os

from fastapi import Body, Depends, FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .errors import (
    AnalysisFailure,
    CorruptRecord,
    DuplicateId,
    EmptyAnnotation,
    NotFound,
    TelecareError,
)
from .session import session_from_json_dict, session_to_json_dict
from .store import SessionStore
from .temperament_eval import TemperamentLabel

TOKEN_ENV_VAR = "TELECARE_TOKEN"


def _check_auth(request: Request) -> None:
    token = os.environ.get(TOKEN_ENV_VAR)
    if not token:
        return
    header = request.headers.get("authorization", "")
    if header != f"Bearer {token}":
        raise HTTPException(status_code=401, detail="missing or invalid bearer token")


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="pmtelecare service", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(TelecareError)
    def _telecare_error(request: Request, exc: TelecareError):
        status = 500
        if isinstance(exc, NotFound):
            status = 404
        elif isinstance(exc, DuplicateId):
            status = 409
        elif isinstance(exc, (EmptyAnnotation,)):
            status = 400
        elif isinstance(exc, CorruptRecord):
            status = 500
        elif isinstance(exc, AnalysisFailure):
            status = 500
        return JSONResponse(
            status_code=status,
            content={"detail": f"{type(exc).__name__}: {exc}"},
        )

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/api/v1/sessions", status_code=201, dependencies=[Depends(_check_auth)])
    def create_session(payload: dict = Body(...)):
        try:
            # the server is the analytical source of truth: any uploaded
            # analysis is dropped and recomputed on demand
            payload = dict(payload)
            payload["analysis"] = None
            record = session_from_json_dict(payload)
        except TelecareError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"malformed session: {exc}")
        session_id = store.save_session(record)
        return {"id": session_id}

    @app.get("/api/v1/sessions", dependencies=[Depends(_check_auth)])
    def list_sessions(page: int = 1, page_size: int = 10):
        if page < 1 or not (1 <= page_size <= 100):
            raise HTTPException(status_code=400, detail="bad pagination parameters")
        return store.list_sessions(page=page, page_size=page_size)

    @app.get("/api/v1/sessions/{session_id}", dependencies=[Depends(_check_auth)])
    def get_session(session_id: str):
        record = store.load_session(session_id)
        return session_to_json_dict(record)

    @app.get(
        "/api/v1/sessions/{session_id}/analysis",
        dependencies=[Depends(_check_auth)],
    )
    def get_analysis(session_id: str):
        return store.analyze_session(session_id)

    @app.post(
        "/api/v1/sessions/{session_id}/annotations",
        status_code=201,
        dependencies=[Depends(_check_auth)],
    )
    def post_annotation(session_id: str, payload: dict = Body(...)):
        author = str(payload.get("author", "")).strip()
        note = str(payload.get("note", "") or "")
        temperament = None
        if payload.get("temperament") is not None:
            try:
                temperament = TemperamentLabel.from_dict(payload["temperament"])
            except (KeyError, ValueError) as exc:
                raise HTTPException(status_code=400, detail=f"bad temperament: {exc}")
        annotations = store.add_annotation(
            session_id, author=author, temperament=temperament, note=note
        )
        return {"annotations": [a.as_dict() for a in annotations]}

    return app


def run_server(data_dir: str, host: str = "127.0.0.1", port: int = 8763) -> None:
    """Blocking uvicorn server over a store rooted at data_dir."""
    import uvicorn

    app = create_app(SessionStore(data_dir))
    uvicorn.run(app, host=host, port=port, log_level="warning")
