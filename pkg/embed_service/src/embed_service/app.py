"""HTTP API: GET /healthz, GET /models, POST /embed."""

from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .backend import ModelPool
from .registry import MAX_BATCH, MODELS

DEFAULT_ADDR = "127.0.0.1:8876"


class EmbedRequest(BaseModel):
    model: str
    texts: list[str]


def create_app() -> FastAPI:
    app = FastAPI(title="embed-service")
    pool = ModelPool(MODELS)
    app.state.pool = pool

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/models")
    def models():
        return [
            {
                "model": spec.name,
                "dim": spec.dim,
                "max_seq_len": spec.max_seq_len,
                "loaded": pool.loaded(spec.name),
                "backend": pool.backend_kind(spec.name),
            }
            for spec in pool.specs()
        ]

    @app.post("/embed")
    def embed(request: EmbedRequest):
        if request.model not in MODELS:
            return JSONResponse(status_code=404,
                                content={"error": f"unknown model {request.model!r}"})
        if not request.texts:
            return JSONResponse(status_code=400, content={"error": "texts must be non-empty"})
        if len(request.texts) > MAX_BATCH:
            return JSONResponse(status_code=413,
                                content={"error": f"batch limit is {MAX_BATCH} texts"})
        try:
            vectors = pool.encoder(request.model).encode(request.texts)
        except Exception as exc:  # noqa: BLE001 - runtime failure maps to 500
            return JSONResponse(status_code=500, content={"error": str(exc)})
        spec = MODELS[request.model]
        return {
            "model": request.model,
            "dim": spec.dim,
            "vectors": [[float(v) for v in row] for row in vectors],
        }

    return app


app = create_app()


def main() -> None:
    import uvicorn

    addr = os.environ.get("EMBED_SERVICE_ADDR", DEFAULT_ADDR)
    host, _, port = addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
