"""HTTP prediction service over one fitted model.

The model and its training index are loaded once and never mutated, so
concurrent requests are safe and identical bodies get identical responses.
Endpoints: GET /health, GET /schema, POST /predict; the single-page client,
when built, is served under /ui.
"""

from __future__ import annotations

import logging
import sys
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .encoding import UNKNOWN_CATEGORY
from .model_io import FORMAT_VERSION, load_model, model_digest
from .partial_inputs import (
    EmptyMatchError,
    TrainingIndex,
    predict_method_a,
    predict_method_b,
    predict_relaxing,
    prediction_payload,
)

log = logging.getLogger("claimdur.service")


def _request_logger():
    if not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.INFO)
    return log


def schema_payload(model) -> dict:
    """Variables and their selectable consolidated categories."""
    variables = []
    for name in model.codebook.variables:
        categories = [c for c in model.codebook.codings[name].categories
                      if c != UNKNOWN_CATEGORY]
        variables.append({"name": name, "categories": categories})
    return {"variables": variables}


def create_app(model_path, ui_dir=None) -> FastAPI:
    model = load_model(model_path)
    digest = model_digest(model_path)
    index = TrainingIndex.from_model(model)
    app = FastAPI(title="claimdur prediction service", docs_url=None,
                  redoc_url=None)
    logger = _request_logger()

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        started = time.perf_counter()
        try:
            response = await call_next(request)
        except Exception:  # pragma: no cover - safety net
            logger.info("%s %s 500 %.1fms", request.method, request.url.path,
                        (time.perf_counter() - started) * 1000)
            return JSONResponse({"error": "internal error"}, status_code=500)
        logger.info("%s %s %d %.1fms", request.method, request.url.path,
                    response.status_code,
                    (time.perf_counter() - started) * 1000)
        return response

    @app.get("/health")
    def health():
        return {"status": "ok",
                "model_version": f"{FORMAT_VERSION}:{digest}"}

    @app.get("/schema")
    def schema():
        return schema_payload(model)

    @app.post("/predict")
    async def predict(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "request body must be JSON"},
                                status_code=400)
        if not isinstance(body, dict):
            return JSONResponse({"error": "request body must be an object"},
                                status_code=400)
        inputs = body.get("inputs", {})
        if not isinstance(inputs, dict) or not all(
            isinstance(k, str) and isinstance(v, (str, int, float))
            for k, v in inputs.items()
        ):
            return JSONResponse(
                {"error": "inputs must map variable names to category tokens"},
                status_code=400)
        method = body.get("method", "A")
        if method not in ("A", "B"):
            return JSONResponse({"error": f"unknown method {method!r}"},
                                status_code=400)
        relax = bool(body.get("relax", False))
        inputs = {str(k): str(v) for k, v in inputs.items()}
        try:
            if relax:
                result = predict_relaxing(inputs, model, method=method,
                                          index=index)
            elif method == "A":
                result = predict_method_a(inputs, model, index=index)
            else:
                result = predict_method_b(inputs, model, index=index)
        except EmptyMatchError as err:
            return JSONResponse(
                {
                    "error": "no training records match the partial input",
                    "diagnostics": {
                        "most_restrictive": err.most_restrictive,
                        "singleton_counts": err.singleton_counts,
                    },
                },
                status_code=422)
        except ValueError as err:
            return JSONResponse({"error": str(err)}, status_code=400)
        return prediction_payload(result)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")

    return app
