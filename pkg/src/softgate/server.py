"""Stateless HTTP sidecar exposing the calibrated gate.

The calibration artifact is loaded once at startup and shared read-only
across requests. Endpoints:

    POST /v1/gate        one probability vector in, one decision out
    POST /v1/gate/batch  array in, array out, order preserving
    GET  /v1/calibration artifact metadata and thresholds
    GET  /healthz        liveness
"""

import logging
import math
import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from softgate.calibration import artifact_digest
from softgate.errors import ValidationError
from softgate.gate import MODE_GLOBAL, MODE_PER_CLASS, decision_to_dict, gate_one

SCHEMA_VERSION = 1
SUM_TOLERANCE = 1e-6

log = logging.getLogger("softgate.server")


class GateMode(BaseModel):
    type: str = MODE_PER_CLASS  # "per-class" | "global"
    t: float | None = None


class GateRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    probs: list[float] = Field(min_length=2)
    mode: GateMode | None = None


class BatchGateRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    requests: list[GateRequest]


def _check_probs(probs, k):
    v = np.asarray(probs, dtype=np.float64)
    if v.shape != (k,):
        raise ValidationError(f"expected {k} probabilities, got {v.shape[0]}")
    if not np.all(np.isfinite(v)) or np.any(v < 0) or np.any(v > 1 + SUM_TOLERANCE):
        raise ValidationError("probabilities must lie in [0, 1]")
    s = float(v.sum())
    if abs(s - 1.0) > SUM_TOLERANCE:
        raise ValidationError(f"probabilities sum to {s!r}, not 1")
    return v / s


def _decide(req, artifact, digest):
    probs = _check_probs(req.probs, artifact.k)
    mode = req.mode or GateMode()
    if mode.type not in (MODE_PER_CLASS, MODE_GLOBAL):
        raise ValidationError(f"unknown mode {mode.type!r}")
    decision = gate_one(
        probs,
        artifact,
        mode=mode.type,
        global_threshold=mode.t,
    )
    doc = decision_to_dict(decision)
    doc["schema_version"] = SCHEMA_VERSION
    doc["calibration_digest"] = digest
    return doc


def create_app(artifact):
    app = FastAPI(title="softgate", version="1")
    digest = artifact_digest(artifact)

    @app.middleware("http")
    async def request_log(request: Request, call_next):
        start = time.perf_counter()
        response = await call_next(request)
        elapsed_ms = (time.perf_counter() - start) * 1e3
        log.info("%s %s status=%d latency_ms=%.2f",
                 request.method, request.url.path, response.status_code, elapsed_ms)
        return response

    @app.exception_handler(ValidationError)
    async def validation_handler(request, exc):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def malformed_body_handler(request, exc):
        # schema-level failures are a malformed body, not a bad probability
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.get("/v1/calibration")
    async def calibration():
        return {
            "schema_version": SCHEMA_VERSION,
            "k": artifact.k,
            "digest": digest,
            "metadata": artifact.metadata,
            "support": [int(s) for s in artifact.centroids.support],
            "thresholds": [
                {
                    "class": e.class_id,
                    "value": e.value if math.isfinite(e.value) else None,
                    "source": e.source,
                }
                for e in artifact.thresholds.entries
            ],
        }

    @app.post("/v1/gate")
    async def gate(req: GateRequest):
        return _decide(req, artifact, digest)

    @app.post("/v1/gate/batch")
    async def gate_batch_endpoint(req: BatchGateRequest):
        return [_decide(r, artifact, digest) for r in req.requests]

    return app


def serve(artifact, host="127.0.0.1", port=8901):
    """Run the sidecar until interrupted; completes in-flight requests."""
    import uvicorn

    logging.basicConfig(level=logging.INFO)
    uvicorn.run(create_app(artifact), host=host, port=port)
