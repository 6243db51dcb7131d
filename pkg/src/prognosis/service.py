"""Read-only HTTP scoring service.

The model is loaded once and immutable for the process lifetime; every
response is a pure function of (model file, request body). Also serves the
static what-if UI when a build directory is provided.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__
from .features import expand_biomarkers
from .glm import FittedModel, load_model, log_odds, model_to_json, probability

# guard rails against unit mistakes, not clinical limits
VALID_RANGES = {
    "ldh": (0.0, 10000.0),
    "lymphocyte_pct": (0.0, 100.0),
    "hs_crp": (0.0, 1000.0),
}


class ScoreRequest(BaseModel):
    ldh: float
    lymphocyte_pct: float
    hs_crp: float


class WhatIfRequest(BaseModel):
    base: ScoreRequest
    vary: str
    min: float
    max: float
    steps: int


def _check_ranges(values: dict) -> None:
    for name, (lo, hi) in VALID_RANGES.items():
        v = values[name]
        if not (lo <= v <= hi):
            raise HTTPException(
                status_code=422,
                detail=f"{name}={v} outside valid range [{lo}, {hi}]",
            )


def create_app(model: FittedModel | str | Path,
               static_dir: str | Path | None = None) -> FastAPI:
    if not isinstance(model, FittedModel):
        model = load_model(model)
    model_doc = model_to_json(model)
    model_hash = hashlib.sha256(model_doc.encode()).hexdigest()[:16]

    app = FastAPI(title="fatality-risk scoring service")

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        detail = [
            {"field": ".".join(str(p) for p in e["loc"]), "message": e["msg"]}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    def _score(values: dict) -> dict:
        _check_ranges(values)
        x = expand_biomarkers(values["ldh"], values["lymphocyte_pct"],
                              values["hs_crp"], model.feature_set)
        l = float(log_odds(model, x))
        p = float(probability(model, x))
        return {
            "log_odds": l,
            "probability": p,
            "predicted_outcome": "death" if p > model.threshold else "survival",
            "threshold": model.threshold,
            "model_version": model_hash,
        }

    @app.post("/score")
    async def score(req: ScoreRequest):
        return _score(req.model_dump())

    @app.post("/whatif")
    async def whatif(req: WhatIfRequest):
        if req.vary not in VALID_RANGES:
            raise HTTPException(status_code=400,
                                detail=f"unknown biomarker: {req.vary!r}")
        if req.steps < 2:
            raise HTTPException(status_code=400, detail="steps must be >= 2")
        if req.min > req.max:
            raise HTTPException(status_code=400, detail="min must be <= max")
        out = []
        for v in np.linspace(req.min, req.max, req.steps):
            values = req.base.model_dump()
            values[req.vary] = float(v)
            result = _score(values)
            out.append({"value": float(v), "probability": result["probability"]})
        return out

    @app.get("/model")
    async def model_document():
        import json
        return json.loads(model_doc)

    @app.get("/health")
    async def health():
        return {"status": "ok", "version": __version__, "model_hash": model_hash}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")

    return app
