"""FastAPI application exposing the toolkit over HTTP.

Run with `pianoeval serve` or `uvicorn pianoeval.service.app:create_app`.
A model file passed at startup becomes the default for /evaluate requests
that do not inline one.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..measure import load_model, model_to_dict
from . import handlers, schemas


def create_app(model_path=None) -> FastAPI:
    app = FastAPI(title="pianoeval", version=__version__)
    default_model = None
    if model_path is not None:
        default_model = schemas.ModelDocument(**model_to_dict(load_model(model_path)))

    def run(handler, req):
        try:
            return handler(req)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(
            status="ok", tool_version=__version__, model_loaded=default_model is not None
        )

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest):
        if req.model is None and default_model is not None:
            req = req.model_copy(update={"model": default_model})
        return run(handlers.evaluate, req)

    @app.post("/features", response_model=schemas.FeaturesResponse)
    def features(req: schemas.FeaturesRequest):
        return run(handlers.features, req)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        return run(handlers.train, req)

    @app.post("/select", response_model=schemas.SelectResponse)
    def select(req: schemas.SelectRequest):
        return run(handlers.select, req)

    @app.post("/align", response_model=schemas.AlignResponse)
    def align(req: schemas.AlignRequest):
        return run(handlers.align, req)

    @app.post("/analyze", response_model=schemas.AnalyzeResponse)
    def analyze(req: schemas.AnalyzeRequest):
        return run(handlers.analyze, req)

    return app


app = create_app()
