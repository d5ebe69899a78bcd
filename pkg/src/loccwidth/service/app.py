"""FastAPI application exposing the toolkit's operations."""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import ops
from ..errors import LoccError
from . import schemas


def _version() -> str:
    try:
        return version("loccwidth")
    except PackageNotFoundError:
        return "0.0.0"


def _tols(overrides: schemas.ToleranceOverrides | None) -> ops.Tolerances:
    base = ops.Tolerances()
    if overrides is None:
        return base
    fields = {k: v for k, v in overrides.model_dump().items() if v is not None}
    return ops.Tolerances(**{**base.__dict__, **fields})


def create_app() -> FastAPI:
    app = FastAPI(title="loccwidth", version=_version())

    @app.exception_handler(LoccError)
    async def numerical_error(_: Request, exc: LoccError) -> JSONResponse:
        return JSONResponse(status_code=422, content=ops.error_object(exc))

    @app.exception_handler(ValueError)
    async def value_error(_: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400, content=ops.error_object(exc))

    @app.get("/health", response_model=schemas.Health)
    def health() -> schemas.Health:
        return schemas.Health(status="ok", version=_version())

    @app.post("/validate", response_model=schemas.ValidateResponse)
    def validate(req: schemas.ValidateRequest) -> dict:
        report = ops.run_validate(req.tree.model_dump(), _tols(req.tolerances), req.timing)
        return {"report": report}

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest) -> dict:
        report = ops.run_evaluate(
            req.tree.model_dump(),
            req.ensemble.model_dump(),
            relabel=req.relabel,
            tols=_tols(req.tolerances),
            timing=req.timing,
        )
        return {"report": report}

    @app.post("/compress-m1", response_model=schemas.CompressM1Response)
    def compress_m1(req: schemas.CompressM1Request) -> dict:
        report, tree = ops.run_compress_m1(
            req.tree.model_dump(),
            req.ensemble.model_dump(),
            tols=_tols(req.tolerances),
            timing=req.timing,
        )
        return {"report": report, "tree": tree}

    @app.post("/slim", response_model=schemas.SlimResponse)
    def slim(req: schemas.SlimRequest) -> dict:
        report, records = ops.run_slim(
            req.tree.model_dump(),
            cap=req.cap,
            reduce_randomness=req.reduce_randomness,
            tols=_tols(req.tolerances),
            timing=req.timing,
        )
        components = None
        if req.include_components and records is not None:
            components = [{"lambda": w, "tree": t} for w, t in records]
        return {"report": report, "components": components}

    @app.post("/demo", response_model=schemas.DemoResponse)
    def demo(req: schemas.DemoRequest) -> dict:
        report, artifacts = ops.run_demo(
            req.name,
            seed=req.seed,
            rounds=req.rounds,
            dims=tuple(req.dims),
            tols=_tols(req.tolerances),
            timing=req.timing,
        )
        return {"report": report, **artifacts}

    return app


app = create_app()
