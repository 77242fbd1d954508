"""FastAPI service wrapping the experiment drivers.

One endpoint per workflow verb; the CLI is a thin client of these routes.
Each request carries (a subset of) the experiment configuration and runs
synchronously, returning metrics and artifact locations.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import QepError
from ..experiments import (
    ExperimentConfig,
    config_from_mapping,
    run_experiment,
    run_report,
    run_sample_prior,
)
from .schemas import (
    ExperimentRequest,
    HealthResponse,
    MetricsResponse,
    ReportResponse,
    SamplePriorResponse,
)

app = FastAPI(title="qep experiment service", version=__version__)


def _config(request: ExperimentRequest, **forced) -> ExperimentConfig:
    values = request.overrides()
    values.update(forced)
    try:
        return config_from_mapping(values)
    except (QepError, ValueError) as exc:
        raise HTTPException(status_code=400, detail={
            "error": type(exc).__name__, "message": str(exc)}) from exc


def _run(config: ExperimentConfig) -> MetricsResponse:
    try:
        metrics = run_experiment(config)
    except QepError as exc:
        raise HTTPException(status_code=400, detail={
            "error": type(exc).__name__, "message": str(exc)}) from exc
    return MetricsResponse(metrics=metrics, output_dir=config.output_dir,
                           stem=config.stem())


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/sample-prior", response_model=SamplePriorResponse)
def sample_prior(request: ExperimentRequest) -> SamplePriorResponse:
    config = _config(request)
    try:
        out = run_sample_prior(config)
    except QepError as exc:
        raise HTTPException(status_code=400, detail={
            "error": type(exc).__name__, "message": str(exc)}) from exc
    return SamplePriorResponse(**out)


@app.post("/fit-map", response_model=MetricsResponse)
def fit_map(request: ExperimentRequest) -> MetricsResponse:
    return _run(_config(request, run_map="yes", run_mcmc="no"))


@app.post("/run-mcmc", response_model=MetricsResponse)
def run_mcmc_endpoint(request: ExperimentRequest) -> MetricsResponse:
    return _run(_config(request, run_map="no", run_mcmc="yes"))


@app.post("/predict", response_model=MetricsResponse)
def predict(request: ExperimentRequest) -> MetricsResponse:
    return _run(_config(request, experiment="ts_predict"))


@app.post("/deblur", response_model=MetricsResponse)
def deblur(request: ExperimentRequest) -> MetricsResponse:
    return _run(_config(request, experiment="image_deblur"))


@app.post("/report", response_model=ReportResponse)
def report(request: ExperimentRequest) -> ReportResponse:
    config = _config(request)
    try:
        out = run_report(config)
    except QepError as exc:
        raise HTTPException(status_code=400, detail={
            "error": type(exc).__name__, "message": str(exc)}) from exc
    return ReportResponse(**out)
