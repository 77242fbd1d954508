"""Pydantic request/response models for the experiment service.

Every request field mirrors an ``ExperimentConfig`` entry; omitted fields
fall back to the config defaults server-side so clients only send what
they set.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict


class ExperimentRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: Optional[str] = None
    prior: Optional[str] = None
    q: Optional[float] = None
    kernel_family: Optional[str] = None
    variance: Optional[float] = None
    lengthscale: Optional[float] = None
    nu: Optional[float] = None
    exponent: Optional[float] = None
    kappa: Optional[float] = None
    besov_smoothness: Optional[float] = None
    n: Optional[int] = None
    rows: Optional[int] = None
    cols: Optional[int] = None
    l_trunc: Optional[int] = None
    kl_independent: Optional[bool] = None
    blur_length: Optional[int] = None
    blur_angle: Optional[float] = None
    noise_ratio: Optional[float] = None
    noise_norm: Optional[str] = None
    n_samples: Optional[int] = None
    n_burnin: Optional[int] = None
    map_max_iter: Optional[int] = None
    map_tol: Optional[float] = None
    run_map: Optional[str] = None
    run_mcmc: Optional[str] = None
    bands_level: Optional[float] = None
    bands_draws: Optional[int] = None
    seed: Optional[int] = None
    repeats: Optional[int] = None
    jobs: Optional[int] = None
    n_prior_draws: Optional[int] = None
    output_dir: Optional[str] = None

    def overrides(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class MetricsResponse(BaseModel):
    metrics: dict
    output_dir: str
    stem: str


class SamplePriorResponse(BaseModel):
    path: str
    n_draws: int
    grid_size: int


class ReportResponse(BaseModel):
    path: str
    table: str
    stats: dict


class HealthResponse(BaseModel):
    status: str
    version: str
