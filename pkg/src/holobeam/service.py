"""HTTP API over the simulator.

Every route is a thin wrapper around a plain handler function so the CLI can
call the same code in-process or through a running server.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .config import ConfigError, SystemConfig
from .harness import (
    SCHEMES,
    AggregateStats,
    ExperimentError,
    ExperimentRecord,
    aggregate,
    run_realization,
    run_records,
)
from .holo_opt import check_gradients

SchemeChoice = Literal["proposed", "benchmark", "both"]


class SingleRequest(BaseModel):
    config: dict[str, Any] = Field(default_factory=dict)
    realization: int = 0
    snr_db: Optional[float] = None


class SweepRequest(BaseModel):
    config: dict[str, Any] = Field(default_factory=dict)
    scheme: SchemeChoice = "both"
    snr_db: Optional[list[float]] = None
    sizes: Optional[list[int]] = None
    threads: int = Field(1, ge=1)


class GradCheckRequest(BaseModel):
    instances: int = Field(50, ge=1)
    seed: int = 0
    step: float = Field(1e-6, gt=0)


class RecordModel(BaseModel):
    realization: int
    scheme: str
    M: int
    snr_db: float
    rates: list[float]
    schedule: list[int]
    sum_rate: float
    config_hash: str

    @classmethod
    def from_record(cls, r: ExperimentRecord) -> "RecordModel":
        return cls(
            realization=r.realization,
            scheme=r.scheme,
            M=r.num_elements,
            snr_db=r.snr_db,
            rates=r.rates.tolist(),
            schedule=r.schedule.astype(int).tolist(),
            sum_rate=r.sum_rate,
            config_hash=r.config_hash,
        )


class StatsModel(BaseModel):
    scheme: str
    M: int
    snr_db: float
    mean_rate: list[float]
    sched_freq: list[float]
    mean_sum_rate: float
    cdf_values: list[float]
    cdf_fractions: list[float]

    @classmethod
    def from_stats(cls, s: AggregateStats) -> "StatsModel":
        return cls(
            scheme=s.scheme,
            M=s.num_elements,
            snr_db=s.snr_db,
            mean_rate=s.mean_rate.tolist(),
            sched_freq=s.sched_freq.tolist(),
            mean_sum_rate=s.mean_sum_rate,
            cdf_values=s.cdf_values.tolist(),
            cdf_fractions=s.cdf_fractions.tolist(),
        )


class SingleResponse(BaseModel):
    record: RecordModel
    weights: list[float]
    initial_rates: list[float]
    admissions: list[dict[str, Any]]


class SweepResponse(BaseModel):
    config: dict[str, Any]
    stats: list[StatsModel]
    records: list[RecordModel]


class GradCheckResponse(BaseModel):
    instances: int
    max_relative_error: float
    passed: bool


def _config(payload: dict[str, Any]) -> SystemConfig:
    return SystemConfig.from_flat_dict(dict(payload))


def _schemes(choice: str) -> tuple[str, ...]:
    return SCHEMES if choice == "both" else (choice,)


def handle_single(req: SingleRequest) -> SingleResponse:
    config = _config(req.config)
    record, sol = run_realization(config, req.realization, req.snr_db)
    return SingleResponse(
        record=RecordModel.from_record(record),
        weights=sol.w.tolist(),
        initial_rates=sol.initial_rates.tolist(),
        admissions=[vars(a) for a in sol.history],
    )


def _sweep(config: SystemConfig, sizes, snr_points, schemes, threads) -> SweepResponse:
    records = []
    for m in sizes:
        records += run_records(config.replace(num_elements=int(m)), snr_points, schemes, threads)
    return SweepResponse(
        config=config.to_flat_dict(),
        stats=[StatsModel.from_stats(s) for s in aggregate(records)],
        records=[RecordModel.from_record(r) for r in records],
    )


def handle_sweep_snr(req: SweepRequest) -> SweepResponse:
    config = _config(req.config)
    snr = req.snr_db or list(config.snr_db)
    sizes = req.sizes or [config.num_elements]
    return _sweep(config, sizes, snr, _schemes(req.scheme), req.threads)


def handle_sweep_size(req: SweepRequest) -> SweepResponse:
    config = _config(req.config)
    sizes = req.sizes or [16, 25, 36, 49, 64]
    return _sweep(config, sizes, req.snr_db or [10.0, 30.0], _schemes(req.scheme), req.threads)


def handle_cdf(req: SweepRequest) -> SweepResponse:
    config = _config(req.config)
    sizes = req.sizes or [36, 64]
    return _sweep(config, sizes, req.snr_db or [10.0, 30.0], _schemes(req.scheme), req.threads)


GRADIENT_TOLERANCE = 1e-5


def handle_grad_check(req: GradCheckRequest) -> GradCheckResponse:
    result = check_gradients(req.instances, req.seed, req.step)
    return GradCheckResponse(
        instances=result["instances"],
        max_relative_error=result["max_relative_error"],
        passed=result["max_relative_error"] < GRADIENT_TOLERANCE,
    )


app = FastAPI(title="holobeam", version=__version__)


def _guard(handler, req):
    try:
        return handler(req)
    except (ConfigError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except ExperimentError as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.get("/config/default")
def default_config():
    return SystemConfig().to_flat_dict()


@app.post("/single", response_model=SingleResponse)
def single(req: SingleRequest):
    return _guard(handle_single, req)


@app.post("/sweep-snr", response_model=SweepResponse)
def sweep_snr(req: SweepRequest):
    return _guard(handle_sweep_snr, req)


@app.post("/sweep-size", response_model=SweepResponse)
def sweep_size(req: SweepRequest):
    return _guard(handle_sweep_size, req)


@app.post("/cdf", response_model=SweepResponse)
def cdf(req: SweepRequest):
    return _guard(handle_cdf, req)


@app.post("/grad-check", response_model=GradCheckResponse)
def grad_check(req: GradCheckRequest):
    return _guard(handle_grad_check, req)
