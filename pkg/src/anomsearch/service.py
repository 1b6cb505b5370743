"""HTTP service exposing the search library.

Every operation is a POST taking a resolved experiment config (the same
schema the CLI loads from disk) plus endpoint-specific options, and returns
JSON.  The CLI is a thin client of these endpoints; see cli.py.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import chernoff as chernoff_mod
from . import harness, rates
from .config import ExperimentConfig, build_instance, config_hash, sweep_instances
from .distributions import DistributionError
from .policy import InstanceError, ProblemInstance

TRACE_TRIAL_CAP = 1000

app = FastAPI(
    title="anomsearch",
    description="Active anomaly search: deterministic divergence-guided probing "
    "and the randomized Chernoff test, with rate analysis and Monte Carlo evaluation.",
    version="0.1.0",
)


@app.exception_handler(ValueError)
async def _value_error_handler(request: Request, exc: ValueError) -> JSONResponse:
    # covers ConfigError, InstanceError, DistributionError, DegenerateGameError
    return JSONResponse(status_code=400, content={"detail": str(exc)})


class HypothesisStat(BaseModel):
    hypothesis: list[int]
    trials: int
    errors: int
    mean_tau: Optional[float]


class ExperimentReportModel(BaseModel):
    policy: str
    M: int
    K: int
    L: int
    c: float
    seed: int
    trials: int
    pe_hat: float
    pe_bound: float
    mean_tau: float
    tau_ci95: float
    bayes_risk: float
    rate_I: float
    rate_Istar: float
    truncation_rate: float
    max_horizon: int
    per_hypothesis: list[HypothesisStat]

    @classmethod
    def from_report(cls, report: harness.ExperimentReport) -> "ExperimentReportModel":
        return cls(**report.to_dict())


class TraceRow(BaseModel):
    trial: int
    step: int
    probes: list[int]
    sums: list[float]


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    workers: int = Field(default=1, ge=1)


class SimulateResponse(BaseModel):
    report: ExperimentReportModel
    config_hash: str
    trace: Optional[list[TraceRow]] = None


class CompareResponse(BaseModel):
    dgfi: ExperimentReportModel
    chernoff: ExperimentReportModel
    delay_gap: float
    config_hash: str


class RatesRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    include_chernoff: bool = False


class ChernoffHypothesis(BaseModel):
    hypothesis: list[int]
    value: float
    actions: list[list[int]]
    weights: list[float]


class RatesResponse(BaseModel):
    rates: dict
    chernoff: Optional[list[ChernoffHypothesis]] = None
    config_hash: str


class OptimalityResponse(BaseModel):
    optimal: list[bool]
    pathological_k: list[int]
    k_tilde: list[float]
    all_optimal: bool
    config_hash: str


class OracleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    cells: Optional[list[int]] = None
    kappas: list[int] = Field(default=[1, 2, 3])
    horizon: int = Field(default=100_000, ge=10_000)


class OracleRow(BaseModel):
    cell: int
    kappa: int
    horizon: int
    oracle_speed: float
    predicted_rate: float
    rel_error: float


class OracleResponse(BaseModel):
    rows: list[OracleRow]
    config_hash: str


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    workers: int = Field(default=1, ge=1)


class SweepPointModel(BaseModel):
    value: float
    report: ExperimentReportModel
    delay_ratio: float
    risk_ratio: float


class SweepResponse(BaseModel):
    points: list[SweepPointModel]
    config_hash: str


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


def _experiment(config: ExperimentConfig, workers: int) -> harness.ExperimentReport:
    inst = build_instance(config)
    return harness.run_experiment(
        inst,
        config.policy,
        config.trials,
        config.seed,
        max_horizon=config.max_horizon,
        workers=workers,
    )


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    report = _experiment(req.config, req.workers)
    trace_rows = None
    if req.config.trace:
        if req.config.trials > TRACE_TRIAL_CAP:
            raise InstanceError(
                f"tracing is limited to {TRACE_TRIAL_CAP} trials, got {req.config.trials}"
            )
        inst = build_instance(req.config)
        hyp_idx = harness.draw_hypotheses(inst, req.config.seed, req.config.trials)
        trace_rows = []
        for t in range(req.config.trials):
            result = harness.run_trial(
                inst,
                req.config.policy,
                inst.hypotheses[hyp_idx[t]],
                harness.trial_seed(req.config.seed, t),
                max_horizon=report.max_horizon,
                trace=True,
            )
            for step, probes, sums in result.trace:
                trace_rows.append(
                    TraceRow(trial=t, step=step, probes=list(probes), sums=list(sums))
                )
    return SimulateResponse(
        report=ExperimentReportModel.from_report(report),
        config_hash=config_hash(req.config),
        trace=trace_rows,
    )


@app.post("/compare", response_model=CompareResponse)
def compare(req: SimulateRequest) -> CompareResponse:
    reports = {}
    for policy in ("dgfi", "chernoff"):
        cfg = req.config.model_copy(update={"policy": policy})
        reports[policy] = _experiment(cfg, req.workers)
    return CompareResponse(
        dgfi=ExperimentReportModel.from_report(reports["dgfi"]),
        chernoff=ExperimentReportModel.from_report(reports["chernoff"]),
        delay_gap=reports["chernoff"].mean_tau - reports["dgfi"].mean_tau,
        config_hash=config_hash(req.config),
    )


@app.post("/rates", response_model=RatesResponse)
def rates_endpoint(req: RatesRequest) -> RatesResponse:
    inst = build_instance(req.config)
    report = rates.build_rate_report(inst)
    chern = None
    if req.include_chernoff or req.config.policy == "chernoff":
        table = chernoff_mod.ensure_action_distributions(inst)
        chern = [
            ChernoffHypothesis(
                hypothesis=list(hyp),
                value=table[hyp][0].value,
                actions=[list(a) for a in table[hyp][0].actions],
                weights=[float(w) for w in table[hyp][0].weights],
            )
            for hyp in inst.hypotheses
        ]
    return RatesResponse(
        rates=report.to_dict(), chernoff=chern, config_hash=config_hash(req.config)
    )


@app.post("/check-optimality", response_model=OptimalityResponse)
def check_optimality(req: RatesRequest) -> OptimalityResponse:
    inst = build_instance(req.config)
    verdicts = rates.optimality_check(inst)
    return OptimalityResponse(
        optimal=verdicts,
        pathological_k=rates.pathological_k(inst),
        k_tilde=[rates.k_tilde(inst, m) for m in range(inst.M)],
        all_optimal=all(verdicts),
        config_hash=config_hash(req.config),
    )


@app.post("/oracle", response_model=OracleResponse)
def oracle(req: OracleRequest) -> OracleResponse:
    inst = build_instance(req.config)
    cells = req.cells if req.cells is not None else [0]
    rows = []
    for m in cells:
        if not 0 <= m < inst.M:
            raise InstanceError(f"cell {m} out of range for M={inst.M}")
        speeds = [float(inst.d_fg[j]) for j in range(inst.M) if j != m]
        for kappa in req.kappas:
            measured = rates.car_oracle(speeds, kappa, req.horizon)
            predicted = rates.f_kappa(inst, m, kappa)
            rows.append(
                OracleRow(
                    cell=m,
                    kappa=kappa,
                    horizon=req.horizon,
                    oracle_speed=measured,
                    predicted_rate=predicted,
                    rel_error=abs(measured - predicted) / predicted,
                )
            )
    return OracleResponse(rows=rows, config_hash=config_hash(req.config))


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest) -> SweepResponse:
    if req.config.sweep is None:
        raise InstanceError("config has no sweep section")
    instances = sweep_instances(req.config)
    points = harness.run_sweep(
        instances,
        req.config.policy,
        req.config.trials,
        req.config.seed,
        max_horizon=req.config.max_horizon,
        workers=req.workers,
    )
    return SweepResponse(
        points=[
            SweepPointModel(
                value=p.value,
                report=ExperimentReportModel.from_report(p.report),
                delay_ratio=p.delay_ratio,
                risk_ratio=p.risk_ratio,
            )
            for p in points
        ],
        config_hash=config_hash(req.config),
    )
