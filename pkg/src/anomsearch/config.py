"""Experiment configuration: schema, loading, validation, instance building.

Configs are JSON documents.  Distribution specs serialize as
{"family": "exponential", "rate": 0.0188}, {"family": "gaussian",
"mean": 0.0, "variance": 1.0}, {"family": "bernoulli", "p": 0.3} or
{"family": "discrete", "probs": [...]}.  Unknown fields are rejected
everywhere and validation errors carry the offending field path.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .distributions import DistributionSpec, ProcessModel
from .policy import ProblemInstance


class ConfigError(ValueError):
    """Configuration file could not be parsed or validated."""


class DistributionSpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["exponential", "gaussian", "bernoulli", "discrete"]
    rate: Optional[float] = None
    mean: Optional[float] = None
    variance: Optional[float] = None
    p: Optional[float] = None
    probs: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check_params(self) -> "DistributionSpecModel":
        self.to_spec()  # reuse the library's own parameter validation
        return self

    def to_spec(self) -> DistributionSpec:
        fields = {k: v for k, v in (
            ("rate", self.rate),
            ("mean", self.mean),
            ("variance", self.variance),
            ("p", self.p),
            ("probs", tuple(self.probs) if self.probs is not None else None),
        ) if v is not None}
        return DistributionSpec(self.family, **fields)


class CellModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    f: DistributionSpecModel
    g: DistributionSpecModel

    def to_model(self) -> ProcessModel:
        return ProcessModel.from_specs(absent=self.f.to_spec(), present=self.g.to_spec())


class GeneratorModel(BaseModel):
    """Rule producing per-cell distributions for M-axis sweeps.

    ``exponential`` builds cell i (1-based) with anomalous rate
    lambda_g_offset + lambda_g_slope * i and normal rate lambda_f.
    """

    model_config = ConfigDict(extra="forbid")

    kind: Literal["exponential"]
    lambda_f: float = Field(gt=0)
    lambda_g_offset: float = 0.0
    lambda_g_slope: float = 1.0

    def cells(self, m: int) -> list[ProcessModel]:
        out = []
        for i in range(1, m + 1):
            f = DistributionSpec("exponential", rate=self.lambda_f)
            g = DistributionSpec(
                "exponential", rate=self.lambda_g_offset + self.lambda_g_slope * i
            )
            out.append(ProcessModel.from_specs(absent=f, present=g))
        return out


class SweepModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    axis: Literal["c", "M"]
    values: list[float] = Field(min_length=1)
    generator: Optional[GeneratorModel] = None

    @model_validator(mode="after")
    def _check_axis(self) -> "SweepModel":
        if self.axis == "c":
            for v in self.values:
                if not 0.0 < v < 1.0:
                    raise ValueError(f"c-axis values must lie in (0, 1), got {v}")
        else:
            if self.generator is None:
                raise ValueError("M-axis sweeps need a generator rule for the cells")
            for v in self.values:
                if v != int(v) or v < 2:
                    raise ValueError(f"M-axis values must be integers >= 2, got {v}")
        return self


class InstanceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    M: Optional[int] = Field(default=None, ge=2)
    K: int = Field(default=1, ge=1)
    L: int = Field(default=1, ge=1)
    c: float = Field(gt=0, lt=1)
    priors: Optional[list[float]] = None
    cells: Optional[list[CellModel]] = None

    @model_validator(mode="after")
    def _check_shape(self) -> "InstanceModel":
        if self.cells is not None:
            m = len(self.cells)
            if self.M is not None and self.M != m:
                raise ValueError(f"M={self.M} does not match the {m} configured cells")
            if m < 2:
                raise ValueError("need at least 2 cells")
            if self.K >= m:
                raise ValueError(f"K={self.K} must be smaller than M={m}")
            if self.L >= m:
                raise ValueError(f"L={self.L} must be smaller than M={m}")
        return self


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    instance: InstanceModel
    policy: Literal["dgfi", "chernoff"] = "dgfi"
    trials: int = Field(default=1000, ge=1)
    seed: int = 0
    max_horizon: Optional[int] = Field(default=None, ge=1)
    sweep: Optional[SweepModel] = None
    trace: bool = False

    @model_validator(mode="after")
    def _check_cells_present(self) -> "ExperimentConfig":
        needs_cells = self.sweep is None or self.sweep.axis == "c"
        if needs_cells and self.instance.cells is None:
            raise ValueError("instance.cells is required unless sweeping over M with a generator")
        return self


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and validate a JSON experiment config."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return ExperimentConfig.model_validate(data)


def config_hash(config: ExperimentConfig) -> str:
    """Stable 12-hex-digit digest of the resolved config, for provenance."""
    canonical = json.dumps(
        config.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def build_instance(config: ExperimentConfig) -> ProblemInstance:
    """Materialize the ProblemInstance described by a config (cells required)."""
    spec = config.instance
    if spec.cells is None:
        raise ConfigError("config has no explicit cells; use the sweep generator")
    models = [cell.to_model() for cell in spec.cells]
    return ProblemInstance(models, K=spec.K, L=spec.L, c=spec.c, priors=spec.priors)


def sweep_instances(config: ExperimentConfig) -> list[tuple[float, ProblemInstance]]:
    """Instances for each sweep value: cost clones for the c axis, generated
    cell sets (uniform prior) for the M axis."""
    sweep = config.sweep
    if sweep is None:
        raise ConfigError("config has no sweep section")
    if sweep.axis == "c":
        base = build_instance(config)
        return [(v, base.with_cost(v)) for v in sweep.values]
    spec = config.instance
    out = []
    for v in sweep.values:
        m = int(v)
        models = sweep.generator.cells(m)
        out.append((float(m), ProblemInstance(models, K=spec.K, L=spec.L, c=spec.c)))
    return out
