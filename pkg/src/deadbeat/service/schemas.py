"""Pydantic request/response models for the synthesis service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class SystemDefinitionModel(BaseModel):
    """Inline system definition, mirroring the JSON definition file schema."""

    name: str
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    f: list[str]
    state_box: list[list[float]]
    input_box: list[list[float]]


class SystemRef(BaseModel):
    """Either a registry name or an inline definition, never both."""

    source: Optional[str] = None
    definition: Optional[SystemDefinitionModel] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.source is None) == (self.definition is None):
            raise ValueError("provide exactly one of 'source' or 'definition'")
        return self


def _require_odd(values: list[int]) -> list[int]:
    if any(v % 2 == 0 for v in values):
        raise ValueError("input grid sizes must be odd so u = 0 is a grid point")
    return values


class SynthRequest(BaseModel):
    system: SystemRef
    cells: list[int]
    inputs: list[int]
    epsilon: float = Field(gt=0)
    max_layers: Optional[int] = Field(default=None, ge=1)
    threads: int = Field(default=1, ge=1)

    @field_validator("cells")
    @classmethod
    def _cells_min(cls, v):
        if any(c < 2 for c in v):
            raise ValueError("state resolutions must be at least 2 per dimension")
        return v

    _odd = field_validator("inputs")(_require_odd)


class SynthSummaryModel(BaseModel):
    system: str
    cells_per_dim: list[int]
    inputs_per_dim: list[int]
    epsilon: float
    total_cells: int
    reachable_cells: int
    coverage: float
    certified_n: Optional[int]
    layer_count: int
    fixed_point: bool
    growth_log: list[int]


class SynthResponse(BaseModel):
    summary: SynthSummaryModel
    layers_csv: str
    table_csv: str
    summary_json: str


class SimulateRequest(BaseModel):
    system: SystemRef
    cells: list[int]
    inputs: list[int]
    epsilon: float = Field(gt=0)
    x0: list[float]
    table_csv: str
    max_steps: Optional[int] = Field(default=None, ge=1)
    quantize: bool = False


class SimulateResponse(BaseModel):
    outcome: str
    steps: int
    converged: bool
    index_trace: list[Optional[int]]
    final_state: list[float]
    trajectory_csv: str


class CertifyRequest(BaseModel):
    system: SystemRef
    cells: list[int]
    inputs: list[int]
    epsilon: float = Field(gt=0)
    table_csv: str
    max_steps: Optional[int] = Field(default=None, ge=1)
    threads: int = Field(default=1, ge=1)


class CertifyResponse(BaseModel):
    total: int
    finite_total: int
    converged: int
    converged_fraction: float
    empirical_n: Optional[int]
    violations: list[int]
    certified: bool  # every reachable cell converged within its layer index
    report_csv: str


class RankRequest(BaseModel):
    system: SystemRef
    horizon: int = Field(ge=1)
    tau: float = Field(default=1e-8, gt=0)
    neighborhood_radius: float = Field(default=0.1, gt=0)
    samples: int = Field(default=16, ge=1)
    seed: int = 0


class RankResponse(BaseModel):
    holds_on_neighborhood: bool
    rank_at_origin: int
    state_dimension: int
    report_json: str


class SteerRequest(BaseModel):
    system: SystemRef
    x0: list[float]
    horizon: int = Field(ge=1)
    tol: float = Field(default=1e-9, gt=0)
    max_iters: int = Field(default=50, ge=1)
    initial_guess: Optional[list[float]] = None


class SteerResponse(BaseModel):
    converged: bool
    inputs: Optional[list[float]]
    replayed_residual: Optional[float]
    iterations_exhausted: bool = False
    message: Optional[str] = None
    inputs_csv: Optional[str] = None


class SystemInfo(BaseModel):
    name: str
    n: int
    m: int
    state_box: list[list[float]]
    input_box: list[list[float]]
    expressions: Optional[list[str]]


class HealthResponse(BaseModel):
    status: str
    version: str
