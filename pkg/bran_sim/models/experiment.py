from enum import Enum
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from bran_sim.models.attack import AttackParams
from bran_sim.models.simulation import RejectionOrder
from bran_sim.models.system import SystemParams


class Mode(str, Enum):
    ANALYTIC = "analytic"
    STEADY_STATE = "steady-state"
    SIMULATE = "simulate"
    ATTACK = "attack"
    SWEEP_RHO = "sweep-rho"
    SWEEP_CONFIRMATIONS = "sweep-confirmations"
    SWEEP_ATTACK = "sweep-attack"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class AxisScale(str, Enum):
    LINEAR = "linear"
    LOG = "log"


class RhoDefinition(str, Enum):
    BLOCK = "block"  # rho = lambda_a / lambda_b
    SERVICE = "service"  # rho = lambda_a / (s * lambda_c)


class SweepAxis(BaseModel):
    model_config = ConfigDict(frozen=True)

    variable: str
    start: float
    stop: float
    points: int = Field(ge=2)
    scale: AxisScale = AxisScale.LINEAR

    @model_validator(mode="after")
    def check_bounds(self) -> "SweepAxis":
        if not self.start < self.stop:
            raise ValueError(f"sweep.start ({self.start}) must be below sweep.stop ({self.stop})")
        if self.scale is AxisScale.LOG and self.start <= 0:
            raise ValueError("a log-scaled sweep needs sweep.start > 0")
        return self

    def values(self) -> List[float]:
        if self.scale is AxisScale.LOG:
            grid = np.geomspace(self.start, self.stop, self.points)
        else:
            grid = np.linspace(self.start, self.stop, self.points)
        return [float(value) for value in grid]


class TrafficIntensity(BaseModel):
    """Load ratio of the latency sweeps; setting it rescales lambda_a and leaves the other rates alone."""

    model_config = ConfigDict(frozen=True)

    rho: float = Field(ge=0, lt=1)
    definition: RhoDefinition = RhoDefinition.BLOCK

    def apply(self, params: SystemParams) -> SystemParams:
        if self.definition is RhoDefinition.BLOCK:
            lambda_a = self.rho * params.lambda_b
        else:
            lambda_a = self.rho * params.s * params.lambda_c
        return params.model_copy(update={"lambda_a": lambda_a})


GiveUp = Union[int, None]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: Mode
    params: SystemParams
    attack: AttackParams
    sweep: Optional[SweepAxis] = None
    k_values: List[int]
    n_values: List[int]
    rho_values: List[float]
    ng_values: List[GiveUp]
    rho_definition: RhoDefinition = RhoDefinition.BLOCK
    trials: int = Field(default=1_000_000, ge=1)
    num_arrivals: int = Field(default=1_000_000, ge=1)
    warmup_fraction: float = Field(default=0.1, ge=0.0, le=0.9)
    rejection_order: RejectionOrder = RejectionOrder.NEWEST
    seed: int = Field(default=0, ge=0, lt=2**64)
    output: Optional[str] = None  # None writes to stdout
    records_output: Optional[str] = None  # per-request CSV of a simulate run
    format: OutputFormat = OutputFormat.CSV
    workers: int = Field(default=1, ge=1)


Cell = Union[float, int, str, bool, None]


class ResultTable(BaseModel):
    """Rows of one experiment in fixed column order; None cells are written empty."""

    model_config = ConfigDict(frozen=True)

    columns: List[str]
    rows: List[List[Cell]]

    def column(self, name: str) -> List[Cell]:
        position = self.columns.index(name)
        return [row[position] for row in self.rows]
