import math
from enum import Enum
from typing import Iterator, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from bran_sim.models.system import SystemParams


class RejectionOrder(str, Enum):
    NEWEST = "newest"
    OLDEST = "oldest"


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: SystemParams
    num_arrivals: int = Field(ge=1)
    warmup_fraction: float = Field(default=0.1, ge=0.0, le=0.9)
    seed: int = Field(default=0, ge=0, lt=2**64)
    rejection_order: RejectionOrder = RejectionOrder.NEWEST
    drain: bool = True  # keep running after the last arrival until the system empties


class RequestRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    req_id: int
    t_arrival: float
    t_mined: Optional[float] = None
    t_confirmed: Optional[float] = None
    t_service_start: Optional[float] = None
    t_service_end: Optional[float] = None
    rejected: bool = False


class PhaseMeans(BaseModel):
    model_config = ConfigDict(frozen=True)

    block_inclusion_wait: float
    confirmation_wait: float
    service_queue_wait: float
    service_time: float


class SimCounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    arrived: int = 0
    serviced: int = 0
    rejected: int = 0
    in_flight: int = 0


class SimStats(BaseModel):
    """Aggregates over serviced requests after warm-up; latency fields are None when nothing was serviced."""

    model_config = ConfigDict(frozen=True)

    mean_latency: Optional[float] = None  # arrival to service start
    mean_sojourn: Optional[float] = None  # arrival to service end
    phase_means: Optional[PhaseMeans] = None
    ci95_halfwidth: Optional[float] = None
    sojourn_ci95_halfwidth: Optional[float] = None
    counts: SimCounts = SimCounts()
    samples: int = 0  # serviced requests kept after warm-up
    reliable: bool = False
    horizon: float = 0.0
    throughput: float = 0.0
    mean_pending: float = 0.0  # time-average of requests waiting for a block
    mean_service_queue: float = 0.0  # time-average of confirmed requests waiting or in service


class RequestTrace(BaseModel):
    """Per-request timestamps of one run, indexed by request id; NaN marks an event that never happened."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t_arrival: np.ndarray
    t_mined: np.ndarray
    t_confirmed: np.ndarray
    t_service_start: np.ndarray
    t_service_end: np.ndarray
    rejected: np.ndarray
    block_height: np.ndarray  # height of the block carrying the request, -1 if never mined

    def __len__(self) -> int:
        return int(self.t_arrival.size)

    def record(self, req_id: int) -> RequestRecord:
        def present(values: np.ndarray) -> Optional[float]:
            value = float(values[req_id])
            return None if math.isnan(value) else value

        return RequestRecord(
            req_id=req_id,
            t_arrival=float(self.t_arrival[req_id]),
            t_mined=present(self.t_mined),
            t_confirmed=present(self.t_confirmed),
            t_service_start=present(self.t_service_start),
            t_service_end=present(self.t_service_end),
            rejected=bool(self.rejected[req_id]),
        )

    def records(self) -> Iterator[RequestRecord]:
        for req_id in range(len(self)):
            yield self.record(req_id)
