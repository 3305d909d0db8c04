from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class SystemParams(BaseModel):
    """Rates and integer sizes of the two-queue B-RAN model.

    Fields are only type-checked here; the model invariants (positive mining and
    service rates, sizes >= 1) are enforced by `ModelService.validate` so that
    degenerate parameter sets can still be built and reported on.
    """

    model_config = ConfigDict(frozen=True)

    lambda_a: float  # request arrival rate
    lambda_b: float  # block mining rate
    lambda_c: float  # per-link service rate
    lambda_r: float = 0.0  # rejection-event rate
    k: int = 1  # requests per block
    r: int = 1  # requests removed per rejection event
    s: int = 1  # parallel access links
    n_conf: int = 1  # confirmations N


class ValidatedParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: SystemParams
    analytic_stable: bool  # lambda_a < lambda_b and lambda_a < s * lambda_c
    batch_stable: bool  # block queue drains and the service stage keeps up


class SystemState(BaseModel):
    model_config = ConfigDict(frozen=True)

    i: int = Field(ge=0)  # pending requests awaiting block inclusion
    j: int = Field(ge=0)  # confirmed requests awaiting or under service


class TransitionKind(Enum):
    ARRIVAL = 0
    MINE = 1
    SERVICE = 2
    REJECT = 3


class Transition(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: TransitionKind
    target: SystemState
    rate: float = Field(gt=0)


class StepProbability(BaseModel):
    # One move of the h-discretized chain; kind None is the idle self-loop
    model_config = ConfigDict(frozen=True)

    kind: Optional[TransitionKind]
    target: SystemState
    probability: float = Field(ge=0, le=1)
