from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class ConfirmationCounting(str, Enum):
    INCLUSIVE = "inclusive"  # the attacked block is the first of the N honest blocks
    EXCLUSIVE = "exclusive"  # N further honest blocks after the attacked one


class AttackParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float  # attacker mining rate relative to the honest chain
    n_conf: int = 1
    give_up: Optional[int] = None  # N_g; None means the attacker never gives up
    conf_counting: ConfirmationCounting = ConfirmationCounting.INCLUSIVE

    @property
    def unbounded(self) -> bool:
        return self.give_up is None


class RaceOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    success: bool
    gave_up: bool = False
    capped: bool = False


class AttackEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    p_hat: float = Field(ge=0, le=1)
    stderr: float = Field(ge=0)
    trials: int = Field(ge=1)
    gave_up_fraction: float = Field(ge=0, le=1)  # share of failures caused by hitting N_g
    capped: int = 0  # trials cut by the step cap, counted as failures
