from typing import Iterator, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class StateSpace(BaseModel):
    """Rectangle 0..i_max x 0..j_max of the truncated chain, indexed row-major by i."""

    model_config = ConfigDict(frozen=True)

    i_max: int = Field(ge=0)
    j_max: int = Field(ge=0)

    @property
    def size(self) -> int:
        return (self.i_max + 1) * (self.j_max + 1)

    def index(self, i: int, j: int) -> int:
        if not (0 <= i <= self.i_max and 0 <= j <= self.j_max):
            raise IndexError(f"state ({i}, {j}) outside the {self.i_max}x{self.j_max} rectangle")
        return i * (self.j_max + 1) + j

    def state(self, index: int) -> Tuple[int, int]:
        if not 0 <= index < self.size:
            raise IndexError(f"index {index} outside 0..{self.size - 1}")
        return divmod(index, self.j_max + 1)

    def states(self) -> Iterator[Tuple[int, int]]:
        for i in range(self.i_max + 1):
            for j in range(self.j_max + 1):
                yield i, j

    def grid(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-index i and j coordinates as integer arrays."""
        idx = np.arange(self.size)
        return idx // (self.j_max + 1), idx % (self.j_max + 1)


class SteadyState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: StateSpace
    pi: np.ndarray
    mass_at_boundary: float
    residual: float
    method: str  # "direct" or "iterative"

    def probability(self, i: int, j: int) -> float:
        return float(self.pi[self.space.index(i, j)])


class ChainMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    e_i: float
    e_j: float
    little_latency: float
    boundary_mass: float
    p_pending_nonempty: float
    rejection_throughput: float
    effective_arrival_rate: float
