import math
from typing import List

from bran_sim.config.logging_config import logger
from bran_sim.exceptions.model_errors import InvalidParamError
from bran_sim.models.attack import AttackParams
from bran_sim.models.system import (
    StepProbability,
    SystemParams,
    SystemState,
    Transition,
    TransitionKind,
    ValidatedParams,
)


class ModelService:
    """Parameter validation and the transition kernel of the two-queue chain.

    State (i, j): i requests wait for a block, j confirmed requests wait for or
    occupy one of the s access links. Every method is a pure function of its inputs.
    """

    def validate(self, params: SystemParams) -> ValidatedParams:
        for name in ("lambda_a", "lambda_b", "lambda_c", "lambda_r"):
            value = getattr(params, name)
            if not math.isfinite(value):
                raise InvalidParamError(name, f"must be finite, got {value}")
            if value < 0:
                raise InvalidParamError(name, f"must be >= 0, got {value}")
        for name in ("lambda_b", "lambda_c"):
            if getattr(params, name) <= 0:
                raise InvalidParamError(name, "must be > 0")
        for name in ("k", "r", "s", "n_conf"):
            if getattr(params, name) < 1:
                raise InvalidParamError(name, f"must be >= 1, got {getattr(params, name)}")

        analytic_stable = params.lambda_a < params.lambda_b and params.lambda_a < params.s * params.lambda_c

        drain_capacity = params.k * params.lambda_b + params.r * params.lambda_r
        served_fraction = 1.0
        if params.lambda_a > 0:
            served_fraction = max(0.0, 1.0 - params.r * params.lambda_r / params.lambda_a)
        batch_stable = params.lambda_a < drain_capacity and params.lambda_a * served_fraction < params.s * params.lambda_c
        if not analytic_stable:
            logger.warning(
                "lambda_a=%g is outside the closed-form region (lambda_b=%g, s*lambda_c=%g)",
                params.lambda_a,
                params.lambda_b,
                params.s * params.lambda_c,
            )
        if not batch_stable:
            logger.warning("queues grow without bound: lambda_a=%g, drain capacity %g", params.lambda_a, drain_capacity)

        return ValidatedParams(params=params, analytic_stable=analytic_stable, batch_stable=batch_stable)

    def validate_attack(self, ap: AttackParams) -> AttackParams:
        if not math.isfinite(ap.beta) or ap.beta < 0:
            raise InvalidParamError("beta", f"must be finite and >= 0, got {ap.beta}")
        if ap.n_conf < 1:
            raise InvalidParamError("n_conf", f"must be >= 1, got {ap.n_conf}")
        if ap.give_up is not None and ap.give_up < 1:
            raise InvalidParamError("give_up", f"must be >= 1 or unbounded, got {ap.give_up}")
        return ap

    def transitions(self, state: SystemState, params: SystemParams) -> List[Transition]:
        """Enabled moves out of `state`, ordered Arrival, Mine, Service, Reject."""
        i, j = state.i, state.j
        moves: List[Transition] = []

        if params.lambda_a > 0:
            moves.append(Transition(kind=TransitionKind.ARRIVAL, target=SystemState(i=i + 1, j=j), rate=params.lambda_a))

        if i > 0:
            # a block takes every pending request up to k of them
            mined = min(i, params.k)
            moves.append(Transition(kind=TransitionKind.MINE, target=SystemState(i=i - mined, j=j + mined), rate=params.lambda_b))

        if j > 0:
            moves.append(
                Transition(kind=TransitionKind.SERVICE, target=SystemState(i=i, j=j - 1), rate=min(j, params.s) * params.lambda_c)
            )

        if i > 0 and params.lambda_r > 0:
            dropped = min(i, params.r)
            moves.append(Transition(kind=TransitionKind.REJECT, target=SystemState(i=i - dropped, j=j), rate=params.lambda_r))

        return moves

    def step_probabilities(self, state: SystemState, params: SystemParams, h: float) -> List[StepProbability]:
        """Moves of the h-discretized chain: p_x = rate_x * h, plus the idle self-loop last."""
        if not h > 0:
            raise InvalidParamError("h", f"must be > 0, got {h}")

        steps = [StepProbability(kind=t.kind, target=t.target, probability=t.rate * h) for t in self.transitions(state, params)]
        busy = sum(step.probability for step in steps)
        if busy > 1.0:
            raise InvalidParamError("h", f"too large: outgoing probability {busy:.6g} exceeds 1")

        steps.append(StepProbability(kind=None, target=state, probability=1.0 - busy))
        logger.debug("step probabilities for %s at h=%g: idle=%.6g", state, h, 1.0 - busy)
        return steps

    def conventional(self, params: SystemParams) -> SystemParams:
        """Single-request blocks and no rejections: the baseline model."""
        return params.model_copy(update={"k": 1, "lambda_r": 0.0})


def get_model_service() -> ModelService:
    return ModelService()
