import math
import warnings

import numpy as np
from scipy.special import gammaln

from bran_sim.config.logging_config import logger
from bran_sim.exceptions.model_errors import ConsistencyWarning, InvalidParamError, UnstableError
from bran_sim.models.attack import AttackParams
from bran_sim.models.latency import LatencyReport
from bran_sim.models.system import SystemParams
from bran_sim.services.model_service import ModelService, get_model_service
from bran_sim.utils import queueing

CLAMP_TOLERANCE = 1e-9


def clamp_probability(value: float, what: str) -> float:
    clamped = min(1.0, max(0.0, value))
    if abs(clamped - value) > CLAMP_TOLERANCE:
        logger.warning("%s evaluated to %.12g, clamped to %g", what, value, clamped)
        warnings.warn(f"{what} evaluated to {value!r} outside [0, 1]", ConsistencyWarning, stacklevel=3)
    return clamped


class AnalyticService:
    """Closed-form latency terms, their bounds, and the attack success series."""

    def __init__(self, model_service: ModelService):
        self.model_service = model_service

    def erlang_c(self, s: int, a: float) -> float:
        return queueing.erlang_c(s, a)

    def tau1(self, params: SystemParams) -> float:
        if params.lambda_a >= params.lambda_b:
            raise UnstableError("tau1", "lambda_a >= lambda_b")
        return 1.0 / (params.lambda_b - params.lambda_a)

    def tau2(self, params: SystemParams) -> float:
        capacity = params.s * params.lambda_c
        if params.lambda_a >= capacity:
            raise UnstableError("tau2", "lambda_a >= s * lambda_c")
        waiting = self.erlang_c(params.s, params.lambda_a / params.lambda_c) / (capacity - params.lambda_a)
        return waiting + 1.0 / params.lambda_c

    def tau3(self, params: SystemParams) -> float:
        return (params.n_conf - 1) / params.lambda_b

    def latency_report(self, params: SystemParams) -> LatencyReport:
        self.model_service.validate(params)
        tau1 = self.tau1(params)
        tau2 = self.tau2(params)
        tau3 = self.tau3(params)
        tau_s = tau1 + tau2 + tau3
        # the upper bound is tau_s without the mean service time
        upper = tau1 + (tau2 - 1.0 / params.lambda_c) + tau3
        return LatencyReport(
            tau1=tau1,
            tau2=tau2,
            tau3=tau3,
            tau_s=tau_s,
            tau_t=tau_s - 1.0 / params.lambda_c,
            upper=upper,
            lower=params.n_conf / params.lambda_b,
        )

    def attack_probability(self, ap: AttackParams) -> float:
        """Success probability of the alternate-history race with an attacker that never gives up.

        Sums, over the n attacker blocks mined while the honest chain collects its N
        confirmations (negative binomial), the chance of never overtaking from deficit N - n.
        """
        if ap.beta < 0 or not math.isfinite(ap.beta):
            raise InvalidParamError("beta", f"must be finite and >= 0, got {ap.beta}")
        if ap.n_conf < 1:
            raise InvalidParamError("n_conf", f"must be >= 1, got {ap.n_conf}")
        beta, n_conf = ap.beta, ap.n_conf
        if beta >= 1.0:
            return 1.0
        if beta == 0.0:
            return 0.0

        # log space: C(n + N - 1, n) overflows a float once N reaches a few hundred
        n = np.arange(n_conf + 1, dtype=float)
        log_p_honest = -math.log1p(beta)
        log_p_attacker = math.log(beta) - math.log1p(beta)
        log_coefficient = gammaln(n + n_conf) - gammaln(n + 1) - gammaln(n_conf)
        log_weight = log_coefficient + n_conf * log_p_honest + n * log_p_attacker
        never_overtakes = -np.expm1((n_conf - n + 1) * math.log(beta))
        total = float(np.sum(np.exp(log_weight) * never_overtakes))
        return clamp_probability(1.0 - total, f"attack probability (beta={beta}, N={n_conf})")


def get_analytic_service() -> AnalyticService:
    return AnalyticService(get_model_service())
