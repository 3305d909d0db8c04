import math
from typing import Optional

import numpy as np
from scipy.special import gammaln

from bran_sim.config.logging_config import logger
from bran_sim.config.settings import settings
from bran_sim.models.attack import AttackEstimate, AttackParams, ConfirmationCounting, RaceOutcome
from bran_sim.services.model_service import ModelService, get_model_service
from bran_sim.utils.random_streams import spawn_generators
from bran_sim.utils.statistics import binomial_stderr

BOUNDED_CHUNK = 64


class AttackService:
    """Monte Carlo of the alternate-history race.

    Block events are thinned from the merged Poisson process: each new block is the
    attacker's with probability beta / (1 + beta). Phase 1 runs until the honest
    chain holds the confirmations, phase 2 is the catch-up walk on the deficit
    d = honest length - attacker length, won at d = -1 and abandoned once d > N_g.
    """

    def __init__(
        self,
        model_service: ModelService,
        step_cap: int = 1_000_000_000,
        batch_size: int = 65_536,
        hopeless_probability: float = 1e-12,
    ):
        self.model_service = model_service
        self.step_cap = step_cap
        self.batch_size = batch_size
        self.hopeless_probability = hopeless_probability

    @staticmethod
    def honest_blocks(ap: AttackParams) -> int:
        """Honest blocks mined in phase 1, the attacked block included."""
        return ap.n_conf if ap.conf_counting is ConfirmationCounting.INCLUSIVE else ap.n_conf + 1

    def hopeless_deficit(self, ap: AttackParams) -> Optional[int]:
        """Deficit from which an attacker that never gives up has less than `hopeless_probability` left."""
        if not ap.unbounded or ap.beta >= 1.0:
            return None
        if ap.beta == 0.0:
            return 0
        return int(math.floor(math.log(self.hopeless_probability) / math.log(ap.beta)))

    def race_once(self, ap: AttackParams, rng: np.random.Generator) -> RaceOutcome:
        self.model_service.validate_attack(ap)
        p_attacker = ap.beta / (1.0 + ap.beta)
        needed = self.honest_blocks(ap)

        honest = attacker = 0
        while honest < needed:
            if rng.random() < p_attacker:
                attacker += 1
            else:
                honest += 1

        deficit = needed - attacker
        hopeless = self.hopeless_deficit(ap)
        steps = 0
        while True:
            if deficit <= -1:
                return RaceOutcome(success=True)
            if ap.give_up is not None and deficit > ap.give_up:
                return RaceOutcome(success=False, gave_up=True)
            if hopeless is not None and deficit >= hopeless:
                return RaceOutcome(success=False)
            if steps >= self.step_cap:
                return RaceOutcome(success=False, capped=True)
            deficit += -1 if rng.random() < p_attacker else 1
            steps += 1

    def estimate(self, ap: AttackParams, trials: int, seed: int) -> AttackEstimate:
        """Success frequency over `trials` races; each batch of trials draws from its own substream."""
        self.model_service.validate_attack(ap)
        if trials < 1:
            raise ValueError(f"trials must be >= 1, got {trials}")

        batches = math.ceil(trials / self.batch_size)
        generators = spawn_generators(seed, batches)
        successes = gave_up = capped = 0
        for number, rng in enumerate(generators):
            size = min(self.batch_size, trials - number * self.batch_size)
            won, quit_, cut = self._race_batch(ap, size, rng)
            successes += won
            gave_up += quit_
            capped += cut
            logger.debug("attack batch %d/%d: %d successes of %d", number + 1, batches, won, size)

        if capped:
            logger.warning("%d races hit the step cap of %d and were counted as failures", capped, self.step_cap)
        failures = trials - successes
        estimate = AttackEstimate(
            p_hat=successes / trials,
            stderr=binomial_stderr(successes, trials),
            trials=trials,
            gave_up_fraction=gave_up / failures if failures else 0.0,
            capped=capped,
        )
        logger.info(
            "attack estimate beta=%g N=%d N_g=%s: p_hat=%.6g +- %.2g", ap.beta, ap.n_conf, ap.give_up, estimate.p_hat, estimate.stderr
        )
        return estimate

    def _race_batch(self, ap: AttackParams, size: int, rng: np.random.Generator) -> tuple[int, int, int]:
        p_attacker = ap.beta / (1.0 + ap.beta)
        needed = self.honest_blocks(ap)
        # attacker blocks before the needed honest blocks: negative binomial
        deficit = needed - rng.negative_binomial(needed, 1.0 - p_attacker, size=size).astype(np.int64)

        success = deficit <= -1
        gave_up = np.zeros(size, dtype=bool)
        active = ~success
        if ap.give_up is not None:
            gave_up = active & (deficit > ap.give_up)
            active &= ~gave_up
            success |= self._walk_bounded(deficit, active, ap.give_up, p_attacker, rng, gave_up)
        else:
            success |= self._walk_unbounded(deficit, active, p_attacker, self.hopeless_deficit(ap), rng)

        return int(success.sum()), int(gave_up.sum()), int(active.sum())

    def _walk_bounded(
        self,
        deficit: np.ndarray,
        active: np.ndarray,
        give_up: int,
        p_attacker: float,
        rng: np.random.Generator,
        gave_up: np.ndarray,
    ) -> np.ndarray:
        """Single-block steps in chunks until each walk leaves [0, give_up]; updates `active` and `gave_up` in place."""
        won = np.zeros(deficit.size, dtype=bool)
        steps = 0
        while active.any() and steps < self.step_cap:
            length = min(BOUNDED_CHUNK, self.step_cap - steps)
            idx = np.flatnonzero(active)
            moves = np.where(rng.random((idx.size, length)) < p_attacker, -1, 1)
            paths = deficit[idx, None] + np.cumsum(moves, axis=1)
            low = paths <= -1
            high = paths > give_up
            exited = low | high
            done = exited.any(axis=1)
            first = exited.argmax(axis=1)
            rows = np.arange(idx.size)
            won[idx[done & low[rows, first]]] = True
            gave_up[idx[done & high[rows, first]]] = True
            deficit[idx[~done]] = paths[~done, -1]
            active[idx[done]] = False
            steps += length
        return won

    def _walk_unbounded(
        self,
        deficit: np.ndarray,
        active: np.ndarray,
        p_attacker: float,
        hopeless: Optional[int],
        rng: np.random.Generator,
    ) -> np.ndarray:
        """Leaps of doubling length; within a leap the walk is resolved exactly.

        Given U attacker blocks among L steps the path is uniform over its
        arrangements, so by reflection at -1 the chance that a walk from d which
        ends at e >= 0 touched -1 is C(L, U - d - 1) / C(L, U).
        """
        won = np.zeros(deficit.size, dtype=bool)
        if hopeless is not None:
            active &= deficit < hopeless

        steps = 0
        length = 1
        while active.any() and steps < self.step_cap:
            length = min(length, self.step_cap - steps)
            idx = np.flatnonzero(active)
            start = deficit[idx]
            attacker = rng.binomial(length, p_attacker, size=idx.size)
            end = start + length - 2 * attacker

            crossed = end <= -1
            spare = attacker - start - 1
            reflectable = ~crossed & (spare >= 0)
            log_ratio = np.zeros(idx.size)
            a, m = attacker[reflectable], spare[reflectable]
            log_ratio[reflectable] = gammaln(a + 1) + gammaln(length - a + 1) - gammaln(m + 1) - gammaln(length - m + 1)
            touched_inside = reflectable & (rng.random(idx.size) < np.exp(log_ratio))
            touched = crossed | touched_inside

            won[idx[touched]] = True
            active[idx[touched]] = False
            deficit[idx[~touched]] = end[~touched]
            if hopeless is not None:
                active &= deficit < hopeless
            steps += length
            length *= 2
        return won


def get_attack_service() -> AttackService:
    return AttackService(
        get_model_service(),
        step_cap=settings.race_step_cap,
        batch_size=settings.race_batch_size,
        hopeless_probability=settings.race_hopeless_probability,
    )
