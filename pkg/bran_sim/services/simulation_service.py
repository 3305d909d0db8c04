import math
from collections import deque
from typing import Deque, List, Tuple

import numpy as np

from bran_sim.config.logging_config import logger
from bran_sim.config.settings import settings
from bran_sim.models.simulation import PhaseMeans, RejectionOrder, RequestTrace, SimConfig, SimCounts, SimStats
from bran_sim.services.model_service import ModelService, get_model_service
from bran_sim.utils.event_calendar import EventCalendar, EventType
from bran_sim.utils.random_streams import ExponentialStream, spawn_generators
from bran_sim.utils.statistics import batch_means_halfwidth


class SimulationService:
    """Event-driven simulation of the request pipeline.

    A request arrives, waits until a block takes it (up to k per block, oldest
    first), waits for N - 1 further blocks, then queues FIFO for one of s links.
    Blocks are mined at rate lambda_b whether or not anything is pending, so
    confirmations keep accruing at low load. Rejection events drop up to r
    pending requests, newest first unless configured otherwise.
    """

    def __init__(self, model_service: ModelService, batches: int = 32, min_reliable_samples: int = 1000):
        self.model_service = model_service
        self.batches = batches
        self.min_reliable_samples = min_reliable_samples

    def run(self, config: SimConfig) -> SimStats:
        return self.run_detailed(config)[0]

    def run_detailed(self, config: SimConfig) -> Tuple[SimStats, RequestTrace]:
        validated = self.model_service.validate(config.params)
        if not validated.batch_stable:
            logger.warning("parameters are not batch-stable, queues will grow over the run: %s", config.params)

        trace, completed, counts, horizon, areas = self._simulate(config)
        stats = self._summarise(config, trace, completed, counts, horizon, areas)
        logger.info(
            "simulation finished: arrived=%d serviced=%d rejected=%d horizon=%.6g",
            counts.arrived,
            counts.serviced,
            counts.rejected,
            horizon,
        )
        if not stats.reliable:
            logger.warning("only %d serviced requests after warm-up, statistics are unreliable", stats.samples)
        return stats, trace

    def _simulate(self, config: SimConfig) -> Tuple[RequestTrace, List[int], SimCounts, float, Tuple[float, float]]:
        params = config.params
        total = config.num_arrivals
        k, r, s, n_conf = params.k, params.r, params.s, params.n_conf
        newest_first = config.rejection_order is RejectionOrder.NEWEST

        nan = math.nan
        t_arrival = [nan] * total
        t_mined = [nan] * total
        t_confirmed = [nan] * total
        t_start = [nan] * total
        t_end = [nan] * total
        rejected = [False] * total
        block_height = [-1] * total

        arrival_rng, mining_rng, service_rng, reject_rng = spawn_generators(config.seed, 4)
        mining = ExponentialStream(mining_rng, params.lambda_b)
        service = ExponentialStream(service_rng, params.lambda_c)
        arrivals = ExponentialStream(arrival_rng, params.lambda_a) if params.lambda_a > 0 else None
        rejections = ExponentialStream(reject_rng, params.lambda_r) if params.lambda_r > 0 else None

        pending: Deque[int] = deque()
        unconfirmed: Deque[Tuple[int, List[int]]] = deque()  # (height that confirms the block, its requests)
        waiting: Deque[int] = deque()
        completed: List[int] = []
        busy = 0
        height = 0
        arrived = 0
        rejected_count = 0
        now = 0.0
        pending_area = 0.0
        service_area = 0.0

        if arrivals is None:
            empty = RequestTrace(
                t_arrival=np.empty(0),
                t_mined=np.empty(0),
                t_confirmed=np.empty(0),
                t_service_start=np.empty(0),
                t_service_end=np.empty(0),
                rejected=np.empty(0, dtype=bool),
                block_height=np.empty(0, dtype=int),
            )
            return empty, completed, SimCounts(), 0.0, (0.0, 0.0)

        calendar = EventCalendar()
        calendar.schedule(arrivals.next(), EventType.ARRIVAL)
        calendar.schedule(mining.next(), EventType.MINE)
        if rejections is not None:
            calendar.schedule(rejections.next(), EventType.REJECT)

        def start_service(req_id: int) -> None:
            nonlocal busy
            busy += 1
            t_start[req_id] = now
            calendar.schedule(now + service.next(), EventType.SERVICE_END, req_id)

        while calendar:
            time, _, event_type, payload = calendar.next_event()  # type: ignore[misc]
            elapsed = time - now
            pending_area += len(pending) * elapsed
            service_area += (len(waiting) + busy) * elapsed
            now = time

            if event_type is EventType.ARRIVAL:
                t_arrival[arrived] = now
                pending.append(arrived)
                arrived += 1
                if arrived < total:
                    calendar.schedule(now + arrivals.next(), EventType.ARRIVAL)

            elif event_type is EventType.MINE:
                height += 1
                block = [pending.popleft() for _ in range(min(len(pending), k))]
                for req_id in block:
                    t_mined[req_id] = now
                    block_height[req_id] = height
                if block:
                    unconfirmed.append((height + n_conf - 1, block))
                while unconfirmed and unconfirmed[0][0] <= height:
                    for req_id in unconfirmed.popleft()[1]:
                        t_confirmed[req_id] = now
                        if busy < s:
                            start_service(req_id)
                        else:
                            waiting.append(req_id)
                calendar.schedule(now + mining.next(), EventType.MINE)

            elif event_type is EventType.SERVICE_END:
                t_end[payload] = now
                completed.append(payload)
                busy -= 1
                if waiting:
                    start_service(waiting.popleft())

            elif event_type is EventType.REJECT:
                for _ in range(min(len(pending), r)):
                    req_id = pending.pop() if newest_first else pending.popleft()
                    rejected[req_id] = True
                    rejected_count += 1
                calendar.schedule(now + rejections.next(), EventType.REJECT)  # type: ignore[union-attr]

            if arrived == total:
                if not config.drain:
                    break
                if not pending and not unconfirmed and not waiting and busy == 0:
                    break

        trace = RequestTrace(
            t_arrival=np.asarray(t_arrival[:arrived]),
            t_mined=np.asarray(t_mined[:arrived]),
            t_confirmed=np.asarray(t_confirmed[:arrived]),
            t_service_start=np.asarray(t_start[:arrived]),
            t_service_end=np.asarray(t_end[:arrived]),
            rejected=np.asarray(rejected[:arrived], dtype=bool),
            block_height=np.asarray(block_height[:arrived], dtype=int),
        )
        counts = SimCounts(
            arrived=arrived,
            serviced=len(completed),
            rejected=rejected_count,
            in_flight=arrived - len(completed) - rejected_count,
        )
        return trace, completed, counts, now, (pending_area, service_area)

    def _summarise(
        self,
        config: SimConfig,
        trace: RequestTrace,
        completed: List[int],
        counts: SimCounts,
        horizon: float,
        areas: Tuple[float, float],
    ) -> SimStats:
        if horizon <= 0:
            return SimStats(counts=counts)

        pending_area, service_area = areas
        base = {
            "counts": counts,
            "horizon": horizon,
            "throughput": counts.serviced / horizon,
            "mean_pending": pending_area / horizon,
            "mean_service_queue": service_area / horizon,
        }

        # warm-up drops the earliest completions
        kept = np.asarray(completed[int(config.warmup_fraction * len(completed)) :], dtype=int)
        if kept.size == 0:
            return SimStats(**base)

        arrival = trace.t_arrival[kept]
        mined = trace.t_mined[kept]
        confirmed = trace.t_confirmed[kept]
        start = trace.t_service_start[kept]
        end = trace.t_service_end[kept]
        latency = start - arrival
        sojourn = end - arrival

        return SimStats(
            **base,
            mean_latency=float(latency.mean()),
            mean_sojourn=float(sojourn.mean()),
            phase_means=PhaseMeans(
                block_inclusion_wait=float((mined - arrival).mean()),
                confirmation_wait=float((confirmed - mined).mean()),
                service_queue_wait=float((start - confirmed).mean()),
                service_time=float((end - start).mean()),
            ),
            ci95_halfwidth=batch_means_halfwidth(latency, self.batches),
            sojourn_ci95_halfwidth=batch_means_halfwidth(sojourn, self.batches),
            samples=int(kept.size),
            reliable=kept.size >= self.min_reliable_samples,
        )


def get_simulation_service() -> SimulationService:
    return SimulationService(
        get_model_service(),
        batches=settings.batch_means_batches,
        min_reliable_samples=settings.min_reliable_samples,
    )
