from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from bran_sim.config.logging_config import logger
from bran_sim.exceptions.model_errors import InvalidParamError, UnstableError
from bran_sim.models.attack import AttackParams
from bran_sim.models.chain import ChainMetrics
from bran_sim.models.experiment import Cell, ExperimentConfig, Mode, ResultTable, TrafficIntensity
from bran_sim.models.latency import LatencyReport
from bran_sim.models.simulation import RequestTrace, SimConfig
from bran_sim.models.system import SystemParams
from bran_sim.services.analytic_service import AnalyticService, get_analytic_service
from bran_sim.services.attack_service import AttackService, get_attack_service
from bran_sim.services.chain_service import ChainService, get_chain_service
from bran_sim.services.model_service import ModelService, get_model_service
from bran_sim.services.simulation_service import SimulationService, get_simulation_service
from bran_sim.utils.random_streams import derive_seed

SWEEP_RHO_COLUMNS = ["rho", "k", "analytic_upper", "analytic_lower", "sim_mean_latency", "sim_ci95"]
SWEEP_CONFIRMATIONS_COLUMNS = ["N", "rho", "analytic_tau_t", "sim_mean_latency", "sim_ci95"]
ATTACK_COLUMNS = ["beta", "N", "Ng", "analytic_S", "mc_p_hat", "mc_stderr"]


def give_up_label(give_up: Optional[int]) -> Cell:
    return "unbounded" if give_up is None else give_up


def _rho_point(task: Tuple[float, SystemParams, SimConfig]) -> List[Cell]:
    rho, params, sim_config = task
    analytic = get_analytic_service()
    try:
        report = analytic.latency_report(params)
        upper, lower = report.upper, report.lower
    except UnstableError:
        upper = lower = None
    stats = get_simulation_service().run(sim_config)
    return [rho, params.k, upper, lower, stats.mean_latency, stats.ci95_halfwidth]


def _confirmations_point(task: Tuple[float, SystemParams, SimConfig]) -> List[Cell]:
    rho, params, sim_config = task
    try:
        tau_t: Optional[float] = get_analytic_service().latency_report(params).tau_t
    except UnstableError:
        tau_t = None
    stats = get_simulation_service().run(sim_config)
    return [params.n_conf, rho, tau_t, stats.mean_latency, stats.ci95_halfwidth]


def _attack_point(task: Tuple[AttackParams, int, int]) -> List[Cell]:
    ap, trials, seed = task
    analytic_s = get_analytic_service().attack_probability(ap)
    estimate = get_attack_service().estimate(ap, trials, seed)
    return [ap.beta, ap.n_conf, give_up_label(ap.give_up), analytic_s, estimate.p_hat, estimate.stderr]


class ExperimentService:
    """Runs one experiment mode and returns its rows in deterministic order."""

    def __init__(
        self,
        model_service: ModelService,
        analytic_service: AnalyticService,
        chain_service: ChainService,
        simulation_service: SimulationService,
        attack_service: AttackService,
    ):
        self.model_service = model_service
        self.analytic_service = analytic_service
        self.chain_service = chain_service
        self.simulation_service = simulation_service
        self.attack_service = attack_service
        self.last_trace: Optional[RequestTrace] = None

    def run_experiment(self, config: ExperimentConfig) -> ResultTable:
        logger.info("running %s experiment (seed=%d)", config.mode.value, config.seed)
        # invalid parameters fail here, before any grid point reaches a worker process
        self.model_service.validate(config.params)
        self.model_service.validate_attack(config.attack)
        runners = {
            Mode.ANALYTIC: self.run_analytic,
            Mode.STEADY_STATE: self.run_steady_state,
            Mode.SIMULATE: self.run_simulation,
            Mode.ATTACK: self.run_attack,
            Mode.SWEEP_RHO: self.sweep_rho,
            Mode.SWEEP_CONFIRMATIONS: self.sweep_confirmations,
            Mode.SWEEP_ATTACK: self.sweep_attack,
        }
        return runners[config.mode](config)

    def run_analytic(self, config: ExperimentConfig) -> ResultTable:
        params = config.params
        validated = self.model_service.validate(params)
        report = self.analytic_service.latency_report(params)
        columns = ["lambda_a", "lambda_b", "lambda_c", "s", "n_conf", *LatencyReport.model_fields, "analytic_stable", "batch_stable"]
        row: List[Cell] = [params.lambda_a, params.lambda_b, params.lambda_c, params.s, params.n_conf]
        row += list(report.model_dump().values())
        row += [validated.analytic_stable, validated.batch_stable]
        return ResultTable(columns=columns, rows=[row])

    def run_steady_state(self, config: ExperimentConfig) -> ResultTable:
        ss, metrics = self.chain_service.solve_adaptive(config.params)
        columns = [*ChainMetrics.model_fields, "i_max", "j_max", "residual"]
        row: List[Cell] = list(metrics.model_dump().values())
        row += [ss.space.i_max, ss.space.j_max, ss.residual]
        return ResultTable(columns=columns, rows=[row])

    def run_simulation(self, config: ExperimentConfig) -> ResultTable:
        stats, trace = self.simulation_service.run_detailed(self._sim_config(config, config.params, config.seed))
        self.last_trace = trace
        phases = stats.phase_means
        columns = [
            "mean_latency",
            "ci95",
            "mean_sojourn",
            "sojourn_ci95",
            "block_inclusion_wait",
            "confirmation_wait",
            "service_queue_wait",
            "service_time",
            "arrived",
            "serviced",
            "rejected",
            "in_flight",
            "throughput",
            "mean_pending",
            "mean_service_queue",
            "reliable",
        ]
        row: List[Cell] = [stats.mean_latency, stats.ci95_halfwidth, stats.mean_sojourn, stats.sojourn_ci95_halfwidth]
        if phases is None:
            row += [None] * 4
        else:
            row += [phases.block_inclusion_wait, phases.confirmation_wait, phases.service_queue_wait, phases.service_time]
        counts = stats.counts
        row += [counts.arrived, counts.serviced, counts.rejected, counts.in_flight]
        row += [stats.throughput, stats.mean_pending, stats.mean_service_queue, stats.reliable]
        return ResultTable(columns=columns, rows=[row])

    def run_attack(self, config: ExperimentConfig) -> ResultTable:
        # a single race point keeps the sweep-attack columns
        return ResultTable(columns=ATTACK_COLUMNS, rows=[_attack_point((config.attack, config.trials, config.seed))])

    def sweep_rho(self, config: ExperimentConfig) -> ResultTable:
        tasks = []
        for rho in self._axis(config, "rho"):
            for k in config.k_values:
                params = self.rho_point_params(config, rho, k)
                tasks.append((rho, params, self._sim_config(config, params, derive_seed(config.seed, len(tasks)))))
        return ResultTable(columns=SWEEP_RHO_COLUMNS, rows=self._evaluate(_rho_point, tasks, config.workers))

    def sweep_confirmations(self, config: ExperimentConfig) -> ResultTable:
        tasks = []
        for n_conf in self._integer_axis(config, "n_conf"):
            for rho in config.rho_values:
                params = self._at_rho(config, config.params.model_copy(update={"n_conf": n_conf}), rho)
                tasks.append((rho, params, self._sim_config(config, params, derive_seed(config.seed, len(tasks)))))
        return ResultTable(columns=SWEEP_CONFIRMATIONS_COLUMNS, rows=self._evaluate(_confirmations_point, tasks, config.workers))

    def sweep_attack(self, config: ExperimentConfig) -> ResultTable:
        tasks = []
        for beta in self._axis(config, "beta"):
            for n_conf in config.n_values:
                for give_up in config.ng_values:
                    ap = config.attack.model_copy(update={"beta": beta, "n_conf": n_conf, "give_up": give_up})
                    self.model_service.validate_attack(ap)
                    tasks.append((ap, config.trials, derive_seed(config.seed, len(tasks))))
        return ResultTable(columns=ATTACK_COLUMNS, rows=self._evaluate(_attack_point, tasks, config.workers))

    def _evaluate(self, point: Callable[[Any], List[Cell]], tasks: Sequence[Any], workers: int) -> List[List[Cell]]:
        """Evaluate grid points, in a process pool when workers > 1; rows keep grid order."""
        logger.info("evaluating %d grid points with %d worker(s)", len(tasks), workers)
        if workers <= 1:
            return [point(task) for task in tasks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(point, tasks))

    def _axis(self, config: ExperimentConfig, variable: str) -> List[float]:
        if config.sweep is None:
            raise ValueError(f"{config.mode.value} needs a sweep axis")
        if config.sweep.variable != variable:
            raise ValueError(f"{config.mode.value} sweeps '{variable}', not '{config.sweep.variable}'")
        return config.sweep.values()

    def _integer_axis(self, config: ExperimentConfig, variable: str) -> List[int]:
        values: List[int] = []
        for value in self._axis(config, variable):
            rounded = int(round(value))
            if rounded not in values:
                values.append(rounded)
        return values

    def rho_point_params(self, config: ExperimentConfig, rho: float, k: int) -> SystemParams:
        """Parameters of one sweep-rho point; the k = 1 row is the conventional model."""
        params = config.params.model_copy(update={"k": k})
        if k == 1:
            params = self.model_service.conventional(params)
        return self._at_rho(config, params, rho)

    def _at_rho(self, config: ExperimentConfig, params: SystemParams, rho: float) -> SystemParams:
        try:
            return TrafficIntensity(rho=rho, definition=config.rho_definition).apply(params)
        except ValidationError as exc:
            raise InvalidParamError("rho", f"traffic intensity must lie in [0, 1), got {rho}") from exc

    def _sim_config(self, config: ExperimentConfig, params: SystemParams, seed: int) -> SimConfig:
        return SimConfig(
            params=params,
            num_arrivals=config.num_arrivals,
            warmup_fraction=config.warmup_fraction,
            seed=seed,
            rejection_order=config.rejection_order,
        )


def get_experiment_service() -> ExperimentService:
    return ExperimentService(
        get_model_service(),
        get_analytic_service(),
        get_chain_service(),
        get_simulation_service(),
        get_attack_service(),
    )
