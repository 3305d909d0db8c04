import math
import warnings

import pytest

from bran_sim.exceptions.model_errors import InvalidParamError, UnstableError
from bran_sim.models.attack import AttackParams
from bran_sim.models.experiment import AxisScale, ExperimentConfig, Mode, ResultTable, RhoDefinition, SweepAxis, TrafficIntensity
from bran_sim.models.system import SystemParams
from bran_sim.services.experiment_service import SWEEP_CONFIRMATIONS_COLUMNS, SWEEP_RHO_COLUMNS


def _experiment(mode: Mode, **fields) -> ExperimentConfig:
    values = {
        "mode": mode,
        "params": SystemParams(lambda_a=0.5, lambda_b=1.0, lambda_c=1.0, s=2),
        "attack": AttackParams(beta=0.3),
        "k_values": [1, 10],
        "n_values": [1, 3],
        "rho_values": [0.3, 0.8],
        "ng_values": [None],
        "trials": 20_000,
        "num_arrivals": 3_000,
    }
    values.update(fields)
    return ExperimentConfig(**values)


def test_sweep_axis_values():
    assert SweepAxis(variable="rho", start=0.1, stop=0.5, points=5).values() == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
    assert SweepAxis(variable="beta", start=0.01, stop=1.0, points=3, scale=AxisScale.LOG).values() == pytest.approx([0.01, 0.1, 1.0])

    with pytest.raises(ValueError):
        SweepAxis(variable="rho", start=0.5, stop=0.1, points=5)
    with pytest.raises(ValueError):
        SweepAxis(variable="rho", start=0.1, stop=0.5, points=1)


def test_traffic_intensity_rescales_arrivals():
    params = SystemParams(lambda_a=0.0, lambda_b=2.0, lambda_c=0.5, s=4)

    assert TrafficIntensity(rho=0.25).apply(params).lambda_a == pytest.approx(0.5)
    assert TrafficIntensity(rho=0.25, definition=RhoDefinition.SERVICE).apply(params).lambda_a == pytest.approx(0.5)
    assert TrafficIntensity(rho=0.5).apply(params).lambda_b == 2.0


def test_analytic_row(experiment_service):
    table = experiment_service.run_experiment(_experiment(Mode.ANALYTIC))

    assert len(table.rows) == 1
    assert table.column("tau1") == [pytest.approx(2.0)]
    assert table.column("lower") == [pytest.approx(1.0)]
    assert table.column("analytic_stable") == [True]


def test_analytic_refuses_unstable(experiment_service):
    config = _experiment(Mode.ANALYTIC, params=SystemParams(lambda_a=2.0, lambda_b=1.0, lambda_c=1.0, s=4))

    with pytest.raises(UnstableError, match="lambda_a >= lambda_b"):
        experiment_service.run_experiment(config)


def test_steady_state_row(experiment_service):
    table = experiment_service.run_experiment(_experiment(Mode.STEADY_STATE))

    assert table.column("e_i") == [pytest.approx(1.0, abs=1e-6)]
    assert table.column("boundary_mass")[0] < 1e-8


def test_simulation_row_keeps_trace(experiment_service):
    table = experiment_service.run_experiment(_experiment(Mode.SIMULATE))

    assert table.column("arrived") == [3_000]
    assert table.column("in_flight") == [0]
    assert len(experiment_service.last_trace) == 3_000


def test_sweep_attack_rows(experiment_service, analytic_service):
    config = _experiment(
        Mode.SWEEP_ATTACK,
        sweep=SweepAxis(variable="beta", start=0.05, stop=1.0, points=20),
        n_values=[1, 3],
        ng_values=[None, 2],
    )
    table = experiment_service.run_experiment(config)

    assert table.columns == ["beta", "N", "Ng", "analytic_S", "mc_p_hat", "mc_stderr"]
    assert len(table.rows) == 20 * 2 * 2
    anchor = [row for row in table.rows if abs(row[0] - 0.1) < 1e-9 and row[1] == 1 and row[2] == "unbounded"]
    assert anchor[0][3] == pytest.approx(0.025620, abs=1e-6)
    assert table.rows[0][3] == pytest.approx(0.0069161, abs=2e-6)
    # analytic cells are reproducible from the row parameters
    for beta, n_conf, _, analytic_s, _, _ in table.rows[::7]:
        assert analytic_s == analytic_service.attack_probability(AttackParams(beta=beta, n_conf=n_conf))


def test_sweep_rho_rows(experiment_service):
    config = _experiment(Mode.SWEEP_RHO, sweep=SweepAxis(variable="rho", start=0.2, stop=0.8, points=3))
    table = experiment_service.run_experiment(config)

    assert table.columns == SWEEP_RHO_COLUMNS
    assert table.column("k") == [1, 10, 1, 10, 1, 10]
    upper = [row[2] for row in table.rows if row[1] == 1]
    assert upper == sorted(upper)


def test_sweep_rho_leaves_unstable_cells_empty(experiment_service):
    config = _experiment(
        Mode.SWEEP_RHO,
        sweep=SweepAxis(variable="rho", start=0.2, stop=0.8, points=2),
        rho_definition=RhoDefinition.SERVICE,
        k_values=[4],
        num_arrivals=500,
    )
    table = experiment_service.run_experiment(config)

    # rho = 0.8 of two links puts lambda_a = 1.6 above lambda_b
    assert table.rows[0][2] is not None
    assert table.rows[1][2] is None
    assert table.rows[1][3] is None
    assert table.rows[1][4] is not None


def test_sweep_confirmations_tau_t_slope(experiment_service):
    config = _experiment(
        Mode.SWEEP_CONFIRMATIONS,
        params=SystemParams(lambda_a=0.0, lambda_b=0.5, lambda_c=1.0, s=2),
        sweep=SweepAxis(variable="n_conf", start=1, stop=4, points=4),
        rho_values=[0.3],
    )
    table = experiment_service.run_experiment(config)

    assert table.columns == SWEEP_CONFIRMATIONS_COLUMNS
    assert table.column("N") == [1, 2, 3, 4]
    tau_t = table.column("analytic_tau_t")
    assert all(later - earlier == pytest.approx(2.0, abs=1e-12) for earlier, later in zip(tau_t, tau_t[1:]))


def test_sweep_is_deterministic(experiment_service):
    config = _experiment(Mode.SWEEP_RHO, sweep=SweepAxis(variable="rho", start=0.2, stop=0.6, points=2), num_arrivals=1_000)

    assert experiment_service.run_experiment(config) == experiment_service.run_experiment(config)


def test_worker_pool_keeps_grid_order(experiment_service):
    config = _experiment(Mode.SWEEP_ATTACK, sweep=SweepAxis(variable="beta", start=0.1, stop=0.9, points=3), trials=5_000)

    sequential = experiment_service.run_experiment(config)
    pooled = experiment_service.run_experiment(config.model_copy(update={"workers": 2}))

    assert pooled == sequential


def test_conventional_row_drops_rejections(experiment_service):
    config = _experiment(Mode.SWEEP_RHO, params=SystemParams(lambda_a=0.0, lambda_b=1.0, lambda_c=1.0, s=2, lambda_r=0.2, r=2))

    conventional = experiment_service.rho_point_params(config, 0.5, 1)
    batched = experiment_service.rho_point_params(config, 0.5, 10)

    assert (conventional.k, conventional.lambda_r, conventional.lambda_a) == (1, 0.0, 0.5)
    assert (batched.k, batched.lambda_r, batched.lambda_a) == (10, 0.2, 0.5)


def test_out_of_range_traffic_intensity_is_invalid(experiment_service):
    config = _experiment(Mode.SWEEP_RHO, sweep=SweepAxis(variable="rho", start=0.5, stop=1.0, points=2))

    with pytest.raises(InvalidParamError) as exc_info:
        experiment_service.run_experiment(config)
    assert exc_info.value.name == "rho"


def test_result_columns_follow_report_fields(experiment_service):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        analytic = experiment_service.run_experiment(_experiment(Mode.ANALYTIC))
    steady = experiment_service.run_experiment(_experiment(Mode.STEADY_STATE))

    assert analytic.columns[5:12] == ["tau1", "tau2", "tau3", "tau_s", "tau_t", "upper", "lower"]
    assert steady.columns[:4] == ["e_i", "e_j", "little_latency", "boundary_mass"]


@pytest.mark.slow
def test_simulated_latency_non_decreasing_in_rho(experiment_service):
    config = _experiment(
        Mode.SWEEP_RHO,
        sweep=SweepAxis(variable="rho", start=0.1, stop=0.95, points=4),
        k_values=[1, 5, 10],
        num_arrivals=200_000,
    )
    table = experiment_service.run_experiment(config)

    for k in (1, 5, 10):
        curve = [(row[4], row[5]) for row in table.rows if row[1] == k]
        assert len(curve) == 4
        for (earlier, earlier_ci), (later, later_ci) in zip(curve, curve[1:]):
            assert later >= earlier - 3 * math.hypot(earlier_ci, later_ci)


@pytest.mark.slow
def test_conventional_latency_highest_for_every_confirmation_depth(experiment_service):
    def sweep(k: int) -> ResultTable:
        config = _experiment(
            Mode.SWEEP_CONFIRMATIONS,
            params=SystemParams(lambda_a=0.0, lambda_b=1.0, lambda_c=1.0, s=2, k=k),
            sweep=SweepAxis(variable="n_conf", start=1, stop=4, points=4),
            rho_values=[0.3, 0.8],
            num_arrivals=200_000,
        )
        return experiment_service.run_experiment(config)

    conventional, batched = sweep(1), sweep(10)

    for table in (conventional, batched):
        for rho in (0.3, 0.8):
            latencies = [row[3] for row in table.rows if row[1] == rho]
            assert latencies == sorted(latencies)
    for slow, fast in zip(conventional.rows, batched.rows):
        assert slow[:2] == fast[:2]
        if slow[1] == 0.8:
            assert slow[3] - fast[3] > 3 * math.hypot(slow[4], fast[4])
