import pytest

from bran_sim.models.system import SystemParams
from bran_sim.services.analytic_service import AnalyticService
from bran_sim.services.attack_service import AttackService
from bran_sim.services.chain_service import ChainService
from bran_sim.services.experiment_service import ExperimentService
from bran_sim.services.model_service import ModelService
from bran_sim.services.simulation_service import SimulationService


@pytest.fixture
def model_service() -> ModelService:
    return ModelService()


@pytest.fixture
def analytic_service(model_service: ModelService) -> AnalyticService:
    return AnalyticService(model_service)


@pytest.fixture
def chain_service(model_service: ModelService) -> ChainService:
    return ChainService(model_service)


@pytest.fixture
def simulation_service(model_service: ModelService) -> SimulationService:
    return SimulationService(model_service)


@pytest.fixture
def attack_service(model_service: ModelService) -> AttackService:
    return AttackService(model_service)


@pytest.fixture
def experiment_service(
    model_service: ModelService,
    analytic_service: AnalyticService,
    chain_service: ChainService,
    simulation_service: SimulationService,
    attack_service: AttackService,
) -> ExperimentService:
    return ExperimentService(model_service, analytic_service, chain_service, simulation_service, attack_service)


@pytest.fixture
def conventional_params() -> SystemParams:
    # k=1, no rejections: every closed-form term applies
    return SystemParams(lambda_a=1.0, lambda_b=2.0, lambda_c=1.0, s=2, n_conf=2)
