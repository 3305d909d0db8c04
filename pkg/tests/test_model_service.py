import logging

import pytest

from bran_sim.exceptions.model_errors import InvalidParamError
from bran_sim.models.attack import AttackParams
from bran_sim.models.system import SystemParams, SystemState, TransitionKind


def test_validate_stable_conventional(model_service):
    params = SystemParams(lambda_a=1.0, lambda_b=2.0, lambda_c=1.0, s=2)
    validated = model_service.validate(params)

    assert validated.params == params
    assert validated.analytic_stable
    assert validated.batch_stable


def test_validate_flags_boundary_as_unstable(model_service):
    validated = model_service.validate(SystemParams(lambda_a=2.0, lambda_b=2.0, lambda_c=1.0, s=4))

    assert not validated.analytic_stable


def test_validate_batch_stable_beyond_analytic_region(model_service):
    # a 10-request block drains the block queue although lambda_a > lambda_b
    validated = model_service.validate(SystemParams(lambda_a=3.0, lambda_b=1.0, lambda_c=1.0, s=4, k=10))

    assert not validated.analytic_stable
    assert validated.batch_stable


def test_validate_logs_unstable_parameters(model_service, caplog):
    logger = logging.getLogger("bran_sim")
    logger.addHandler(caplog.handler)
    try:
        with caplog.at_level(logging.WARNING, logger="bran_sim"):
            model_service.validate(SystemParams(lambda_a=1.0, lambda_b=2.0, lambda_c=1.0, s=2))
            assert caplog.records == []
            model_service.validate(SystemParams(lambda_a=3.0, lambda_b=1.0, lambda_c=1.0, s=2))
    finally:
        logger.removeHandler(caplog.handler)

    messages = [record.getMessage() for record in caplog.records]
    assert any("closed-form region" in message for message in messages)
    assert any("grow without bound" in message for message in messages)


@pytest.mark.parametrize(
    "update, name",
    [
        ({"lambda_b": 0.0}, "lambda_b"),
        ({"lambda_c": 0.0}, "lambda_c"),
        ({"lambda_a": -1.0}, "lambda_a"),
        ({"lambda_r": float("inf")}, "lambda_r"),
        ({"k": 0}, "k"),
        ({"s": 0}, "s"),
        ({"n_conf": 0}, "n_conf"),
    ],
)
def test_validate_rejects_invalid(model_service, update, name):
    params = SystemParams(lambda_a=1.0, lambda_b=2.0, lambda_c=1.0).model_copy(update=update)

    with pytest.raises(InvalidParamError) as exc_info:
        model_service.validate(params)

    assert exc_info.value.name == name


def test_validate_attack(model_service):
    assert model_service.validate_attack(AttackParams(beta=0.3, n_conf=2, give_up=4)).give_up == 4

    with pytest.raises(InvalidParamError):
        model_service.validate_attack(AttackParams(beta=-0.1))
    with pytest.raises(InvalidParamError):
        model_service.validate_attack(AttackParams(beta=0.1, give_up=0))


def test_transitions_empty_system_only_arrives(model_service):
    moves = model_service.transitions(SystemState(i=0, j=0), SystemParams(lambda_a=1.0, lambda_b=2.0, lambda_c=1.0, lambda_r=0.5))

    assert len(moves) == 1
    assert moves[0].kind is TransitionKind.ARRIVAL
    assert moves[0].target == SystemState(i=1, j=0)
    assert moves[0].rate == 1.0


def test_transitions_all_kinds(model_service):
    params = SystemParams(lambda_a=1.0, lambda_b=2.0, lambda_c=3.0, lambda_r=0.25, k=3, r=1, s=4)
    moves = model_service.transitions(SystemState(i=5, j=2), params)

    assert [(m.kind, m.target.i, m.target.j, m.rate) for m in moves] == [
        (TransitionKind.ARRIVAL, 6, 2, 1.0),
        (TransitionKind.MINE, 2, 5, 2.0),
        (TransitionKind.SERVICE, 5, 1, 6.0),
        (TransitionKind.REJECT, 4, 2, 0.25),
    ]


def test_transitions_small_queue_mined_and_rejected_whole(model_service):
    params = SystemParams(lambda_a=1.0, lambda_b=2.0, lambda_c=1.0, lambda_r=0.5, k=5, r=3, s=1)
    targets = {m.kind: m.target for m in model_service.transitions(SystemState(i=2, j=1), params)}

    assert targets[TransitionKind.MINE] == SystemState(i=0, j=3)
    assert targets[TransitionKind.REJECT] == SystemState(i=0, j=1)


def test_transitions_never_self_loop(model_service):
    params = SystemParams(lambda_a=0.7, lambda_b=1.0, lambda_c=0.5, lambda_r=0.2, k=2, r=2, s=2)
    for i in range(4):
        for j in range(4):
            state = SystemState(i=i, j=j)
            assert all(m.target != state and m.rate > 0 for m in model_service.transitions(state, params))


def test_step_probabilities_sum_to_one(model_service):
    params = SystemParams(lambda_a=1.0, lambda_b=2.0, lambda_c=1.0, lambda_r=0.5, k=2, s=2)
    steps = model_service.step_probabilities(SystemState(i=3, j=3), params, 0.1)

    assert sum(step.probability for step in steps) == pytest.approx(1.0, abs=1e-12)
    assert steps[-1].kind is None
    assert steps[-1].probability == pytest.approx(1.0 - 0.1 * (1.0 + 2.0 + 2.0 + 0.5))


def test_step_probabilities_reject_large_step(model_service):
    params = SystemParams(lambda_a=1.0, lambda_b=2.0, lambda_c=1.0)

    with pytest.raises(InvalidParamError):
        model_service.step_probabilities(SystemState(i=1, j=1), params, 0.5)
    with pytest.raises(InvalidParamError):
        model_service.step_probabilities(SystemState(i=1, j=1), params, 0.0)


def test_conventional_drops_batching_and_rejection(model_service):
    params = SystemParams(lambda_a=1.0, lambda_b=2.0, lambda_c=1.0, lambda_r=0.5, k=10)
    baseline = model_service.conventional(params)

    assert baseline.k == 1
    assert baseline.lambda_r == 0.0
    assert baseline.lambda_b == params.lambda_b
