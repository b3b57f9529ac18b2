import json

import numpy as np
import pytest

from deadbeat import REGISTRY, get_system
from deadbeat.errors import (DeadbeatError, DimensionMismatch,
                             EquilibriumViolation, NonFiniteResult)
from deadbeat.systems import (linear_system, load_system_file, resolve_system,
                              system_from_definition)

from helpers import deadbeat_solve_2step


def test_registry_contents():
    assert set(REGISTRY) == {"scalar-integrator", "double-integrator",
                             "cubic-contraction", "square-sum"}


def test_equilibrium_holds_for_every_registered_model():
    for model in REGISTRY.values():
        origin = model.evaluate(np.zeros(model.n), np.zeros(model.m))
        assert np.linalg.norm(origin) <= 1e-12


def test_evaluate_examples():
    scalar = get_system("scalar-integrator")
    assert scalar.evaluate([0.0], [0.0]).tolist() == [0.0]

    dint = get_system("double-integrator")
    # (1*1 + 1*0 + 0.5*0, 0*1 + 1*0 + 1*0) = (1, 0)
    assert dint.evaluate([1.0, 0.0], [0.0]).tolist() == [1.0, 0.0]

    cubic = get_system("cubic-contraction")
    assert cubic.evaluate([1.0], [0.0]).tolist() == [0.5]


def test_evaluate_rejects_wrong_dimensions():
    dint = get_system("double-integrator")
    with pytest.raises(DimensionMismatch):
        dint.evaluate([1.0], [0.0])
    with pytest.raises(DimensionMismatch):
        dint.evaluate([1.0, 0.0], [0.0, 0.0])


def test_evaluate_batch_matches_pointwise():
    rng = np.random.default_rng(7)
    for model in REGISTRY.values():
        xs = rng.uniform(model.state_box[:, 0], model.state_box[:, 1],
                         size=(64, model.n))
        us = rng.uniform(model.input_box[:, 0], model.input_box[:, 1],
                         size=(64, model.m))
        batch = model.evaluate_batch(xs, us)
        rows = np.array([model.evaluate(xs[i], us[i]) for i in range(64)])
        assert np.array_equal(batch, rows)


def test_flow_one_step_cancel():
    scalar = get_system("scalar-integrator")
    traj = scalar.flow([1.0], [[-1.0]])
    assert traj.states.tolist() == [[1.0], [0.0]]
    assert len(traj) == 1


def test_flow_two_step_deadbeat_reaches_origin_exactly():
    dint = get_system("double-integrator")
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    B = np.array([[0.5], [1.0]])
    u = deadbeat_solve_2step(A, B, [1.0, 0.0])
    assert np.allclose(u, [-1.0, 1.0])
    traj = dint.flow([1.0, 0.0], u.reshape(2, 1))
    assert traj.states[-1].tolist() == [0.0, 0.0]


def test_flow_empty_inputs():
    scalar = get_system("scalar-integrator")
    traj = scalar.flow([0.3], [])
    assert traj.states.tolist() == [[0.3]]
    assert traj.inputs.shape == (0, 1)


def test_flow_replay_invariant():
    rng = np.random.default_rng(3)
    for model in REGISTRY.values():
        x0 = rng.uniform(model.state_box[:, 0] / 2, model.state_box[:, 1] / 2)
        inputs = rng.uniform(model.input_box[:, 0] / 2, model.input_box[:, 1] / 2,
                             size=(6, model.m))
        traj = model.flow(x0, inputs)
        for t in range(6):
            replay = model.evaluate(traj.states[t], traj.inputs[t])
            assert np.array_equal(replay, traj.states[t + 1])


def test_flow_reports_offending_step():
    bad = system_from_definition({
        "name": "pole", "n": 1, "m": 1, "f": ["x1/(x1 - 0.5) - 0*u1"],
        "state_box": [[-1, 1]], "input_box": [[-1, 1]]})
    with pytest.raises(NonFiniteResult) as err:
        bad.flow([0.5], [[0.0]])  # x = 0.5 divides by zero at the first step
    assert "step 0" in str(err.value)


def test_parsed_models_match_hand_coded_dynamics():
    rng = np.random.default_rng(11)
    for model in REGISTRY.values():
        parsed = system_from_definition({
            "name": model.name, "n": model.n, "m": model.m,
            "f": list(model.expressions),
            "state_box": model.state_box.tolist(),
            "input_box": model.input_box.tolist()})
        xs = rng.uniform(model.state_box[:, 0], model.state_box[:, 1],
                         size=(1000, model.n))
        us = rng.uniform(model.input_box[:, 0], model.input_box[:, 1],
                         size=(1000, model.m))
        diff = np.abs(parsed.evaluate_batch(xs, us) - model.evaluate_batch(xs, us))
        assert diff.max() <= 1e-14


def test_equilibrium_violation_rejected():
    with pytest.raises(EquilibriumViolation):
        system_from_definition({
            "name": "shifted", "n": 1, "m": 1, "f": ["x1 + 1"],
            "state_box": [[-1, 1]], "input_box": [[-1, 1]]})


def test_boxes_must_contain_origin_interior():
    with pytest.raises(DeadbeatError):
        linear_system("bad", [[1.0]], [[1.0]], [[0.0, 1.0]], [[-1.0, 1.0]])
    with pytest.raises(DeadbeatError):
        linear_system("bad", [[1.0]], [[1.0]], [[-1.0, 1.0]], [[0.5, 1.0]])


def test_definition_file_round_trip(tmp_path):
    path = tmp_path / "sys.json"
    path.write_text(json.dumps({
        "name": "saturating", "n": 1, "m": 1,
        "f": ["tanh(x1) + u1"],
        "state_box": [[-2, 2]], "input_box": [[-1, 1]]}))
    model = load_system_file(str(path))
    assert model.name == "saturating"
    assert model.evaluate([0.5], [0.1]) == pytest.approx([np.tanh(0.5) + 0.1])
    assert resolve_system(str(path)).name == "saturating"


def test_resolve_system_errors():
    assert resolve_system("square-sum").name == "square-sum"
    with pytest.raises(DeadbeatError):
        resolve_system("no-such-system")


def test_definition_rejects_wrong_expression_count():
    with pytest.raises(DeadbeatError):
        system_from_definition({
            "name": "short", "n": 2, "m": 1, "f": ["x1 + u1"],
            "state_box": [[-1, 1], [-1, 1]], "input_box": [[-1, 1]]})
