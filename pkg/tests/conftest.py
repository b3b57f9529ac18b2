import numpy as np
import pytest

from deadbeat import Grid, build_input_set, compute_layers, get_system, synthesize

# Acceptance-scale setups, cached per session because layers/tables are
# reused by many tests.


@pytest.fixture(scope="session")
def scalar_setup():
    model = get_system("scalar-integrator")
    grid = Grid(box=model.state_box, cells_per_dim=[41])
    inputs = build_input_set(model.input_box, [21])
    epsilon = 0.05
    layers = compute_layers(model, grid, inputs, epsilon)
    table = synthesize(layers, model, grid, inputs)
    return model, grid, inputs, epsilon, layers, table


@pytest.fixture(scope="session")
def dint_setup():
    model = get_system("double-integrator")
    grid = Grid(box=model.state_box, cells_per_dim=[41, 41])
    inputs = build_input_set(model.input_box, [41])
    epsilon = 0.1
    layers = compute_layers(model, grid, inputs, epsilon)
    table = synthesize(layers, model, grid, inputs)
    return model, grid, inputs, epsilon, layers, table


@pytest.fixture(scope="session")
def sqsum_setup():
    model = get_system("square-sum")
    grid = Grid(box=model.state_box, cells_per_dim=[41])
    inputs = build_input_set(model.input_box, [21])
    epsilon = 0.05
    layers = compute_layers(model, grid, inputs, epsilon)
    table = synthesize(layers, model, grid, inputs)
    return model, grid, inputs, epsilon, layers, table


@pytest.fixture(scope="session")
def cubic_setup():
    model = get_system("cubic-contraction")
    grid = Grid(box=model.state_box, cells_per_dim=[41])
    inputs = build_input_set(model.input_box, [21])
    epsilon = 0.05
    layers = compute_layers(model, grid, inputs, epsilon)
    table = synthesize(layers, model, grid, inputs)
    return model, grid, inputs, epsilon, layers, table
