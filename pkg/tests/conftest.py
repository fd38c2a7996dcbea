import hypothesis
import numpy as np
import pytest

import trackreplay as tr

hypothesis.settings.register_profile('ci', max_examples=50, deadline=None)
hypothesis.settings.register_profile('fast', max_examples=5, deadline=None)
hypothesis.settings.register_profile('dev', max_examples=20, deadline=None)
hypothesis.settings.load_profile('dev')


@pytest.fixture
def vehicle_params():
    return tr.vehicle.VehicleParams()

@pytest.fixture
def short_config():
    """Planner configuration with a short horizon that solves quickly."""
    return tr.planner.PlannerConfig(Np=10)

@pytest.fixture
def straight_trajectory(vehicle_params):
    """100 m straight at constant 5 m/s along +X inside the default area."""
    dt = 0.1
    n = 201
    states = [tr.vehicle.VehicleState(20.0 + 5.0 * dt * i, 35.0, 5.0) for i in range(n)]
    inputs = [tr.vehicle.ControlInput() for _ in range(n - 1)]
    return tr.planner.PlannedTrajectory(dt, states, inputs, params=vehicle_params)
