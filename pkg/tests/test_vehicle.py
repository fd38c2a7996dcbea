import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import trackreplay as tr
from trackreplay import vehicle
from trackreplay.vehicle import ControlInput, VehicleParams, VehicleState


# parameters of the worked examples, stated explicitly
EXAMPLE_PARAMS = VehicleParams(m=1500.0, Izz=2500.0, lf=1.2, lr=1.5, C_alpha_f=80000.0, C_alpha_r=80000.0)


def fine_step(state, u, dt, params, substeps=100):
    for _ in range(substeps):
        state = vehicle.step(state, u, dt / substeps, params)
    return state


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        VehicleParams(m=0.0)
    with pytest.raises(ValueError):
        VehicleParams(C_alpha_r=-1.0)

def test_state_must_be_finite():
    with pytest.raises(ValueError):
        VehicleState(vx=math.nan)

def test_tire_forces_straight():
    forces = vehicle.tire_forces(VehicleState(vx=10.0), EXAMPLE_PARAMS)
    assert forces.alpha_f == 0.0
    assert forces.alpha_r == 0.0
    assert forces.Fyf == 0.0
    assert forces.Fyr == 0.0

def test_tire_forces_front_steer():
    forces = vehicle.tire_forces(VehicleState(vx=10.0, delta=0.05), EXAMPLE_PARAMS)
    assert forces.alpha_f == pytest.approx(0.05)
    assert forces.Fyf == pytest.approx(80000.0 * math.tan(0.05))
    assert forces.Fyf == pytest.approx(4003.3, abs=0.1)

def test_tire_forces_rear_slip():
    forces = vehicle.tire_forces(VehicleState(vx=10.0, vy=1.0, r=0.1), EXAMPLE_PARAMS)
    assert forces.alpha_r == pytest.approx(-0.085)
    assert forces.Fyr == pytest.approx(-6816.4, abs=0.5)

def test_tire_forces_domain():
    with pytest.raises(tr.ModelDomainError):
        vehicle.tire_forces(VehicleState(vx=0.0), EXAMPLE_PARAMS)
    with pytest.raises(tr.ModelDomainError):
        vehicle.tire_forces(VehicleState(vx=-1.0), EXAMPLE_PARAMS)
    with pytest.raises(tr.ModelDomainError):
        # alpha_f = 0 - 20 / 1 beyond pi/2
        vehicle.tire_forces(VehicleState(vx=1.0, vy=20.0), EXAMPLE_PARAMS)

def test_derivatives_uniform_motion():
    d = vehicle.derivatives(VehicleState(vx=10.0), ControlInput(), EXAMPLE_PARAMS)
    np.testing.assert_allclose(d.to_array(), [10, 0, 0, 0, 0, 0, 0, 0], atol=1e-12)

def test_derivatives_heading():
    d = vehicle.derivatives(VehicleState(vx=10.0, psi=math.pi / 2), ControlInput(), EXAMPLE_PARAMS)
    assert d.dX == pytest.approx(0.0, abs=1e-12)
    assert d.dY == pytest.approx(10.0)

def test_derivatives_front_steer():
    d = vehicle.derivatives(VehicleState(vx=10.0, delta=0.05), ControlInput(0.3, -0.2), EXAMPLE_PARAMS)
    fyf = 80000.0 * math.tan(0.05)
    assert d.dvy == pytest.approx(fyf * math.cos(0.05) / 1500.0)
    assert d.dvy == pytest.approx(2.666, abs=1e-3)
    assert d.dr == pytest.approx(1.2 * fyf * math.cos(0.05) / 2500.0)
    assert d.dr == pytest.approx(1.919, abs=1e-3)
    assert d.dvx == pytest.approx(-fyf * math.sin(0.05) / 1500.0)
    assert d.ddelta == 0.3
    assert d.dax == -0.2

def test_steady_state_ay():
    params = VehicleParams(lf=1.2, lr=1.5)
    assert vehicle.steady_state_ay(10.0, 0.0, params) == 0.0
    assert vehicle.steady_state_ay(10.0, 0.02, params) == pytest.approx(0.7407, abs=1e-4)
    assert vehicle.steady_state_ay(2.0, 0.02, params) == pytest.approx(0.02963, abs=1e-5)
    assert vehicle.steady_state_ay(10.0, 0.02, params) == pytest.approx(25 * vehicle.steady_state_ay(2.0, 0.02, params))

def test_step_translation():
    nxt = vehicle.step(VehicleState(vx=10.0), ControlInput(), 0.1, EXAMPLE_PARAMS)
    assert nxt.X == pytest.approx(1.0)
    assert nxt.Y == pytest.approx(0.0, abs=1e-12)
    assert nxt.vx == pytest.approx(10.0)

def test_step_input_integrators():
    nxt = vehicle.step(VehicleState(vx=10.0), ControlInput(0.0, 1.0), 0.1, EXAMPLE_PARAMS)
    assert nxt.ax == pytest.approx(0.1, abs=1e-15)
    assert nxt.delta == 0.0

def test_step_rejects_bad_dt():
    with pytest.raises(ValueError):
        vehicle.step(VehicleState(vx=10.0), ControlInput(), 0.0, EXAMPLE_PARAMS)

def test_step_matches_fine_integration():
    state = VehicleState(X=3.0, Y=-2.0, vx=8.0, vy=0.2, psi=0.4, r=-0.1, delta=0.05, ax=0.5)
    u = ControlInput(0.1, -0.5)
    dt = 0.01
    coarse = vehicle.step(state, u, dt, EXAMPLE_PARAMS).to_array()
    fine = fine_step(state, u, dt, EXAMPLE_PARAMS).to_array()
    assert np.max(np.abs(coarse - fine)) < 1e-6

def test_step_matches_fine_integration_at_planner_rate():
    state = VehicleState(X=3.0, Y=-2.0, vx=8.0, psi=0.4, ax=0.5)
    u = ControlInput(0.0, -0.5)
    coarse = vehicle.step(state, u, 0.1, EXAMPLE_PARAMS).to_array()
    fine = fine_step(state, u, 0.1, EXAMPLE_PARAMS).to_array()
    assert np.max(np.abs(coarse - fine)) < 1e-6

@pytest.mark.parametrize('vx', [0.5, 2.0, 3.0, 8.0])
def test_step_matches_fine_integration_at_any_speed(vx):
    state = VehicleState(X=3.0, Y=-2.0, vx=vx, psi=0.4, delta=0.01, ax=0.2)
    u = ControlInput(0.02, -0.1)
    coarse = vehicle.step(state, u, 0.1, EXAMPLE_PARAMS).to_array()
    fine = fine_step(state, u, 0.1, EXAMPLE_PARAMS, substeps=1000).to_array()
    assert np.all(np.isfinite(coarse))
    assert np.max(np.abs(coarse - fine)) < 1e-6

def test_step_at_walking_speed_settles_lateral_states():
    nxt = vehicle.step(VehicleState(vx=2.0, delta=0.01), ControlInput(), 0.1, VehicleParams())
    assert nxt.vy == pytest.approx(0.0100, abs=5e-4)
    assert nxt.r == pytest.approx(0.0076, abs=2e-4)

def test_lateral_stiffness_falls_with_speed():
    params = VehicleParams()
    stiffness = [vehicle.lateral_stiffness(VehicleState(vx=vx).to_array(), params) for vx in (1.0, 2.0, 5.0, 10.0)]
    assert all(a > b for a, b in zip(stiffness, stiffness[1:]))
    assert stiffness[0] == pytest.approx(2.0 * stiffness[1], rel=0.05)

def test_substep_count():
    params = VehicleParams()
    fast = VehicleState(vx=10.0).to_array()
    slow = VehicleState(vx=2.0).to_array()
    assert vehicle.substep_count(fast, 0.1, params, vehicle.STABLE_STEP_RATIO) == 1
    assert vehicle.substep_count(slow, 0.1, params, vehicle.STABLE_STEP_RATIO) > 1
    assert vehicle.substep_count(slow, 0.1, params) > vehicle.substep_count(slow, 0.1, params, 1.0)
    assert vehicle.substep_count(slow, 1e-4, params) == 1

def test_step_convergence_order():
    state = VehicleState(vx=10.0, vy=0.1, psi=0.3, r=0.05, delta=0.04, ax=0.3)
    u = ControlInput(0.05, 0.2).to_array()
    horizon = 0.5

    def integrate(dt):
        x = state.to_array()
        for _ in range(int(round(horizon / dt))):
            x = vehicle.rk4_stages(x, u, dt, EXAMPLE_PARAMS)[0]
        return x

    oracle = integrate(0.05 / 64)
    error_coarse = np.max(np.abs(integrate(0.05) - oracle))
    error_fine = np.max(np.abs(integrate(0.025) - oracle))
    assert error_coarse / error_fine >= 8.0

def test_lateral_states_stay_zero_without_steering():
    state = VehicleState(vx=5.0, psi=0.7)
    for d_ax in (1.0, -2.0, 0.5, 0.0, -1.0):
        state = vehicle.step(state, ControlInput(0.0, d_ax), 0.1, EXAMPLE_PARAMS)
        assert state.vy == 0.0
        assert state.r == 0.0
        assert state.delta == 0.0

def test_translation_equivariance():
    state = VehicleState(vx=6.0, vy=0.1, psi=0.2, r=0.05, delta=0.03)
    shifted = state.translated(40.0, -25.0)
    u = ControlInput(0.02, 0.3)
    for _ in range(20):
        state = vehicle.step(state, u, 0.1, EXAMPLE_PARAMS)
        shifted = vehicle.step(shifted, u, 0.1, EXAMPLE_PARAMS)
    np.testing.assert_allclose(shifted.X - state.X, 40.0, atol=1e-9)
    np.testing.assert_allclose(shifted.Y - state.Y, -25.0, atol=1e-9)
    np.testing.assert_allclose(shifted.to_array()[2:], state.to_array()[2:], atol=1e-12)

@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_jacobians_match_central_differences(seed):
    rng = np.random.default_rng(seed)
    params = VehicleParams()
    x = np.array([rng.uniform(0, 175), rng.uniform(0, 70), rng.uniform(1.0, 11.0),
                  rng.uniform(-0.3, 0.3), rng.uniform(-math.pi, math.pi), rng.uniform(-0.3, 0.3),
                  rng.uniform(-0.3, 0.3), rng.uniform(-4.0, 2.5)])
    u = rng.uniform(-0.2, 0.2, 2)
    a, b = vehicle.jacobians(VehicleState.from_array(x), ControlInput.from_array(u), params)
    h = 1e-6
    numeric = np.empty((8, 8))
    for j in range(8):
        e = np.zeros(8)
        e[j] = h
        numeric[:, j] = (vehicle.derivatives_array(x + e, u, params)
                         - vehicle.derivatives_array(x - e, u, params)) / (2 * h)
    scale = np.maximum(np.abs(numeric), 1.0)
    assert np.max(np.abs(a - numeric) / scale) < 1e-4
    numeric_b = np.empty((8, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        numeric_b[:, j] = (vehicle.derivatives_array(x, u + e, params)
                           - vehicle.derivatives_array(x, u - e, params)) / (2 * h)
    np.testing.assert_allclose(b, numeric_b, atol=1e-8)

@pytest.mark.parametrize('vx', [2.0, 6.0])
def test_step_with_jacobians_matches_finite_differences(vx):
    params = VehicleParams()
    x = np.array([10.0, 20.0, vx, 0.1, 0.3, 0.05, 0.04, 0.5])
    u = np.array([0.05, -0.3])
    x_next, fx, fu = vehicle.step_with_jacobians(x, u, 0.1, params)
    np.testing.assert_allclose(x_next, vehicle.step_array(x, u, 0.1, params))
    substeps = vehicle.substep_count(x, 0.1, params)

    def advance(x, u):
        return vehicle.rk4_stages(x, u, 0.1, params, substeps)[0]

    h = 1e-6
    for j in range(8):
        e = np.zeros(8)
        e[j] = h
        column = (advance(x + e, u) - advance(x - e, u)) / (2 * h)
        np.testing.assert_allclose(fx[:, j], column, rtol=1e-4, atol=1e-6)
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        column = (advance(x, u + e) - advance(x, u - e)) / (2 * h)
        np.testing.assert_allclose(fu[:, j], column, rtol=1e-4, atol=1e-6)

def test_chain_sensitivities_composes_sub_steps():
    fx = np.stack([np.eye(8) * 2.0, np.eye(8) * 3.0])
    fu = np.stack([np.ones((8, 2)), np.ones((8, 2))])
    total_x, total_u = vehicle.chain_sensitivities(fx, fu)
    np.testing.assert_allclose(total_x, 6.0 * np.eye(8))
    np.testing.assert_allclose(total_u, 4.0 * np.ones((8, 2)))
