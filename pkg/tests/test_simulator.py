import numpy as np
import pytest

import trackreplay as tr
from trackreplay import simulator, standstill, utils
from trackreplay.simulator import TrackerParams


@pytest.fixture
def stop_trajectory(straight_trajectory):
    return standstill.insert_standstills(straight_trajectory, [tr.StandstillMark(50, 0.0, -1.0, 2.0)])


def test_stop_regions():
    assert simulator.stop_regions([5.0, 5.0, 0.5, 0.0, 0.0, 5.0], 1.0) == [(2, 5)]
    assert simulator.stop_regions([0.0, 0.0, 3.0], 1.0) == [(0, 2)]
    assert simulator.stop_regions([3.0, 3.0], 1.0) == []

def test_speed_disturbance():
    np.testing.assert_array_equal(simulator.speed_disturbance(0, 100, 0.02, 0.05), 0.0)
    a = simulator.speed_disturbance(3, 2000, 0.02, 0.05)
    assert np.std(a) == pytest.approx(0.05)
    np.testing.assert_array_equal(a, simulator.speed_disturbance(3, 2000, 0.02, 0.05))
    assert not np.array_equal(a, simulator.speed_disturbance(4, 2000, 0.02, 0.05))

def test_tracker_params_validation():
    with pytest.raises(ValueError):
        TrackerParams(lookahead_min=0.0)
    with pytest.raises(ValueError):
        TrackerParams(standstill_dwell_extension=-0.1)
    with pytest.raises(ValueError):
        TrackerParams(progress_gain=-1.0)
    with pytest.raises(ValueError):
        TrackerParams(disturbance_fade=0.0)

def test_track_straight_path(straight_trajectory):
    measured = simulator.track_path(straight_trajectory)
    assert measured.dt == straight_trajectory.dt
    assert measured.n == straight_trajectory.n
    assert set(measured.names()) == {'X', 'Y', 'vx', 'ax', 'ay', 'r'}
    np.testing.assert_allclose(measured.get('vx'), 5.0, atol=1e-9)
    np.testing.assert_allclose(measured.get('Y'), 35.0, atol=1e-9)
    np.testing.assert_allclose(measured.get('X'), straight_trajectory.state_array()[:, 0], atol=1e-6)

def test_track_stop_holds_longer(stop_trajectory):
    measured = simulator.track_path(stop_trajectory)
    planned_zero = np.sum(stop_trajectory.state_array()[:, 2] < 1e-6)
    # 0.8 s extension at 0.1 s sampling
    assert measured.n == stop_trajectory.n + 8
    assert np.sum(measured.get('vx') < 1e-6) >= planned_zero + 7
    assert measured.get('vx').min() >= -1e-9

def test_track_stays_on_path(stop_trajectory):
    x = stop_trajectory.state_array()
    measured = simulator.track_path(stop_trajectory, seed=11)
    distance = utils.distance_to_polyline(measured.get('X'), measured.get('Y'), x[:, 0], x[:, 1])
    assert np.max(distance) < 0.05

def test_disturbance_is_seeded(straight_trajectory):
    quiet = simulator.track_path(straight_trajectory)
    a = simulator.track_path(straight_trajectory, seed=5)
    b = simulator.track_path(straight_trajectory, seed=5)
    np.testing.assert_array_equal(a.get('vx'), b.get('vx'))
    assert not np.allclose(a.get('vx'), quiet.get('vx'))
    assert np.sqrt(np.mean((a.get('vx') - quiet.get('vx')) ** 2)) < 0.2

def test_track_path_rejects_bad_input(straight_trajectory):
    with pytest.raises(ValueError):
        simulator.track_path(straight_trajectory, TrackerParams(control_rate=35.0))
    states = [tr.vehicle.VehicleState(20.0, 35.0, 5.0), tr.vehicle.VehicleState(20.5, 35.0, 5.0)]
    short = tr.planner.PlannedTrajectory(0.1, states, [tr.vehicle.ControlInput()])
    with pytest.raises(ValueError):
        simulator.track_path(short)
    single = tr.planner.PlannedTrajectory(0.1, states[:1], [])
    with pytest.raises(ValueError):
        simulator.track_path(single)

def circle_trajectory(radius=20.0, speed=3.0, duration=30.0, dt=0.1):
    params = tr.vehicle.VehicleParams()
    theta = speed / radius * dt * np.arange(int(round(duration / dt)) + 1)
    states = [tr.vehicle.VehicleState(87.5 + radius * np.sin(a), 35.0 - radius * np.cos(a), speed,
                                      psi=a, r=speed / radius, delta=params.wheelbase / radius)
              for a in theta]
    inputs = [tr.vehicle.ControlInput() for _ in range(len(states) - 1)]
    return tr.planner.PlannedTrajectory(dt, states, inputs, params=params)

def test_track_circular_path():
    trajectory = circle_trajectory()
    x = trajectory.state_array()
    measured = simulator.track_path(trajectory)
    distance = utils.distance_to_polyline(measured.get('X'), measured.get('Y'), x[:, 0], x[:, 1])
    assert np.max(distance[20:]) < 0.5
    assert np.mean(measured.get('ay')[20:]) == pytest.approx(3.0 ** 2 / 20.0, rel=0.1)

@pytest.mark.parametrize('seed', [3, 11, 29])
def test_disturbed_run_ends_at_path_end(straight_trajectory, seed):
    measured = simulator.track_path(straight_trajectory, seed=seed)
    end = straight_trajectory.states[-1]
    assert measured.get('X')[-1] == pytest.approx(end.X, abs=0.05)
    np.testing.assert_allclose(measured.get('Y'), 35.0, atol=1e-9)

def test_lookahead_past_end_follows_last_segment(straight_trajectory):
    tracker = simulator._PathTracker(straight_trajectory, TrackerParams(), straight_trajectory.params, 0)
    end = straight_trajectory.states[-1]
    assert tracker.target(tracker.s_path[-1] + 2.0) == pytest.approx((end.X + 2.0, 35.0))
    assert tracker.target(10.0) == pytest.approx((30.0, 35.0))
