import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import trackreplay as tr
from trackreplay import trace as tt


def stop_profile(n, start, end, cruise=5.0):
    vx = cruise + 0.01 * np.arange(n)
    vx[start:end] = 0.1
    return vx


def test_resample_same_interval_returns_trace():
    trace = tr.Trace(0.0, 0.1, {'ax': np.zeros(5)})
    assert tt.resample(trace, 0.1) is trace

def test_resample_down():
    t = 0.02 * np.arange(51)
    trace = tr.Trace(2.0, 0.02, {'ax': 3.0 * t, 'ay': np.ones(51)})
    resampled = tt.resample(trace, 0.1)
    assert resampled.n == 11
    assert resampled.t0 == 2.0
    assert resampled.dt == 0.1
    np.testing.assert_allclose(resampled.get('ax'), 0.3 * np.arange(11), atol=1e-12)
    np.testing.assert_allclose(resampled.get('ay'), 1.0)

def test_resample_up_stays_inside_range():
    trace = tr.Trace(0.0, 0.1, {'vx': np.array([0.0, 1.0, 2.0])})
    resampled = tt.resample(trace, 0.05)
    np.testing.assert_allclose(resampled.get('vx'), [0.0, 0.5, 1.0, 1.5, 2.0])

@given(st.floats(0.01, 2.0))
def test_resample_is_exact_on_ramps(dt_new):
    ramp = tr.Trace(0.0, 0.1, {'ax': 2.0 * 0.1 * np.arange(101)})
    resampled = tt.resample(ramp, dt_new)
    assert (resampled.n - 1) * dt_new <= ramp.duration * (1 + 1e-9)
    np.testing.assert_allclose(resampled.get('ax'), 2.0 * dt_new * np.arange(resampled.n), atol=1e-7)
    assert tt.resample(resampled, dt_new) is resampled

def test_resample_drops_partial_tail():
    trace = tr.Trace(0.0, 0.05, {'ax': np.arange(22) * 1.0})
    resampled = tt.resample(trace, 0.1)
    assert resampled.n == 11
    assert resampled.get('ax')[-1] == pytest.approx(20.0)
    assert resampled.duration == pytest.approx(1.0)

def test_resample_rejects_bad_interval():
    with pytest.raises(ValueError):
        tt.resample(tr.Trace(0.0, 0.1, {'ax': np.zeros(3)}), 0.0)

def test_average_traces():
    a = tr.Trace(0.0, 0.1, {'ax': np.ones(30), 'ay': np.zeros(30), 'vx': np.full(30, 2.0)})
    b = tr.Trace(5.0, 0.1, {'ax': np.full(20, 3.0), 'ay': np.full(20, 1.0), 'vx': np.full(20, 4.0)})
    reference = tt.average_traces([a, b])
    assert reference.n == 20
    assert reference.dt == 0.1
    np.testing.assert_allclose(reference.ax_ref, 2.0)
    np.testing.assert_allclose(reference.ay_ref, 0.5)
    np.testing.assert_allclose(reference.vx_ref, 3.0)
    assert reference.standstill_marks == ()

def test_average_traces_carries_yaw_rate():
    a = tr.Trace(0.0, 0.1, {'ax': np.ones(10), 'ay': np.zeros(10), 'r': np.full(10, 0.1)})
    b = tr.Trace(0.0, 0.1, {'ax': np.ones(10), 'ay': np.zeros(10), 'r': np.full(10, 0.3)})
    np.testing.assert_allclose(tt.average_traces([a, b]).r_ref, 0.2)
    assert tt.average_traces([a, tr.Trace(0.0, 0.1, {'ax': np.ones(10), 'ay': np.zeros(10)})]).r_ref is None

def test_average_traces_without_speed():
    a = tr.Trace(0.0, 0.1, {'ax': np.ones(10), 'ay': np.zeros(10), 'vx': np.ones(10)})
    b = tr.Trace(0.0, 0.1, {'ax': np.ones(10), 'ay': np.zeros(10)})
    assert tt.average_traces([a, b]).vx_ref is None

def test_average_traces_resamples():
    a = tr.Trace(0.0, 0.05, {'ax': np.ones(41), 'ay': np.zeros(41)})
    reference = tt.average_traces([a], dt=0.1)
    assert reference.n == 21

def test_average_traces_needs_accelerations():
    with pytest.raises(tr.TraceSchemaError):
        tt.average_traces([tr.Trace(0.0, 0.1, {'ax': np.ones(10)})])
    with pytest.raises(ValueError):
        tt.average_traces([])

def test_detect_standstills():
    vx = np.concatenate((np.full(10, 5.0), np.full(15, 0.2), np.full(10, 5.0),
                         np.full(5, 0.4), np.full(10, 5.0)))
    intervals = tt.detect_standstills(tr.Trace(0.0, 0.1, {'vx': vx}))
    assert intervals == [tr.StandstillInterval(10, 25, 0.2)]
    assert intervals[0].length == 15
    assert intervals[0].midpoint == 17

def test_detect_standstills_threshold_is_strict():
    vx = np.concatenate((np.full(5, 3.0), np.full(20, 0.5), np.full(5, 3.0)))
    assert tt.detect_standstills(tr.Trace(0.0, 0.1, {'vx': vx})) == []

def test_detect_standstills_at_trace_ends():
    vx = np.concatenate((np.zeros(12), np.full(10, 4.0), np.zeros(12)))
    intervals = tt.detect_standstills(tr.Trace(0.0, 0.1, {'vx': vx}))
    assert [(i.start_index, i.end_index) for i in intervals] == [(0, 12), (22, 34)]

def test_estimate_stop_decel():
    vx = np.concatenate((np.full(60, 5.0), np.zeros(20)))
    ax = np.zeros(80)
    ax[40:60] = -1.5
    ax[30:40] = 0.5
    trace = tr.Trace(0.0, 0.1, {'vx': vx, 'ax': ax})
    interval = tt.detect_standstills(trace)[0]
    assert tt.estimate_stop_decel(trace, interval) == pytest.approx(-1.5)
    coasting = trace.with_channels(ax=np.zeros(80))
    assert tt.estimate_stop_decel(coasting, interval) == tt.FALLBACK_STOP_DECEL

def test_standstill_marks():
    vx = np.concatenate((np.full(60, 5.0), np.zeros(20), np.full(20, 5.0)))
    ax = np.zeros(100)
    ax[50:60] = -2.0
    trace = tr.Trace(0.0, 0.1, {'vx': vx, 'ax': ax})
    marks = tt.standstill_marks(trace, tt.detect_standstills(trace))
    assert len(marks) == 1
    assert marks[0].index == 60
    assert marks[0].target_speed == 0.0
    assert marks[0].desired_decel == pytest.approx(-2.0)
    assert marks[0].dwell == pytest.approx(2.0)

def test_synchronize_events_aligns_delayed_trace():
    vx_a = stop_profile(100, 30, 50)
    vx_b = np.concatenate((np.full(10, vx_a[0]), vx_a))
    a = tr.Trace(1.0, 0.1, {'vx': vx_a})
    b = tr.Trace(0.0, 0.1, {'vx': vx_b, 'ax': np.arange(110.0)})
    result = tt.synchronize_events(a, b)
    assert result.synchronized
    assert result.shifts == pytest.approx((-1.0, -1.0))
    assert result.b.t0 == 1.0
    assert result.b.n == 100
    np.testing.assert_allclose(result.b.get('vx'), vx_a)
    np.testing.assert_allclose(result.b.get('ax'), np.arange(10.0, 110.0))

def test_synchronize_events_fills_gaps():
    vx_a = stop_profile(120, 30, 50)
    vx_a[80:95] = 0.1
    # b stops later the first time and earlier the second time
    vx_b = stop_profile(120, 35, 55)
    vx_b[75:90] = 0.1
    a = tr.Trace(0.0, 0.1, {'vx': vx_a})
    b = tr.Trace(0.0, 0.1, {'vx': vx_b})
    result = tt.synchronize_events(a, b)
    assert result.synchronized
    assert result.shifts == pytest.approx((-0.5, 0.5, 0.5))
    onsets = [i.start_index for i in tt.detect_standstills(result.b)]
    assert onsets == [30, 80]
    assert np.all(np.isfinite(result.b.get('vx')))

def test_synchronize_without_standstills():
    a = tr.Trace(0.0, 0.1, {'vx': np.full(50, 5.0)})
    b = tr.Trace(0.0, 0.1, {'vx': stop_profile(50, 10, 30)})
    result = tt.synchronize_events(a, b)
    assert not result.synchronized
    assert result.b is b
    assert result.shifts == ()

def test_synchronize_without_speed():
    a = tr.Trace(0.0, 0.1, {'ax': np.zeros(50)})
    b = tr.Trace(0.0, 0.1, {'vx': stop_profile(50, 10, 30)})
    assert not tt.synchronize_events(a, b).synchronized

def test_synchronize_needs_equal_sampling():
    a = tr.Trace(0.0, 0.1, {'vx': stop_profile(50, 10, 30)})
    b = tr.Trace(0.0, 0.05, {'vx': stop_profile(100, 20, 60)})
    with pytest.raises(ValueError):
        tt.synchronize_events(a, b)
