# Copyright (c) 2026 trackreplay contributors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Insertion of full stops into a planned trajectory.

A stop decelerates with constant acceleration along the planned path,
holds at zero speed for the dwell time and accelerates back to the speed
it left. Positions are looked up on the planned path by travelled
distance, so the path geometry is kept and only its timing changes.
"""

import logging
import math

from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from typing import NamedTuple

import numpy as np

from . import exceptions
from . import fileformat
from . import utils
from .planner import PlannedTrajectory
from .vehicle import IAX, IDELTA, IPSI, IR, IVX, IX, IY, ControlInput, VehicleState

logger = logging.getLogger(__name__)


TIMING_DECIMALS = Decimal('0.1')
GRID_TOLERANCE = 1e-9


class ProfileSamples(NamedTuple):
    a: np.ndarray  # m/s^2
    v: np.ndarray  # m/s
    s: np.ndarray  # m


@dataclass(frozen=True)
class StopProfile:
    """One constant-acceleration phase of a stop."""
    v_start: float
    v_end: float
    a_desired: float
    t_phase: float
    a_const: float
    T: float
    samples: ProfileSamples
    dwell: float = 0.0

    @property
    def displacement(self):
        return float(self.samples.s[-1])

    @property
    def steps(self):
        return len(self.samples.s) - 1


def stop_timing(v_start, v_end, a_desired):
    """Returns the duration of a speed change rounded to 0.1 s.

    Halves round away from zero.

    Parameters
    ----------
    v_start, v_end : float
        speeds in m/s
    a_desired : float
        signed acceleration in m/s^2

    Returns
    -------
    float
        duration in seconds
    """
    if a_desired == 0:
        raise ValueError('desired acceleration must not be zero')
    dv = v_end - v_start
    if dv == 0:
        return 0.0
    if (dv > 0) != (a_desired > 0):
        raise ValueError(f'speed change {dv} m/s cannot be reached with acceleration {a_desired} m/s^2')
    t = Decimal(repr(dv / a_desired)).quantize(TIMING_DECIMALS, rounding=ROUND_HALF_UP)
    return float(t)

def constant_accel(v_start, v_end, t_phase):
    """Returns the acceleration that changes v_start into v_end within t_phase."""
    if t_phase < 0:
        raise ValueError(f'phase duration must not be negative: {t_phase}')
    if t_phase == 0:
        if v_start != v_end:
            raise ValueError('a speed change needs a positive phase duration')
        return 0.0
    return (v_end - v_start) / t_phase

def _phase_steps(t_phase, T):
    steps = int(round(t_phase / T))
    if abs(steps * T - t_phase) > GRID_TOLERANCE:
        raise ValueError(f'phase duration {t_phase} s is not a multiple of T = {T} s')
    return steps

def integrate_profile(v_start, a_const, t_phase, T):
    """Integrates a constant-acceleration phase on the sample grid.

    Every step advances
    v(t+1) = v(t) + a T and s(t+1) = s(t) + v(t) T + a T^2 / 2.

    Parameters
    ----------
    v_start : float
        initial speed in m/s
    a_const : float
        acceleration in m/s^2
    t_phase : float
        phase duration in seconds, a multiple of T
    T : float
        sample interval in seconds

    Returns
    -------
    ProfileSamples
        (a, v, s) at the start and after every step
    """
    if not T > 0:
        raise ValueError(f'T must be positive: {T}')
    steps = _phase_steps(t_phase, T)
    a = np.full(steps + 1, float(a_const))
    v = np.empty(steps + 1)
    s = np.empty(steps + 1)
    v[0] = v_start
    s[0] = 0.0
    half_at2 = 0.5 * a_const * T * T
    for i in range(steps):
        s[i + 1] = s[i] + v[i] * T + half_at2
        v[i + 1] = v[i] + a_const * T
    return ProfileSamples(a, v, s)

def build_profile(v_start, v_end, a_desired, T, dwell=0.0):
    """Times, fits and integrates one phase.

    The rounded duration is at least one sample whenever the speeds differ.

    Returns
    -------
    StopProfile
        phase description with its samples
    """
    t_phase = stop_timing(v_start, v_end, a_desired)
    if v_start != v_end:
        steps = max(1, int(math.ceil(t_phase / T - GRID_TOLERANCE)))
        if abs(steps * T - t_phase) > GRID_TOLERANCE:
            t_phase = steps * T
    a_const = constant_accel(v_start, v_end, t_phase)
    samples = integrate_profile(v_start, a_const, t_phase, T)
    return StopProfile(v_start, v_end, a_desired, t_phase, a_const, T, samples, dwell)


@dataclass(frozen=True)
class _StopRegion:
    mark: fileformat.StandstillMark
    start: int
    resume: int
    decel: StopProfile
    accel: StopProfile
    hold: int


def _plan_region(mark, x, s_path, T):
    i0 = mark.index
    v0 = float(x[i0, IVX])
    target = float(mark.target_speed)
    magnitude = abs(mark.desired_decel)
    if magnitude == 0:
        raise ValueError(f'mark at {i0} has zero desired deceleration')
    if v0 <= target:
        raise ValueError(f'mark at {i0}: speed {v0} m/s is not above the target {target} m/s')
    decel = build_profile(v0, target, -magnitude, T, mark.dwell)
    accel = build_profile(target, v0, magnitude, T)
    hold = max(int(round(mark.dwell / T)) - 1, 0)
    s_end = s_path[i0] + decel.displacement + accel.displacement
    later = np.flatnonzero(s_path[i0 + 1:] >= s_end - GRID_TOLERANCE)
    if len(later) == 0:
        raise exceptions.PathTooShortError(
            f'stop at sample {i0} needs {s_end - s_path[i0]:.3f} m of path, '
            f'{s_path[-1] - s_path[i0]:.3f} m left')
    return _StopRegion(mark, i0, i0 + 1 + int(later[0]), decel, accel, hold)

def _region_samples(region, x, s_path, wheelbase):
    """Returns the state rows replacing samples [start, resume)."""
    decel, accel, hold = region.decel, region.accel, region.hold
    n_d, n_a = decel.steps, accel.steps
    v = np.concatenate((decel.samples.v, np.full(hold, region.mark.target_speed), accel.samples.v[1:]))
    s_stop = decel.displacement
    s = np.concatenate((decel.samples.s, np.full(hold, s_stop), s_stop + accel.samples.s[1:]))
    s = s + s_path[region.start]
    a = np.zeros(len(v))
    a[:n_d] = decel.a_const
    a[n_d + hold:n_d + hold + n_a] = accel.a_const
    a[-1] = x[region.resume, IAX]

    X, Y = utils.interpolate_along(x[:, IX], x[:, IY], s_path, s)
    psi = np.interp(s, s_path, np.unwrap(x[:, IPSI]))
    delta = np.interp(s, s_path, x[:, IDELTA])
    rows = np.zeros((len(v), x.shape[1]))
    rows[:, IX] = X
    rows[:, IY] = Y
    rows[:, IVX] = v
    rows[:, IPSI] = psi
    # kinematic yaw rate, no side slip while crawling through the stop
    rows[:, IR] = v * delta / wheelbase
    rows[:, IDELTA] = delta
    rows[:, IAX] = a
    return rows

def insert_standstills(traj, marks, T=None):
    """Inserts full stops at the given marks.

    Parameters
    ----------
    traj : PlannedTrajectory
        planned trajectory
    marks : list of StandstillMark
        marks in increasing sample order; index is the sample where the
        deceleration starts
    T : float, optional
        sample interval, must equal the trajectory's

    Returns
    -------
    PlannedTrajectory
        trajectory with the stops inserted, sampled at the same interval
    """
    T = traj.dt if T is None else T
    if abs(T - traj.dt) > GRID_TOLERANCE:
        raise ValueError(f'T = {T} s differs from the trajectory interval {traj.dt} s')
    marks = list(marks)
    if not marks:
        return traj
    for mark in marks:
        if mark.index < 0 or mark.index >= traj.n - 1:
            raise ValueError(f'mark index out of range: {mark.index}')
        if mark.dwell < 0:
            raise ValueError(f'mark at {mark.index} has negative dwell: {mark.dwell}')
    for prev, mark in zip(marks, marks[1:]):
        if not prev.index < mark.index:
            raise ValueError('marks must be sorted by index')

    x = traj.state_array()
    u = traj.input_array()
    s_path = utils.cumulative_arclength(x[:, IX], x[:, IY])
    regions = [_plan_region(mark, x, s_path, T) for mark in marks]
    for prev, region in zip(regions, regions[1:]):
        if region.start < prev.resume:
            raise exceptions.OverlappingStopsError(
                (prev.mark.index, region.mark.index),
                f'stops at samples {prev.mark.index} and {region.mark.index} overlap: '
                f'the first resumes at sample {prev.resume}')

    wheelbase = traj.params.wheelbase
    blocks = []
    # origin[k] is the original index of output row k, -1 for inserted rows
    origins = []
    cursor = 0
    for region in regions:
        blocks.append(x[cursor:region.start])
        origins.append(np.arange(cursor, region.start))
        rows = _region_samples(region, x, s_path, wheelbase)
        blocks.append(rows)
        origins.append(np.full(len(rows), -1))
        cursor = region.resume
        logger.debug('stop at sample %d: %d decel, %d hold, %d accel samples, resume at %d',
                     region.start, region.decel.steps, region.hold, region.accel.steps, region.resume)
    blocks.append(x[cursor:])
    origins.append(np.arange(cursor, len(x)))
    states = np.concatenate(blocks)
    origin = np.concatenate(origins)

    inputs = np.empty((len(states) - 1, 2))
    inputs[:, 0] = np.diff(states[:, IDELTA]) / T
    inputs[:, 1] = np.diff(states[:, IAX]) / T
    kept = (origin[:-1] >= 0) & (origin[1:] == origin[:-1] + 1)
    inputs[kept] = u[origin[:-1][kept]]

    return PlannedTrajectory(
        traj.dt,
        [VehicleState.from_array(row) for row in states],
        [ControlInput.from_array(row) for row in inputs],
        traj.diagnostics, traj.params)

def marks_from_reference(reference, planned, dwell=None):
    """Moves stop-onset marks back to the start of their deceleration.

    Parameters
    ----------
    reference : ReferenceTrace or list of StandstillMark
        marks whose index is the stop onset in the reference
    planned : PlannedTrajectory
        planned trajectory on the reference's sample grid
    dwell : float, optional
        dwell overriding the marks' own

    Returns
    -------
    list of StandstillMark
        marks whose index is the deceleration start
    """
    reference_marks = getattr(reference, 'standstill_marks', reference)
    vx = planned.state_array()[:, IVX]
    marks = []
    for mark in reference_marks:
        onset = min(mark.index, planned.n - 1)
        magnitude = abs(mark.desired_decel)
        v = float(vx[onset])
        t_decel = stop_timing(v, mark.target_speed, -magnitude) if v > mark.target_speed else 0.0
        start = max(onset - int(round(t_decel / planned.dt)), 0)
        marks.append(fileformat.StandstillMark(
            index=start, target_speed=mark.target_speed,
            desired_decel=-magnitude,
            dwell=mark.dwell if dwell is None else dwell))
    return marks
