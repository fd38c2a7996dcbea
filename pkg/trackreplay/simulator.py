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

"""Closed-loop path tracker standing in for a test vehicle.

Steering is pure pursuit toward a speed-dependent lookahead point on the
planned path, speed is a PI loop with acceleration feed-forward on the
planned speed profile. The tracker follows the plan in time. Stops are
replayed kinematically along the path, with the zero-speed phase held
longer than planned.
"""

import dataclasses
import logging
import math

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import exceptions
from . import fileformat
from . import utils
from . import vehicle
from .planner import PlannerBounds
from .vehicle import IAX, IDELTA, IPSI, IVX, IX, IY, ControlInput, VehicleState

logger = logging.getLogger(__name__)


#### Constants

NO_DISTURBANCE = 0
STOP_SPEED_TOLERANCE = 1e-3  # m/s
ZERO_SPEED = 1e-9  # m/s
DISTURBANCE_CUTOFF = 0.5  # Hz
_SEARCH_BEHIND = 5
_SEARCH_AHEAD = 80


@dataclass(frozen=True)
class TrackerParams:
    """Gains and behaviour of the surrogate tracker."""
    lookahead_gain: float = 0.8              # s
    lookahead_min: float = 3.0               # m
    kp: float = 1.0                          # 1/s
    ki: float = 0.2                          # 1/s^2
    min_moving_speed: float = 1.0            # m/s
    standstill_dwell_extension: float = 0.8  # s
    control_rate: float = 50.0               # Hz
    disturbance_sigma: float = 0.05          # m/s
    progress_gain: float = 1.0               # 1/s, pulls the run back onto the planned arclength
    disturbance_fade: float = 10.0           # m before the path end over which the disturbance dies out
    bounds: PlannerBounds = field(default_factory=PlannerBounds)

    def __post_init__(self):
        if not self.lookahead_min > 0:
            raise ValueError(f'lookahead_min must be positive: {self.lookahead_min}')
        if self.lookahead_gain < 0 or self.kp < 0 or self.ki < 0:
            raise ValueError('tracker gains must not be negative')
        if not self.min_moving_speed > 0:
            raise ValueError(f'min_moving_speed must be positive: {self.min_moving_speed}')
        if self.standstill_dwell_extension < 0:
            raise ValueError('standstill_dwell_extension must not be negative')
        if not self.control_rate > 0:
            raise ValueError(f'control_rate must be positive: {self.control_rate}')
        if self.disturbance_sigma < 0:
            raise ValueError('disturbance_sigma must not be negative')
        if self.progress_gain < 0:
            raise ValueError('progress_gain must not be negative')
        if not self.disturbance_fade > 0:
            raise ValueError(f'disturbance_fade must be positive: {self.disturbance_fade}')


def stop_regions(vx, min_moving_speed):
    """Returns maximal runs [start, end) of planned speed below min_moving_speed."""
    slow = np.concatenate(([0], (np.asarray(vx) < min_moving_speed - STOP_SPEED_TOLERANCE).astype(np.int8), [0]))
    edges = np.diff(slow)
    return list(zip(np.flatnonzero(edges == 1).tolist(), np.flatnonzero(edges == -1).tolist()))

def speed_disturbance(seed, n, dt, sigma):
    """Returns a band-limited speed command offset, zero for seed 0."""
    if seed == NO_DISTURBANCE or sigma == 0 or n == 0:
        return np.zeros(n)
    rng = np.random.default_rng(seed)
    sos = signal.butter(2, DISTURBANCE_CUTOFF, btype='low', output='sos', fs=1.0 / dt)
    noise = signal.sosfilt(sos, rng.standard_normal(n))
    spread = np.std(noise)
    return noise * (sigma / spread) if spread > 0 else noise


class _PathTracker:
    """State of one tracking run at the control rate."""
    def __init__(self, traj, params, vehicle_params, seed):
        self.params = params
        self.vehicle = vehicle_params
        self.x = traj.state_array()
        self.Ts = traj.dt
        self.dt = 1.0 / params.control_rate
        self.ratio = int(round(self.Ts / self.dt))
        if self.ratio < 1 or abs(self.ratio * self.dt - self.Ts) > 1e-9:
            raise ValueError(f'control rate {params.control_rate} Hz is not a multiple of 1/{self.Ts} s')
        self.s_path = utils.cumulative_arclength(self.x[:, IX], self.x[:, IY])
        if self.s_path[-1] < params.lookahead_min:
            raise ValueError(f'path of {self.s_path[-1]:.2f} m is shorter than one lookahead '
                             f'({params.lookahead_min} m)')
        self.psi_path = np.unwrap(self.x[:, IPSI])
        moving = np.flatnonzero(np.diff(self.s_path) > 0)[-1]
        self.end_point = self.x[-1, [IX, IY]]
        self.end_direction = (self.x[moving + 1, [IX, IY]] - self.x[moving, [IX, IY]]) / (
            self.s_path[moving + 1] - self.s_path[moving])
        self.t_plan = traj.time()
        self.regions = stop_regions(self.x[:, IVX], params.min_moving_speed)
        steps = int(round(self.t_plan[-1] / self.dt)) + 1
        steps += len(self.regions) * int(round(params.standstill_dwell_extension / self.dt))
        self.disturbance = speed_disturbance(seed, steps + 1, self.dt, params.disturbance_sigma)
        self.segment = 0
        self.rows = []

    def planned(self, column, tau):
        return float(np.interp(tau, self.t_plan, self.x[:, column]))

    def progress(self, X, Y):
        first = max(self.segment - _SEARCH_BEHIND, 0)
        seg, frac, _ = utils.project_to_segments(X, Y, self.x[:, IX], self.x[:, IY],
                                                 first, self.segment + _SEARCH_AHEAD)
        self.segment = seg
        return self.s_path[seg] + frac * (self.s_path[seg + 1] - self.s_path[seg])

    def record(self, state, ax, ay):
        self.rows.append((state.X, state.Y, state.vx, ax, ay, state.r))

    def target(self, s):
        """Returns the path point at arclength s, on the line of the last segment past the end."""
        beyond = s - self.s_path[-1]
        if beyond > 0:
            X, Y = self.end_point + beyond * self.end_direction
            return float(X), float(Y)
        X, Y = utils.interpolate_along(self.x[:, IX], self.x[:, IY], self.s_path, s)
        return float(X), float(Y)

    def steer_command(self, state, s):
        p = self.params
        lookahead = max(p.lookahead_min, p.lookahead_gain * state.vx)
        tx, ty = self.target(s + lookahead)
        dx, dy = tx - state.X, ty - state.Y
        distance = max(math.hypot(dx, dy), 1e-6)
        alpha = math.atan2(dy, dx) - state.psi
        delta = math.atan(2.0 * self.vehicle.wheelbase * math.sin(alpha) / distance)
        return float(np.clip(delta, *p.bounds.delta))

    def speed_reference(self, tau, k, s):
        """Planned speed plus arclength feedback and the disturbance, faded out near the path end."""
        p = self.params
        fade = min(max((self.s_path[-1] - s) / p.disturbance_fade, 0.0), 1.0)
        s_planned = float(np.interp(tau, self.t_plan, self.s_path))
        disturbance = self.disturbance[min(k, len(self.disturbance) - 1)]
        return max(self.planned(IVX, tau) + fade * disturbance + p.progress_gain * (s_planned - s),
                   p.min_moving_speed)

    def dynamic_step(self, state, tau, k, integral):
        p = self.params
        bounds = p.bounds
        s = self.progress(state.X, state.Y)
        error = self.speed_reference(tau, k, s) - state.vx
        integral += error * self.dt
        ax_cmd = self.planned(IAX, tau) + p.kp * error + p.ki * integral
        if state.vx <= p.min_moving_speed:
            ax_cmd = max(ax_cmd, 0.0)
        ax_cmd = float(np.clip(ax_cmd, *bounds.ax))
        delta_cmd = self.steer_command(state, s)
        u = ControlInput(float(np.clip((delta_cmd - state.delta) / self.dt, *bounds.d_delta)),
                         float(np.clip((ax_cmd - state.ax) / self.dt, *bounds.d_ax)))
        nxt = vehicle.step(state, u, self.dt, self.vehicle)
        if nxt.vx < p.min_moving_speed:
            # governor
            nxt = dataclasses.replace(nxt, vx=p.min_moving_speed)
        ax_body = (nxt.vx - state.vx) / self.dt - state.vy * state.r
        ay_body = (nxt.vy - state.vy) / self.dt + state.vx * state.r
        return nxt, ax_body, ay_body, integral

    def stop_profile(self, start, end):
        """Returns speed and steering of a stop region at the control rate.

        The extension repeats the first zero-speed sample, or the slowest
        one if the region never stops completely.
        """
        extra = int(round(self.params.standstill_dwell_extension / self.dt))
        tau = np.arange(int(round((end - start) * self.ratio)) + 1) * self.dt + start * self.Ts
        v = np.interp(tau, self.t_plan, self.x[:, IVX])
        delta = np.interp(tau, self.t_plan, self.x[:, IDELTA])
        zero = np.flatnonzero(v <= ZERO_SPEED)
        at = int(zero[0]) if len(zero) else int(np.argmin(v))
        v = np.concatenate((v[:at], np.full(extra, v[at]), v[at:]))
        delta = np.concatenate((delta[:at], np.full(extra, delta[at]), delta[at:]))
        return v, delta, extra

    def replay_stop(self, state, start, end):
        """Moves along the path through a stop region.

        Returns
        -------
        tuple
            (exit state, control steps taken, extra control steps)
        """
        v, delta, extra = self.stop_profile(start, end)
        s = self.progress(state.X, state.Y)
        v_prev = v[0]
        wheelbase = self.vehicle.wheelbase
        for j in range(1, len(v)):
            s += 0.5 * (v_prev + v[j]) * self.dt
            X, Y = utils.interpolate_along(self.x[:, IX], self.x[:, IY], self.s_path, s)
            psi = float(np.interp(s, self.s_path, self.psi_path))
            r = v[j] * delta[j] / wheelbase
            state = VehicleState(float(X), float(Y), float(v[j]), 0.0, psi, r, float(delta[j]),
                                 (v[j] - v_prev) / self.dt)
            self.record(state, state.ax, v[j] * r)
            v_prev = v[j]
        self.progress(state.X, state.Y)
        exit_state = dataclasses.replace(state, vx=max(state.vx, self.params.min_moving_speed),
                                         ax=self.planned(IAX, end * self.Ts))
        return exit_state, len(v) - 1, extra

    def run(self, initial):
        state = initial
        self.record(state, state.ax, vehicle.steady_state_ay(state.vx, state.delta, self.vehicle))
        t_end = self.t_plan[-1]
        offset = 0  # control steps the run lags the plan
        k = 0
        integral = 0.0
        regions = list(self.regions)
        while (k - offset) * self.dt < t_end - 1e-9:
            tau = (k - offset) * self.dt
            if regions and tau >= regions[0][0] * self.Ts - 1e-9:
                start, end = regions.pop(0)
                end = min(end, len(self.x) - 1)
                state, steps, extra = self.replay_stop(state, start, end)
                logger.debug('replayed stop at plan samples %d..%d with %d extra control steps',
                             start, end, extra)
                k += steps
                offset += extra
                integral = 0.0
                continue
            state, ax_body, ay_body, integral = self.dynamic_step(state, tau, k, integral)
            self.record(state, ax_body, ay_body)
            k += 1
        rows = np.array(self.rows)[::self.ratio]
        return fileformat.Trace(0.0, self.Ts, {
            fileformat.CHANNEL_X: rows[:, 0],
            fileformat.CHANNEL_Y: rows[:, 1],
            fileformat.CHANNEL_VX: rows[:, 2],
            fileformat.CHANNEL_AX: rows[:, 3],
            fileformat.CHANNEL_AY: rows[:, 4],
            fileformat.CHANNEL_R: rows[:, 5],
        })


def track_path(traj, params=None, vehicle_params=None, seed=NO_DISTURBANCE):
    """Follows a planned trajectory with the surrogate tracker.

    Parameters
    ----------
    traj : PlannedTrajectory
        trajectory to follow
    params : TrackerParams, optional
        tracker gains and behaviour
    vehicle_params : VehicleParams, optional
        simulated vehicle, the trajectory's by default
    seed : int
        disturbance seed, 0 for none

    Returns
    -------
    Trace
        simulated drive sampled at the trajectory interval with the
        channels X, Y, vx, ax, ay, r
    """
    params = params or TrackerParams()
    vehicle_params = vehicle_params or traj.params
    if traj.n < 2:
        raise ValueError('a trajectory to track needs at least two states')
    tracker = _PathTracker(traj, params, vehicle_params, seed)
    initial = traj.states[0]
    stops_at_start = bool(tracker.regions) and tracker.regions[0][0] == 0
    if initial.vx < params.min_moving_speed and not stops_at_start:
        initial = dataclasses.replace(initial, vx=params.min_moving_speed)
    try:
        trace = tracker.run(initial)
    except exceptions.ModelDomainError as e:
        raise exceptions.SimulatorException(f'tracking left the model domain: {e}')
    logger.info('tracked %d planned samples in %.1f s (%d stop regions)',
                traj.n, trace.duration, len(tracker.regions))
    return trace
