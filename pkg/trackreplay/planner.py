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

"""Receding-horizon acceleration tracking inside a rectangular test area.

Every horizon is solved by single shooting: the decision variables are the
Np rate inputs, states follow from integrating the bicycle model, and the
gradient is propagated backwards through the RK4 sensitivities. Input
bounds are box bounds of the quasi-Newton method. State bounds enter as an
exterior quadratic penalty on slightly tightened limits whose weight grows
until the true limits hold.
"""

import logging
import math

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from . import exceptions
from . import fileformat
from . import vehicle
from .vehicle import (IAX, IDELTA, IVX, IX, IY, ControlInput, VehicleParams,
                      VehicleState)

logger = logging.getLogger(__name__)


#### Constants

DEG = math.pi / 180.0

ACCEL_COEFFICIENT_FLOOR = 0.01
POSITION_NORM_CLAMP = 0.999

START_WARM = 'warm'
START_ZERO = 'zero'
START_NEUTRAL = 'neutral'

MYOPIC_HORIZON = 10
DOMAIN_MERIT = 1e20
PROGRESS_INTERVAL = 100
RK4_STABILITY_LIMIT = 2.78  # real-axis extent of the RK4 stability region

_BOUNDED = np.array([IX, IY, IVX, IDELTA, IAX])


@dataclass(frozen=True)
class TrackArea:
    """Rectangular test area in metres."""
    x_min: float = 0.0
    x_max: float = 175.0
    y_min: float = 0.0
    y_max: float = 70.0

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(f'x_min must be below x_max: {self.x_min} >= {self.x_max}')
        if not self.y_min < self.y_max:
            raise ValueError(f'y_min must be below y_max: {self.y_min} >= {self.y_max}')

    @property
    def x_centre(self):
        return 0.5 * (self.x_min + self.x_max)

    @property
    def y_centre(self):
        return 0.5 * (self.y_min + self.y_max)

    @property
    def x_half_width(self):
        return 0.5 * (self.x_max - self.x_min)

    @property
    def y_half_width(self):
        return 0.5 * (self.y_max - self.y_min)

    def normalize(self, X, Y):
        """Returns offsets from the centre scaled to +-1 at the edges."""
        return ((X - self.x_centre) / self.x_half_width,
                (Y - self.y_centre) / self.y_half_width)

    def contains(self, X, Y, tolerance=0.0):
        return bool(np.all((X >= self.x_min - tolerance) & (X <= self.x_max + tolerance)
                           & (Y >= self.y_min - tolerance) & (Y <= self.y_max + tolerance)))


@dataclass(frozen=True)
class PlannerWeights:
    """Base weights of the tracking cost."""
    w_c_ax: float = 300.0
    w_c_ay: float = 500.0
    w_c_X: float = 0.05
    w_c_Y: float = 0.25
    w_ddelta: float = 0.2
    w_dax: float = 0.2

    def __post_init__(self):
        for name, value in vars(self).items():
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f'weight {name} must be non-negative: {value}')


def _check_pair(name, pair):
    lower, upper = pair
    if not lower < upper:
        raise ValueError(f'bound {name} needs lower < upper: {pair}')


@dataclass(frozen=True)
class PlannerBounds:
    """Lower/upper pairs of the state and input box constraints."""
    vx: tuple = (1.0, 11.1)                       # m/s
    delta: tuple = (-20.0 * DEG, 20.0 * DEG)      # rad
    ax: tuple = (-4.1, 2.5)                       # m/s^2
    d_delta: tuple = (-14.4 * DEG, 14.4 * DEG)    # rad/s
    d_ax: tuple = (-4.1, 2.3)                     # m/s^3

    def __post_init__(self):
        for name, pair in vars(self).items():
            _check_pair(name, pair)


@dataclass(frozen=True)
class SolverSettings:
    max_iterations: int = 200
    tolerance: float = 1e-6        # projected gradient norm
    ftol: float = 1e-9             # relative cost reduction
    max_violation: float = 1e-6
    penalty_initial: float = 1e3
    penalty_growth: float = 10.0
    penalty_max: float = 1e9
    # the penalty acts on limits pulled inwards by these margins
    position_margin: float = 0.05  # m
    speed_margin: float = 0.02     # m/s
    steer_margin: float = 1e-3     # rad
    accel_margin: float = 1e-2     # m/s^2
    # |lambda| h of the RK4 sub-steps in the prediction, below the stability limit of about 2.78
    substep_ratio: float = vehicle.STABLE_STEP_RATIO

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError(f'max_iterations must be positive: {self.max_iterations}')
        if not self.penalty_growth > 1:
            raise ValueError(f'penalty_growth must exceed 1: {self.penalty_growth}')
        if not 0 < self.penalty_initial <= self.penalty_max:
            raise ValueError('penalty weights need 0 < penalty_initial <= penalty_max')
        if not 0 < self.substep_ratio < RK4_STABILITY_LIMIT:
            raise ValueError(f'substep_ratio must lie in (0, {RK4_STABILITY_LIMIT}): {self.substep_ratio}')


def _default_x_init():
    # top left corner of the default area, heading along +X
    return VehicleState(15.0, 65.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class PlannerConfig:
    """Horizon, sampling time, weights, area, bounds and start state."""
    Np: int = 90
    Ts: float = 0.1
    weights: PlannerWeights = field(default_factory=PlannerWeights)
    track: TrackArea = field(default_factory=TrackArea)
    bounds: PlannerBounds = field(default_factory=PlannerBounds)
    x_init: VehicleState = field(default_factory=_default_x_init)
    solver: SolverSettings = field(default_factory=SolverSettings)
    vehicle: VehicleParams = field(default_factory=VehicleParams)

    def __post_init__(self):
        if int(self.Np) != self.Np or self.Np < 1:
            raise ValueError(f'Np must be a positive integer: {self.Np}')
        if not self.Ts > 0:
            raise ValueError(f'Ts must be positive: {self.Ts}')
        violation = bound_violation(self.x_init.to_array(), self)
        if violation > 0:
            raise ValueError(f'x_init violates the planner bounds by {violation}')


@dataclass(frozen=True)
class AdaptiveWeightEval:
    x_norm: float
    y_norm: float
    c_x: float
    c_y: float
    w_ax: float
    w_ay: float
    w_X: float
    w_Y: float


@dataclass(frozen=True)
class HorizonDiagnostics:
    iterations: int
    evaluations: int
    converged: bool
    violation: float
    penalty: float
    start: str
    message: str = ''
    merit_history: tuple = ()


class HorizonSolution(NamedTuple):
    inputs: np.ndarray    # (Np, 2)
    states: np.ndarray    # (Np + 1, 8)
    cost: float
    diagnostics: HorizonDiagnostics


@dataclass(frozen=True)
class StepDiagnostics:
    step: int
    cost: float
    iterations: int
    converged: bool
    violation: float
    penalty: float = 0.0


class PlannedTrajectory:
    """Planned states, applied inputs and per-step solver diagnostics.

    Parameters
    ----------
    dt : float
        sample interval in seconds
    states : list of VehicleState
        n states
    inputs : list of ControlInput
        n - 1 inputs, inputs[k] takes states[k] to states[k + 1]
    diagnostics : list of StepDiagnostics
        solver diagnostics per step, may be empty
    params : VehicleParams
        vehicle the achieved lateral acceleration is evaluated for
    """
    def __init__(self, dt, states, inputs, diagnostics=(), params=None):
        if not dt > 0:
            raise ValueError(f'dt must be positive: {dt}')
        states = tuple(states)
        inputs = tuple(inputs)
        if len(states) == 0:
            raise ValueError('a trajectory needs at least one state')
        if len(states) != len(inputs) + 1:
            raise ValueError(f'{len(states)} states need {len(states) - 1} inputs, got {len(inputs)}')
        self.dt = float(dt)
        self.states = states
        self.inputs = inputs
        self.diagnostics = tuple(diagnostics)
        self.params = params if params is not None else VehicleParams()

    @property
    def n(self):
        return len(self.states)

    def __len__(self):
        return self.n

    def state_array(self):
        return np.array([s.to_array() for s in self.states])

    def input_array(self):
        if not self.inputs:
            return np.zeros((0, vehicle.INPUT_SIZE))
        return np.array([u.to_array() for u in self.inputs])

    def time(self):
        return self.dt * np.arange(self.n)

    @property
    def ax(self):
        return self.state_array()[:, IAX]

    @property
    def ay(self):
        """Achieved lateral acceleration under steady-state turning."""
        x = self.state_array()
        return vehicle.steady_state_ay(x[:, IVX], x[:, IDELTA], self.params)

    def all_converged(self):
        return all(d.converged for d in self.diagnostics)

    def to_trace(self):
        """Returns the trajectory as a Trace with the standard channels."""
        x = self.state_array()
        return fileformat.Trace(0.0, self.dt, {
            fileformat.CHANNEL_X: x[:, IX],
            fileformat.CHANNEL_Y: x[:, IY],
            fileformat.CHANNEL_VX: x[:, IVX],
            fileformat.CHANNEL_AX: x[:, IAX],
            fileformat.CHANNEL_AY: self.ay,
            fileformat.CHANNEL_R: x[:, vehicle.IR],
        })

    def __repr__(self):
        return f'PlannedTrajectory(dt={self.dt}, n={self.n})'


def evaluate_adaptive_weights(X, Y, track, weights):
    """Evaluates all position-dependent weights at one position.

    The acceleration coefficients use the normalized offset limited to the
    area, so they never drop below the value at the edge. The position
    weights limit the normalized offset to 0.999.

    Returns
    -------
    AdaptiveWeightEval
        normalized offsets, coefficients and weights
    """
    x_norm, y_norm = track.normalize(X, Y)
    xc = min(max(x_norm, -1.0), 1.0)
    yc = min(max(y_norm, -1.0), 1.0)
    c_x = 1.0 - (1.0 - ACCEL_COEFFICIENT_FLOOR) * xc ** 8
    c_y = 1.0 - (1.0 - ACCEL_COEFFICIENT_FLOOR) * yc ** 8
    xp = min(max(x_norm, -POSITION_NORM_CLAMP), POSITION_NORM_CLAMP)
    yp = min(max(y_norm, -POSITION_NORM_CLAMP), POSITION_NORM_CLAMP)
    return AdaptiveWeightEval(
        x_norm=x_norm, y_norm=y_norm, c_x=c_x, c_y=c_y,
        w_ax=c_x * c_y * weights.w_c_ax,
        w_ay=c_x * c_y * weights.w_c_ay,
        w_X=weights.w_c_X / (1.0 - xp ** 4) - weights.w_c_X,
        w_Y=weights.w_c_Y / (1.0 - yp ** 4) - weights.w_c_Y)

def adaptive_accel_weights(X, Y, track, weights):
    """Returns (w_ax, w_ay) at the given position.

    Parameters
    ----------
    X, Y : float
        position in metres, may lie outside the area
    track : TrackArea
        test area
    weights : PlannerWeights
        base weights

    Returns
    -------
    tuple of float
        acceleration weights scaled by c_x * c_y
    """
    e = evaluate_adaptive_weights(X, Y, track, weights)
    return e.w_ax, e.w_ay

def adaptive_position_weights(X, Y, track, weights):
    """Returns (w_X, w_Y), zero at the centre and growing towards the edges."""
    e = evaluate_adaptive_weights(X, Y, track, weights)
    return e.w_X, e.w_Y

def stage_cost(state, u, ax_ref, ay_ref, config):
    """Returns the tracking cost of one state and input.

    Parameters
    ----------
    state : VehicleState
        state at the stage
    u : ControlInput
        input applied at the stage
    ax_ref, ay_ref : float
        reference accelerations in m/s^2
    config : PlannerConfig
        planner configuration

    Returns
    -------
    float
        weighted squared tracking, centring and input-rate errors
    """
    track, weights = config.track, config.weights
    e = evaluate_adaptive_weights(state.X, state.Y, track, weights)
    ay = vehicle.steady_state_ay(state.vx, state.delta, config.vehicle)
    return (e.w_ax * (state.ax - ax_ref) ** 2
            + e.w_ay * (ay - ay_ref) ** 2
            + e.w_X * (state.X - track.x_centre) ** 2
            + e.w_Y * (state.Y - track.y_centre) ** 2
            + weights.w_ddelta * u.d_delta ** 2
            + weights.w_dax * u.d_ax ** 2)

def state_limits(config, tightened=False):
    """Returns (lower, upper) limits of X, Y, vx, delta and ax."""
    track, bounds = config.track, config.bounds
    lower = np.array([track.x_min, track.y_min, bounds.vx[0], bounds.delta[0], bounds.ax[0]])
    upper = np.array([track.x_max, track.y_max, bounds.vx[1], bounds.delta[1], bounds.ax[1]])
    if tightened:
        s = config.solver
        margin = np.array([s.position_margin, s.position_margin, s.speed_margin,
                           s.steer_margin, s.accel_margin])
        lower = lower + margin
        upper = upper - margin
    return lower, upper

def bound_violation(states, config):
    """Returns the largest amount by which states exceed the state limits."""
    x = np.atleast_2d(states)[:, _BOUNDED]
    lower, upper = state_limits(config)
    if x.size == 0:
        return 0.0
    return float(max(0.0, np.max(x - upper), np.max(lower - x)))

def input_violation(inputs, config):
    """Returns the largest amount by which inputs exceed the input limits."""
    u = np.asarray(inputs, dtype=float).reshape(-1, vehicle.INPUT_SIZE)
    if u.size == 0:
        return 0.0
    b = config.bounds
    lower = np.array([b.d_delta[0], b.d_ax[0]])
    upper = np.array([b.d_delta[1], b.d_ax[1]])
    return float(max(0.0, np.max(u - upper), np.max(lower - u)))

def shift_warm_start(prev_inputs):
    """Drops the first input and repeats the last one.

    Parameters
    ----------
    prev_inputs : sequence or numpy.ndarray
        input sequence of the previous horizon

    Returns
    -------
    same type as prev_inputs
        shifted sequence of the same length
    """
    if len(prev_inputs) == 0:
        raise ValueError('cannot shift an empty input sequence')
    if isinstance(prev_inputs, np.ndarray):
        return np.concatenate((prev_inputs[1:], prev_inputs[-1:]))
    return list(prev_inputs[1:]) + [prev_inputs[-1]]


def _pad_window(window, n):
    w = np.asarray(window, dtype=float).ravel()
    if len(w) == 0:
        raise ValueError('reference window is empty')
    if len(w) >= n:
        return w[:n]
    return np.concatenate((w, np.full(n - len(w), w[-1])))

def _as_input_array(inputs, n):
    if inputs is None:
        return None
    if len(inputs) > 0 and isinstance(inputs[0], ControlInput):
        u = np.array([x.to_array() for x in inputs])
    else:
        u = np.array(inputs, dtype=float).reshape(-1, vehicle.INPUT_SIZE)
    if len(u) == 0:
        return None
    if len(u) < n:
        u = np.concatenate((u, np.repeat(u[-1:], n - len(u), axis=0)))
    return u[:n]


class _HorizonProblem:
    """Cost, penalty and gradient of one horizon as functions of the inputs."""

    def __init__(self, x0, ax_ref, ay_ref, config):
        self.x0 = x0
        self.config = config
        self.Np = config.Np
        self.Ts = config.Ts
        self.ax_ref = ax_ref
        self.ay_ref = ay_ref
        self.lower, self.upper = state_limits(config, tightened=True)
        self.bounds = self._input_bounds()
        self.evaluations = 0
        self._cache = {}

    def _input_bounds(self):
        b, x0, ts = self.config.bounds, self.x0, self.Ts
        # the first input keeps the steering and acceleration integrators
        # inside their true limits exactly
        lo_dd = max(b.d_delta[0], (b.delta[0] - x0[IDELTA]) / ts)
        hi_dd = min(b.d_delta[1], (b.delta[1] - x0[IDELTA]) / ts)
        lo_da = max(b.d_ax[0], (b.ax[0] - x0[IAX]) / ts)
        hi_da = min(b.d_ax[1], (b.ax[1] - x0[IAX]) / ts)
        if lo_dd > hi_dd or lo_da > hi_da:
            raise exceptions.InfeasibleStartError('no admissible first input keeps delta and ax in bounds')
        bounds = np.empty((self.Np, 2, 2))
        bounds[:, 0] = b.d_delta
        bounds[:, 1] = b.d_ax
        bounds[0, 0] = (lo_dd, hi_dd)
        bounds[0, 1] = (lo_da, hi_da)
        return bounds.reshape(-1, 2)

    def clip(self, u_flat):
        return np.clip(u_flat, self.bounds[:, 0], self.bounds[:, 1])

    def rollout(self, U):
        """Returns the predicted states and, per step, the stage points of its RK4 sub-steps."""
        params = self.config.vehicle
        ratio = self.config.solver.substep_ratio
        states = np.empty((self.Np + 1, vehicle.STATE_SIZE))
        stages = []
        x = self.x0
        states[0] = x
        for k in range(self.Np):
            substeps = vehicle.substep_count(x, self.Ts, params, ratio)
            x, points = vehicle.rk4_stages(x, U[k], self.Ts, params, substeps)
            stages.append(points)
            states[k + 1] = x
        return states, stages

    def sensitivities(self, stages):
        """Returns the (Np, 8, 8) and (Np, 8, 2) sensitivities of every horizon step."""
        counts = np.array([len(points) for points in stages])
        fx, fu = vehicle.rk4_sensitivities(np.concatenate(stages), np.repeat(self.Ts / counts, counts),
                                           self.config.vehicle)
        if np.all(counts == 1):
            return fx, fu
        step_fx = np.empty((self.Np, vehicle.STATE_SIZE, vehicle.STATE_SIZE))
        step_fu = np.empty((self.Np, vehicle.STATE_SIZE, vehicle.INPUT_SIZE))
        ends = np.cumsum(counts)
        for k in range(self.Np):
            begin = ends[k] - counts[k]
            step_fx[k], step_fu[k] = vehicle.chain_sensitivities(fx[begin:ends[k]], fu[begin:ends[k]])
        return step_fx, step_fu

    def _state_terms(self, states):
        """Returns the tracking cost of all states and its state gradient."""
        track, w = self.config.track, self.config.weights
        wheelbase = self.config.vehicle.wheelbase
        X, Y = states[:, IX], states[:, IY]
        vx, delta, ax = states[:, IVX], states[:, IDELTA], states[:, IAX]
        hx, hy = track.x_half_width, track.y_half_width
        ox, oy = X - track.x_centre, Y - track.y_centre
        nx, ny = ox / hx, oy / hy

        k = 1.0 - ACCEL_COEFFICIENT_FLOOR
        nxa, nya = np.clip(nx, -1.0, 1.0), np.clip(ny, -1.0, 1.0)
        cx = 1.0 - k * nxa ** 8
        cy = 1.0 - k * nya ** 8
        dcx = np.where(np.abs(nx) < 1.0, -8.0 * k * nxa ** 7 / hx, 0.0)
        dcy = np.where(np.abs(ny) < 1.0, -8.0 * k * nya ** 7 / hy, 0.0)

        ay = vx * vx * delta / wheelbase
        ea = ax - self.ax_ref
        ey = ay - self.ay_ref
        e = w.w_c_ax * ea * ea + w.w_c_ay * ey * ey
        cxy = cx * cy

        nxp = np.clip(nx, -POSITION_NORM_CLAMP, POSITION_NORM_CLAMP)
        nyp = np.clip(ny, -POSITION_NORM_CLAMP, POSITION_NORM_CLAMP)
        qx, qy = 1.0 - nxp ** 4, 1.0 - nyp ** 4
        wx = w.w_c_X / qx - w.w_c_X
        wy = w.w_c_Y / qy - w.w_c_Y
        dwx = np.where(np.abs(nx) < POSITION_NORM_CLAMP, 4.0 * w.w_c_X * nxp ** 3 / (qx * qx * hx), 0.0)
        dwy = np.where(np.abs(ny) < POSITION_NORM_CLAMP, 4.0 * w.w_c_Y * nyp ** 3 / (qy * qy * hy), 0.0)

        cost = float(np.sum(cxy * e + wx * ox * ox + wy * oy * oy))
        grad = np.zeros_like(states)
        grad[:, IX] = dcx * cy * e + dwx * ox * ox + 2.0 * wx * ox
        grad[:, IY] = cx * dcy * e + dwy * oy * oy + 2.0 * wy * oy
        grad[:, IAX] = 2.0 * cxy * w.w_c_ax * ea
        g_ay = 2.0 * cxy * w.w_c_ay * ey
        grad[:, IVX] = g_ay * 2.0 * vx * delta / wheelbase
        grad[:, IDELTA] = g_ay * vx * vx / wheelbase
        return cost, grad

    def _penalty_terms(self, states):
        z = states[1:, _BOUNDED]
        over = np.maximum(z - self.upper, 0.0)
        under = np.maximum(self.lower - z, 0.0)
        penalty = float(np.sum(over * over + under * under))
        grad = np.zeros_like(states)
        grad[1:, _BOUNDED] = 2.0 * (over - under)
        return penalty, grad

    def _input_terms(self, U):
        w = self.config.weights
        weight = np.array([w.w_ddelta, w.w_dax])
        return float(np.sum(weight * U * U)), 2.0 * weight * U

    def cost(self, u_flat):
        """Returns (tracking cost, states) without penalty, or None off the model domain."""
        U = u_flat.reshape(self.Np, 2)
        try:
            states, _ = self.rollout(U)
        except exceptions.ModelDomainError:
            return None, None
        j_state, _ = self._state_terms(states)
        j_input, _ = self._input_terms(U)
        return j_state + j_input, states

    def merit(self, u_flat, rho):
        key = (u_flat.tobytes(), rho)
        if key in self._cache:
            return self._cache[key][0]
        return self.merit_and_gradient(u_flat, rho)[0]

    def merit_and_gradient(self, u_flat, rho):
        key = (u_flat.tobytes(), rho)
        if key in self._cache:
            return self._cache[key]
        self.evaluations += 1
        U = u_flat.reshape(self.Np, 2)
        try:
            states, stages = self.rollout(U)
            fx, fu = self.sensitivities(stages)
        except exceptions.ModelDomainError:
            # off the model domain; a large finite value lets the line search back off
            return DOMAIN_MERIT, np.zeros_like(u_flat)
        j_state, g_state = self._state_terms(states)
        j_input, g_input = self._input_terms(U)
        penalty, g_penalty = self._penalty_terms(states)
        g = g_state + rho * g_penalty
        # adjoint sweep through the step sensitivities
        grad = np.empty_like(U)
        lam = g[self.Np]
        for k in range(self.Np - 1, -1, -1):
            grad[k] = fu[k].T @ lam
            lam = g[k] + fx[k].T @ lam
        grad += g_input
        result = (j_state + j_input + rho * penalty, grad.ravel())
        if len(self._cache) > 16:
            self._cache.clear()
        self._cache[key] = result
        return result

    def violation(self, u_flat):
        _, states = self.cost(u_flat)
        if states is None:
            return math.inf
        return bound_violation(states[1:], self.config)


def _neutral_inputs(x0, config):
    """Inputs that wind steering and acceleration back towards zero."""
    b, ts = config.bounds, config.Ts
    u = np.zeros((config.Np, 2))
    delta, ax = x0[IDELTA], x0[IAX]
    for k in range(config.Np):
        u[k, 0] = min(max(-delta / ts, b.d_delta[0]), b.d_delta[1])
        u[k, 1] = min(max(-ax / ts, b.d_ax[0]), b.d_ax[1])
        delta += ts * u[k, 0]
        ax += ts * u[k, 1]
    return u

def solve_horizon(x0, ax_ref_window, ay_ref_window, config, warm_start=None):
    """Optimizes the input sequence of one prediction horizon.

    Parameters
    ----------
    x0 : VehicleState or array-like
        start state inside all bounds
    ax_ref_window, ay_ref_window : array-like
        reference accelerations from the start state onwards; windows
        shorter than Np + 1 samples hold their last value
    config : PlannerConfig
        planner configuration
    warm_start : array-like, optional
        (Np, 2) input sequence to start from

    Returns
    -------
    HorizonSolution
        inputs, predicted states, tracking cost and diagnostics
    """
    x0 = x0.to_array() if isinstance(x0, VehicleState) else np.asarray(x0, dtype=float)
    violation = bound_violation(x0, config)
    if violation > config.solver.max_violation:
        raise exceptions.InfeasibleStartError(f'start state violates the bounds by {violation}')
    settings = config.solver
    n_ref = config.Np + 1
    problem = _HorizonProblem(x0, _pad_window(ax_ref_window, n_ref),
                              _pad_window(ay_ref_window, n_ref), config)

    rho = settings.penalty_initial
    candidates = []
    warm = _as_input_array(warm_start, config.Np)
    if warm is not None:
        candidates.append((START_WARM, problem.clip(warm.ravel())))
    candidates.append((START_ZERO, problem.clip(np.zeros(2 * config.Np))))
    candidates.append((START_NEUTRAL, problem.clip(_neutral_inputs(x0, config).ravel())))
    start, u = min(candidates, key=lambda c: problem.merit(c[1], rho))

    history = []
    def record(xk):
        history.append((rho, problem.merit(xk, rho)))

    iterations = 0
    result = None
    while True:
        remaining = settings.max_iterations - iterations
        if remaining <= 0:
            break
        result = minimize(problem.merit_and_gradient, u, args=(rho,), jac=True,
                          method='L-BFGS-B', bounds=problem.bounds, callback=record,
                          options={'maxiter': remaining, 'gtol': settings.tolerance,
                                   'ftol': settings.ftol})
        iterations += int(result.nit)
        if math.isfinite(result.fun) and result.fun <= problem.merit(u, rho):
            u = result.x
        violation = problem.violation(u)
        if violation <= settings.max_violation or rho >= settings.penalty_max:
            break
        rho = min(rho * settings.penalty_growth, settings.penalty_max)

    # never return something worse than the starting points
    best = min([u] + [c[1] for c in candidates], key=lambda v: problem.merit(v, rho))
    if best is not u:
        u = best
    cost, states = problem.cost(u)
    if states is None:
        raise exceptions.PlannerException('no input sequence keeps the model in its domain')
    violation = bound_violation(states[1:], config)
    converged = bool(result is not None and result.success and violation <= settings.max_violation)
    message = '' if result is None else str(result.message)
    diagnostics = HorizonDiagnostics(
        iterations=iterations, evaluations=problem.evaluations, converged=converged,
        violation=violation, penalty=rho, start=start, message=message,
        merit_history=tuple(history))
    return HorizonSolution(u.reshape(config.Np, 2), states, cost, diagnostics)

def plan(reference, config, progress=None):
    """Plans a trajectory that tracks the reference accelerations.

    Parameters
    ----------
    reference : ReferenceTrace
        reference sampled at config.Ts
    config : PlannerConfig
        planner configuration
    progress : callable, optional
        called as progress(step, total) after every step

    Returns
    -------
    PlannedTrajectory
        one state per reference sample
    """
    if abs(reference.dt - config.Ts) > 1e-9:
        raise exceptions.SamplingMismatchError(
            f'reference dt = {reference.dt} s differs from planner Ts = {config.Ts} s; '
            'resample the reference first')
    if config.Np < MYOPIC_HORIZON:
        logger.warning('prediction horizon of %d steps is myopic', config.Np)
    state = config.x_init
    states = [state]
    inputs = []
    diagnostics = []
    warm = None
    total = reference.n - 1
    ax_ref, ay_ref = reference.ax_ref, reference.ay_ref
    window = config.Np + 1
    for k in range(total):
        solution = solve_horizon(state, ax_ref[k:k + window], ay_ref[k:k + window], config, warm)
        u = ControlInput.from_array(solution.inputs[0])
        state = vehicle.step(state, u, config.Ts, config.vehicle)
        violation = max(bound_violation(state.to_array(), config),
                        input_violation(u.to_array(), config))
        if violation > config.solver.max_violation:
            raise exceptions.PlannerBoundsViolation(
                f'step {k}: planned state breaks the bounds by {violation}')
        d = solution.diagnostics
        diagnostics.append(StepDiagnostics(k, solution.cost, d.iterations, d.converged,
                                           d.violation, d.penalty))
        logger.debug('step %d: cost = %.6g, iterations = %d, converged = %s',
                     k, solution.cost, d.iterations, d.converged)
        if not d.converged:
            logger.warning('step %d: solver did not converge (%s)', k, d.message)
        if (k + 1) % PROGRESS_INTERVAL == 0:
            logger.info('planned %d of %d steps', k + 1, total)
        states.append(state)
        inputs.append(u)
        warm = shift_warm_start(solution.inputs)
        if progress is not None:
            progress(k + 1, total)
    return PlannedTrajectory(config.Ts, states, inputs, diagnostics, config.vehicle)
