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

"""Linear bicycle model with rate inputs.

The state vector is ``[X, Y, vx, vy, psi, r, delta, ax]`` and the input
vector is ``[d_delta, d_ax]``. Steering angle and longitudinal
acceleration are integrators of the inputs. Lateral tyre forces are
linear in the tangent of the slip angles.
"""

import math

from dataclasses import dataclass, fields

import numpy as np

from . import exceptions


#### Constants

STATE_SIZE = 8
INPUT_SIZE = 2

IX, IY, IVX, IVY, IPSI, IR, IDELTA, IAX = range(STATE_SIZE)
ID_DELTA, ID_AX = range(INPUT_SIZE)

SLIP_ANGLE_LIMIT = math.pi / 2

# |lambda| h per RK4 sub-step: accurate to about 1e-6 in step(), merely stable in the planner
ACCURATE_STEP_RATIO = 0.25
STABLE_STEP_RATIO = 2.0

INPUT_MATRIX = np.zeros((STATE_SIZE, INPUT_SIZE))
INPUT_MATRIX[IDELTA, ID_DELTA] = 1.0
INPUT_MATRIX[IAX, ID_AX] = 1.0
INPUT_MATRIX.setflags(write=False)

_IDENTITY = np.eye(STATE_SIZE)
_IDENTITY.setflags(write=False)


@dataclass(frozen=True)
class VehicleParams:
    """Bicycle model parameters.

    Defaults approximate a compact electric hatchback.
    """
    m: float = 1615.0           # kg
    Izz: float = 2500.0         # kg m^2
    lf: float = 1.27            # m
    lr: float = 1.35            # m
    C_alpha_f: float = 80000.0  # N/rad
    C_alpha_r: float = 80000.0  # N/rad

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f'vehicle parameter {f.name} must be positive: {value}')

    @property
    def wheelbase(self):
        return self.lf + self.lr


@dataclass(frozen=True)
class VehicleState:
    X: float = 0.0      # m
    Y: float = 0.0      # m
    vx: float = 1.0     # m/s
    vy: float = 0.0     # m/s
    psi: float = 0.0    # rad
    r: float = 0.0      # rad/s
    delta: float = 0.0  # rad
    ax: float = 0.0     # m/s^2

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ValueError(f'state component {f.name} is not finite: {value}')

    def to_array(self):
        return np.array([self.X, self.Y, self.vx, self.vy, self.psi, self.r, self.delta, self.ax])

    @classmethod
    def from_array(cls, x):
        return cls(*(float(v) for v in x))

    def translated(self, dX, dY):
        return VehicleState(self.X + dX, self.Y + dY, self.vx, self.vy,
                            self.psi, self.r, self.delta, self.ax)


@dataclass(frozen=True)
class ControlInput:
    d_delta: float = 0.0  # rad/s
    d_ax: float = 0.0     # m/s^3

    def __post_init__(self):
        if not (math.isfinite(self.d_delta) and math.isfinite(self.d_ax)):
            raise ValueError(f'input is not finite: ({self.d_delta}, {self.d_ax})')

    def to_array(self):
        return np.array([self.d_delta, self.d_ax])

    @classmethod
    def from_array(cls, u):
        return cls(float(u[0]), float(u[1]))


@dataclass(frozen=True)
class TireForces:
    Fyf: float      # N
    Fyr: float      # N
    alpha_f: float  # rad
    alpha_r: float  # rad


@dataclass(frozen=True)
class StateDerivative:
    dX: float
    dY: float
    dvx: float
    dvy: float
    dpsi: float
    dr: float
    ddelta: float
    dax: float

    def to_array(self):
        return np.array([self.dX, self.dY, self.dvx, self.dvy,
                         self.dpsi, self.dr, self.ddelta, self.dax])


def _slip_angles(vx, vy, r, delta, params):
    if not vx > 0:
        raise exceptions.ModelDomainError(f'longitudinal speed must be positive: vx = {vx}')
    alpha_f = delta - (vy + params.lf * r) / vx
    alpha_r = -(vy - params.lr * r) / vx
    if abs(alpha_f) >= SLIP_ANGLE_LIMIT or abs(alpha_r) >= SLIP_ANGLE_LIMIT:
        raise exceptions.ModelDomainError(
            f'slip angle outside linear tyre domain: alpha_f = {alpha_f}, alpha_r = {alpha_r}')
    return alpha_f, alpha_r

def tire_forces(state, params):
    """Returns lateral axle forces and slip angles.

    Parameters
    ----------
    state : VehicleState
        vehicle state with positive vx
    params : VehicleParams
        vehicle parameters

    Returns
    -------
    TireForces
        front and rear lateral forces and slip angles

    Raises
    ------
    ModelDomainError
        if vx <= 0 or a slip angle reaches pi/2
    """
    alpha_f, alpha_r = _slip_angles(state.vx, state.vy, state.r, state.delta, params)
    return TireForces(params.C_alpha_f * math.tan(alpha_f),
                      params.C_alpha_r * math.tan(alpha_r),
                      alpha_f, alpha_r)

def derivatives_array(x, u, params):
    """Evaluates the derivative field on state and input vectors."""
    _, _, vx, vy, psi, r, delta, ax = x
    alpha_f, alpha_r = _slip_angles(vx, vy, r, delta, params)
    fyf = params.C_alpha_f * math.tan(alpha_f)
    fyr = params.C_alpha_r * math.tan(alpha_r)
    cos_psi, sin_psi = math.cos(psi), math.sin(psi)
    cos_delta, sin_delta = math.cos(delta), math.sin(delta)
    return np.array([
        vx * cos_psi - vy * sin_psi,
        vx * sin_psi + vy * cos_psi,
        ax - fyf * sin_delta / params.m + vy * r,
        (fyf * cos_delta + fyr) / params.m - vx * r,
        r,
        (params.lf * fyf * cos_delta - params.lr * fyr) / params.Izz,
        u[ID_DELTA],
        u[ID_AX],
    ])

def jacobians_batch(points, params):
    """Returns the state partials A of the derivative field at many states.

    Parameters
    ----------
    points : numpy.ndarray
        (n, 8) array of state vectors
    params : VehicleParams
        vehicle parameters

    Returns
    -------
    numpy.ndarray
        (n, 8, 8) array; the input partials are the constant ``INPUT_MATRIX``
    """
    p = np.atleast_2d(points)
    vx, vy, psi, r, delta = p[:, IVX], p[:, IVY], p[:, IPSI], p[:, IR], p[:, IDELTA]
    if not np.all(vx > 0):
        raise exceptions.ModelDomainError(
            f'longitudinal speed must be positive: min vx = {np.min(vx)}')
    m, izz, lf, lr = params.m, params.Izz, params.lf, params.lr
    inv_vx = 1.0 / vx
    alpha_f = delta - (vy + lf * r) * inv_vx
    alpha_r = -(vy - lr * r) * inv_vx
    if np.any(np.abs(alpha_f) >= SLIP_ANGLE_LIMIT) or np.any(np.abs(alpha_r) >= SLIP_ANGLE_LIMIT):
        raise exceptions.ModelDomainError('slip angle outside linear tyre domain')
    tan_f, tan_r = np.tan(alpha_f), np.tan(alpha_r)
    fyf = params.C_alpha_f * tan_f
    # force sensitivity to slip angle
    kf = params.C_alpha_f * (1.0 + tan_f * tan_f)
    kr = params.C_alpha_r * (1.0 + tan_r * tan_r)
    # partials of the forces with respect to vx, vy, r, delta
    fyf_vx = kf * (vy + lf * r) * inv_vx * inv_vx
    fyf_vy = -kf * inv_vx
    fyf_r = -kf * lf * inv_vx
    fyf_delta = kf
    fyr_vx = kr * (vy - lr * r) * inv_vx * inv_vx
    fyr_vy = -kr * inv_vx
    fyr_r = kr * lr * inv_vx
    cos_psi, sin_psi = np.cos(psi), np.sin(psi)
    cos_delta, sin_delta = np.cos(delta), np.sin(delta)

    a = np.zeros((len(p), STATE_SIZE, STATE_SIZE))
    a[:, IX, IVX] = cos_psi
    a[:, IX, IVY] = -sin_psi
    a[:, IX, IPSI] = -vx * sin_psi - vy * cos_psi
    a[:, IY, IVX] = sin_psi
    a[:, IY, IVY] = cos_psi
    a[:, IY, IPSI] = vx * cos_psi - vy * sin_psi

    a[:, IVX, IVX] = -sin_delta * fyf_vx / m
    a[:, IVX, IVY] = -sin_delta * fyf_vy / m + r
    a[:, IVX, IR] = -sin_delta * fyf_r / m + vy
    a[:, IVX, IDELTA] = -(fyf_delta * sin_delta + fyf * cos_delta) / m
    a[:, IVX, IAX] = 1.0

    a[:, IVY, IVX] = (cos_delta * fyf_vx + fyr_vx) / m - r
    a[:, IVY, IVY] = (cos_delta * fyf_vy + fyr_vy) / m
    a[:, IVY, IR] = (cos_delta * fyf_r + fyr_r) / m - vx
    a[:, IVY, IDELTA] = (cos_delta * fyf_delta - fyf * sin_delta) / m

    a[:, IPSI, IR] = 1.0

    a[:, IR, IVX] = (lf * cos_delta * fyf_vx - lr * fyr_vx) / izz
    a[:, IR, IVY] = (lf * cos_delta * fyf_vy - lr * fyr_vy) / izz
    a[:, IR, IR] = (lf * cos_delta * fyf_r - lr * fyr_r) / izz
    a[:, IR, IDELTA] = lf * (cos_delta * fyf_delta - fyf * sin_delta) / izz
    return a

def jacobians_array(x, u, params):
    """Returns the partial derivatives (A, B) of the derivative field.

    A is 8x8 with respect to the state, B is 8x2 with respect to the input.
    """
    return jacobians_batch(np.asarray(x, dtype=float)[None, :], params)[0], INPUT_MATRIX

def lateral_stiffness(x, params):
    """Returns the largest eigenvalue magnitude of the lateral (vy, r) dynamics in 1/s.

    It grows like 1/vx, so a fixed RK4 step turns unstable at low speed.
    """
    _, _, vx, vy, _, r, delta, _ = x
    alpha_f, alpha_r = _slip_angles(vx, vy, r, delta, params)
    tan_f, tan_r = math.tan(alpha_f), math.tan(alpha_r)
    kf = params.C_alpha_f * (1.0 + tan_f * tan_f) * math.cos(delta)
    kr = params.C_alpha_r * (1.0 + tan_r * tan_r)
    lf, lr = params.lf, params.lr
    a11 = -(kf + kr) / (params.m * vx)
    a12 = -(lf * kf - lr * kr) / (params.m * vx) - vx
    a21 = -(lf * kf - lr * kr) / (params.Izz * vx)
    a22 = -(lf * lf * kf + lr * lr * kr) / (params.Izz * vx)
    half_trace = 0.5 * (a11 + a22)
    det = a11 * a22 - a12 * a21
    disc = half_trace * half_trace - det
    if disc >= 0:
        return abs(half_trace) + math.sqrt(disc)
    return math.sqrt(det)

def substep_count(x, dt, params, ratio=ACCURATE_STEP_RATIO):
    """Returns the number of RK4 sub-steps that keeps |lambda| h at or below ratio."""
    return max(1, int(math.ceil(dt * lateral_stiffness(x, params) / ratio)))

def rk4_stages(x, u, dt, params, substeps=1):
    """Advances a state vector over dt with RK4 sub-steps and the input held constant.

    Returns
    -------
    numpy.ndarray
        next state
    numpy.ndarray
        (substeps, 4, 8) array of the points the derivative field was evaluated at
    """
    h = dt / substeps
    points = np.empty((substeps, 4, STATE_SIZE))
    for i in range(substeps):
        k1 = derivatives_array(x, u, params)
        x2 = x + 0.5 * h * k1
        k2 = derivatives_array(x2, u, params)
        x3 = x + 0.5 * h * k2
        k3 = derivatives_array(x3, u, params)
        x4 = x + h * k3
        k4 = derivatives_array(x4, u, params)
        points[i, 0], points[i, 1], points[i, 2], points[i, 3] = x, x2, x3, x4
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x, points

def step_array(x, u, dt, params, ratio=ACCURATE_STEP_RATIO):
    """Advances a state vector over dt with the input held constant."""
    x = np.asarray(x, dtype=float)
    return rk4_stages(x, u, dt, params, substep_count(x, dt, params, ratio))[0]

def rk4_sensitivities(stage_points, dt, params):
    """Differentiates single RK4 steps through their stage points.

    Parameters
    ----------
    stage_points : numpy.ndarray
        (n, 4, 8) stage points of n steps as returned by ``rk4_stages``
    dt : float or array-like
        step length in seconds, or one length per step
    params : VehicleParams
        vehicle parameters

    Returns
    -------
    numpy.ndarray
        (n, 8, 8) sensitivities of each next state to its current state
    numpy.ndarray
        (n, 8, 2) sensitivities of each next state to its input
    """
    n = stage_points.shape[0]
    h = np.asarray(dt, dtype=float).reshape(-1, 1, 1)
    a = jacobians_batch(stage_points.reshape(-1, STATE_SIZE), params).reshape(n, 4, STATE_SIZE, STATE_SIZE)
    a1, a2, a3, a4 = a[:, 0], a[:, 1], a[:, 2], a[:, 3]
    s1 = a1
    s2 = a2 + 0.5 * h * (a2 @ s1)
    s3 = a3 + 0.5 * h * (a3 @ s2)
    s4 = a4 + h * (a4 @ s3)
    b = INPUT_MATRIX
    # A @ B picks the steering and acceleration columns
    t2 = 0.5 * h * a2[:, :, IDELTA:IAX + 1] + b
    t3 = 0.5 * h * (a3 @ t2) + b
    t4 = h * (a4 @ t3) + b
    fx = _IDENTITY + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
    fu = (h / 6.0) * (b + 2.0 * t2 + 2.0 * t3 + t4)
    return fx, fu

def chain_sensitivities(fx, fu):
    """Composes the sensitivities of consecutive sub-steps sharing one input.

    Returns the 8x8 and 8x2 sensitivities of the last state to the first state and the input.
    """
    total_x, total_u = fx[0], fu[0]
    for i in range(1, len(fx)):
        total_u = fx[i] @ total_u + fu[i]
        total_x = fx[i] @ total_x
    return total_x, total_u

def step_with_jacobians(x, u, dt, params, ratio=ACCURATE_STEP_RATIO):
    """Advances a state vector over dt and returns its sensitivities.

    Returns
    -------
    numpy.ndarray
        next state
    numpy.ndarray
        8x8 sensitivity of the next state to the current state
    numpy.ndarray
        8x2 sensitivity of the next state to the input
    """
    x = np.asarray(x, dtype=float)
    substeps = substep_count(x, dt, params, ratio)
    x_next, stages = rk4_stages(x, u, dt, params, substeps)
    fx, fu = chain_sensitivities(*rk4_sensitivities(stages, dt / substeps, params))
    return x_next, fx, fu

def derivatives(state, u, params):
    """Returns the time derivative of the state.

    Parameters
    ----------
    state : VehicleState
        vehicle state with positive vx
    u : ControlInput
        steering rate and jerk
    params : VehicleParams
        vehicle parameters

    Returns
    -------
    StateDerivative
        derivative of every state component
    """
    return StateDerivative(*(float(v) for v in derivatives_array(state.to_array(), u.to_array(), params)))

def jacobians(state, u, params):
    """Returns the analytic partials (A, B) of ``derivatives``."""
    a, b = jacobians_array(state.to_array(), u.to_array(), params)
    return a, b.copy()

def steady_state_ay(vx, delta, params):
    """Returns the lateral acceleration of steady-state turning, vx^2 delta / (lf + lr)."""
    return vx * vx * delta / params.wheelbase

def step(state, u, dt, params):
    """Integrates the model over dt with RK4 and a zero-order-hold input.

    The step is split into as many RK4 sub-steps as the lateral stiffness of the
    current state needs, so the result does not depend on how dt relates to vx.

    Parameters
    ----------
    state : VehicleState
        current state
    u : ControlInput
        input held over the step
    dt : float
        step length in seconds
    params : VehicleParams
        vehicle parameters

    Returns
    -------
    VehicleState
        state after dt
    """
    if not dt > 0:
        raise ValueError(f'dt must be positive: {dt}')
    x_next = step_array(state.to_array(), u.to_array(), dt, params)
    if not np.all(np.isfinite(x_next)):
        raise exceptions.ModelDomainError('integration produced a non-finite state')
    return VehicleState.from_array(x_next)
