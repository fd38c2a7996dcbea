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

"""Classes for motion trace data and their file format."""

from dataclasses import dataclass

import numpy as np

from . import exceptions


#### Constants

COLUMN_TIME = 't'

CHANNEL_X = 'X'
CHANNEL_Y = 'Y'
CHANNEL_VX = 'vx'
CHANNEL_AX = 'ax'
CHANNEL_AY = 'ay'
CHANNEL_R = 'r'
CHANNEL_AZ = 'az'
CHANNEL_ROLL_ACC = 'roll_acc'
CHANNEL_PITCH_ACC = 'pitch_acc'
CHANNEL_YAW_ACC = 'yaw_acc'

REQUIRED_CHANNELS = (CHANNEL_X, CHANNEL_Y, CHANNEL_VX, CHANNEL_AX, CHANNEL_AY, CHANNEL_R)
OPTIONAL_CHANNELS = (CHANNEL_AZ, CHANNEL_ROLL_ACC, CHANNEL_PITCH_ACC, CHANNEL_YAW_ACC)
KNOWN_CHANNELS = REQUIRED_CHANNELS + OPTIONAL_CHANNELS

# channels each declared use of a trace file depends on
USE_ANY = 'any'
USE_PLANNING = 'planning'
USE_STANDSTILL = 'standstill'
USE_REQUIREMENTS = {
    USE_ANY: (),
    USE_PLANNING: (CHANNEL_AX, CHANNEL_AY),
    USE_STANDSTILL: (CHANNEL_VX,),
}

TIME_UNIFORMITY_TOLERANCE = 1e-6  # s

MARK_COLUMNS = ('index', 'target_speed', 'desired_decel', 'dwell')
DIAGNOSTIC_COLUMNS = ('step', 'cost', 'iterations', 'converged', 'violation', 'penalty')

TRAJECTORY_COLUMNS = ('t', 'X', 'Y', 'vx', 'vy', 'psi', 'r', 'delta', 'ax',
                      'd_delta', 'd_ax', 'ay')


def _freeze(values, name):
    array = np.array(values, dtype=float)
    if array.ndim != 1:
        raise ValueError(f'channel {name} must be one-dimensional')
    array.setflags(write=False)
    return array


class Trace:
    """Uniformly sampled time series of vehicle motion channels.

    Parameters
    ----------
    t0 : float
        start time in seconds
    dt : float
        sample interval in seconds
    channels : dict of str to array-like
        named channel series, all of equal length
    """
    def __init__(self, t0, dt, channels):
        if not dt > 0:
            raise ValueError(f'dt must be positive: {dt}')
        self.__t0 = float(t0)
        self.__dt = float(dt)
        frozen = {}
        n = None
        for name, values in channels.items():
            array = _freeze(values, name)
            if n is None:
                n = len(array)
            elif len(array) != n:
                raise exceptions.MalformedTraceError(
                    f'channel {name} has {len(array)} samples, expected {n}')
            bad = np.flatnonzero(~np.isfinite(array))
            if len(bad) > 0:
                raise exceptions.TraceDataError(name, int(bad[0]))
            frozen[name] = array
        self.__channels = frozen
        self.__n = 0 if n is None else n

    @property
    def t0(self):
        return self.__t0

    @property
    def dt(self):
        return self.__dt

    @property
    def n(self):
        return self.__n

    @property
    def channels(self):
        return dict(self.__channels)

    @property
    def duration(self):
        """Time span between the first and the last sample."""
        return max(self.__n - 1, 0) * self.__dt

    def __len__(self):
        return self.__n

    def names(self):
        return list(self.__channels.keys())

    def has(self, name):
        return name in self.__channels

    def get(self, name):
        """Returns the named channel.

        Raises
        ------
        TraceSchemaError
            if the channel is not present
        """
        if name not in self.__channels:
            raise exceptions.TraceSchemaError(name)
        return self.__channels[name]

    def time(self):
        """Returns absolute timestamps of all samples."""
        return self.__t0 + self.__dt * np.arange(self.__n)

    def require(self, names):
        for name in names:
            if name not in self.__channels:
                raise exceptions.TraceSchemaError(name)

    def with_channels(self, **series):
        """Returns a copy with channels added or replaced."""
        channels = dict(self.__channels)
        channels.update(series)
        return Trace(self.__t0, self.__dt, channels)

    def with_t0(self, t0):
        return Trace(t0, self.__dt, self.__channels)

    def slice(self, start, stop):
        """Returns samples [start, stop) as a new trace."""
        start = max(int(start), 0)
        stop = min(int(stop), self.__n)
        channels = {k: v[start:stop] for k, v in self.__channels.items()}
        return Trace(self.__t0 + start * self.__dt, self.__dt, channels)

    def __repr__(self):
        return f'Trace(t0={self.__t0}, dt={self.__dt}, n={self.__n}, channels={self.names()})'


@dataclass(frozen=True)
class StandstillInterval:
    """Interval of samples [start_index, end_index) below the speed threshold."""
    start_index: int
    end_index: int
    min_speed: float

    def __post_init__(self):
        if not self.start_index < self.end_index:
            raise ValueError(f'empty standstill interval: {self.start_index}..{self.end_index}')

    @property
    def length(self):
        return self.end_index - self.start_index

    @property
    def midpoint(self):
        return (self.start_index + self.end_index) // 2


@dataclass(frozen=True)
class StandstillMark:
    """Where and how a standstill is replicated.

    index is the sample of the stop onset in a reference, or the sample
    where the deceleration starts when the mark drives an insertion.
    """
    index: int
    target_speed: float = 0.0
    desired_decel: float = -1.0
    dwell: float = 2.0


class ReferenceTrace:
    """Averaged on-road accelerations the planner tracks.

    Parameters
    ----------
    dt : float
        sample interval in seconds
    ax_ref, ay_ref : array-like
        reference accelerations in m/s^2
    standstill_marks : list of StandstillMark
        stops identified in the reference
    vx_ref : array-like, optional
        averaged speed in m/s if available
    r_ref : array-like, optional
        averaged yaw rate in rad/s if available
    """
    def __init__(self, dt, ax_ref, ay_ref, standstill_marks=(), vx_ref=None, r_ref=None):
        if not dt > 0:
            raise ValueError(f'dt must be positive: {dt}')
        self.dt = float(dt)
        self.ax_ref = _freeze(ax_ref, CHANNEL_AX)
        self.ay_ref = _freeze(ay_ref, CHANNEL_AY)
        if len(self.ax_ref) != len(self.ay_ref):
            raise exceptions.MalformedTraceError('ax_ref and ay_ref differ in length')
        self.vx_ref = None if vx_ref is None else _freeze(vx_ref, CHANNEL_VX)
        if self.vx_ref is not None and len(self.vx_ref) != len(self.ax_ref):
            raise exceptions.MalformedTraceError('vx_ref and ax_ref differ in length')
        self.r_ref = None if r_ref is None else _freeze(r_ref, CHANNEL_R)
        if self.r_ref is not None and len(self.r_ref) != len(self.ax_ref):
            raise exceptions.MalformedTraceError('r_ref and ax_ref differ in length')
        marks = list(standstill_marks)
        for prev, mark in zip(marks, marks[1:]):
            if not prev.index < mark.index:
                raise ValueError('standstill mark indices must be strictly increasing')
        for mark in marks:
            if mark.index < 0 or mark.index >= len(self.ax_ref):
                raise ValueError(f'standstill mark index out of range: {mark.index}')
        self.standstill_marks = tuple(marks)

    @property
    def n(self):
        return len(self.ax_ref)

    def __len__(self):
        return self.n

    def to_trace(self):
        """Returns the reference as a Trace starting at t=0."""
        channels = {CHANNEL_AX: self.ax_ref, CHANNEL_AY: self.ay_ref}
        if self.vx_ref is not None:
            channels[CHANNEL_VX] = self.vx_ref
        if self.r_ref is not None:
            channels[CHANNEL_R] = self.r_ref
        return Trace(0.0, self.dt, channels)
