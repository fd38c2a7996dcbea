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

"""Parser functions for trace, reference, trajectory and mark files."""

import logging

import numpy as np
import pandas as pd

from . import exceptions
from . import fileformat
from .planner import PlannedTrajectory
from .vehicle import ControlInput, VehicleState

logger = logging.getLogger(__name__)


def parse_trace(stream, use=fileformat.USE_ANY):
    """Parses a trace CSV stream and returns a Trace object.

    Use:
    - 'any': only the time column is required (default)
    - 'planning': ax and ay are required
    - 'standstill': vx is required

    Parameters
    ----------
    stream : file-like object
        CSV byte or text stream
    use : str
        declared use of the trace

    Returns
    -------
    Trace
        trace object
    """
    if use not in fileformat.USE_REQUIREMENTS:
        raise ValueError(f'unknown trace use: {use}')
    frame = _read_frame(stream)
    if fileformat.COLUMN_TIME not in frame.columns:
        raise exceptions.TraceSchemaError(fileformat.COLUMN_TIME)
    for column in fileformat.USE_REQUIREMENTS[use]:
        if column not in frame.columns:
            raise exceptions.TraceSchemaError(
                column, f'missing column "{column}" required for {use} use')

    t = _numeric_column(frame, fileformat.COLUMN_TIME)
    t0, dt = _infer_time_grid(t)
    channels = {}
    for name in fileformat.KNOWN_CHANNELS:
        if name in frame.columns:
            channels[name] = _numeric_column(frame, name)
    ignored = [c for c in frame.columns if c != fileformat.COLUMN_TIME and c not in channels]
    if ignored:
        logger.debug('ignoring unknown columns: %s', ', '.join(ignored))
    return fileformat.Trace(t0, dt, channels)

def load_trace(file_name, use=fileformat.USE_ANY):
    """Creates a Trace object from a trace CSV file.

    Parameters
    ----------
    file_name : str
        file path string
    use : str
        declared use of the trace

    Returns
    -------
    Trace
        trace object
    """
    with open(file_name, 'rb') as f:
        trace = parse_trace(f, use)
    return trace

def load_reference(file_name, marks_file_name=None):
    """Creates a ReferenceTrace from a reference CSV and an optional marks CSV.

    Returns
    -------
    ReferenceTrace
        reference object
    """
    trace = load_trace(file_name, use=fileformat.USE_PLANNING)
    marks = load_marks(marks_file_name) if marks_file_name is not None else []
    def optional(channel):
        return trace.get(channel) if trace.has(channel) else None

    return fileformat.ReferenceTrace(trace.dt,
                                     trace.get(fileformat.CHANNEL_AX),
                                     trace.get(fileformat.CHANNEL_AY),
                                     marks, vx_ref=optional(fileformat.CHANNEL_VX),
                                     r_ref=optional(fileformat.CHANNEL_R))

def parse_marks(stream):
    """Parses a marks CSV stream (index, target_speed, desired_decel, dwell).

    target_speed, desired_decel and dwell are optional columns and fall back
    to the StandstillMark defaults.

    Returns
    -------
    list of StandstillMark
        marks in file order
    """
    frame = _read_frame(stream)
    if 'index' not in frame.columns:
        raise exceptions.TraceSchemaError('index')
    marks = []
    defaults = fileformat.StandstillMark(0)
    for row, record in enumerate(frame.to_dict('records')):
        values = {}
        for column in fileformat.MARK_COLUMNS:
            if column not in record:
                continue
            value = pd.to_numeric(record[column], errors='coerce')
            if not np.isfinite(value):
                raise exceptions.TraceDataError(column, row)
            values[column] = value
        marks.append(fileformat.StandstillMark(
            index=int(values['index']),
            target_speed=float(values.get('target_speed', defaults.target_speed)),
            desired_decel=float(values.get('desired_decel', defaults.desired_decel)),
            dwell=float(values.get('dwell', defaults.dwell))))
    return marks

def load_marks(file_name):
    with open(file_name, 'rb') as f:
        marks = parse_marks(f)
    return marks

def parse_trajectory(stream):
    """Parses a trajectory CSV stream written by the trajectory converter.

    Returns
    -------
    PlannedTrajectory
        trajectory object; solver diagnostics are empty
    """
    frame = _read_frame(stream)
    for column in fileformat.TRAJECTORY_COLUMNS:
        if column not in frame.columns:
            raise exceptions.TraceSchemaError(column)
    t = _numeric_column(frame, fileformat.COLUMN_TIME)
    _, dt = _infer_time_grid(t)
    columns = {c: _numeric_column(frame, c) for c in fileformat.TRAJECTORY_COLUMNS}
    states = [VehicleState(columns['X'][i], columns['Y'][i], columns['vx'][i],
                           columns['vy'][i], columns['psi'][i], columns['r'][i],
                           columns['delta'][i], columns['ax'][i])
              for i in range(len(t))]
    # the last row repeats the final input, there is one input less than states
    inputs = [ControlInput(columns['d_delta'][i], columns['d_ax'][i]) for i in range(len(t) - 1)]
    return PlannedTrajectory(dt, states, inputs)

def load_trajectory(file_name):
    with open(file_name, 'rb') as f:
        trajectory = parse_trajectory(f)
    return trajectory

def _read_frame(stream):
    try:
        frame = pd.read_csv(stream, sep=',', decimal='.', encoding='utf-8')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise exceptions.MalformedTraceError(f'unreadable CSV: {e}')
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame

def _numeric_column(frame, name):
    values = pd.to_numeric(frame[name], errors='coerce').to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if len(bad) > 0:
        raise exceptions.TraceDataError(name, int(bad[0]))
    return values

def _infer_time_grid(t):
    """Returns (t0, dt) of a uniform time column."""
    if len(t) < 2:
        raise exceptions.MalformedTraceError('a trace needs at least two samples')
    steps = np.diff(t)
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if not dt > 0:
        raise exceptions.MalformedTraceError('time column must be increasing')
    worst = int(np.argmax(np.abs(steps - dt)))
    if abs(steps[worst] - dt) > fileformat.TIME_UNIFORMITY_TOLERANCE:
        raise exceptions.MalformedTraceError(
            f'non-uniform time step at row {worst + 1}: {steps[worst]} != {dt}')
    return float(t[0]), float(dt)
