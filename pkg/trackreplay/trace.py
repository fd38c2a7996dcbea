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

"""Trace resampling, averaging, standstill detection and alignment."""

import logging
import math

from typing import NamedTuple

import numpy as np

from . import fileformat

logger = logging.getLogger(__name__)


#### Constants

DEFAULT_STANDSTILL_THRESHOLD = 0.5  # m/s
DEFAULT_STANDSTILL_MIN_DURATION = 1.0  # s
DEFAULT_APPROACH_WINDOW = 5.0  # s
FALLBACK_STOP_DECEL = -1.0  # m/s^2

_GRID_TOLERANCE = 1e-9


class SyncResult(NamedTuple):
    a: fileformat.Trace
    b: fileformat.Trace
    shifts: tuple  # s, one per segment of b
    synchronized: bool


def resample(trace, dt_new):
    """Linearly interpolates every channel onto a new uniform grid.

    The grid starts at the first sample and never extends past the last one:
    when the duration is not a multiple of dt_new, the tail shorter than
    dt_new, final sample included, is dropped rather than extrapolated.

    Parameters
    ----------
    trace : Trace
        source trace
    dt_new : float
        new sample interval in seconds

    Returns
    -------
    Trace
        resampled trace
    """
    if not dt_new > 0:
        raise ValueError(f'dt_new must be positive: {dt_new}')
    if abs(dt_new - trace.dt) <= _GRID_TOLERANCE * trace.dt:
        return trace
    n_new = int(math.floor(trace.duration / dt_new + _GRID_TOLERANCE)) + 1 if trace.n > 0 else 0
    t_old = np.arange(trace.n) * trace.dt
    t_new = np.arange(n_new) * dt_new
    channels = {name: np.interp(t_new, t_old, values) for name, values in trace.channels.items()}
    return fileformat.Trace(trace.t0, dt_new, channels)

def average_traces(traces, dt=None):
    """Averages several drives of one route into a reference.

    Drives are aligned at their first sample, resampled to dt and truncated
    to the shortest one.

    Parameters
    ----------
    traces : list of Trace
        drives with ax and ay
    dt : float, optional
        common sample interval, the first trace's by default

    Returns
    -------
    ReferenceTrace
        per-sample mean of ax and ay, and of vx and r when every drive has them
    """
    traces = list(traces)
    if not traces:
        raise ValueError('average_traces needs at least one trace')
    dt = traces[0].dt if dt is None else dt
    for trace in traces:
        trace.require((fileformat.CHANNEL_AX, fileformat.CHANNEL_AY))
    resampled = [resample(trace, dt) for trace in traces]
    n = min(trace.n for trace in resampled)
    if any(trace.n != n for trace in resampled):
        logger.warning('truncating %d traces to the shortest duration %.1f s',
                       len(resampled), (n - 1) * dt)

    def mean_of(channel):
        return np.mean([trace.get(channel)[:n] for trace in resampled], axis=0)

    def optional_mean(channel):
        if all(trace.has(channel) for trace in resampled):
            return mean_of(channel)
        return None

    return fileformat.ReferenceTrace(dt, mean_of(fileformat.CHANNEL_AX), mean_of(fileformat.CHANNEL_AY),
                                     vx_ref=optional_mean(fileformat.CHANNEL_VX),
                                     r_ref=optional_mean(fileformat.CHANNEL_R))

def detect_standstills(trace, v_threshold=DEFAULT_STANDSTILL_THRESHOLD,
                       min_duration=DEFAULT_STANDSTILL_MIN_DURATION):
    """Finds maximal runs of samples with vx strictly below a threshold.

    Parameters
    ----------
    trace : Trace
        trace with vx
    v_threshold : float
        speed threshold in m/s
    min_duration : float
        shortest run kept, in seconds

    Returns
    -------
    list of StandstillInterval
        intervals in time order
    """
    if not v_threshold > 0:
        raise ValueError(f'v_threshold must be positive: {v_threshold}')
    if min_duration < 0:
        raise ValueError(f'min_duration must not be negative: {min_duration}')
    vx = trace.get(fileformat.CHANNEL_VX)
    below = np.concatenate(([0], (vx < v_threshold).astype(np.int8), [0]))
    edges = np.diff(below)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    intervals = []
    for start, end in zip(starts, ends):
        if (end - start) * trace.dt + _GRID_TOLERANCE < min_duration:
            continue
        intervals.append(fileformat.StandstillInterval(int(start), int(end), float(np.min(vx[start:end]))))
    return intervals

def estimate_stop_decel(trace, interval, window=DEFAULT_APPROACH_WINDOW):
    """Returns the mean braking acceleration before a standstill onset.

    Only negative longitudinal accelerations inside the approach window
    count. ax is differentiated from vx if the trace lacks it.
    """
    stop = interval.start_index
    first = max(stop - int(round(window / trace.dt)), 0)
    if trace.has(fileformat.CHANNEL_AX):
        ax = trace.get(fileformat.CHANNEL_AX)[first:stop]
    elif trace.has(fileformat.CHANNEL_VX) and stop - first >= 2:
        ax = np.gradient(trace.get(fileformat.CHANNEL_VX)[first:stop], trace.dt)
    else:
        return FALLBACK_STOP_DECEL
    braking = ax[ax < 0]
    if len(braking) == 0:
        return FALLBACK_STOP_DECEL
    return float(np.mean(braking))

def standstill_marks(trace, intervals, window=DEFAULT_APPROACH_WINDOW):
    """Turns detected standstills into marks at their onset.

    The dwell of a mark is the duration of its interval.
    """
    return [fileformat.StandstillMark(index=interval.start_index, target_speed=0.0,
                                      desired_decel=estimate_stop_decel(trace, interval, window),
                                      dwell=interval.length * trace.dt)
            for interval in intervals]

def _segment_bounds(intervals, n):
    cuts = [interval.midpoint for interval in intervals]
    return list(zip([0] + cuts, cuts + [n]))

def synchronize_events(a, b, v_threshold=DEFAULT_STANDSTILL_THRESHOLD,
                       min_duration=DEFAULT_STANDSTILL_MIN_DURATION):
    """Shifts segments of b so its standstill onsets coincide with a's.

    b is cut at the midpoint of every standstill, so timing differences are
    absorbed while the vehicle stands. A segment is shifted by the onset
    difference of the next paired standstill, the last one by the onset
    difference of the standstill it starts in. Gaps hold the last sample
    of the earlier segment, overlaps keep the later segment.

    Parameters
    ----------
    a : Trace
        timing reference
    b : Trace
        trace to align, sampled like a

    Returns
    -------
    SyncResult
        (a, aligned b, shift per segment in seconds, synchronized flag);
        b is returned unchanged with the flag unset if either trace lacks
        standstills
    """
    if abs(a.dt - b.dt) > _GRID_TOLERANCE * a.dt:
        raise ValueError(f'traces must share dt: {a.dt} != {b.dt}')
    if not (a.has(fileformat.CHANNEL_VX) and b.has(fileformat.CHANNEL_VX)):
        logger.warning('cannot synchronize traces without vx')
        return SyncResult(a, b, (), False)
    stops_a = detect_standstills(a, v_threshold, min_duration)
    stops_b = detect_standstills(b, v_threshold, min_duration)
    if not stops_a or not stops_b:
        logger.warning('cannot synchronize: %d standstills in a, %d in b', len(stops_a), len(stops_b))
        return SyncResult(a, b, (), False)
    if len(stops_a) != len(stops_b):
        logger.warning('standstill counts differ (%d, %d), pairing the first %d',
                       len(stops_a), len(stops_b), min(len(stops_a), len(stops_b)))
    pairs = min(len(stops_a), len(stops_b))
    onset_shift = [stops_a[i].start_index - stops_b[i].start_index for i in range(pairs)]

    segments = _segment_bounds(stops_b[:pairs], b.n)
    shifts = [onset_shift[min(k, pairs - 1)] for k in range(len(segments))]

    n_out = min(a.n, max(stop + shift for (_, stop), shift in zip(segments, shifts)))
    source = np.full(max(n_out, 0), -1, dtype=int)
    for (start, stop), shift in zip(segments, shifts):
        lo, hi = max(start + shift, 0), min(stop + shift, n_out)
        if lo < hi:
            source[lo:hi] = np.arange(lo - shift, hi - shift)
    placed = np.flatnonzero(source >= 0)
    if len(placed) == 0:
        logger.warning('synchronized trace is empty')
        return SyncResult(a, b, (), False)
    # hold-fill gaps, leading gap takes the first placed sample
    fill = np.maximum.accumulate(np.where(source >= 0, np.arange(len(source)), -1))
    fill[fill < 0] = placed[0]
    source = source[fill]

    channels = {name: values[source] for name, values in b.channels.items()}
    aligned = fileformat.Trace(a.t0, b.dt, channels)
    seconds = tuple(shift * b.dt for shift in shifts)
    logger.debug('synchronized %d segments, shifts %s s', len(segments), seconds)
    return SyncResult(a, aligned, seconds, True)
