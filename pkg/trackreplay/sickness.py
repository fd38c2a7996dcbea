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

"""Zero-phase low-pass filtering, motion sickness weighting and MSDV.

The motion sickness weighting is the ISO 2631-1 Wf curve: a band-pass of
two second-order sections (0.08 Hz high-pass, 0.63 Hz low-pass), an
acceleration-velocity transition at 0.25 Hz and an upward step between
0.0625 Hz and 0.1 Hz. It is discretized with the bilinear transform.
"""

import functools
import logging
import math

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import exceptions
from . import fileformat

logger = logging.getLogger(__name__)


#### Constants

AXIS_X = 'x'
AXIS_Y = 'y'
AXIS_Z = 'z'
AXIS_YAW = 'yaw'
AXIS_ROLL = 'roll'
AXIS_PITCH = 'pitch'
TRANSLATIONAL_AXES = (AXIS_X, AXIS_Y, AXIS_Z)
ROTATIONAL_AXES = (AXIS_YAW, AXIS_ROLL, AXIS_PITCH)
AXES = TRANSLATIONAL_AXES + ROTATIONAL_AXES

WEIGHTING_WF = 'wf'
WEIGHTING_UNITY = 'unity'
WEIGHTINGS = (WEIGHTING_WF, WEIGHTING_UNITY)

# Wf corner frequencies (Hz) and quality factors
WF_F1, WF_Q1 = 0.08, 0.71
WF_F2, WF_Q2 = 0.63, 0.71
WF_F4, WF_Q4 = 0.25, 0.86
WF_F5, WF_Q5 = 0.0625, 0.80
WF_F6, WF_Q6 = 0.1, 0.80

FILTER_TYPES = ('butter', 'ellip', 'cheby2')
STOPBAND_MARGIN_DB = 1.0
PASSBAND_MARGIN = 0.1  # share of the one-way ripple held back
MAX_FILTER_ORDER = 40
MIN_LENGTH_FACTOR = 3

_PASSBAND_PROBES = 512
_STOPBAND_PROBES = 4096

# channel each axis is read from
AXIS_CHANNELS = {
    AXIS_X: fileformat.CHANNEL_AX,
    AXIS_Y: fileformat.CHANNEL_AY,
    AXIS_Z: fileformat.CHANNEL_AZ,
    AXIS_YAW: fileformat.CHANNEL_YAW_ACC,
    AXIS_ROLL: fileformat.CHANNEL_ROLL_ACC,
    AXIS_PITCH: fileformat.CHANNEL_PITCH_ACC,
}


@dataclass(frozen=True)
class FilterSpec:
    """Composite (forward-backward) low-pass requirements.

    Parameters
    ----------
    fs : float
        sampling rate in Hz
    passband_edge, stopband_edge : float
        band edges in Hz
    passband_ripple : float
        maximum composite passband deviation in dB
    stopband_atten : float
        minimum composite stopband attenuation in dB
    ftype : str
        'butter' (default), 'ellip' or 'cheby2'
    """
    fs: float = 10.0
    passband_edge: float = 0.05
    stopband_edge: float = 2.0
    passband_ripple: float = 0.01
    stopband_atten: float = 160.0
    ftype: str = 'butter'

    def __post_init__(self):
        if not 0 < self.passband_edge < self.stopband_edge < self.fs / 2:
            raise ValueError('filter edges need 0 < passband_edge < stopband_edge < fs/2: '
                             f'{self.passband_edge}, {self.stopband_edge}, fs={self.fs}')
        if not self.passband_ripple > 0:
            raise ValueError(f'passband_ripple must be positive: {self.passband_ripple}')
        if not self.stopband_atten > 0:
            raise ValueError(f'stopband_atten must be positive: {self.stopband_atten}')
        if self.ftype not in FILTER_TYPES:
            raise ValueError(f'unknown filter type: {self.ftype}')


@dataclass(frozen=True)
class ZeroPhaseFilter:
    """Designed low-pass prototype applied forward and backward."""
    sos: np.ndarray
    order: int
    fs: float
    effective_length: int
    achieved_ripple: float       # composite dB
    achieved_attenuation: float  # composite dB
    spec: FilterSpec


def _default_weightings():
    return {axis: WEIGHTING_WF for axis in AXES}

def _default_factors():
    return {axis: 1.0 for axis in AXES}


@dataclass(frozen=True)
class WeightingConfig:
    """Per-axis weighting selector and multiplying factor k."""
    weighting: dict = field(default_factory=_default_weightings)
    k: dict = field(default_factory=_default_factors)

    def __post_init__(self):
        for axis, name in self.weighting.items():
            if axis not in AXES:
                raise ValueError(f'unknown axis: {axis}')
            if name not in WEIGHTINGS:
                raise ValueError(f'unknown weighting for axis {axis}: {name}')
        for axis, k in self.k.items():
            if axis not in AXES:
                raise ValueError(f'unknown axis: {axis}')
            if not (math.isfinite(k) and k >= 0):
                raise ValueError(f'factor k for axis {axis} must be non-negative: {k}')

    def weighting_of(self, axis):
        return self.weighting.get(axis, WEIGHTING_WF)

    def k_of(self, axis):
        return self.k.get(axis, 1.0)


@dataclass(frozen=True)
class SicknessReport:
    """Cumulative MSDV per axis and the combined total."""
    time: np.ndarray
    series: dict
    final: dict
    msdv_total: float
    axes: tuple
    k: dict


def _composite_margins(sos, spec):
    """Returns (ripple, attenuation) in dB of the forward-backward response."""
    _, h_pass = signal.sosfreqz(sos, worN=np.linspace(0.0, spec.passband_edge, _PASSBAND_PROBES), fs=spec.fs)
    _, h_stop = signal.sosfreqz(sos, worN=np.linspace(spec.stopband_edge, spec.fs / 2, _STOPBAND_PROBES), fs=spec.fs)
    tiny = np.finfo(float).tiny
    ripple = float(np.max(np.abs(20.0 * np.log10(np.maximum(np.abs(h_pass) ** 2, tiny)))))
    attenuation = float(np.min(-20.0 * np.log10(np.maximum(np.abs(h_stop) ** 2, tiny))))
    return ripple, attenuation

def _effective_length(sos, spec):
    """Samples until the slowest pole decays to the one-way stopband level."""
    _, poles, _ = signal.sos2zpk(sos)
    radius = float(np.max(np.abs(poles))) if len(poles) else 0.0
    if radius <= 0:
        return 1
    level = 10.0 ** (-spec.stopband_atten / 40.0)
    return max(int(math.ceil(math.log(level) / math.log(radius))), 1)

def _butterworth(spec, ripple, atten):
    order, _ = signal.buttord(spec.passband_edge, spec.stopband_edge, ripple, atten, fs=spec.fs)
    order = min(int(order), MAX_FILTER_ORDER)
    # cutoff placed so the stopband edge sees exactly the required attenuation
    omega_s = math.tan(math.pi * spec.stopband_edge / spec.fs)
    omega_c = omega_s / (10.0 ** (atten / 10.0) - 1.0) ** (1.0 / (2 * order))
    wn = spec.fs / math.pi * math.atan(omega_c)
    wn = max(wn, spec.passband_edge)
    return order, signal.butter(order, wn, btype='low', output='sos', fs=spec.fs)

def design_zero_phase_lowpass(spec):
    """Designs a low-pass whose forward-backward application meets the spec.

    The prototype meets slightly less than half the composite ripple and
    half the composite attenuation plus a small stopband margin.

    Parameters
    ----------
    spec : FilterSpec
        composite requirements

    Returns
    -------
    ZeroPhaseFilter
        prototype sections with the achieved composite margins

    Raises
    ------
    FilterDesignError
        if the composite response misses the spec
    """
    ripple = (1.0 - PASSBAND_MARGIN) * spec.passband_ripple / 2.0
    atten = spec.stopband_atten / 2.0 + STOPBAND_MARGIN_DB
    try:
        if spec.ftype == 'butter':
            order, sos = _butterworth(spec, ripple, atten)
        else:
            sos = signal.iirdesign(spec.passband_edge, spec.stopband_edge, ripple, atten,
                                   ftype=spec.ftype, output='sos', fs=spec.fs)
            order = 2 * len(sos)
    except (ValueError, ArithmeticError) as e:
        raise exceptions.FilterDesignError(f'filter design failed: {e}')
    achieved_ripple, achieved_atten = _composite_margins(sos, spec)
    logger.debug('low-pass %s of order %d: composite ripple %.3g dB, attenuation %.1f dB',
                 spec.ftype, order, achieved_ripple, achieved_atten)
    if achieved_ripple > spec.passband_ripple or achieved_atten < spec.stopband_atten:
        raise exceptions.FilterDesignError(
            f'composite response misses the spec: ripple {achieved_ripple:.3g} dB '
            f'(max {spec.passband_ripple}), attenuation {achieved_atten:.1f} dB '
            f'(min {spec.stopband_atten})', achieved_ripple, achieved_atten)
    return ZeroPhaseFilter(sos, order, spec.fs, _effective_length(sos, spec),
                           achieved_ripple, achieved_atten, spec)

def apply_zero_phase(coeffs, x):
    """Filters forward and backward with even padding of one filter length.

    Parameters
    ----------
    coeffs : ZeroPhaseFilter
        designed filter
    x : array-like
        signal sampled at coeffs.fs

    Returns
    -------
    numpy.ndarray
        filtered signal of the same length
    """
    x = np.asarray(x, dtype=float)
    required = MIN_LENGTH_FACTOR * coeffs.effective_length
    if len(x) < required:
        raise exceptions.SignalTooShortError(len(x), required)
    return signal.sosfiltfilt(coeffs.sos, x, padtype='even', padlen=coeffs.effective_length)

def filter_trace(trace, coeffs, channels=None):
    """Returns a trace with the given channels (default: all) zero-phase filtered."""
    names = trace.names() if channels is None else [c for c in channels if trace.has(c)]
    return trace.with_channels(**{name: apply_zero_phase(coeffs, trace.get(name)) for name in names})

def wf_zpk():
    """Returns the analog Wf weighting as (zeros, poles, gain) in rad/s."""
    def w(f):
        return 2.0 * math.pi * f
    def quadratic_roots(omega, q):
        return np.roots([1.0, omega / q, omega * omega])
    w2, w4, w5, w6 = w(WF_F2), w(WF_F4), w(WF_F5), w(WF_F6)
    zeros = np.concatenate(([0.0, 0.0], quadratic_roots(w5, WF_Q5)))
    poles = np.concatenate((quadratic_roots(w(WF_F1), WF_Q1), quadratic_roots(w2, WF_Q2),
                            quadratic_roots(w4, WF_Q4), quadratic_roots(w6, WF_Q6)))
    gain = w2 * w2 * w4 * w4
    return zeros, poles, gain

@functools.lru_cache(maxsize=8)
def _wf_sos(fs):
    zeros, poles, gain = wf_zpk()
    zd, pd, kd = signal.bilinear_zpk(zeros, poles, gain, fs)
    sos = signal.zpk2sos(zd, pd, kd)
    sos.setflags(write=False)
    return sos

def wf_sos(fs):
    """Returns the discrete Wf weighting at sampling rate fs as sections."""
    if not fs > 0:
        raise ValueError(f'fs must be positive: {fs}')
    return _wf_sos(float(fs)).copy()

def wf_response(freqs, fs):
    """Returns the magnitude of the discrete Wf weighting at the given frequencies."""
    _, h = signal.sosfreqz(wf_sos(fs), worN=np.atleast_1d(np.asarray(freqs, dtype=float)), fs=fs)
    return np.abs(h)

def ms_weighting(x, fs, axis, config=None):
    """Applies the motion sickness weighting of an axis.

    Parameters
    ----------
    x : array-like
        acceleration in m/s^2 or rad/s^2
    fs : float
        sampling rate in Hz
    axis : str
        one of 'x', 'y', 'z', 'yaw', 'roll', 'pitch'
    config : WeightingConfig, optional
        weighting selection, Wf on every axis by default

    Returns
    -------
    numpy.ndarray
        weighted acceleration
    """
    if axis not in AXES:
        raise ValueError(f'unknown axis: {axis}')
    if not fs > 0:
        raise ValueError(f'fs must be positive: {fs}')
    config = config or WeightingConfig()
    x = np.asarray(x, dtype=float)
    if config.weighting_of(axis) == WEIGHTING_UNITY:
        return x.copy()
    return signal.sosfilt(wf_sos(fs), x)

def msdv_component(weighted, dt):
    """Returns the cumulative MSDV, sqrt of the running sum of a^2 dt."""
    if not dt > 0:
        raise ValueError(f'dt must be positive: {dt}')
    a = np.asarray(weighted, dtype=float)
    return np.sqrt(np.cumsum(a * a) * dt)

def msdv_total(components, k=None):
    """Combines per-axis MSDV values as sqrt(sum(k_i^2 MSDV_i^2)).

    Parameters
    ----------
    components : dict of str to float, or sequence of float
        final MSDV per axis
    k : dict or sequence, optional
        multiplying factors matching components, 1 by default

    Returns
    -------
    float
        combined MSDV
    """
    if isinstance(components, dict):
        axes = list(components.keys())
        values = np.array([components[a] for a in axes], dtype=float)
        factors = np.array([1.0 if k is None else k.get(a, 1.0) for a in axes], dtype=float)
    else:
        values = np.asarray(components, dtype=float).ravel()
        factors = np.ones_like(values) if k is None else np.asarray(k, dtype=float).ravel()
        if len(factors) != len(values):
            raise ValueError('components and factors differ in length')
    if np.any(values < 0):
        raise ValueError('MSDV components must be non-negative')
    return float(np.sqrt(np.sum((factors * values) ** 2)))

def axis_signal(trace, axis):
    """Returns the acceleration of an axis, or None if the trace lacks it.

    Yaw acceleration falls back to the gradient of the yaw rate.
    """
    channel = AXIS_CHANNELS[axis]
    if trace.has(channel):
        return trace.get(channel)
    if axis == AXIS_YAW and trace.has(fileformat.CHANNEL_R):
        return np.gradient(trace.get(fileformat.CHANNEL_R), trace.dt)
    return None

def sickness_report(trace, config=None, axes=None):
    """Computes the cumulative MSDV of every axis present in a trace.

    Parameters
    ----------
    trace : Trace
        accelerations to score
    config : WeightingConfig, optional
        weighting selection and factors
    axes : sequence of str, optional
        axes to score, all present axes by default

    Returns
    -------
    SicknessReport
        per-axis series, final values and total
    """
    config = config or WeightingConfig()
    fs = 1.0 / trace.dt
    series = {}
    for axis in (AXES if axes is None else axes):
        a = axis_signal(trace, axis)
        if a is None:
            continue
        series[axis] = msdv_component(ms_weighting(a, fs, axis, config), trace.dt)
    final = {axis: float(s[-1]) if len(s) else 0.0 for axis, s in series.items()}
    k = {axis: config.k_of(axis) for axis in series}
    return SicknessReport(trace.time(), series, final, msdv_total(final, k), tuple(series), k)
