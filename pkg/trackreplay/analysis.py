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

"""Amplitude spectra and comparison of generated and measured drives."""

import logging
import math

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import exceptions
from . import fileformat
from . import sickness
from . import trace as tracemod

logger = logging.getLogger(__name__)


#### Constants

WINDOW_RECTANGULAR = 'rectangular'
WINDOW_HANN = 'hann'
WINDOWS = (WINDOW_RECTANGULAR, WINDOW_HANN)

MIN_SPECTRUM_LENGTH = 16
DEFAULT_BAND = (0.0, 2.0)  # Hz
NOISE_FLOOR_GUARD = 0.01  # fraction of the baseline band peak
PERCENT_EPSILON = 1e-9

CASE_REFERENCE = 'reference'
CASE_GENERATED = 'generated'
CASE_MEASURED = 'measured'
CASES = (CASE_REFERENCE, CASE_GENERATED, CASE_MEASURED)

# time-domain comparison
COMPARED_CHANNELS = (fileformat.CHANNEL_AX, fileformat.CHANNEL_AY, fileformat.CHANNEL_R)
# spectra, one per motion sickness axis
SPECTRUM_CHANNELS = tuple(sickness.AXIS_CHANNELS[axis] for axis in sickness.AXES)

_GRID_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Spectrum:
    """Single-sided amplitude spectrum."""
    freqs: np.ndarray  # Hz
    amplitude: np.ndarray
    df: float
    window: str = WINDOW_RECTANGULAR


class SpectralDifference(NamedTuple):
    max_percent: float
    frequency: float  # Hz, where the maximum occurs
    comparable: bool  # False if every bin in the band is below the noise floor guard


@dataclass
class TrackingReport:
    """Comparison of generated and measured drives against a reference.

    Every dict is keyed by case name; absent cases are missing from all
    of them except `present`.
    """
    dt: float
    n: int
    band: tuple
    present: dict
    axes: tuple = ()
    synchronized: dict = field(default_factory=dict)
    msdv: dict = field(default_factory=dict)
    msdv_total: dict = field(default_factory=dict)
    msdv_difference: dict = field(default_factory=dict)
    rms_error: dict = field(default_factory=dict)
    spectra: dict = field(default_factory=dict)
    weighted_spectra: dict = field(default_factory=dict)
    spectral_difference: dict = field(default_factory=dict)
    weighted_spectral_difference: dict = field(default_factory=dict)
    speed: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def cases(self):
        return [case for case in CASES if self.present.get(case)]


def percent_difference(value, baseline):
    """Returns |value - baseline| relative to the baseline, in percent."""
    return abs(value - baseline) / max(abs(baseline), PERCENT_EPSILON) * 100.0

def amplitude_spectrum(x, fs, window=WINDOW_RECTANGULAR):
    """Computes the single-sided amplitude spectrum of a signal.

    Interior bins are scaled by 2/N, DC and Nyquist by 1/N. A Hann window
    is corrected for its coherent gain so tone amplitudes are kept.

    Parameters
    ----------
    x : array-like
        signal
    fs : float
        sampling rate in Hz
    window : str
        'rectangular' (default) or 'hann'

    Returns
    -------
    Spectrum
        spectrum from 0 to fs/2
    """
    if window not in WINDOWS:
        raise ValueError(f'unknown window: {window}')
    if not fs > 0:
        raise ValueError(f'fs must be positive: {fs}')
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < MIN_SPECTRUM_LENGTH:
        raise ValueError(f'signal length = {n}, required minimum = {MIN_SPECTRUM_LENGTH}')
    if window == WINDOW_HANN:
        w = np.hanning(n)
        x = x * w / np.mean(w)
    amplitude = np.abs(np.fft.rfft(x)) / n
    amplitude[1:] *= 2.0
    if n % 2 == 0:
        amplitude[-1] /= 2.0
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    return Spectrum(freqs, amplitude, fs / n, window)

def spectral_difference(a, b, band=DEFAULT_BAND, guard=NOISE_FLOOR_GUARD):
    """Returns the largest baseline-relative amplitude difference in a band.

    Bins where the baseline b is below `guard` times its band peak are
    ignored. The measure is not symmetric in a and b.

    Parameters
    ----------
    a : Spectrum
        compared spectrum
    b : Spectrum
        baseline spectrum on the same grid
    band : tuple of float
        (f_lo, f_hi) in Hz, inclusive

    Returns
    -------
    SpectralDifference
        maximum difference in percent and its frequency
    """
    if len(a.freqs) != len(b.freqs) or not np.allclose(a.freqs, b.freqs, rtol=0, atol=_GRID_TOLERANCE):
        raise exceptions.GridMismatchError(
            f'spectra have different frequency grids ({len(a.freqs)} and {len(b.freqs)} bins)')
    f_lo, f_hi = band
    if f_lo > f_hi:
        raise ValueError(f'band must be increasing: {band}')
    in_band = (b.freqs >= f_lo) & (b.freqs <= f_hi)
    if not np.any(in_band):
        return SpectralDifference(math.nan, math.nan, False)
    peak = float(np.max(b.amplitude[in_band]))
    if peak <= PERCENT_EPSILON:
        return SpectralDifference(math.nan, math.nan, False)
    usable = in_band & (b.amplitude >= guard * peak)
    ratio = np.abs(a.amplitude[usable] - b.amplitude[usable]) / np.maximum(b.amplitude[usable], PERCENT_EPSILON)
    best = int(np.argmax(ratio))
    return SpectralDifference(float(ratio[best] * 100.0), float(b.freqs[usable][best]), True)

def rms_error(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.sqrt(np.mean((a - b) ** 2)))

def axis_spectra(trace, window=WINDOW_RECTANGULAR, weighting=None):
    """Returns the amplitude spectra of every motion sickness axis present in a trace.

    Parameters
    ----------
    trace : Trace
        drive to analyse
    window : str
        spectrum window
    weighting : WeightingConfig, optional
        if given, each axis is motion sickness weighted before the transform

    Returns
    -------
    dict
        channel name (ax, ay, az, yaw_acc, roll_acc, pitch_acc) -> Spectrum
    """
    fs = 1.0 / trace.dt
    spectra = {}
    for axis in sickness.AXES:
        a = sickness.axis_signal(trace, axis)
        if a is None:
            continue
        if weighting is not None:
            a = sickness.ms_weighting(a, fs, axis, weighting)
        spectra[sickness.AXIS_CHANNELS[axis]] = amplitude_spectrum(a, fs, window)
    return spectra

def shared_axes(traces):
    """Returns the motion sickness axes every trace provides, in axis order."""
    return tuple(axis for axis in sickness.AXES
                 if all(sickness.axis_signal(t, axis) is not None for t in traces))

def _differences(spectra, baseline, band):
    return {c: spectral_difference(spectrum, baseline[c], band)
            for c, spectrum in spectra.items() if c in baseline}

def _align(reference, case, name, report):
    case = tracemod.resample(case, reference.dt)
    synced = False
    if reference.has(fileformat.CHANNEL_VX) and case.has(fileformat.CHANNEL_VX):
        result = tracemod.synchronize_events(reference, case)
        if result.synchronized:
            case = result.b
            synced = True
    if not synced:
        logger.warning('%s trace is not synchronized with the reference', name)
    report.synchronized[name] = synced
    return case

def tracking_report(reference, generated, measured=None, weighting=None,
                    band=DEFAULT_BAND, window=WINDOW_RECTANGULAR, measured_note=None):
    """Compares generated and measured drives with the reference.

    Cases are resampled to the reference interval, synchronized on their
    standstills where both sides have them and truncated to the common
    length. MSDV differences, spectral differences and RMS errors are
    relative to the reference.

    Parameters
    ----------
    reference : Trace
        baseline drive
    generated : Trace
        planned trajectory as a trace
    measured : Trace, optional
        drive recorded while tracking the plan
    weighting : WeightingConfig, optional
        motion sickness weighting
    band : tuple of float
        band of the spectral comparison in Hz
    window : str
        spectrum window
    measured_note : str, optional
        provenance of the measured drive, recorded in the notes

    Returns
    -------
    TrackingReport
        full comparison
    """
    weighting = weighting or sickness.WeightingConfig()
    report = TrackingReport(reference.dt, 0, tuple(band), {
        CASE_REFERENCE: True,
        CASE_GENERATED: True,
        CASE_MEASURED: measured is not None,
    })
    traces = {CASE_REFERENCE: reference, CASE_GENERATED: _align(reference, generated, CASE_GENERATED, report)}
    if measured is not None:
        traces[CASE_MEASURED] = _align(reference, measured, CASE_MEASURED, report)
        if measured_note:
            report.notes.append(measured_note)
    else:
        report.notes.append('measured drive absent')
    n = min(t.n for t in traces.values())
    traces = {name: t.slice(0, n) for name, t in traces.items()}
    report.n = n
    report.notes.append(f'spectral difference: max |A - A_ref| / A_ref over {band[0]:g}-{band[1]:g} Hz, '
                        f'bins below {NOISE_FLOOR_GUARD:g} of the reference band peak ignored')

    report.axes = shared_axes(traces.values())
    report.notes.append(f'MSDV totals over the axes of every case: {", ".join(report.axes)}')
    for name, t in traces.items():
        scores = sickness.sickness_report(t, weighting, axes=report.axes)
        report.msdv[name] = dict(scores.final)
        report.msdv_total[name] = scores.msdv_total
        report.spectra[name] = axis_spectra(t, window)
        report.weighted_spectra[name] = axis_spectra(t, window, weighting)
        if t.has(fileformat.CHANNEL_VX):
            vx = t.get(fileformat.CHANNEL_VX)
            report.speed[name] = (float(np.mean(vx)), float(np.std(vx)))

    base = traces[CASE_REFERENCE]
    for name, t in traces.items():
        if name == CASE_REFERENCE:
            continue
        differences = {axis: percent_difference(value, report.msdv[CASE_REFERENCE][axis])
                       for axis, value in report.msdv[name].items()}
        differences['total'] = percent_difference(report.msdv_total[name], report.msdv_total[CASE_REFERENCE])
        report.msdv_difference[name] = differences
        report.rms_error[name] = {c: rms_error(t.get(c), base.get(c))
                                  for c in COMPARED_CHANNELS if t.has(c) and base.has(c)}
        report.spectral_difference[name] = _differences(report.spectra[name],
                                                        report.spectra[CASE_REFERENCE], band)
        report.weighted_spectral_difference[name] = _differences(report.weighted_spectra[name],
                                                                 report.weighted_spectra[CASE_REFERENCE], band)
    return report
