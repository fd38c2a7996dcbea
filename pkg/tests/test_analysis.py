import io
import math

import numpy as np
import pandas as pd
import pytest

import trackreplay as tr
from trackreplay import analysis
from trackreplay.converter import ReportConverter


def drive(n=600, stop=(200, 250), ax_gain=1.0, lead=0):
    t = 0.1 * np.arange(n)
    vx = np.full(n, 5.0)
    vx[stop[0]:stop[1]] = 0.0
    ax = ax_gain * 0.5 * np.sin(2 * np.pi * 0.2 * t)
    ay = 0.8 * np.sin(2 * np.pi * 0.1 * t)
    channels = {'vx': vx, 'ax': ax, 'ay': ay}
    if lead:
        channels = {k: np.concatenate((np.full(lead, v[0]), v)) for k, v in channels.items()}
    return tr.Trace(0.0, 0.1, channels)


def test_percent_difference():
    assert analysis.percent_difference(23.19, 23.44) == pytest.approx(1.07, abs=0.01)
    assert analysis.percent_difference(11.0, 10.0) == pytest.approx(10.0)
    assert analysis.percent_difference(9.0, 10.0) == pytest.approx(10.0)
    assert math.isfinite(analysis.percent_difference(1.0, 0.0))

def test_amplitude_spectrum_of_tone():
    x = 2.0 * np.sin(2 * np.pi * 1.0 * 0.1 * np.arange(100))
    spectrum = analysis.amplitude_spectrum(x, 10.0)
    assert spectrum.df == pytest.approx(0.1)
    assert len(spectrum.freqs) == 51
    assert spectrum.freqs[-1] == pytest.approx(5.0)
    assert spectrum.amplitude[10] == pytest.approx(2.0)
    assert np.max(np.delete(spectrum.amplitude, 10)) < 1e-9

def test_amplitude_spectrum_dc_and_nyquist():
    dc = analysis.amplitude_spectrum(np.full(64, 3.0), 10.0)
    assert dc.amplitude[0] == pytest.approx(3.0)
    alternating = analysis.amplitude_spectrum(np.tile([1.0, -1.0], 32), 10.0)
    assert alternating.amplitude[-1] == pytest.approx(1.0)

def test_amplitude_spectrum_hann_keeps_tone_amplitude():
    x = 2.0 * np.sin(2 * np.pi * 1.0 * 0.1 * np.arange(200))
    spectrum = analysis.amplitude_spectrum(x, 10.0, analysis.WINDOW_HANN)
    assert spectrum.window == analysis.WINDOW_HANN
    assert spectrum.amplitude[20] == pytest.approx(2.0, rel=0.02)

def test_amplitude_spectrum_rejects_bad_input():
    with pytest.raises(ValueError):
        analysis.amplitude_spectrum(np.zeros(15), 10.0)
    with pytest.raises(ValueError):
        analysis.amplitude_spectrum(np.zeros(64), 10.0, 'flattop')

def test_spectral_difference_of_scaled_signal():
    x = np.random.default_rng(5).normal(size=256)
    base = analysis.amplitude_spectrum(x, 10.0)
    same = analysis.spectral_difference(base, base)
    assert same.comparable
    assert same.max_percent == pytest.approx(0.0)
    scaled = analysis.spectral_difference(analysis.amplitude_spectrum(1.1 * x, 10.0), base)
    assert scaled.max_percent == pytest.approx(10.0)
    assert 0.0 <= scaled.frequency <= 2.0

def test_spectral_difference_ignores_noise_floor():
    n = 200
    tone = np.sin(2 * np.pi * 0.5 * 0.1 * np.arange(n))
    noise = 1e-6 * np.random.default_rng(7).normal(size=n)
    base = analysis.amplitude_spectrum(tone + noise, 10.0)
    other = analysis.amplitude_spectrum(tone + 100 * noise, 10.0)
    difference = analysis.spectral_difference(other, base)
    assert difference.frequency == pytest.approx(0.5)
    assert difference.max_percent < 1.0

def test_spectral_difference_needs_common_grid():
    a = analysis.amplitude_spectrum(np.ones(64), 10.0)
    b = analysis.amplitude_spectrum(np.ones(80), 10.0)
    with pytest.raises(tr.GridMismatchError):
        analysis.spectral_difference(a, b)

def test_spectral_difference_of_silent_baseline():
    silent = analysis.amplitude_spectrum(np.zeros(64), 10.0)
    difference = analysis.spectral_difference(analysis.amplitude_spectrum(np.ones(64), 10.0), silent)
    assert not difference.comparable
    assert math.isnan(difference.max_percent)

def test_rms_error():
    assert analysis.rms_error([0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.sqrt(12.5))

def test_tracking_report_without_measured_drive():
    report = analysis.tracking_report(drive(), drive(lead=20))
    assert report.cases == ['reference', 'generated']
    assert report.synchronized == {'generated': True}
    assert report.n == 600
    assert 'measured drive absent' in report.notes
    assert report.msdv_difference['generated']['x'] == pytest.approx(0.0, abs=1e-9)
    assert report.msdv_difference['generated']['total'] == pytest.approx(0.0, abs=1e-9)
    assert report.rms_error['generated']['ay'] == pytest.approx(0.0, abs=1e-12)
    assert report.speed['reference'][0] == pytest.approx(5.0 * 550 / 600)

def test_tracking_report_with_measured_drive():
    report = analysis.tracking_report(drive(), drive(), drive(ax_gain=1.1), measured_note='surrogate')
    assert report.cases == ['reference', 'generated', 'measured']
    assert 'surrogate' in report.notes
    assert report.msdv_difference['measured']['x'] == pytest.approx(10.0, rel=1e-6)
    assert report.msdv_difference['measured']['y'] == pytest.approx(0.0, abs=1e-9)
    assert report.spectral_difference['measured']['ax'].max_percent == pytest.approx(10.0)
    assert report.spectral_difference['generated']['ay'].max_percent == pytest.approx(0.0)

def test_tracking_report_without_standstills():
    steady = tr.Trace(0.0, 0.1, {'ax': np.sin(0.3 * np.arange(300)), 'ay': np.zeros(300)})
    report = analysis.tracking_report(steady, steady)
    assert report.synchronized == {'generated': False}
    assert report.speed == {}

def test_report_text_and_csv():
    report = analysis.tracking_report(drive(), drive(), drive(ax_gain=1.1))
    converter = ReportConverter(report)
    text = converter.convert_text()
    assert 'MSDV_total' in text
    assert 'mean speed' in text
    assert '# wf weighting sections at 10 Hz' in text
    frame = pd.read_csv(io.StringIO(converter.convert_csv()))
    assert list(frame.columns) == ['metric', 'item', 'case', 'value', 'difference_percent']
    row = frame[(frame.metric == 'msdv') & (frame['item'] == 'x') & (frame.case == 'measured')]
    assert row.difference_percent.iloc[0] == pytest.approx(10.0, rel=1e-6)

def with_yaw_rate(trace):
    return trace.with_channels(r=0.05 * np.sin(2 * np.pi * 0.15 * trace.time()))

def test_msdv_totals_use_axes_of_every_case():
    reference = drive()
    report = analysis.tracking_report(reference, with_yaw_rate(drive()), with_yaw_rate(drive()))
    assert report.axes == ('x', 'y')
    assert set(report.msdv['generated']) == {'x', 'y'}
    assert report.msdv_difference['generated']['total'] == pytest.approx(0.0, abs=1e-9)
    assert report.msdv_difference['measured']['total'] == pytest.approx(0.0, abs=1e-9)
    assert 'r' not in report.rms_error['generated']

def test_yaw_rate_compared_when_reference_has_it():
    report = analysis.tracking_report(with_yaw_rate(drive()), with_yaw_rate(drive()),
                                      with_yaw_rate(drive(ax_gain=1.1)))
    assert report.axes == ('x', 'y', 'yaw')
    assert report.rms_error['measured']['r'] == pytest.approx(0.0, abs=1e-12)
    assert 'yaw_acc' in report.spectra['reference']
    assert report.msdv_difference['generated']['yaw'] == pytest.approx(0.0, abs=1e-9)

def test_axis_spectra_cover_vertical_and_rotational_channels():
    n = 600
    t = 0.1 * np.arange(n)
    trace = tr.Trace(0.0, 0.1, {'ax': np.zeros(n), 'ay': np.zeros(n), 'az': 0.3 * np.sin(2 * np.pi * 0.5 * t),
                                'roll_acc': np.zeros(n), 'pitch_acc': np.zeros(n), 'r': np.zeros(n)})
    spectra = analysis.axis_spectra(trace)
    assert set(spectra) == {'ax', 'ay', 'az', 'yaw_acc', 'roll_acc', 'pitch_acc'}
    assert spectra['az'].amplitude[np.argmin(np.abs(spectra['az'].freqs - 0.5))] == pytest.approx(0.3, rel=1e-6)

def test_weighted_spectrum_follows_weighting_gain():
    n = 3000
    t = 0.1 * np.arange(n)
    trace = tr.Trace(0.0, 0.1, {'ax': np.sin(2 * np.pi * 0.2 * t), 'ay': np.sin(2 * np.pi * 2.0 * t)})
    weighted = analysis.axis_spectra(trace, weighting=tr.sickness.WeightingConfig())
    plain = analysis.axis_spectra(trace)
    at = np.argmin(np.abs(plain['ax'].freqs - 0.2))
    assert weighted['ax'].amplitude[at] / plain['ax'].amplitude[at] == pytest.approx(0.99, abs=0.05)
    at = np.argmin(np.abs(plain['ay'].freqs - 2.0))
    assert weighted['ay'].amplitude[at] < 0.01 * plain['ay'].amplitude[at]

def test_report_lists_weighted_spectral_differences():
    report = analysis.tracking_report(drive(), drive(), drive(ax_gain=1.1))
    assert report.weighted_spectral_difference['measured']['ax'].max_percent == pytest.approx(10.0, rel=1e-3)
    text = ReportConverter(report).convert_text()
    assert 'w. spectral diff ax' in text
    assert 'RMS error r' in text
    frame = pd.read_csv(io.StringIO(ReportConverter(report).convert_csv()))
    assert 'weighted_spectral_difference' in set(frame.metric)

def test_spectrum_converter_writes_weighted_columns():
    report = analysis.tracking_report(drive(), drive())
    csv = tr.converter.SpectrumConverter(report.spectra['reference'], report.weighted_spectra['reference']).convert()
    frame = pd.read_csv(io.StringIO(csv))
    assert list(frame.columns) == ['freq', 'ax', 'ay', 'w_ax', 'w_ay']
