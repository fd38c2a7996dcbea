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

"""Converter classes writing traces, trajectories and reports as text."""

import io
import math

import numpy as np
import pandas as pd

from . import analysis
from . import fileformat
from . import sickness
from .vehicle import IAX, IDELTA, IPSI, IR, IVX, IVY, IX, IY

FLOAT_FORMAT = '%.10g'


def _to_csv(frame):
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return buf.getvalue()


class TraceConverter:
    def __init__(self, trace):
        self.trace = trace

    def convert(self):
        """Returns the trace as CSV text with a leading time column."""
        columns = {fileformat.COLUMN_TIME: self.trace.time()}
        columns.update(self.trace.channels)
        return _to_csv(pd.DataFrame(columns))


class ReferenceConverter:
    def __init__(self, reference):
        self.reference = reference

    def convert(self):
        """Returns (reference CSV, marks CSV)."""
        reference = TraceConverter(self.reference.to_trace()).convert()
        marks = pd.DataFrame([[m.index, m.target_speed, m.desired_decel, m.dwell]
                              for m in self.reference.standstill_marks],
                             columns=list(fileformat.MARK_COLUMNS))
        return reference, _to_csv(marks)


class TrajectoryConverter:
    def __init__(self, trajectory):
        self.trajectory = trajectory

    def convert(self):
        """Returns the trajectory as CSV text.

        There is one input less than states; the last row repeats the final
        input.
        """
        x = self.trajectory.state_array()
        u = self.trajectory.input_array()
        if len(u) == 0:
            u = np.zeros((1, 2))
        u = np.vstack((u, u[-1:]))
        frame = pd.DataFrame({
            't': self.trajectory.time(),
            'X': x[:, IX],
            'Y': x[:, IY],
            'vx': x[:, IVX],
            'vy': x[:, IVY],
            'psi': x[:, IPSI],
            'r': x[:, IR],
            'delta': x[:, IDELTA],
            'ax': x[:, IAX],
            'd_delta': u[:, 0],
            'd_ax': u[:, 1],
            'ay': self.trajectory.ay,
        }, columns=list(fileformat.TRAJECTORY_COLUMNS))
        return _to_csv(frame)


class DiagnosticsConverter:
    def __init__(self, trajectory):
        self.trajectory = trajectory

    def convert(self):
        rows = [[d.step, d.cost, d.iterations, int(d.converged), d.violation, d.penalty]
                for d in self.trajectory.diagnostics]
        return _to_csv(pd.DataFrame(rows, columns=list(fileformat.DIAGNOSTIC_COLUMNS)))


class SicknessConverter:
    def __init__(self, report):
        self.report = report

    def convert(self):
        """Returns the cumulative MSDV series as CSV text."""
        columns = {fileformat.COLUMN_TIME: self.report.time}
        columns.update({axis: self.report.series[axis] for axis in self.report.axes})
        return _to_csv(pd.DataFrame(columns))


class SpectrumConverter:
    """Writes amplitude spectra, weighted ones with a ``w_`` column prefix."""
    def __init__(self, spectra, weighted_spectra=None):
        self.spectra = spectra  # channel -> Spectrum
        self.weighted_spectra = weighted_spectra or {}

    def convert(self):
        if not self.spectra and not self.weighted_spectra:
            return _to_csv(pd.DataFrame(columns=['freq']))
        first = next(iter({**self.spectra, **self.weighted_spectra}.values()))
        columns = {'freq': first.freqs}
        columns.update({channel: s.amplitude for channel, s in self.spectra.items()})
        columns.update({f'w_{channel}': s.amplitude for channel, s in self.weighted_spectra.items()})
        return _to_csv(pd.DataFrame(columns))


class ReportConverter:
    """Renders a TrackingReport as an aligned text table or as CSV."""
    def __init__(self, report):
        self.report = report

    def convert_text(self):
        r = self.report
        cases = r.cases
        out = []
        for note in r.notes:
            out.append(f'# {note}')
        if not r.present.get(analysis.CASE_MEASURED):
            out.append(f'# columns: {", ".join(cases)}')
        out.append(f'# samples: {r.n} at dt = {r.dt:g} s')
        header = f'{"":<28}' + ''.join(f'{case:>12}{"(%)":>8}' for case in cases)
        out.append(header)
        base = analysis.CASE_REFERENCE

        def row(label, values, differences=None):
            cells = []
            for case in cases:
                value = values.get(case)
                cells.append(f'{_fmt(value):>12}')
                diff = None if differences is None or case == base else differences.get(case)
                cells.append(f'{_fmt(diff, 0):>8}')
            out.append(f'{label:<28}' + ''.join(cells))

        axes = [a for a in sickness.AXES if any(a in r.msdv[c] for c in cases)]
        for axis in axes:
            row(f'MSDV_{axis}', {c: r.msdv[c].get(axis) for c in cases},
                {c: r.msdv_difference.get(c, {}).get(axis) for c in cases})
        row('MSDV_total', r.msdv_total, {c: r.msdv_difference.get(c, {}).get('total') for c in cases})
        if r.speed:
            out.append(f'{"mean speed (m/s)":<28}' + ''.join(
                f'{_speed(r.speed.get(c)):>20}' for c in cases))
        for channel in analysis.COMPARED_CHANNELS:
            row(f'RMS error {channel}', {c: r.rms_error.get(c, {}).get(channel) for c in cases})
        for channel in analysis.SPECTRUM_CHANNELS:
            if any(channel in r.spectral_difference.get(c, {}) for c in cases):
                row(f'spectral diff {channel}',
                    {c: _spectral(r.spectral_difference.get(c, {}).get(channel)) for c in cases})
        for channel in analysis.SPECTRUM_CHANNELS:
            if any(channel in r.weighted_spectral_difference.get(c, {}) for c in cases):
                row(f'w. spectral diff {channel}',
                    {c: _spectral(r.weighted_spectral_difference.get(c, {}).get(channel)) for c in cases})
        sos = sickness.wf_sos(1.0 / r.dt)
        out.append(f'# wf weighting sections at {1.0 / r.dt:g} Hz (b0 b1 b2 a0 a1 a2):')
        for section in sos:
            out.append('# ' + ' '.join(f'{v:.12g}' for v in section))
        return '\n'.join(out) + '\n'

    def convert_csv(self):
        """Returns the report in long form: metric, item, case, value, difference."""
        r = self.report
        rows = []
        for case in r.cases:
            for axis, value in r.msdv[case].items():
                rows.append(['msdv', axis, case, value, r.msdv_difference.get(case, {}).get(axis)])
            rows.append(['msdv', 'total', case, r.msdv_total[case],
                         r.msdv_difference.get(case, {}).get('total')])
            if case in r.speed:
                rows.append(['speed_mean', 'vx', case, r.speed[case][0], None])
                rows.append(['speed_std', 'vx', case, r.speed[case][1], None])
            for channel, value in r.rms_error.get(case, {}).items():
                rows.append(['rms_error', channel, case, value, None])
            for channel, diff in r.spectral_difference.get(case, {}).items():
                rows.append(['spectral_difference', channel, case,
                             diff.max_percent if diff.comparable else None, None])
            for channel, diff in r.weighted_spectral_difference.get(case, {}).items():
                rows.append(['weighted_spectral_difference', channel, case,
                             diff.max_percent if diff.comparable else None, None])
        frame = pd.DataFrame(rows, columns=['metric', 'item', 'case', 'value', 'difference_percent'])
        return _to_csv(frame)


def _fmt(value, digits=2):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return '-'
    return f'{value:.{digits}f}'

def _speed(pair):
    if pair is None:
        return '-'
    return f'{pair[0]:.2f} +- {pair[1]:.2f}'

def _spectral(diff):
    if diff is None:
        return None
    return diff.max_percent if diff.comparable else math.nan
