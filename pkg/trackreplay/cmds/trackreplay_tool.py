#!/usr/bin/env python3

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

import argparse
import logging
import os
import sys

import trackreplay as tr
from trackreplay import exceptions
from trackreplay.converter import DiagnosticsConverter, ReferenceConverter, ReportConverter
from trackreplay.converter import SicknessConverter, SpectrumConverter, TraceConverter, TrajectoryConverter

logger = logging.getLogger('trackreplay.cmds')

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3
EXIT_USAGE = 64
EXIT_NOINPUT = 66

MARKS_FILE = 'reference_marks.csv'
MEASURED_NOTE = 'measured column: closed-loop path-tracking surrogate unless recorded on a vehicle'


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f'{self.prog}: error: {message}\n')


def output_path(args, run_config, file_name):
    directory = args.output_dir or run_config.output_directory
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, file_name)

def save(text, file_name):
    with open(file_name, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    logger.info('wrote %s', file_name)

def require_files(*file_names):
    for file_name in file_names:
        if file_name is not None and not os.path.isfile(file_name):
            raise FileNotFoundError(file_name)

def subcommand_scenario(args, run_config):
    settings = run_config.scenario
    seed = settings.seed if args.seed is None else args.seed
    drives = tr.scenario.generate_drives(seed, settings.n_drives, settings.fs)
    os.makedirs(args.outdir, exist_ok=True)
    for i, drive in enumerate(drives, start=1):
        save(TraceConverter(drive).convert(), os.path.join(args.outdir, f'drive_{i}.csv'))
    return EXIT_OK

def build_reference(traces, run_config):
    """Filters, averages and marks the standstills of on-road drives."""
    Ts = run_config.planner.Ts
    spec = run_config.filter
    if abs(spec.fs * Ts - 1.0) > 1e-9:
        raise exceptions.ConfigException(f'filter.fs = {spec.fs} Hz does not match planner.Ts = {Ts} s')
    coeffs = tr.sickness.design_zero_phase_lowpass(spec)
    channels = (tr.CHANNEL_AX, tr.CHANNEL_AY, tr.CHANNEL_VX, tr.CHANNEL_R)
    filtered = [tr.sickness.filter_trace(tr.trace.resample(t, Ts), coeffs, channels) for t in traces]
    reference = tr.trace.average_traces(filtered, Ts)
    marks = []
    if reference.vx_ref is not None:
        s = run_config.standstill
        averaged = reference.to_trace()
        intervals = tr.trace.detect_standstills(averaged, s.v_threshold, s.min_duration)
        marks = tr.trace.standstill_marks(averaged, intervals, s.approach_window)
        logger.info('found %d standstills in the reference', len(marks))
    else:
        logger.warning('drives lack vx, the reference has no standstill marks')
    return tr.ReferenceTrace(Ts, reference.ax_ref, reference.ay_ref, marks, reference.vx_ref, reference.r_ref)

def subcommand_reference(args, run_config):
    if not args.inputs:
        raise UsageError('reference needs at least one trace file')
    require_files(*args.inputs)
    traces = [tr.load_trace(f, use=tr.USE_PLANNING) for f in args.inputs]
    reference = build_reference(traces, run_config)
    reference_csv, marks_csv = ReferenceConverter(reference).convert()
    save(reference_csv, output_path(args, run_config, 'reference.csv'))
    save(marks_csv, output_path(args, run_config, MARKS_FILE))
    return EXIT_OK

def subcommand_plan(args, run_config):
    marks_file = args.marks
    if marks_file is None:
        sibling = os.path.join(os.path.dirname(args.reference), MARKS_FILE)
        marks_file = sibling if os.path.isfile(sibling) else None
    require_files(args.reference, marks_file)
    reference = tr.load_reference(args.reference, marks_file)
    config = run_config.planner

    def progress(step, total):
        if step == total:
            logger.info('planning finished after %d steps', total)

    planned = tr.planner.plan(reference, config, progress)
    marks = tr.standstill.marks_from_reference(reference, planned, run_config.standstill.dwell)
    trajectory = tr.standstill.insert_standstills(planned, marks)
    save(TrajectoryConverter(trajectory).convert(), output_path(args, run_config, 'trajectory.csv'))
    save(DiagnosticsConverter(trajectory).convert(), output_path(args, run_config, 'diagnostics.csv'))

    x = trajectory.state_array()
    if not config.track.contains(x[:, tr.vehicle.IX], x[:, tr.vehicle.IY], config.solver.max_violation):
        logger.error('trajectory leaves the test area')
        return EXIT_INVARIANT
    if not planned.all_converged():
        failed = sum(1 for d in planned.diagnostics if not d.converged)
        logger.error('%d of %d steps did not converge', failed, len(planned.diagnostics))
        return EXIT_INVARIANT
    return EXIT_OK

def subcommand_simulate(args, run_config):
    require_files(args.trajectory)
    trajectory = tr.load_trajectory(args.trajectory)
    seed = run_config.tracker_seed if args.seed is None else args.seed
    measured = tr.simulator.track_path(trajectory, run_config.tracker, run_config.vehicle, seed)
    save(TraceConverter(measured).convert(), output_path(args, run_config, 'measured.csv'))
    return EXIT_OK

def subcommand_evaluate(args, run_config):
    require_files(args.reference, args.generated, args.measured)
    reference = tr.load_trace(args.reference, use=tr.USE_PLANNING)
    generated = tr.load_trace(args.generated, use=tr.USE_PLANNING)
    measured = tr.load_trace(args.measured, use=tr.USE_PLANNING) if args.measured else None
    a = run_config.analysis
    report = tr.analysis.tracking_report(reference, generated, measured, run_config.weighting,
                                         a.band, a.window, MEASURED_NOTE if measured is not None else None)
    converter = ReportConverter(report)
    save(converter.convert_text(), output_path(args, run_config, 'report.txt'))
    save(converter.convert_csv(), output_path(args, run_config, 'report.csv'))
    traces = {tr.analysis.CASE_REFERENCE: reference, tr.analysis.CASE_GENERATED: generated}
    if measured is not None:
        traces[tr.analysis.CASE_MEASURED] = measured
    for case in report.cases:
        scores = tr.sickness.sickness_report(tr.trace.resample(traces[case], reference.dt),
                                             run_config.weighting, report.axes)
        save(SicknessConverter(scores).convert(), output_path(args, run_config, f'msdv_{case}.csv'))
        save(SpectrumConverter(report.spectra[case], report.weighted_spectra[case]).convert(),
             output_path(args, run_config, f'spectra_{case}.csv'))
    print(converter.convert_text(), end='')
    return EXIT_OK

def subcommand_config_dump(args, run_config):
    print(tr.config.dump(run_config), end='')
    return EXIT_OK

def build_parser():
    parser = ArgumentParser(prog='trackreplay',
                            description='Recreate on-road motion sickness exposure on a compact test track')
    parser.add_argument('-c', '--config', type=str, help='YAML configuration file')
    parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='SECTION.KEY=VALUE',
                        help='override a configuration value (repeatable)')
    parser.add_argument('-o', '--output-dir', type=str, help='output directory (default: output.directory)')
    parser.add_argument('-v', '--verbose', action='store_true', default=False, help='debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', default=False, help='warnings and errors only')
    subparsers = parser.add_subparsers()

    # 'scenario' subcommand
    parser_scenario = subparsers.add_parser('scenario', help='write seeded synthetic drives')
    parser_scenario.add_argument('outdir', type=str, help='directory of the drive files')
    parser_scenario.add_argument('--seed', type=int, help='scenario seed (default: scenario.seed)')
    parser_scenario.set_defaults(handler=subcommand_scenario)

    # 'reference' subcommand
    parser_reference = subparsers.add_parser('reference', help='average on-road drives into a reference')
    parser_reference.add_argument('inputs', type=str, nargs='*', help='on-road trace files')
    parser_reference.set_defaults(handler=subcommand_reference)

    # 'plan' subcommand
    parser_plan = subparsers.add_parser('plan', help='plan a trajectory tracking a reference')
    parser_plan.add_argument('reference', type=str, help='reference file')
    parser_plan.add_argument('--marks', type=str, help=f'standstill marks file (default: sibling {MARKS_FILE})')
    parser_plan.set_defaults(handler=subcommand_plan)

    # 'simulate' subcommand
    parser_simulate = subparsers.add_parser('simulate', help='track a planned trajectory')
    parser_simulate.add_argument('trajectory', type=str, help='trajectory file')
    parser_simulate.add_argument('--seed', type=int, help='disturbance seed, 0 for none (default: tracker.seed)')
    parser_simulate.set_defaults(handler=subcommand_simulate)

    # 'evaluate' subcommand
    parser_evaluate = subparsers.add_parser('evaluate', help='compare generated and measured drives')
    parser_evaluate.add_argument('reference', type=str, help='reference file')
    parser_evaluate.add_argument('generated', type=str, help='trajectory file')
    parser_evaluate.add_argument('measured', type=str, nargs='?', help='measured trace file')
    parser_evaluate.set_defaults(handler=subcommand_evaluate)

    # 'config' subcommand
    parser_config = subparsers.add_parser('config', help='configuration tools')
    config_subparsers = parser_config.add_subparsers()
    parser_dump = config_subparsers.add_parser('dump', help='print the merged configuration')
    parser_dump.set_defaults(handler=subcommand_config_dump)
    return parser

def run(argv=None):
    """Runs the command line and returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    if not hasattr(args, 'handler'):
        parser.print_help()
        return EXIT_USAGE
    try:
        require_files(args.config)
        run_config = tr.config.load_config(args.config, args.overrides)
        return args.handler(args, run_config)
    except UsageError as e:
        print(f'trackreplay: error: {e}', file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        logger.error('no such file: %s', e.filename or e)
        return EXIT_NOINPUT
    except exceptions.SamplingMismatchError as e:
        logger.error('%s', e)
        return EXIT_INPUT
    except (exceptions.PlannerException, exceptions.VehicleModelException,
            exceptions.SimulatorException) as e:
        logger.error('%s', e)
        return EXIT_INVARIANT
    except (exceptions.TrackReplayException, ValueError) as e:
        logger.error('%s', e)
        return EXIT_INPUT

def main():
    sys.exit(run())

if __name__ == '__main__':
    main()
