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

"""Run configuration: YAML file, overrides and typed settings."""

import copy
import logging
import math
import os

from dataclasses import dataclass, field

import yaml

from . import analysis
from . import exceptions
from . import sickness
from . import trace
from .planner import DEG, PlannerBounds, PlannerConfig, PlannerWeights, SolverSettings, TrackArea
from .simulator import TrackerParams
from .vehicle import VehicleParams, VehicleState

logger = logging.getLogger(__name__)


#### Constants

OUTPUT_DIR_ENV = 'TRACKREPLAY_OUTPUT_DIR'


@dataclass(frozen=True)
class StandstillSettings:
    v_threshold: float = trace.DEFAULT_STANDSTILL_THRESHOLD
    min_duration: float = trace.DEFAULT_STANDSTILL_MIN_DURATION
    approach_window: float = trace.DEFAULT_APPROACH_WINDOW
    dwell: float = None  # s, detected duration if None


@dataclass(frozen=True)
class AnalysisSettings:
    band: tuple = analysis.DEFAULT_BAND
    window: str = analysis.WINDOW_RECTANGULAR


@dataclass(frozen=True)
class ScenarioSettings:
    seed: int = 1
    n_drives: int = 5
    fs: float = 50.0


@dataclass(frozen=True)
class RunConfig:
    """Typed settings of every pipeline stage."""
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    standstill: StandstillSettings = field(default_factory=StandstillSettings)
    tracker: TrackerParams = field(default_factory=TrackerParams)
    tracker_seed: int = 0
    filter: sickness.FilterSpec = field(default_factory=sickness.FilterSpec)
    weighting: sickness.WeightingConfig = field(default_factory=sickness.WeightingConfig)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    scenario: ScenarioSettings = field(default_factory=ScenarioSettings)
    output_directory: str = '.'
    tree: dict = field(default_factory=dict)


def default_config():
    """Returns the default configuration tree."""
    bounds = PlannerBounds()
    solver = SolverSettings()
    x_init = PlannerConfig().x_init
    tracker = TrackerParams()
    spec = sickness.FilterSpec()
    scenario = ScenarioSettings()
    standstill = StandstillSettings()
    return {
        'vehicle': dict(vars(VehicleParams())),
        'planner': {
            'Np': PlannerConfig.Np,
            'Ts': PlannerConfig.Ts,
            'weights': dict(vars(PlannerWeights())),
            'track': dict(vars(TrackArea())),
            'bounds': {
                'vx': list(bounds.vx),
                'delta_deg': [bounds.delta[0] / DEG, bounds.delta[1] / DEG],
                'ax': list(bounds.ax),
                'd_delta_deg': [bounds.d_delta[0] / DEG, bounds.d_delta[1] / DEG],
                'd_ax': list(bounds.d_ax),
            },
            'x_init': dict(vars(x_init)),
            'solver': dict(vars(solver)),
        },
        'standstill': {
            'v_threshold': standstill.v_threshold,
            'min_duration': standstill.min_duration,
            'approach_window': standstill.approach_window,
            'dwell': None,
        },
        'tracker': {
            'lookahead_gain': tracker.lookahead_gain,
            'lookahead_min': tracker.lookahead_min,
            'kp': tracker.kp,
            'ki': tracker.ki,
            'min_moving_speed': tracker.min_moving_speed,
            'standstill_dwell_extension': tracker.standstill_dwell_extension,
            'control_rate': tracker.control_rate,
            'disturbance_sigma': tracker.disturbance_sigma,
            'progress_gain': tracker.progress_gain,
            'disturbance_fade': tracker.disturbance_fade,
            'seed': 0,
        },
        'filter': {
            'fs': spec.fs,
            'passband_edge': spec.passband_edge,
            'stopband_edge': spec.stopband_edge,
            'passband_ripple': spec.passband_ripple,
            'stopband_atten': spec.stopband_atten,
            'ftype': spec.ftype,
        },
        'weighting': {
            'weighting': {axis: sickness.WEIGHTING_WF for axis in sickness.AXES},
            'k': {axis: 1.0 for axis in sickness.AXES},
        },
        'analysis': {
            'band': list(analysis.DEFAULT_BAND),
            'window': analysis.WINDOW_RECTANGULAR,
        },
        'scenario': {
            'seed': scenario.seed,
            'n_drives': scenario.n_drives,
            'fs': scenario.fs,
        },
        'output': {
            'directory': '.',
        },
    }

def merge(base, override):
    """Returns base with override deep-merged over it."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged

def parse_override(text):
    """Parses 'section.key=value' into a nested dict; the value is a YAML scalar."""
    if '=' not in text:
        raise exceptions.ConfigException(f'override must look like section.key=value: {text}')
    path, raw = text.split('=', 1)
    keys = [k.strip() for k in path.split('.')]
    if not all(keys):
        raise exceptions.ConfigException(f'empty key in override: {text}')
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as e:
        raise exceptions.ConfigException(f'cannot parse value of {path}: {e}')
    nested = value
    for key in reversed(keys):
        nested = {key: nested}
    return nested

def _check_keys(tree, defaults, prefix=''):
    for key, value in tree.items():
        dotted = f'{prefix}{key}'
        if key not in defaults:
            raise exceptions.ConfigException(f'unknown configuration key: {dotted}')
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise exceptions.ConfigException(f'configuration key {dotted} must be a mapping')
            _check_keys(value, defaults[key], dotted + '.')

def _number(tree, key, dotted, kind=float):
    value = tree[key]
    try:
        number = kind(value)
    except (TypeError, ValueError):
        raise exceptions.ConfigException(f'configuration key {dotted}.{key} must be a number: {value!r}')
    if kind is int and number != float(value):
        raise exceptions.ConfigException(f'configuration key {dotted}.{key} must be an integer: {value!r}')
    if isinstance(number, float) and not math.isfinite(number):
        raise exceptions.ConfigException(f'configuration key {dotted}.{key} must be finite: {value!r}')
    return number

def _numbers(tree, dotted):
    return {key: _number(tree, key, dotted) for key in tree}

def _pair(tree, key, dotted, scale=1.0):
    value = tree[key]
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise exceptions.ConfigException(f'configuration key {dotted}.{key} must be a pair')
    pair = {0: value[0], 1: value[1]}
    return (_number(pair, 0, f'{dotted}.{key}') * scale, _number(pair, 1, f'{dotted}.{key}') * scale)

def build_run_config(tree):
    """Validates a full configuration tree into a RunConfig.

    Raises
    ------
    ConfigException
        on unknown keys or invalid values
    """
    _check_keys(tree, default_config())
    try:
        vehicle = VehicleParams(**_numbers(tree['vehicle'], 'vehicle'))
        p = tree['planner']
        b = p['bounds']
        solver = dict(_numbers(p['solver'], 'planner.solver'))
        solver['max_iterations'] = _number(p['solver'], 'max_iterations', 'planner.solver', int)
        planner = PlannerConfig(
            Np=_number(p, 'Np', 'planner', int),
            Ts=_number(p, 'Ts', 'planner'),
            weights=PlannerWeights(**_numbers(p['weights'], 'planner.weights')),
            track=TrackArea(**_numbers(p['track'], 'planner.track')),
            bounds=PlannerBounds(
                vx=_pair(b, 'vx', 'planner.bounds'),
                delta=_pair(b, 'delta_deg', 'planner.bounds', DEG),
                ax=_pair(b, 'ax', 'planner.bounds'),
                d_delta=_pair(b, 'd_delta_deg', 'planner.bounds', DEG),
                d_ax=_pair(b, 'd_ax', 'planner.bounds')),
            x_init=VehicleState(**_numbers(p['x_init'], 'planner.x_init')),
            solver=SolverSettings(**solver),
            vehicle=vehicle)
        s = tree['standstill']
        standstill = StandstillSettings(
            v_threshold=_number(s, 'v_threshold', 'standstill'),
            min_duration=_number(s, 'min_duration', 'standstill'),
            approach_window=_number(s, 'approach_window', 'standstill'),
            dwell=None if s['dwell'] is None else _number(s, 'dwell', 'standstill'))
        t = dict(tree['tracker'])
        seed = _number(t, 'seed', 'tracker', int)
        del t['seed']
        tracker = TrackerParams(bounds=planner.bounds, **_numbers(t, 'tracker'))
        f = tree['filter']
        spec = sickness.FilterSpec(ftype=str(f['ftype']),
                                   **_numbers({k: v for k, v in f.items() if k != 'ftype'}, 'filter'))
        w = tree['weighting']
        weighting = sickness.WeightingConfig(
            weighting={axis: str(name) for axis, name in w['weighting'].items()},
            k=_numbers(w['k'], 'weighting.k'))
        a = tree['analysis']
        analysis_settings = AnalysisSettings(band=_pair(a, 'band', 'analysis'), window=str(a['window']))
        if analysis_settings.window not in analysis.WINDOWS:
            raise ValueError(f'unknown window: {analysis_settings.window}')
        c = tree['scenario']
        scenario = ScenarioSettings(seed=_number(c, 'seed', 'scenario', int),
                                    n_drives=_number(c, 'n_drives', 'scenario', int),
                                    fs=_number(c, 'fs', 'scenario'))
    except (TypeError, ValueError) as e:
        raise exceptions.ConfigException(f'invalid configuration: {e}')
    return RunConfig(vehicle, planner, standstill, tracker, seed, spec, weighting,
                     analysis_settings, scenario, str(tree['output']['directory']), tree)

def load_config(file_name=None, overrides=()):
    """Loads a run configuration.

    The file is merged over the defaults, then the TRACKREPLAY_OUTPUT_DIR
    environment variable and the --set overrides are applied.

    Parameters
    ----------
    file_name : str, optional
        YAML configuration file
    overrides : list of str
        'section.key=value' overrides

    Returns
    -------
    RunConfig
        validated configuration
    """
    tree = default_config()
    if file_name is not None:
        with open(file_name, 'r', encoding='utf-8') as f:
            try:
                loaded = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise exceptions.ConfigException(f'cannot parse {file_name}: {e}')
        if loaded is not None:
            if not isinstance(loaded, dict):
                raise exceptions.ConfigException(f'{file_name} must hold a mapping')
            _check_keys(loaded, tree)
            tree = merge(tree, loaded)
    output_dir = os.environ.get(OUTPUT_DIR_ENV)
    if output_dir:
        tree['output']['directory'] = output_dir
    for text in overrides:
        override = parse_override(text)
        _check_keys(override, tree)
        tree = merge(tree, override)
    logger.debug('configuration loaded from %s with %d overrides', file_name or 'defaults', len(overrides))
    return build_run_config(tree)

def dump(run_config):
    """Returns the configuration tree of a RunConfig as YAML text."""
    tree = run_config.tree or default_config()
    return yaml.safe_dump(tree, sort_keys=False, default_flow_style=None)
