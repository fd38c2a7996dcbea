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

"""Library-specific exception classes."""

class TrackReplayException(Exception):
    """Base class of all trackreplay exceptions."""

class TraceException(TrackReplayException):
    """Base class of trace exceptions."""

class MalformedTraceError(TraceException):
    """Raised if a trace file cannot be read as a uniform time series."""

class TraceSchemaError(TraceException):
    """Raised if a required channel is missing."""
    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f'missing required column: {column}')

class TraceDataError(TraceException):
    """Raised if a trace holds NaN or infinite values."""
    def __init__(self, column, row, message=None):
        self.column = column
        self.row = row
        super().__init__(message or f'invalid value in column {column} at row {row}')

class VehicleModelException(TrackReplayException):
    """Base class of vehicle model exceptions."""

class ModelDomainError(VehicleModelException):
    """Raised if a state leaves the validity domain of the linear bicycle model."""

class PlannerException(TrackReplayException):
    """Base class of planner exceptions."""

class InfeasibleStartError(PlannerException):
    """Raised if the initial state violates the planner bounds."""

class PlannerBoundsViolation(PlannerException):
    """Raised if a planned trajectory breaks a hard bound."""

class SamplingMismatchError(PlannerException):
    """Raised if a reference is not sampled at the planner step."""

class StandstillException(TrackReplayException):
    """Base class of standstill insertion exceptions."""

class OverlappingStopsError(StandstillException):
    """Raised if two stop regions overlap."""
    def __init__(self, marks, message=None):
        self.marks = tuple(marks)
        super().__init__(message or f'overlapping stop regions for marks {self.marks}')

class PathTooShortError(StandstillException):
    """Raised if a stop needs more path than the trajectory has left."""

class SicknessException(TrackReplayException):
    """Base class of motion sickness metric exceptions."""

class FilterDesignError(SicknessException):
    """Raised if a filter specification cannot be met."""
    def __init__(self, message, achieved_ripple=None, achieved_attenuation=None):
        self.achieved_ripple = achieved_ripple
        self.achieved_attenuation = achieved_attenuation
        super().__init__(message)

class SignalTooShortError(SicknessException):
    """Raised if a signal is shorter than a filter requires."""
    def __init__(self, length, required):
        self.length = length
        self.required = required
        super().__init__(f'signal length = {length}, required minimum = {required}')

class AnalysisException(TrackReplayException):
    """Base class of analysis exceptions."""

class GridMismatchError(AnalysisException):
    """Raised if two spectra do not share a frequency grid."""

class SimulatorException(TrackReplayException):
    """Base class of path-tracking simulator exceptions."""

class ConfigException(TrackReplayException):
    """Raised if a configuration is invalid."""
