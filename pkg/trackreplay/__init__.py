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

__version__ = '0.1.0'

from . import analysis
from . import config
from . import converter
from . import planner
from . import scenario
from . import sickness
from . import simulator
from . import standstill
from . import trace
from . import vehicle

from .exceptions import *
from .fileformat import *
from .parser import *
