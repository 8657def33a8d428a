# Copyright 2026 The dl4nd Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from oslo_log import log as logging

from dl4nd import exceptions

LOG = logging.getLogger(__name__)


class SwadState(object):
    """Running sum of checkpoints inside the averaging window."""

    def __init__(self, start=None, end=None):
        self.start = start
        self.end = end
        self.total = None
        self.count = 0

    def in_window(self, step):
        if self.start is None or self.end is None:
            return True
        return self.start <= step <= self.end

    @property
    def expected_count(self):
        if self.start is None or self.end is None:
            return None
        return self.end - self.start + 1


def swad_accumulate(state, params):
    if state.total is None:
        state.total = params.map(lambda w: w.copy())
    else:
        state.total = state.total + params
    state.count += 1
    return state


def swad_finalize(state):
    """Coordinate-wise mean of the accumulated checkpoints."""
    if state.count == 0:
        raise exceptions.EmptySwadState()
    expected = state.expected_count
    if expected is not None and expected != state.count:
        LOG.warning("Averaged %(count)d checkpoints over a window of "
                    "%(expected)d steps",
                    {'count': state.count, 'expected': expected})
    return state.total.scaled(1.0 / state.count)
