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

from dl4nd import constants
from dl4nd.data import noise

LOG = logging.getLogger(__name__)


def parse_noise_pair(noise_pair):
    """Parse a ``source:target`` flip pair such as ``4:9``."""
    try:
        source, target = noise_pair.split(":")
        return int(source), int(target)
    except ValueError:
        LOG.warning("Incorrect noise pair setting: %s", noise_pair)
        return None, None


def parse_class_pairs(entries):
    pairs = []
    for entry in entries or []:
        source, target = parse_noise_pair(entry.strip())
        if source is None:
            raise ValueError(entry)
        pairs.append((source, target))
    return pairs


def resolve_noise_pairs(preset, pairs):
    # Explicit pairs win over the named preset.
    if pairs:
        return parse_class_pairs(pairs)
    return noise.noise_preset(preset)


def parse_method(method):
    """Split ``erm+elr+dl4nd`` into (``erm+elr``, True)."""
    parts = method.split('+')
    refine = constants.REFINE_SUFFIX in parts
    objective = '+'.join(p for p in parts if p != constants.REFINE_SUFFIX)
    return objective, refine


def objective_driver_name(objective):
    return objective.replace('+', '_')


def output_name(stem, fmt):
    return '%s.%s' % (stem, constants.FORMAT_EXTENSIONS[fmt])
