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

"""Versioned text checkpoints.

Layout::

    dl4nd-checkpoint 1
    dims 16 32 16 10
    <one line per weight row, row-major, then one line per bias vector>

Values are written with ``repr`` so the round trip is bit-exact.
"""

import numpy as np
from oslo_log import log as logging
from oslo_utils import fileutils

from dl4nd import constants
from dl4nd import exceptions
from dl4nd.model import mlp

LOG = logging.getLogger(__name__)


def _row(values):
    return ' '.join(repr(v) for v in values.tolist())


def save_checkpoint(params, path):
    lines = ['%s %d' % (constants.CHECKPOINT_MAGIC,
                        constants.CHECKPOINT_VERSION),
             'dims %s' % ' '.join(str(d) for d in params.layer_dims)]
    for w, b in params.layers:
        lines.extend(_row(row) for row in w)
        lines.append(_row(b))
    try:
        with open(path, 'w') as stream:
            stream.write('\n'.join(lines) + '\n')
    except OSError as e:
        LOG.error("Unable to write checkpoint %s: %s", path, e)
        fileutils.delete_if_exists(path)
        raise exceptions.ReportIOError(path=path, reason=e)
    LOG.info("Saved checkpoint with %d parameters to %s",
             params.num_parameters, path)


def load_checkpoint(path):
    try:
        with open(path) as stream:
            lines = stream.read().splitlines()
    except OSError as e:
        raise exceptions.ReportIOError(path=path, reason=e)

    def fail(line, reason):
        return exceptions.CheckpointParseError(path=path, line=line,
                                               reason=reason)

    if len(lines) < 2 or lines[0] != '%s %d' % (
            constants.CHECKPOINT_MAGIC, constants.CHECKPOINT_VERSION):
        raise fail(1, "missing %s version %d header" %
                   (constants.CHECKPOINT_MAGIC,
                    constants.CHECKPOINT_VERSION))
    fields = lines[1].split()
    try:
        if fields[0] != 'dims':
            raise ValueError("expected dims line")
        dims = [int(d) for d in fields[1:]]
    except (ValueError, IndexError) as e:
        raise fail(2, e)
    if len(dims) < 2:
        raise fail(2, "need at least two layer widths")

    cursor = 2
    layers = []

    def read_row(width):
        nonlocal cursor
        if cursor >= len(lines):
            raise fail(cursor + 1, "unexpected end of file")
        try:
            values = [float(v) for v in lines[cursor].split()]
        except ValueError as e:
            raise fail(cursor + 1, e)
        if len(values) != width:
            raise fail(cursor + 1, "expected %d values, got %d" %
                       (width, len(values)))
        cursor += 1
        return values

    for fan_in, fan_out in zip(dims, dims[1:]):
        weights = np.array([read_row(fan_out) for _i in range(fan_in)])
        bias = np.array(read_row(fan_out))
        layers.append((weights.reshape(fan_in, fan_out), bias))
    if cursor != len(lines):
        raise fail(cursor + 1, "trailing data")
    return mlp.ModelParams(layers)
