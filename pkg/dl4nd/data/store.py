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

"""Line-oriented dataset files.

Layout::

    # dl4nd-dataset 1 {"dim": 16, "metadata": {...}, "num_classes": 10, ...}
    id,domain,noisy_label,true_label,f0,...,f15
    0,0,3,3,0.25,...

The ``true_label`` column is optional; without it the loaded dataset has
evaluation metrics disabled. Floats are written with ``repr`` so a save
and load round trip is exact.
"""

import csv

import numpy as np
from oslo_log import log as logging
from oslo_serialization import jsonutils
from oslo_utils import fileutils

from dl4nd import constants
from dl4nd.data import dataset as ds
from dl4nd import exceptions

LOG = logging.getLogger(__name__)

BASE_COLUMNS = ['id', 'domain', 'noisy_label']
TRUE_LABEL_COLUMN = 'true_label'


def _header(dataset):
    header = {
        'num_classes': dataset.num_classes,
        'num_domains': dataset.num_domains,
        'dim': dataset.dim,
        'metadata': dataset.metadata,
    }
    return '# %s %d %s\n' % (constants.DATASET_MAGIC,
                             constants.DATASET_VERSION,
                             jsonutils.dumps(header, sort_keys=True))


def save_dataset(dataset, path):
    columns = list(BASE_COLUMNS)
    if dataset.has_true_labels:
        columns.append(TRUE_LABEL_COLUMN)
    columns.extend('f%d' % k for k in range(dataset.dim))
    try:
        with open(path, 'w', newline='') as stream:
            stream.write(_header(dataset))
            writer = csv.writer(stream, lineterminator='\n')
            writer.writerow(columns)
            for row, sample in enumerate(dataset):
                record = [sample.id, sample.domain, sample.noisy_label]
                if dataset.has_true_labels:
                    record.append(sample.true_label)
                record.extend(repr(value)
                              for value in dataset.features[row].tolist())
                writer.writerow(record)
    except OSError as e:
        LOG.error("Unable to write dataset %s: %s", path, e)
        fileutils.delete_if_exists(path)
        raise exceptions.ReportIOError(path=path, reason=e)
    LOG.info("Saved %d samples to %s", len(dataset), path)


def _parse_header(path, line):
    try:
        marker, magic, version, payload = line.rstrip('\n').split(' ', 3)
        if marker != '#' or magic != constants.DATASET_MAGIC:
            raise ValueError("missing %s marker" % constants.DATASET_MAGIC)
        if int(version) != constants.DATASET_VERSION:
            raise ValueError("unsupported format version %s" % version)
        header = jsonutils.loads(payload)
        return (int(header['num_classes']), int(header['num_domains']),
                int(header['dim']), header.get('metadata', {}))
    except (ValueError, KeyError, TypeError) as e:
        raise exceptions.DatasetParseError(path=path, line=1, reason=e)


def _parse_columns(path, columns, dim):
    has_true = TRUE_LABEL_COLUMN in columns
    expected = list(BASE_COLUMNS)
    if has_true:
        expected.append(TRUE_LABEL_COLUMN)
    expected.extend('f%d' % k for k in range(dim))
    if columns != expected:
        raise exceptions.DatasetParseError(
            path=path, line=2,
            reason="columns %s do not match header dim %d" %
            (','.join(columns), dim))
    return has_true


def load_dataset(path):
    try:
        with open(path, newline='') as stream:
            num_classes, num_domains, dim, metadata = _parse_header(
                path, stream.readline())
            reader = csv.reader(stream)
            has_true = _parse_columns(path, next(reader, []), dim)
            ids, domains, noisy, true, features = [], [], [], [], []
            offset = 4 if has_true else 3
            for line, record in enumerate(reader, start=3):
                if len(record) != offset + dim:
                    raise exceptions.DatasetParseError(
                        path=path, line=line,
                        reason="expected %d fields, got %d" %
                        (offset + dim, len(record)))
                try:
                    sid, domain, label = (int(v) for v in record[:3])
                    true_label = int(record[3]) if has_true else None
                    vector = [float(v) for v in record[offset:]]
                except ValueError as e:
                    raise exceptions.DatasetParseError(path=path, line=line,
                                                       reason=e)
                if not 0 <= domain < num_domains:
                    raise exceptions.DatasetParseError(
                        path=path, line=line,
                        reason="domain %d outside [0, %d)" %
                        (domain, num_domains))
                for value in (label, true_label):
                    if value is not None and not 0 <= value < num_classes:
                        raise exceptions.DatasetParseError(
                            path=path, line=line,
                            reason="label %d outside [0, %d)" %
                            (value, num_classes))
                ids.append(sid)
                domains.append(domain)
                noisy.append(label)
                true.append(true_label)
                features.append(vector)
    except OSError as e:
        raise exceptions.ReportIOError(path=path, reason=e)
    if not has_true:
        LOG.warning("Dataset %s has no true_label column; evaluation "
                    "metrics are disabled", path)
    features = np.array(features, dtype=np.float64).reshape(-1, dim)
    try:
        return ds.Dataset(ids, features, domains, noisy,
                          true if has_true else None, num_classes,
                          num_domains, metadata)
    except exceptions.InvalidSpec as e:
        raise exceptions.DatasetParseError(path=path, line=0, reason=e)
