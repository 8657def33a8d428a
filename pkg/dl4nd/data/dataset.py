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

import dataclasses
import typing

import numpy as np

from dl4nd import constants
from dl4nd import exceptions
from dl4nd.utils import numerics


@dataclasses.dataclass(frozen=True)
class Sample:
    id: int
    features: np.ndarray
    domain: int
    noisy_label: int
    # Hidden from training; None when the source file had no such column.
    true_label: typing.Optional[int]


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype)
    array.flags.writeable = False
    return array


class Dataset(object):
    """Immutable multi-domain labelled sample set.

    Per-sample columns are aligned numpy arrays; row ``i`` of ``features``
    belongs to ``ids[i]``. Every derived dataset is a new object.
    """

    def __init__(self, ids, features, domains, noisy_labels, true_labels,
                 num_classes, num_domains, metadata=None):
        self.ids = _frozen(ids, np.int64)
        self.features = _frozen(features, np.float64)
        self.domains = _frozen(domains, np.int64)
        self.noisy_labels = _frozen(noisy_labels, np.int64)
        self.true_labels = (None if true_labels is None
                            else _frozen(true_labels, np.int64))
        self.num_classes = int(num_classes)
        self.num_domains = int(num_domains)
        self.metadata = dict(metadata or {})
        self._validate()

    def _validate(self):
        n = self.ids.shape[0]
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise exceptions.InvalidSpec(
                reason="features must be an (n, dim) matrix")
        columns = [self.domains, self.noisy_labels]
        if self.true_labels is not None:
            columns.append(self.true_labels)
        if any(column.shape != (n,) for column in columns):
            raise exceptions.InvalidSpec(reason="column lengths differ")
        if len(np.unique(self.ids)) != n:
            raise exceptions.InvalidSpec(reason="sample ids are not unique")
        if n and (self.domains.min() < 0 or
                  self.domains.max() >= self.num_domains):
            raise exceptions.InvalidSpec(reason="domain index out of range")
        for column in columns[1:]:
            if n and (column.min() < 0 or
                      column.max() >= self.num_classes):
                raise exceptions.InvalidSpec(
                    reason="label out of range")

    def __len__(self):
        return int(self.ids.shape[0])

    def __iter__(self):
        for row in range(len(self)):
            yield self.sample(row)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        if (self.true_labels is None) != (other.true_labels is None):
            return False
        return (self.num_classes == other.num_classes and
                self.num_domains == other.num_domains and
                self.metadata == other.metadata and
                self.checksum() == other.checksum())

    __hash__ = None

    @property
    def dim(self):
        return int(self.features.shape[1])

    @property
    def has_true_labels(self):
        return self.true_labels is not None

    def sample(self, row):
        true_label = (None if self.true_labels is None
                      else int(self.true_labels[row]))
        return Sample(id=int(self.ids[row]), features=self.features[row],
                      domain=int(self.domains[row]),
                      noisy_label=int(self.noisy_labels[row]),
                      true_label=true_label)

    def rows_for(self, ids):
        """Row positions of the given sample ids."""
        index = {int(sid): row for row, sid in enumerate(self.ids)}
        return np.array([index[int(sid)] for sid in ids], dtype=np.int64)

    def cell_counts(self, labels=None):
        """Sample count per (class, domain) cell as a (C, m) array."""
        labels = self.noisy_labels if labels is None else labels
        counts = np.zeros((self.num_classes, self.num_domains),
                          dtype=np.int64)
        np.add.at(counts, (labels, self.domains), 1)
        return counts

    def subset(self, mask):
        mask = np.asarray(mask)
        true_labels = (None if self.true_labels is None
                       else self.true_labels[mask])
        return Dataset(self.ids[mask], self.features[mask],
                       self.domains[mask], self.noisy_labels[mask],
                       true_labels, self.num_classes, self.num_domains,
                       self.metadata)

    def with_noisy_labels(self, labels, **metadata):
        merged = dict(self.metadata)
        merged.update(metadata)
        return Dataset(self.ids, self.features, self.domains, labels,
                       self.true_labels, self.num_classes, self.num_domains,
                       merged)

    def without_true_labels(self):
        return Dataset(self.ids, self.features, self.domains,
                       self.noisy_labels, None, self.num_classes,
                       self.num_domains, self.metadata)

    def checksum(self):
        arrays = [self.ids, self.domains, self.noisy_labels, self.features]
        if self.true_labels is not None:
            arrays.append(self.true_labels)
        return numerics.checksum(*arrays)


@dataclasses.dataclass(frozen=True)
class DomainSpec:
    num_classes: int = 10
    num_domains: int = 4
    samples_per_cell: int = 30
    feature_dim: int = 16
    class_separation: float = 3.0
    # Degrees, one per domain.
    rotation_angles: typing.Tuple[float, ...] = (0.0, 15.0, 30.0, 45.0)
    translation: float = 0.2
    cluster_noise_sigma: float = 0.15
    seed: int = 0

    def validate(self):
        for name in ('num_classes', 'num_domains', 'samples_per_cell',
                     'feature_dim'):
            if getattr(self, name) <= 0:
                raise exceptions.InvalidSpec(reason="%s must be positive" %
                                             name)
        if self.feature_dim < 2:
            raise exceptions.InvalidSpec(
                reason="feature_dim must be >= 2 for domain rotations")
        if len(self.rotation_angles) != self.num_domains:
            raise exceptions.InvalidSpec(
                reason="expected %d rotation angles, got %d" %
                (self.num_domains, len(self.rotation_angles)))
        if self.class_separation <= 0:
            raise exceptions.InvalidSpec(
                reason="class_separation must be positive")
        if self.cluster_noise_sigma < 0 or self.translation < 0:
            raise exceptions.InvalidSpec(
                reason="jitter and translation must be non-negative")

    @staticmethod
    def default_angles(num_domains, step=15.0):
        return tuple(float(i * step) for i in range(num_domains))


@dataclasses.dataclass(frozen=True)
class NoiseSpec:
    pairs: typing.Tuple[typing.Tuple[int, int], ...] = ()
    ratio: float = 0.0
    seed: int = 0
    mode: str = constants.NOISE_MODE_BERNOULLI

    def validate(self, num_classes):
        if not 0.0 <= self.ratio < 1.0:
            raise exceptions.InvalidSpec(reason="noise ratio must be in "
                                                "[0, 1)")
        if self.mode not in (constants.NOISE_MODE_BERNOULLI,
                             constants.NOISE_MODE_EXACT):
            raise exceptions.InvalidSpec(reason="unknown noise mode %s" %
                                         self.mode)
        sources = set()
        for source, target in self.pairs:
            if source == target:
                raise exceptions.InvalidSpec(
                    reason="pair (%d, %d) flips a class onto itself" %
                    (source, target))
            if not (0 <= source < num_classes and
                    0 <= target < num_classes):
                raise exceptions.InvalidSpec(
                    reason="pair (%d, %d) references a class outside "
                           "[0, %d)" % (source, target, num_classes))
            if source in sources:
                raise exceptions.InvalidSpec(
                    reason="class %d is the source of several pairs" %
                    source)
            sources.add(source)
