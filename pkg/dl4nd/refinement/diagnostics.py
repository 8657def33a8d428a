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

"""Label quality and feature-geometry diagnostics."""

import dataclasses
import typing

import numpy as np
from oslo_log import log as logging

from dl4nd import constants
from dl4nd import exceptions
from dl4nd.refinement import proxies as proxy_lib
from dl4nd.utils import numerics

LOG = logging.getLogger(__name__)


def label_accuracy(assignment, dataset):
    if not dataset.has_true_labels:
        raise exceptions.MetricUnavailable(metric='label_accuracy')
    assignment = np.asarray(assignment)
    if len(dataset) == 0:
        return None
    return float(np.mean(assignment == dataset.true_labels))


def _labels(dataset, use_true_labels):
    if not use_true_labels:
        return dataset.noisy_labels
    if not dataset.has_true_labels:
        raise exceptions.MetricUnavailable(metric='true-label diagnostics')
    return dataset.true_labels


def separability_rate(features, dataset, proxies, use_true_labels=False):
    """Fraction of samples nearer their own class than any other class.

    Distances are cross-domain averages. Classes without cross-domain
    proxies drop out of the comparison; a sample whose own class is
    unavailable does not satisfy the condition. Ties do not satisfy it.
    """
    if len(dataset) == 0:
        return None
    labels = _labels(dataset, use_true_labels)
    distances, _used = proxy_lib.class_distance_matrix(
        features, dataset.domains, proxies)
    rows = np.arange(len(dataset))
    own = distances[rows, labels]
    others = distances.copy()
    others[rows, labels] = np.nan
    nearest_other = np.min(np.where(np.isnan(others), np.inf, others),
                           axis=1)
    satisfied = np.where(np.isnan(own), np.inf, own) < nearest_other
    return float(satisfied.mean())


def _group_means(matrix, keys):
    return {key: numerics.group_mean(matrix[keys == key])
            for key in np.unique(keys)}


def assumption_rate(features, dataset, use_true_labels=False):
    """Fraction of samples closer to their class mean than their domain mean.

    Means pool every sample of the class (all domains) and of the domain
    (all classes).
    """
    if len(dataset) == 0:
        return None
    features = np.asarray(features, dtype=np.float64)
    labels = _labels(dataset, use_true_labels)
    class_means = _group_means(features, labels)
    domain_means = _group_means(features, dataset.domains)
    hits = 0
    for row in range(len(dataset)):
        to_class = numerics.cosine_distance(features[row],
                                            class_means[labels[row]])
        to_domain = numerics.cosine_distance(
            features[row], domain_means[dataset.domains[row]])
        hits += to_class < to_domain
    return float(hits) / len(dataset)


@dataclasses.dataclass(frozen=True)
class Summary:
    count: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    @classmethod
    def of(cls, values):
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            return None
        q1, median, q3 = np.percentile(values, [25, 50, 75])
        return cls(count=int(values.size), minimum=float(values.min()),
                   q1=float(q1), median=float(median), q3=float(q3),
                   maximum=float(values.max()))


@dataclasses.dataclass(frozen=True)
class PairStats:
    class_a: int
    class_b: int
    domain: int
    # Class-b samples of this domain against the (class_a, domain) mean.
    cross_class: typing.Optional[Summary]
    # Class-a samples of the other domains against the same mean.
    cross_domain: typing.Optional[Summary]
    overlap: bool


@dataclasses.dataclass(frozen=True)
class DistanceStats:
    mean_source: str
    cells: typing.Dict[typing.Tuple[int, int], Summary]
    pairs: typing.Tuple[PairStats, ...]
    missing_groups: typing.Tuple[typing.Tuple[int, int], ...]

    @property
    def overlap(self):
        return any(p.overlap for p in self.pairs)

    def rows(self):
        """Flat rows for tabular output."""
        rows = []
        for (label, domain), summary in sorted(self.cells.items()):
            rows.append(_row('cell', label, label, domain, summary, None))
        for pair in self.pairs:
            rows.append(_row('cross_class', pair.class_a, pair.class_b,
                             pair.domain, pair.cross_class, pair.overlap))
            rows.append(_row('cross_domain', pair.class_a, pair.class_a,
                             pair.domain, pair.cross_domain, pair.overlap))
        return rows

    def to_dict(self):
        return {'mean_source': self.mean_source,
                'overlap': self.overlap,
                'missing_groups': [list(g) for g in self.missing_groups],
                'rows': self.rows()}


ROW_COLUMNS = ('kind', 'class_a', 'class_b', 'domain', 'count', 'min', 'q1',
               'median', 'q3', 'max', 'overlap')


def _row(kind, class_a, class_b, domain, summary, overlap):
    row = dict.fromkeys(ROW_COLUMNS)
    row.update(kind=kind, class_a=class_a, class_b=class_b, domain=domain,
               overlap=overlap)
    if summary is not None:
        row.update(count=summary.count, min=summary.minimum, q1=summary.q1,
                   median=summary.median, q3=summary.q3,
                   max=summary.maximum)
    return row


def distance_stats(features, dataset, mean_source=constants.MEAN_SOURCE_ALL,
                   low_mask=None, class_pairs=((4, 9),)):
    """Distances of samples to (class, domain) group averages.

    With ``low_loss_only`` the group averages use low-loss members only;
    groups without any are omitted and listed in ``missing_groups``.
    """
    features = np.asarray(features, dtype=np.float64)
    if mean_source == constants.MEAN_SOURCE_LOW_LOSS:
        if low_mask is None:
            raise exceptions.DegenerateInput(
                reason="low_loss_only statistics need a loss split")
        source_mask = np.asarray(low_mask, dtype=bool)
    else:
        source_mask = np.ones(len(dataset), dtype=bool)
    labels = dataset.noisy_labels
    means = {}
    missing = []
    for label in range(dataset.num_classes):
        for domain in range(dataset.num_domains):
            cell = (labels == label) & (dataset.domains == domain)
            if not cell.any():
                continue
            members = cell & source_mask
            if not members.any():
                missing.append((label, domain))
                continue
            means[(label, domain)] = numerics.group_mean(features[members])

    cells = {}
    for (label, domain), mean in means.items():
        cell = (labels == label) & (dataset.domains == domain)
        cells[(label, domain)] = Summary.of(
            numerics.cosine_distance_matrix(features[cell], mean)[:, 0])

    pairs = []
    for class_a, class_b in class_pairs:
        for domain in range(dataset.num_domains):
            mean = means.get((class_a, domain))
            if mean is None:
                continue
            cross_class = (labels == class_b) & (dataset.domains == domain)
            cross_domain = (labels == class_a) & (dataset.domains != domain)
            cc = (numerics.cosine_distance_matrix(features[cross_class],
                                                  mean)[:, 0]
                  if cross_class.any() else np.empty(0))
            cd = (numerics.cosine_distance_matrix(features[cross_domain],
                                                  mean)[:, 0]
                  if cross_domain.any() else np.empty(0))
            overlap = bool(cc.size and cd.size and cc.min() < cd.max())
            pairs.append(PairStats(class_a=class_a, class_b=class_b,
                                   domain=domain,
                                   cross_class=Summary.of(cc),
                                   cross_domain=Summary.of(cd),
                                   overlap=overlap))
    if missing:
        LOG.warning("%d groups have no low-loss member and are omitted",
                    len(missing))
    return DistanceStats(mean_source=mean_source, cells=cells,
                         pairs=tuple(pairs), missing_groups=tuple(missing))
