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

"""(class, domain) proxies and cross-domain class distances."""

import collections

import numpy as np
from oslo_log import log as logging

from dl4nd import exceptions
from dl4nd.utils import numerics

LOG = logging.getLogger(__name__)

Proxy = collections.namedtuple('Proxy', ['mean', 'count'])

ClassDistance = collections.namedtuple('ClassDistance',
                                       ['distance', 'domains_used'])


class ProxyTable(object):
    """Mean embedding per (class, domain) cell that has low-loss members.

    Cells without members are absent, never zero-filled.
    """

    def __init__(self, proxies, num_classes, num_domains, normalized=False):
        self._proxies = dict(proxies)
        self.num_classes = num_classes
        self.num_domains = num_domains
        self.normalized = normalized

    def __len__(self):
        return len(self._proxies)

    def __contains__(self, cell):
        return cell in self._proxies

    def __getitem__(self, cell):
        return self._proxies[cell]

    def get(self, cell):
        return self._proxies.get(cell)

    def cells(self):
        return sorted(self._proxies)

    def domains_for(self, label):
        return [d for (c, d) in self.cells() if c == label]

    def to_dict(self):
        return {'%d,%d' % cell: self._proxies[cell].count
                for cell in self.cells()}


def build_proxies(features, dataset, low_mask, normalize=False):
    """Average the embeddings of low-loss samples per (label, domain).

    Labels are the dataset's noisy labels: true labels are unknown when
    refining.
    """
    features = np.asarray(features, dtype=np.float64)
    low_mask = np.asarray(low_mask, dtype=bool)
    if not low_mask.any():
        raise exceptions.EmptyProxyTable()
    if normalize:
        features = numerics.l2_normalize(features)
    proxies = {}
    labels = dataset.noisy_labels
    for label in range(dataset.num_classes):
        for domain in range(dataset.num_domains):
            members = low_mask & (labels == label) & (
                dataset.domains == domain)
            count = int(members.sum())
            if count:
                proxies[(label, domain)] = Proxy(
                    numerics.group_mean(features[members]), count)
    missing = dataset.num_classes * dataset.num_domains - len(proxies)
    if missing:
        LOG.debug("%d (class, domain) cells have no low-loss member",
                  missing)
    return ProxyTable(proxies, dataset.num_classes, dataset.num_domains,
                      normalized=normalize)


def cross_domain_class_distance(embedding, domain, label, proxies):
    """Mean cosine distance to ``label``'s proxies in the other domains.

    ``distance`` is None when no other domain holds a proxy for ``label``.
    """
    distances = [numerics.cosine_distance(embedding, proxies[(label, k)].mean)
                 for k in proxies.domains_for(label) if k != domain]
    if not distances:
        return ClassDistance(None, 0)
    return ClassDistance(float(np.mean(distances)), len(distances))


def class_distance_matrix(features, domains, proxies):
    """Cross-domain distance of every sample to every class.

    Returns ``(distances, domains_used)``, both of shape (n, C); unavailable
    classes hold NaN and 0.
    """
    features = np.asarray(features, dtype=np.float64)
    domains = np.asarray(domains)
    n = features.shape[0]
    distances = np.full((n, proxies.num_classes), np.nan)
    used = np.zeros((n, proxies.num_classes), dtype=np.int64)
    cells = proxies.cells()
    if not cells or n == 0:
        return distances, used
    means = np.stack([proxies[cell].mean for cell in cells])
    to_proxies = numerics.cosine_distance_matrix(features, means)
    for label in range(proxies.num_classes):
        columns = [j for j, (c, _d) in enumerate(cells) if c == label]
        if not columns:
            continue
        proxy_domains = np.array([cells[j][1] for j in columns])
        # Own-domain proxies never count.
        other = proxy_domains[np.newaxis, :] != domains[:, np.newaxis]
        count = other.sum(axis=1)
        total = np.where(other, to_proxies[:, columns], 0.0).sum(axis=1)
        available = count > 0
        distances[available, label] = total[available] / count[available]
        used[:, label] = count
    return distances, used
