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

import numpy as np

from dl4nd import exceptions


@dataclasses.dataclass(frozen=True)
class DomainBalance:
    # (C, m): per class, the share of selected samples from each domain.
    # Rows of classes with nothing selected are NaN.
    proportions: np.ndarray
    # (C, m): the same shares when every sample is selected.
    baseline: np.ndarray
    selected_per_class: np.ndarray

    @property
    def class_gaps(self):
        """L1 distance to the baseline per class, NaN when unselected."""
        return np.abs(self.proportions - self.baseline).sum(axis=1)

    @property
    def l1_gap(self):
        gaps = self.class_gaps
        if np.all(np.isnan(gaps)):
            return None
        return float(np.nanmean(gaps))

    def to_dict(self):
        def rows(matrix):
            return [[None if np.isnan(v) else float(v) for v in row]
                    for row in matrix]
        return {'proportions': rows(self.proportions),
                'baseline': rows(self.baseline),
                'selected_per_class': [int(c) for c in
                                       self.selected_per_class],
                'l1_gap': self.l1_gap}


def _shares(counts):
    totals = counts.sum(axis=1, keepdims=True)
    return np.where(totals > 0, counts / np.maximum(totals, 1), np.nan)


def domain_balance(selected_ids, dataset, use_true_labels=False):
    """Per-class domain distribution of a selected subset.

    Classes are taken from the noisy labels unless ``use_true_labels``.
    """
    try:
        rows = dataset.rows_for(selected_ids)
    except KeyError as e:
        raise exceptions.InvalidSpec(
            reason="selected id %s is not in the dataset" % e)
    labels = dataset.true_labels if use_true_labels else dataset.noisy_labels
    if labels is None:
        raise exceptions.MetricUnavailable(metric='domain_balance')
    mask = np.zeros(len(dataset), dtype=bool)
    mask[rows] = True
    counts = np.zeros((dataset.num_classes, dataset.num_domains))
    np.add.at(counts, (labels[mask], dataset.domains[mask]), 1)
    return DomainBalance(
        proportions=_shares(counts),
        baseline=_shares(dataset.cell_counts(labels).astype(np.float64)),
        selected_per_class=counts.sum(axis=1).astype(np.int64))
