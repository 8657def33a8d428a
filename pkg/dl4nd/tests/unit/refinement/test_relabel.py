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

import numpy as np

from dl4nd import constants
from dl4nd.refinement import loss_split
from dl4nd.refinement import proxies
from dl4nd.refinement import relabel
from dl4nd.tests import base as test_base
from dl4nd.tests import utils

# Domain 1, class 0, first sample of the cell in the grid layout.
FLIPPED_ROW = 6


def _split(dataset, high_rows):
    low_mask = np.ones(len(dataset), dtype=bool)
    low_mask[list(high_rows)] = False
    return loss_split.LossSplit(ids=dataset.ids, low_mask=low_mask,
                                posterior=low_mask.astype(float))


class TestRelabel(test_base.TestCase):

    def setUp(self):
        super(TestRelabel, self).setUp()
        clean = utils.create_grid_dataset()
        labels = np.array(clean.noisy_labels)
        labels[FLIPPED_ROW] = 1
        self.dataset = clean.with_noisy_labels(labels)
        self.features = self.dataset.features
        self.split = _split(self.dataset, [FLIPPED_ROW, 0, 15])
        self.table = proxies.build_proxies(self.features, self.dataset,
                                           self.split.low_mask)

    def _relabel(self, features=None, table=None):
        return relabel.relabel(
            self.features if features is None else features, self.dataset,
            self.split, self.table if table is None else table)

    def test_corrects_flipped_sample(self):
        outcome = self._relabel()
        record = outcome.records[FLIPPED_ROW]
        self.assertEqual(1, record.old_label)
        self.assertEqual(0, record.new_label)
        self.assertEqual(constants.DECISION_RELABELED, record.decision)
        self.assertEqual([FLIPPED_ROW], outcome.relabeled_ids)
        self.assertEqual(1, outcome.count(constants.DECISION_RELABELED))

    def test_summary(self):
        summary = self._relabel().summary
        self.assertEqual(3, summary['high_loss'])
        self.assertEqual(1, summary['relabeled'])
        self.assertEqual(1, summary['corrected'])
        self.assertEqual(0, summary['clean_changed'])
        self.assertEqual(1.0, summary['label_accuracy_after'])
        self.assertAlmostEqual(1.0 - 1.0 / 18,
                               summary['label_accuracy_before'])
        self.assertAlmostEqual(1.0 / 3, summary['detection_precision'])
        self.assertEqual(1.0, summary['detection_recall'])

    def test_low_loss_labels_never_change(self):
        outcome = self._relabel()
        low = self.split.low_mask
        np.testing.assert_array_equal(self.dataset.noisy_labels[low],
                                      outcome.assignment[low])
        for record, is_low in zip(outcome.records, low):
            if is_low:
                self.assertEqual(constants.DECISION_KEPT, record.decision)

    def test_input_dataset_untouched(self):
        before = np.array(self.dataset.noisy_labels)
        outcome = self._relabel()
        np.testing.assert_array_equal(before, self.dataset.noisy_labels)
        applied = outcome.apply(self.dataset)
        self.assertEqual(0, applied.noisy_labels[FLIPPED_ROW])
        self.assertEqual(1, applied.metadata['relabeled'])

    def test_scale_invariant(self):
        expected = self._relabel()
        scaled = self.features * 7.5
        table = proxies.build_proxies(scaled, self.dataset,
                                      self.split.low_mask)
        outcome = self._relabel(features=scaled, table=table)
        np.testing.assert_array_equal(expected.assignment,
                                      outcome.assignment)
        self.assertEqual([r.decision for r in expected.records],
                         [r.decision for r in outcome.records])

    def test_own_domain_proxies_ignored(self):
        expected = self._relabel()
        cells = {cell: self.table[cell] for cell in self.table.cells()}
        for label in range(2):
            cells[(label, 1)] = proxies.Proxy(np.array([-3.0, 5.0, -1.0]),
                                              cells[(label, 1)].count)
        mutated = proxies.ProxyTable(cells, self.table.num_classes,
                                     self.table.num_domains)
        outcome = self._relabel(table=mutated)
        in_domain = self.dataset.domains == 1
        np.testing.assert_array_equal(expected.assignment[in_domain],
                                      outcome.assignment[in_domain])

    def test_records_mark_unavailable_classes(self):
        table = proxies.build_proxies(self.features, self.dataset,
                                      self.split.low_mask &
                                      (self.dataset.domains == 1))
        outcome = self._relabel(table=table)
        record = outcome.records[FLIPPED_ROW]
        self.assertEqual((None, None), record.class_distances)
        self.assertEqual((0, 0), record.domains_used)
        self.assertEqual(constants.DECISION_ABSTAINED, record.decision)
        self.assertEqual(1, record.new_label)
        self.assertEqual((1, 1), outcome.records[0].domains_used)

    def test_single_domain_abstains(self):
        dataset = utils.create_grid_dataset(num_domains=1)
        split = _split(dataset, [0, 4])
        table = proxies.build_proxies(dataset.features, dataset,
                                      split.low_mask)
        outcome = relabel.relabel(dataset.features, dataset, split, table)
        self.assertEqual(2, outcome.count(constants.DECISION_ABSTAINED))
        self.assertEqual(0, outcome.count(constants.DECISION_RELABELED))
        np.testing.assert_array_equal(dataset.noisy_labels,
                                      outcome.assignment)

    def test_tie_goes_to_lowest_class(self):
        dataset = utils.create_dataset(
            features=[[1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            domains=[0, 1, 1], labels=[1, 0, 1], num_classes=2)
        split = _split(dataset, [0])
        table = proxies.build_proxies(dataset.features, dataset,
                                      split.low_mask)
        outcome = relabel.relabel(dataset.features, dataset, split, table)
        self.assertEqual(0, outcome.records[0].new_label)
        self.assertEqual(constants.DECISION_RELABELED,
                         outcome.records[0].decision)
        self.assertIsNone(outcome.summary['label_accuracy_after'])

    def test_to_dict(self):
        document = self._relabel().to_dict()
        self.assertEqual(18, len(document['records']))
        self.assertEqual(1, document['summary']['relabeled'])
