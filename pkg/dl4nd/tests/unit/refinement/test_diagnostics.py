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
from dl4nd.data import dataset as dataset_lib
from dl4nd.data import generator
from dl4nd import exceptions
from dl4nd.refinement import diagnostics
from dl4nd.refinement import proxies
from dl4nd.tests import base as test_base
from dl4nd.tests import utils


class TestLabelAccuracy(test_base.TestCase):

    def test_accuracy(self):
        dataset = utils.create_grid_dataset()
        labels = np.array(dataset.true_labels)
        labels[:2] = 1
        self.assertAlmostEqual(16.0 / 18,
                               diagnostics.label_accuracy(labels, dataset))

    def test_unavailable(self):
        dataset = utils.create_grid_dataset().without_true_labels()
        self.assertRaises(exceptions.MetricUnavailable,
                          diagnostics.label_accuracy, dataset.noisy_labels,
                          dataset)


class TestSeparability(test_base.TestCase):

    def _table(self, features, dataset):
        return proxies.build_proxies(features, dataset,
                                     np.ones(len(dataset), dtype=bool))

    def test_clean_grid_is_separable(self):
        dataset = utils.create_grid_dataset()
        table = self._table(dataset.features, dataset)
        self.assertEqual(1.0, diagnostics.separability_rate(
            dataset.features, dataset, table, use_true_labels=True))

    def test_own_class_unavailable_fails(self):
        dataset = utils.create_grid_dataset(num_domains=1)
        table = self._table(dataset.features, dataset)
        self.assertEqual(0.0, diagnostics.separability_rate(
            dataset.features, dataset, table))

    def test_shuffled_labels_near_chance(self):
        dataset = generator.generate(dataset_lib.DomainSpec())
        shuffled = dataset.with_noisy_labels(
            np.random.default_rng(3).permutation(dataset.noisy_labels))
        table = self._table(shuffled.features, shuffled)
        rate = diagnostics.separability_rate(shuffled.features, shuffled,
                                             table)
        self.assertAlmostEqual(1.0 / dataset.num_classes, rate, delta=0.05)

    def test_true_labels_required(self):
        dataset = utils.create_grid_dataset().without_true_labels()
        table = self._table(dataset.features, dataset)
        self.assertRaises(exceptions.MetricUnavailable,
                          diagnostics.separability_rate, dataset.features,
                          dataset, table, use_true_labels=True)


class TestAssumptionRate(test_base.TestCase):

    def test_grid(self):
        dataset = utils.create_grid_dataset()
        self.assertEqual(1.0, diagnostics.assumption_rate(dataset.features,
                                                          dataset))

    def test_generated_raw_features(self):
        dataset = generator.generate(dataset_lib.DomainSpec())
        self.assertGreaterEqual(
            diagnostics.assumption_rate(dataset.features, dataset,
                                        use_true_labels=True), 0.95)


class TestDistanceStats(test_base.TestCase):

    def setUp(self):
        super(TestDistanceStats, self).setUp()
        self.dataset = utils.create_grid_dataset()

    def test_all_samples(self):
        stats = diagnostics.distance_stats(self.dataset.features,
                                           self.dataset,
                                           class_pairs=((0, 1),))
        self.assertEqual(constants.MEAN_SOURCE_ALL, stats.mean_source)
        self.assertEqual(6, len(stats.cells))
        self.assertEqual(3, len(stats.pairs))
        self.assertFalse(stats.overlap)
        pair = stats.pairs[0]
        self.assertEqual(3, pair.cross_class.count)
        self.assertEqual(6, pair.cross_domain.count)
        self.assertGreater(pair.cross_class.minimum,
                           pair.cross_domain.maximum)
        self.assertEqual(6 + 2 * 3, len(stats.rows()))
        self.assertEqual(set(diagnostics.ROW_COLUMNS),
                         set(stats.rows()[0]))

    def test_overlap_detected(self):
        labels = np.array(self.dataset.noisy_labels)
        # A class-0 lookalike labelled 1 in domain 0.
        labels[0] = 1
        dataset = self.dataset.with_noisy_labels(labels)
        stats = diagnostics.distance_stats(dataset.features, dataset,
                                           class_pairs=((0, 1),))
        self.assertTrue(stats.pairs[0].overlap)
        self.assertTrue(stats.overlap)

    def test_low_loss_only_missing_groups(self):
        low_mask = np.ones(len(self.dataset), dtype=bool)
        low_mask[12:15] = False
        stats = diagnostics.distance_stats(
            self.dataset.features, self.dataset,
            mean_source=constants.MEAN_SOURCE_LOW_LOSS, low_mask=low_mask,
            class_pairs=((0, 1),))
        self.assertEqual(((0, 2),), stats.missing_groups)
        self.assertNotIn((0, 2), stats.cells)
        self.assertEqual(2, len(stats.pairs))
        self.assertEqual([[0, 2]], stats.to_dict()['missing_groups'])

    def test_low_loss_only_needs_split(self):
        self.assertRaises(exceptions.DegenerateInput,
                          diagnostics.distance_stats, self.dataset.features,
                          self.dataset,
                          mean_source=constants.MEAN_SOURCE_LOW_LOSS)
