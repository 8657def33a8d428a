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

from dl4nd import exceptions
from dl4nd.evaluation import balance
from dl4nd.tests import base as test_base
from dl4nd.tests import utils as test_utils


class TestDomainBalance(test_base.TestCase):

    def setUp(self):
        super(TestDomainBalance, self).setUp()
        self.dataset = test_utils.create_grid_dataset()

    def test_everything_selected(self):
        result = balance.domain_balance(self.dataset.ids, self.dataset)
        np.testing.assert_allclose(result.baseline, result.proportions)
        np.testing.assert_allclose(np.full((2, 3), 1.0 / 3),
                                   result.baseline)
        self.assertEqual(0.0, result.l1_gap)
        self.assertEqual([9, 9], list(result.selected_per_class))

    def test_single_domain_selected(self):
        result = balance.domain_balance([0, 1, 2], self.dataset)
        np.testing.assert_allclose([1.0, 0.0, 0.0], result.proportions[0])
        self.assertTrue(np.all(np.isnan(result.proportions[1])))
        self.assertAlmostEqual(4.0 / 3, result.l1_gap)
        document = result.to_dict()
        self.assertEqual([None, None, None], document['proportions'][1])
        self.assertEqual([3, 0], document['selected_per_class'])

    def test_nothing_selected(self):
        self.assertIsNone(balance.domain_balance([], self.dataset).l1_gap)

    def test_true_labels(self):
        relabeled = self.dataset.with_noisy_labels(
            np.zeros(len(self.dataset), dtype=np.int64))
        noisy = balance.domain_balance(relabeled.ids, relabeled)
        self.assertEqual([18, 0], list(noisy.selected_per_class))
        true = balance.domain_balance(relabeled.ids, relabeled,
                                      use_true_labels=True)
        self.assertEqual([9, 9], list(true.selected_per_class))

    def test_unknown_id(self):
        self.assertRaises(exceptions.InvalidSpec, balance.domain_balance,
                          [1000], self.dataset)

    def test_true_labels_missing(self):
        self.assertRaises(exceptions.MetricUnavailable,
                          balance.domain_balance, [0],
                          self.dataset.without_true_labels(),
                          use_true_labels=True)
