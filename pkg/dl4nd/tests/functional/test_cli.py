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

import filecmp
import os
from unittest import mock

import fixtures
from oslo_config import cfg

from dl4nd import cli
from dl4nd import constants
from dl4nd.tests.functional import base

ARGS = ('--seed', '7', '--data-num_classes', '4', '--data-num_domains', '3',
        '--data-samples_per_cell', '20', '--noise-pairs', '0:1,1:0',
        '--train-total_steps', '300', '--train-refine_step', '60',
        '--train-method', 'erm+elr', '--train-swad_enabled',
        '--eval-repetitions', '2', '--eval-ratios', '0.0,0.3',
        '--eval-distance_pairs', '0:1')


class TestReproducibility(base.BaseFunctionalTestCase):

    def setUp(self):
        super(TestReproducibility, self).setUp()
        mock.patch('dl4nd.config.setup_logging').start()
        self.addCleanup(mock.patch.stopall)
        self.addCleanup(os.chdir, os.getcwd())

    def _run(self, command, *extra):
        cfg.CONF.clear()
        self.assertEqual(0, cli.main(['--out', '.'] + list(ARGS) +
                                     list(extra) + [command]))

    def _outputs(self, out, fmt):
        # Paths echoed in the reports are relative to the run directory.
        os.chdir(out)
        ext = constants.FORMAT_EXTENSIONS[fmt]
        self._run('gen')
        self._run('train', '--format', fmt)
        os.rename('report.' + ext, 'train.' + ext)
        self._run('refine', '--format', fmt, '--train-checkpoint',
                  'checkpoint.txt')
        self._run('distances', '--format', fmt, '--train-checkpoint',
                  'checkpoint.txt', '--eval-distance_mean_source',
                  'low_loss_only')
        self._run('sweep', '--format', fmt, '--eval-workers', '3')
        return sorted(os.listdir(out))

    def _assert_identical(self, fmt):
        first = self.useFixture(fixtures.TempDir()).path
        second = self.useFixture(fixtures.TempDir()).path
        names = self._outputs(first, fmt)
        self.assertEqual(names, self._outputs(second, fmt))
        ext = constants.FORMAT_EXTENSIONS[fmt]
        for stem in ('train', 'report', 'relabel', 'distances'):
            self.assertIn('%s.%s' % (stem, ext), names)
        for name in names:
            self.assertTrue(filecmp.cmp(os.path.join(first, name),
                                        os.path.join(second, name),
                                        shallow=False), name)

    def test_structured_reports(self):
        self._assert_identical('structured')

    def test_tabular_reports(self):
        self._assert_identical('tabular')
