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

import io
import os
from unittest import mock

from oslo_config import cfg
from oslo_serialization import jsonutils

from dl4nd import cli
from dl4nd.cmd import dl4nd as dl4nd_cmd
from dl4nd.data import store
from dl4nd.model import checkpoint
from dl4nd.tests import base as test_base

SMALL_ARGS = ('--data-num_classes', '4', '--data-num_domains', '3',
              '--data-samples_per_cell', '10', '--data-feature_dim', '8',
              '--noise-pairs', '0:1,2:3', '--train-total_steps', '30',
              '--train-refine_step', '10', '--train-batch_size', '32',
              '--train-hidden_dims', '16', '--train-embedding_dim', '8',
              '--eval-distance_pairs', '0:1',
              # Briefly trained models give overlapping loss modes.
              '--train-gmm_min_separation', '0')


class TestCli(test_base.TestCase):

    def setUp(self):
        super(TestCli, self).setUp()
        self.out = self.make_tempdir()
        self.m_setup_logging = mock.patch(
            'dl4nd.config.setup_logging').start()
        self.stderr = mock.patch('sys.stderr',
                                 new_callable=io.StringIO).start()

    def _main(self, command, *args, small=True):
        # Every invocation parses the command line afresh.
        cfg.CONF.clear()
        argv = ['--out', self.out] + list(SMALL_ARGS if small else ())
        return cli.main(argv + list(args) + [command])

    def _path(self, name):
        return os.path.join(self.out, name)

    def _load(self, name):
        with open(self._path(name)) as stream:
            return jsonutils.loads(stream.read())

    def test_console_script(self):
        self.assertIs(cli.main, dl4nd_cmd.main)

    def test_gen_defaults(self):
        self.assertEqual(0, self._main('gen', small=False))
        dataset = store.load_dataset(self._path('dataset.csv'))
        self.assertEqual(1200, len(dataset))
        self.assertEqual((10, 4), (dataset.num_classes, dataset.num_domains))
        self.m_setup_logging.assert_called_once_with()

    def test_train(self):
        self.assertEqual(0, self._main('train'))
        params = checkpoint.load_checkpoint(self._path('checkpoint.txt'))
        self.assertEqual((8, 16, 8, 4), params.layer_dims)
        refined = store.load_dataset(self._path('dataset.refined.csv'))
        self.assertEqual(120, len(refined))
        document = self._load('report.json')
        self.assertEqual(30, document['run']['steps'])
        self.assertEqual(10, document['run']['refine_step'])
        self.assertEqual(30, len(document['loss_history']))
        self.assertEqual('train', document['config']['command'])

    def test_train_without_refinement(self):
        self.assertEqual(0, self._main('train', '--train-norefine',
                                       '--format', 'tabular'))
        self.assertFalse(os.path.exists(self._path('dataset.refined.csv')))
        with open(self._path('report.csv')) as stream:
            lines = stream.read().splitlines()
        self.assertEqual('step,loss', lines[0])
        self.assertEqual(31, len(lines))

    def test_refine(self):
        self.assertEqual(0, self._main('train', '--train-norefine'))
        self.assertEqual(0, self._main(
            'refine', '--train-checkpoint', self._path('checkpoint.txt')))
        document = self._load('relabel.json')
        self.assertEqual(1, len(document['passes']))
        self.assertTrue(os.path.exists(self._path('dataset.refined.csv')))

    def test_refine_needs_checkpoint(self):
        self.assertEqual(2, self._main('refine'))
        self.assertIn('error code=2 key=train.checkpoint',
                      self.stderr.getvalue())

    def test_distances(self):
        self.assertEqual(0, self._main('distances', '--format', 'text'))
        with open(self._path('distances.txt')) as stream:
            text = stream.read()
        self.assertIn('dl4nd distances', text)
        self.assertIn('mean_source: all', text)

    def test_eval(self):
        self.assertEqual(0, self._main(
            'eval', '--eval-seeds', '0', '--eval-methods', 'erm',
            '--eval-held_out_domains', '0'))
        document = self._load('report.json')
        self.assertEqual(1, len(document['folds']))
        self.assertNotIn('out', document['config']['DEFAULT'])

    def test_sweep(self):
        self.assertEqual(0, self._main(
            'sweep', '--eval-seeds', '0', '--eval-methods', 'erm',
            '--eval-held_out_domains', '0', '--eval-ratios', '0.0,0.2',
            '--format', 'tabular'))
        with open(self._path('report.csv')) as stream:
            self.assertEqual(3, len(stream.read().splitlines()))

    def test_invalid_config(self):
        self.assertEqual(2, self._main('gen', '--noise-ratio', '1.0'))
        line = self.stderr.getvalue()
        self.assertTrue(line.startswith('error code=2 key=noise.ratio '
                                        'message="'))
        self.assertEqual(1, len(line.splitlines()))
        self.m_setup_logging.assert_not_called()
        self.assertFalse(os.path.exists(self._path('dataset.csv')))

    def test_bad_value_in_config_file(self):
        path = self._path('dl4nd.conf')
        with open(path, 'w') as stream:
            stream.write('[train]\ntotal_steps = many\n')
        self.assertEqual(2, self._main('gen', '--config-file', path))
        line = self.stderr.getvalue()
        self.assertTrue(line.startswith('error code=2 key=train.total_steps '
                                        'message="'))
        self.assertEqual(1, len(line.splitlines()))

    def test_out_is_a_file(self):
        path = self._path('taken')
        open(path, 'w').close()
        self.assertEqual(1, self._main('gen', '--out', path))
        line = self.stderr.getvalue()
        self.assertTrue(line.startswith('error code=1 key=- message="'))
        self.assertIn(path, line)
        self.assertEqual(1, len(line.splitlines()))

    def test_runtime_error(self):
        self.assertEqual(1, self._main(
            'train', '--data-dataset_path', self._path('absent.csv')))
        self.assertIn('error code=1 key=-', self.stderr.getvalue())
