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

import os

from oslo_config import cfg

from dl4nd import config
from dl4nd import exceptions
from dl4nd.tests import base as test_base
from dl4nd.utils import numerics

CONF = cfg.CONF


class ConfigTestCase(test_base.TestCase):

    def setUp(self):
        super(ConfigTestCase, self).setUp()
        self.tempdir = self.make_tempdir()

    def _config_file(self, text):
        path = os.path.join(self.tempdir, 'dl4nd.conf')
        with open(path, 'w') as stream:
            stream.write(text)
        return path

    def _assert_invalid(self, key, args):
        config.init(args)
        e = self.assertRaises(exceptions.InvalidConfig, config.validate)
        self.assertEqual(key, e.key)


class TestPrecedence(ConfigTestCase):

    def test_default(self):
        config.init(['gen'])
        self.assertEqual('gen', CONF.command.name)
        self.assertEqual(2000, CONF.train.total_steps)
        config.validate()

    def test_file_over_default(self):
        path = self._config_file('[train]\ntotal_steps = 50\n')
        config.init(['--config-file', path, 'gen'])
        self.assertEqual(50, CONF.train.total_steps)

    def test_flag_over_file(self):
        path = self._config_file('[train]\ntotal_steps = 50\n')
        config.init(['--config-file', path, '--train-total_steps', '70',
                     'gen'])
        self.assertEqual(70, CONF.train.total_steps)


class TestValidate(ConfigTestCase):

    def test_unknown_key(self):
        path = self._config_file('[train]\nbogus = 1\n')
        self._assert_invalid('train.bogus', ['--config-file', path, 'gen'])

    def test_unknown_default_key(self):
        path = self._config_file('[DEFAULT]\nverbosity = 3\n')
        self._assert_invalid('verbosity', ['--config-file', path, 'gen'])

    def test_unknown_section(self):
        path = self._config_file('[model]\nwidth = 3\n')
        self._assert_invalid('model', ['--config-file', path, 'gen'])

    def _assert_invalid_file(self, key, text):
        path = self._config_file(text)
        e = self.assertRaises(exceptions.InvalidConfig, config.init,
                              ['--config-file', path, 'gen'])
        self.assertEqual(key, e.key)

    def test_bad_value_in_file(self):
        self._assert_invalid_file('train.total_steps',
                                  '[train]\ntotal_steps = many\n')

    def test_out_of_range_value_in_file(self):
        self._assert_invalid_file('data.num_classes',
                                  '[data]\nnum_classes = 1\n')

    def test_bad_choice_in_file(self):
        self._assert_invalid_file('format', '[DEFAULT]\nformat = xml\n')

    def test_bad_value_in_config_dir(self):
        self._config_file('[noise]\nratio = high\n')
        e = self.assertRaises(exceptions.InvalidConfig, config.init,
                              ['--config-dir', self.tempdir, 'gen'])
        self.assertEqual('noise.ratio', e.key)

    def test_config_paths(self):
        self.assertEqual(
            ['a.conf', 'b.conf'],
            config.config_paths(['--config-file', 'a.conf',
                                 '--config-file=b.conf',
                                 '--train-total_steps', '3', 'gen']))

    def test_refine_step(self):
        self._assert_invalid('train.refine_step',
                             ['--train-total_steps', '10',
                              '--train-refine_step', '10', 'train'])

    def test_refine_step_ignored_without_refinement(self):
        config.init(['--train-total_steps', '10', '--train-refine_step',
                     '10', '--train-norefine', 'train'])
        config.validate()

    def test_malformed_pair(self):
        self._assert_invalid('noise.pairs', ['--noise-pairs', '4-9', 'gen'])

    def test_pair_outside_classes(self):
        self._assert_invalid('noise.pairs', ['--noise-pairs', '4:12', 'gen'])

    def test_noise_ratio(self):
        self._assert_invalid('noise.ratio', ['--noise-ratio', '1.0', 'gen'])

    def test_held_out_domain(self):
        self._assert_invalid('eval.held_out_domains',
                             ['--eval-held_out_domains', '4', 'eval'])

    def test_rotation_angles(self):
        self._assert_invalid('data.rotation_angles',
                             ['--data-rotation_angles', '0,15', 'gen'])

    def test_method(self):
        self._assert_invalid('eval.methods',
                             ['--eval-methods', 'erm,mixup', 'eval'])

    def test_sweep_ratio(self):
        self._assert_invalid('eval.ratios',
                             ['--eval-ratios', '0.0,0.5', 'sweep'])

    def test_distance_pair(self):
        self._assert_invalid('eval.distance_pairs',
                             ['--eval-distance_pairs', '4:10', 'distances'])


class TestResolved(ConfigTestCase):

    def test_derived_seeds(self):
        config.init(['--seed', '5', '--noise-seed', '9', 'gen'])
        data_seed, _noise, train_seed = numerics.child_seeds(5, 3)
        self.assertEqual({'seed': 5, 'data.seed': data_seed,
                          'noise.seed': 9, 'train.seed': train_seed},
                         config.resolved_seeds())
        self.assertEqual(data_seed, config.domain_spec().seed)
        self.assertEqual(9, config.noise_spec().seed)
        self.assertEqual(train_seed, config.train_config().seed)

    def test_default_angles(self):
        config.init(['--data-num_domains', '3', 'gen'])
        self.assertEqual((0.0, 15.0, 30.0),
                         config.domain_spec().rotation_angles)

    def test_train_config(self):
        config.init(['--train-method', 'erm+elr', '--train-hidden_dims',
                     '8,4', '--train-normalize_features', 'train'])
        train_config = config.train_config()
        self.assertEqual('erm+elr', train_config.method)
        self.assertEqual((8, 4), train_config.hidden_dims)
        self.assertTrue(train_config.normalize_proxies)

    def test_noise_preset_and_pairs(self):
        config.init(['gen'])
        self.assertEqual(8, len(config.noise_pairs()))
        config.init(['--noise-pairs', '4:9', 'gen'])
        self.assertEqual([(4, 9)], config.noise_pairs())

    def test_experiment_spec(self):
        config.init(['--seed', '3', '--noise-ratio', '0.1', 'eval'])
        spec = config.experiment_spec()
        self.assertEqual((3, 4, 5, 6, 7), spec.seeds)
        self.assertEqual((0.1,), spec.noise_ratios)
        config.init(['--eval-seeds', '1,2', 'sweep'])
        spec = config.experiment_spec(ratios=CONF.eval.ratios)
        self.assertEqual((1, 2), spec.seeds)
        self.assertEqual((0.0, 0.2, 0.4), spec.noise_ratios)

    def test_resolved_config(self):
        config.init(['--out', self.tempdir, 'gen'])
        resolved = config.resolved_config()
        self.assertEqual('gen', resolved['command'])
        self.assertNotIn('out', resolved['DEFAULT'])
        self.assertEqual(config.resolved_seeds()['data.seed'],
                         resolved['data']['seed'])
        self.assertNotIn('seed', resolved['eval'])

    def test_list_opts(self):
        self.assertEqual(['DEFAULT', 'data', 'noise', 'train', 'eval'],
                         [group for group, _opts in config.list_opts()])
