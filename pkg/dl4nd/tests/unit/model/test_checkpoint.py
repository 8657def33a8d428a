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

from dl4nd import exceptions
from dl4nd.model import checkpoint
from dl4nd.model import mlp
from dl4nd.tests import base as test_base


class TestCheckpoint(test_base.TestCase):

    def setUp(self):
        super(TestCheckpoint, self).setUp()
        self.path = os.path.join(self.make_tempdir(), 'checkpoint.txt')
        self.params = mlp.init_params((5, 4, 3, 2), seed=9)

    def test_round_trip_is_exact(self):
        checkpoint.save_checkpoint(self.params, self.path)
        self.assertEqual(self.params, checkpoint.load_checkpoint(self.path))

    def _corrupt(self, line_number, text):
        checkpoint.save_checkpoint(self.params, self.path)
        with open(self.path) as stream:
            lines = stream.read().splitlines()
        lines[line_number - 1] = text
        with open(self.path, 'w') as stream:
            stream.write('\n'.join(lines) + '\n')

    def test_bad_magic(self):
        self._corrupt(1, 'something-else 1')
        error = self.assertRaises(exceptions.CheckpointParseError,
                                  checkpoint.load_checkpoint, self.path)
        self.assertEqual(1, error.kwargs['line'])

    def test_bad_value(self):
        self._corrupt(4, '1.0 nope 2.0 3.0')
        error = self.assertRaises(exceptions.CheckpointParseError,
                                  checkpoint.load_checkpoint, self.path)
        self.assertEqual(4, error.kwargs['line'])

    def test_wrong_width(self):
        self._corrupt(3, '1.0 2.0')
        error = self.assertRaises(exceptions.CheckpointParseError,
                                  checkpoint.load_checkpoint, self.path)
        self.assertEqual(3, error.kwargs['line'])

    def test_truncated(self):
        checkpoint.save_checkpoint(self.params, self.path)
        with open(self.path) as stream:
            lines = stream.read().splitlines()
        with open(self.path, 'w') as stream:
            stream.write('\n'.join(lines[:-1]) + '\n')
        self.assertRaises(exceptions.CheckpointParseError,
                          checkpoint.load_checkpoint, self.path)

    def test_missing_file(self):
        self.assertRaises(exceptions.ReportIOError,
                          checkpoint.load_checkpoint, self.path)
