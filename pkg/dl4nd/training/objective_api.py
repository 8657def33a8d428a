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

import abc

from stevedore import driver as stevedore_driver

from dl4nd import constants
from dl4nd.utils import helpers


class ObjectiveBase(object, metaclass=abc.ABCMeta):
    """Base class for training objectives.

    An objective contributes differentiable terms on top of the mean
    cross-entropy that every objective shares.
    """

    def __init__(self, sample_ids, num_classes, config):
        self.sample_ids = sample_ids
        self.num_classes = num_classes
        self.config = config

    @classmethod
    def get_instance(cls, method, sample_ids, num_classes, config):
        objective = stevedore_driver.DriverManager(
            namespace=constants.OBJECTIVES_NAMESPACE,
            name=helpers.objective_driver_name(method),
            invoke_on_load=True,
            invoke_kwds={'sample_ids': sample_ids,
                         'num_classes': num_classes,
                         'config': config},
        ).driver

        return objective

    @abc.abstractmethod
    def extra_terms(self, batch_ids):
        """Loss terms for a batch, each ``term(probs) -> (value, dlogits)``.

        :param batch_ids: sample ids of the batch rows, in row order
        """
        raise NotImplementedError()
