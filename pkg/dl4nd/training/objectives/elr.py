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

"""Early-learning regularization.

Each sample keeps a temporal ensemble ``t`` of its predictions; the loss
adds ``lambda * log(1 - <p, t>)`` averaged over the batch, pulling the
model towards its own early predictions rather than towards later
memorized noisy labels.
"""

import numpy as np
from oslo_log import log as logging

from dl4nd import constants
from dl4nd.training import objective_api

LOG = logging.getLogger(__name__)


class ElrState(object):
    """Target distribution per sample id, initialized to zeros."""

    def __init__(self, sample_ids, num_classes):
        self._rows = {int(sid): row for row, sid in enumerate(sample_ids)}
        self.targets = np.zeros((len(self._rows), num_classes))

    def rows(self, sample_ids):
        return np.array([self._rows[int(sid)] for sid in sample_ids],
                        dtype=np.int64)

    def __getitem__(self, sample_id):
        return self.targets[self._rows[int(sample_id)]]


def elr_step_terms(probs, targets, beta, lam):
    """One ELR step for a batch.

    The targets are updated first and the term is evaluated with the
    updated targets, which stay constant in the gradient.

    :returns: (updated targets, term value, gradient w.r.t. the logits)
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    n = probs.shape[0]
    updated = beta * targets + (1.0 - beta) * probs
    inner = np.sum(probs * updated, axis=1)
    ceiling = 1.0 - constants.ELR_INNER_CLAMP
    clamped = inner > ceiling
    inner = np.minimum(inner, ceiling)
    assert np.all(inner < 1.0)
    term = lam * float(np.sum(np.log1p(-inner))) / n
    # d/dz_k log(1 - <p, t>) = -p_k (t_k - <p, t>) / (1 - <p, t>)
    grad = -probs * (updated - inner[:, np.newaxis]) / (
        1.0 - inner[:, np.newaxis])
    grad[clamped] = 0.0
    return updated, term, lam * grad / n


class ElrObjective(objective_api.ObjectiveBase):
    """Cross-entropy plus early-learning regularization."""

    def __init__(self, sample_ids, num_classes, config):
        super(ElrObjective, self).__init__(sample_ids, num_classes, config)
        self.state = ElrState(sample_ids, num_classes)
        self.beta = config.elr_beta
        self.lam = config.elr_lambda

    def extra_terms(self, batch_ids):
        rows = self.state.rows(batch_ids)

        def term(probs):
            updated, value, dlogits = elr_step_terms(
                probs, self.state.targets[rows], self.beta, self.lam)
            self.state.targets[rows] = updated
            return value, dlogits

        return (term,)
