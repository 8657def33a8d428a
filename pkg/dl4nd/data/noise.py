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
from oslo_log import log as logging

from dl4nd import constants
from dl4nd import exceptions
from dl4nd.utils import numerics

LOG = logging.getLogger(__name__)


def noise_preset(name):
    return [tuple(pair) for pair in constants.NOISE_PRESETS[name]]


def _flip_rows(rng, rows, ratio, mode):
    if mode == constants.NOISE_MODE_EXACT:
        count = int(np.floor(ratio * len(rows)))
        return np.sort(rng.permutation(rows)[:count])
    return rows[rng.random(len(rows)) < ratio]


def inject_pairwise_noise(dataset, spec):
    """Flip labels along directed (class_a -> class_b) pairs.

    Eligibility is decided on the true class; features, domains, ids and
    true labels are never touched.
    """
    spec.validate(dataset.num_classes)
    if not dataset.has_true_labels:
        raise exceptions.InvalidSpec(
            reason="noise injection needs the true labels")
    rng = numerics.make_rng(spec.seed)
    labels = np.array(dataset.noisy_labels)
    flipped = {}
    for source, target in spec.pairs:
        rows = np.flatnonzero(dataset.true_labels == source)
        chosen = _flip_rows(rng, rows, spec.ratio, spec.mode)
        labels[chosen] = target
        flipped[str(source)] = int(len(chosen))
    metadata = {
        'noise_pairs': [[int(a), int(b)] for a, b in spec.pairs],
        'noise_ratio': float(spec.ratio),
        'noise_mode': spec.mode,
        'noise_seed': int(spec.seed),
        'noise_flipped': flipped,
    }
    if spec.ratio >= constants.NOISE_STRAIN_RATIO:
        LOG.warning("Noise ratio %.2f leaves flipped samples as the "
                    "majority of their source class; the low/high loss "
                    "split assumption is strained", spec.ratio)
        metadata['noise_warning'] = constants.NOISE_WARNING_STRAINED
    LOG.info("Injected pairwise noise: %d labels flipped over %d pairs",
             sum(flipped.values()), len(spec.pairs))
    return dataset.with_noisy_labels(labels, **metadata)
