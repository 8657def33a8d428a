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

import dataclasses

import numpy as np

from dl4nd.data import dataset as dataset_lib
from dl4nd.data import generator
from dl4nd.data import noise
from dl4nd.training import trainer

ROTATED_MNIST_PAIRS = ((0, 6), (6, 0), (1, 7), (7, 1), (3, 5), (5, 3),
                       (4, 9), (9, 4))


def create_dataset(features, domains, labels, true_labels=None,
                   num_classes=None, num_domains=None, ids=None):
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if num_classes is None:
        num_classes = int(max(np.max(labels),
                              np.max(true_labels) if true_labels is not None
                              else 0)) + 1
    if num_domains is None:
        num_domains = int(np.max(domains)) + 1
    if ids is None:
        ids = np.arange(len(labels))
    return dataset_lib.Dataset(ids, features, domains, labels, true_labels,
                               num_classes, num_domains)


def small_domain_spec(**kwargs):
    values = dict(num_classes=4, num_domains=3, samples_per_cell=10,
                  feature_dim=8, rotation_angles=(0.0, 15.0, 30.0),
                  seed=7)
    values.update(kwargs)
    return dataset_lib.DomainSpec(**values)


def quick_train_config(**kwargs):
    # Briefly trained models give overlapping loss modes.
    values = dict(total_steps=60, batch_size=32, learning_rate=0.1,
                  refine_step=20, hidden_dims=(16,), embedding_dim=8,
                  gmm_min_separation=0.0, seed=3)
    values.update(kwargs)
    return trainer.TrainConfig(**values)


def noisy_dataset(domain_spec=None, ratio=0.3, pairs=ROTATED_MNIST_PAIRS,
                  seed=11, mode='bernoulli'):
    domain_spec = domain_spec or dataset_lib.DomainSpec()
    clean = generator.generate(domain_spec)
    return noise.inject_pairwise_noise(clean, dataset_lib.NoiseSpec(
        pairs=tuple(pairs), ratio=ratio, seed=seed, mode=mode))


def four_domain_digits(seed, ratio=0.3):
    """C=10, m=4, 30 samples per cell with the rotated digit pairs."""
    spec = dataclasses.replace(dataset_lib.DomainSpec(), seed=seed)
    return noisy_dataset(spec, ratio=ratio, seed=seed + 1000)


def create_grid_dataset(samples_per_cell=3, num_domains=3, num_classes=2):
    """Class k points along axis k; the domain tilts along the last axis.

    Samples are ordered domain, then class, then index within the cell.
    """
    dim = num_classes + 1
    features, domains, labels = [], [], []
    for domain in range(num_domains):
        for label in range(num_classes):
            for k in range(samples_per_cell):
                vector = np.zeros(dim)
                vector[label] = 1.0
                vector[(label + 1) % num_classes] = 0.05 * k
                vector[-1] = 0.1 * domain
                features.append(vector)
                domains.append(domain)
                labels.append(label)
    return create_dataset(features, domains, labels, true_labels=labels,
                          num_classes=num_classes, num_domains=num_domains)
