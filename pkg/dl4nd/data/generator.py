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

"""Synthetic multi-domain classification data.

Every class gets a prototype vector; every domain rotates each consecutive
pair of feature coordinates by its angle and adds a small translation.
Samples are the transformed prototype plus isotropic Gaussian jitter.
"""

import numpy as np
from oslo_log import log as logging

from dl4nd.data import dataset as ds
from dl4nd.utils import numerics

LOG = logging.getLogger(__name__)

REPULSION_ROUNDS = 500


def _place_prototypes(rng, num_classes, dim, separation):
    # Random directions on a sphere of radius ``separation``; two points
    # on it are at least ``separation`` apart once their angle is >= 60deg.
    directions = rng.standard_normal((num_classes, dim))
    prototypes = separation * numerics.l2_normalize(directions)
    for _round in range(REPULSION_ROUNDS):
        moved = False
        for a in range(num_classes):
            for b in range(a + 1, num_classes):
                gap = prototypes[a] - prototypes[b]
                distance = float(np.linalg.norm(gap))
                if distance >= separation:
                    continue
                moved = True
                if distance < 1e-9:
                    gap = rng.standard_normal(dim)
                    distance = float(np.linalg.norm(gap))
                push = 0.5 * (separation - distance) + 1e-6
                prototypes[a] += push * gap / distance
                prototypes[b] -= push * gap / distance
        prototypes = separation * numerics.l2_normalize(prototypes)
        if not moved:
            break
    else:
        LOG.warning("Prototype repulsion did not converge for %d classes "
                    "in %d dims", num_classes, dim)
    return prototypes


def rotation_matrix(dim, degrees):
    """Block-diagonal rotation of every (2k, 2k+1) coordinate pair.

    An odd trailing coordinate is left untouched.
    """
    theta = np.deg2rad(degrees)
    cos, sin = np.cos(theta), np.sin(theta)
    matrix = np.eye(dim)
    for k in range(0, dim - 1, 2):
        matrix[k, k] = cos
        matrix[k, k + 1] = -sin
        matrix[k + 1, k] = sin
        matrix[k + 1, k + 1] = cos
    return matrix


def domain_prototypes(spec):
    """Transformed prototype per (class, domain): shape (C, m, dim)."""
    spec.validate()
    rng = numerics.make_rng(spec.seed)
    prototypes = _place_prototypes(rng, spec.num_classes, spec.feature_dim,
                                   spec.class_separation)
    shifts = spec.translation * numerics.l2_normalize(
        rng.standard_normal((spec.num_domains, spec.feature_dim)))
    cells = np.empty((spec.num_classes, spec.num_domains, spec.feature_dim))
    for domain, angle in enumerate(spec.rotation_angles):
        rotation = rotation_matrix(spec.feature_dim, angle)
        cells[:, domain, :] = prototypes @ rotation.T + shifts[domain]
    return cells, rng


def generate(spec):
    """Build a clean dataset: noisy_label equals true_label everywhere."""
    cells, rng = domain_prototypes(spec)
    n_cell = spec.samples_per_cell
    features, domains, labels = [], [], []
    for domain in range(spec.num_domains):
        for label in range(spec.num_classes):
            jitter = spec.cluster_noise_sigma * rng.standard_normal(
                (n_cell, spec.feature_dim))
            features.append(cells[label, domain] + jitter)
            domains.extend([domain] * n_cell)
            labels.extend([label] * n_cell)
    features = np.concatenate(features, axis=0)
    ids = np.arange(features.shape[0])
    LOG.info("Generated %d samples over %d classes and %d domains",
             len(ids), spec.num_classes, spec.num_domains)
    return ds.Dataset(ids, features, domains, labels, labels,
                      spec.num_classes, spec.num_domains,
                      metadata={'generator_seed': int(spec.seed)})


def nearest_prototype_labels(spec, dataset):
    """Classify every sample by its nearest (class, own-domain) prototype."""
    cells, _rng = domain_prototypes(spec)
    own = cells[:, dataset.domains, :]
    distances = np.linalg.norm(own - dataset.features[np.newaxis], axis=2)
    return np.argmin(distances, axis=0)
