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

"""Multilayer perceptron featurizer with a linear classification head.

``layer_dims`` lists the input width, the hidden widths and finally the
number of classes; the last hidden width is the embedding size. Hidden
layers use tanh; the embedding is the activation of the last hidden layer,
right before the head.
"""

import collections

import numpy as np
from oslo_log import log as logging
from scipy import special

from dl4nd import constants
from dl4nd import exceptions
from dl4nd.utils import numerics

LOG = logging.getLogger(__name__)

ForwardResult = collections.namedtuple(
    'ForwardResult', ['embedding', 'logits', 'probs', 'loss'])

BatchGradients = collections.namedtuple(
    'BatchGradients', ['losses', 'grads', 'total_loss', 'probs'])


class ModelParams(object):
    """Weights and biases, one ``(weights, bias)`` pair per layer.

    ``weights`` has shape (fan_in, fan_out) so a batch ``x`` maps to
    ``x @ weights + bias``.
    """

    def __init__(self, layers):
        self.layers = [(np.array(w, dtype=np.float64),
                        np.array(b, dtype=np.float64)) for w, b in layers]
        for (w, b), (w_next, _b) in zip(self.layers, self.layers[1:]):
            if w.shape[1] != w_next.shape[0] or b.shape != (w.shape[1],):
                raise exceptions.InvalidSpec(reason="inconsistent layer "
                                                    "shapes")
        w, b = self.layers[-1]
        if b.shape != (w.shape[1],):
            raise exceptions.InvalidSpec(reason="inconsistent layer shapes")

    @property
    def layer_dims(self):
        return tuple([self.layers[0][0].shape[0]] +
                     [w.shape[1] for w, _b in self.layers])

    @property
    def num_classes(self):
        return self.layer_dims[-1]

    @property
    def num_parameters(self):
        return sum(w.size + b.size for w, b in self.layers)

    def arrays(self):
        for w, b in self.layers:
            yield w
            yield b

    def flat(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def map(self, func, other=None):
        if other is None:
            return ModelParams([(func(w), func(b)) for w, b in self.layers])
        return ModelParams([(func(w, ow), func(b, ob)) for (w, b), (ow, ob)
                            in zip(self.layers, other.layers)])

    def __add__(self, other):
        return self.map(np.add, other)

    def __sub__(self, other):
        return self.map(np.subtract, other)

    def scaled(self, factor):
        return self.map(lambda a: a * factor)

    def zeros_like(self):
        return self.map(np.zeros_like)

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (self.layer_dims == other.layer_dims and
                all(np.array_equal(a, b) for a, b in
                    zip(self.arrays(), other.arrays())))

    __hash__ = None


def init_params(layer_dims, seed):
    """Scaled-uniform (Glorot) weights, zero biases."""
    layer_dims = [int(d) for d in layer_dims]
    if len(layer_dims) < 2 or any(d <= 0 for d in layer_dims):
        raise exceptions.InvalidSpec(
            reason="layer_dims needs at least an input and an output width")
    rng = numerics.make_rng(seed)
    layers = []
    for fan_in, fan_out in zip(layer_dims, layer_dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append((rng.uniform(-limit, limit, size=(fan_in, fan_out)),
                       np.zeros(fan_out)))
    return ModelParams(layers)


def _check_labels(labels, num_classes):
    labels = np.asarray(labels, dtype=np.int64)
    bad = (labels < 0) | (labels >= num_classes)
    if np.any(bad):
        raise exceptions.LabelOutOfRange(label=int(labels[bad][0]),
                                         num_classes=num_classes)
    return labels


def _forward_batch(params, inputs):
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[1] != params.layer_dims[0]:
        raise exceptions.InvalidSpec(
            reason="input width %d does not match the model's %d" %
            (inputs.shape[1], params.layer_dims[0]))
    activations = [inputs]
    for w, b in params.layers[:-1]:
        activations.append(np.tanh(activations[-1] @ w + b))
    w, b = params.layers[-1]
    logits = activations[-1] @ w + b
    return activations, logits


def _cross_entropy(logits, labels):
    log_probs = special.log_softmax(logits, axis=1)
    picked = log_probs[np.arange(len(labels)), labels]
    return -np.maximum(picked, np.log(constants.LOG_PROB_FLOOR))


def _first_bad_row(*arrays):
    bad = np.zeros(arrays[0].shape[0], dtype=bool)
    for array in arrays:
        bad |= ~np.all(np.isfinite(array.reshape(array.shape[0], -1)),
                       axis=1)
    rows = np.flatnonzero(bad)
    return int(rows[0]) if rows.size else None


def forward(params, x, label):
    label = int(_check_labels([label], params.num_classes)[0])
    activations, logits = _forward_batch(params, x)
    probs = special.softmax(logits, axis=1)
    loss = _cross_entropy(logits, np.array([label]))
    return ForwardResult(embedding=activations[-1][0], logits=logits[0],
                         probs=probs[0], loss=float(loss[0]))


def batch_gradients(params, inputs, labels, extra_terms=(), ids=None):
    """Per-sample losses and the gradient of the mean total loss.

    Each extra term is a callable ``term(probs) -> (value, dlogits)`` whose
    value is already aggregated over the batch and whose ``dlogits`` is the
    gradient of that value with respect to the logits.
    """
    activations, logits = _forward_batch(params, inputs)
    n = logits.shape[0]
    if n == 0:
        raise exceptions.InvalidSpec(reason="empty batch")
    labels = _check_labels(labels, params.num_classes)
    probs = special.softmax(logits, axis=1)
    losses = _cross_entropy(logits, labels)
    bad = _first_bad_row(logits, probs, losses[:, np.newaxis])
    if bad is not None:
        raise exceptions.NumericOverflow(
            sample_id=ids[bad] if ids is not None else bad)

    total = float(losses.mean())
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    for term in extra_terms:
        value, term_dlogits = term(probs)
        total += float(value)
        dlogits += term_dlogits

    grads = []
    w, _b = params.layers[-1]
    grads.append((activations[-1].T @ dlogits, dlogits.sum(axis=0)))
    upstream = dlogits @ w.T
    for layer in range(len(params.layers) - 2, -1, -1):
        w, _b = params.layers[layer]
        dz = upstream * (1.0 - activations[layer + 1] ** 2)
        grads.append((activations[layer].T @ dz, dz.sum(axis=0)))
        upstream = dz @ w.T
    grads = ModelParams(list(reversed(grads)))
    if not grads.is_finite():
        raise exceptions.NumericOverflow(
            sample_id=ids[0] if ids is not None else 0)
    return BatchGradients(losses=losses, grads=grads, total_loss=total,
                          probs=probs)


def embed(params, inputs):
    activations, logits = _forward_batch(params, inputs)
    return activations[-1], logits


def extract_features(params, dataset):
    """Embedding per sample, row-aligned with ``dataset.ids``."""
    embeddings, _logits = embed(params, dataset.features)
    return embeddings


def sample_losses(params, dataset, labels=None):
    """Per-sample cross-entropy against ``labels`` plus the embeddings."""
    labels = dataset.noisy_labels if labels is None else labels
    embeddings, logits = embed(params, dataset.features)
    labels = _check_labels(labels, params.num_classes)
    losses = _cross_entropy(logits, labels)
    bad = _first_bad_row(logits, losses[:, np.newaxis])
    if bad is not None:
        raise exceptions.NumericOverflow(sample_id=int(dataset.ids[bad]))
    return losses, embeddings


def predict(params, inputs):
    _embeddings, logits = embed(params, inputs)
    return np.argmax(logits, axis=1)


def accuracy(params, dataset, use_true_labels=True):
    if len(dataset) == 0:
        return None
    if use_true_labels:
        if not dataset.has_true_labels:
            raise exceptions.MetricUnavailable(metric='accuracy')
        labels = dataset.true_labels
    else:
        labels = dataset.noisy_labels
    return float(np.mean(predict(params, dataset.features) == labels))
