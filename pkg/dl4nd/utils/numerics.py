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

"""Numeric primitives shared by every stage of the pipeline.

Feature vectors are 1-D float64 numpy arrays; collections of them are 2-D
arrays with one vector per row. Random streams come from numpy's Philox
counter-based generator so a seed yields the same stream on any platform.
"""

import hashlib

import numpy as np

from dl4nd import constants
from dl4nd import exceptions


def as_vector(values):
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim != 1 or vector.size == 0:
        raise exceptions.DegenerateInput(
            reason="expected a non-empty 1-D vector, got shape %s" %
            (vector.shape,))
    if not np.all(np.isfinite(vector)):
        raise exceptions.DegenerateInput(reason="vector has non-finite "
                                                "entries")
    return vector


def _norm(vector):
    norm = float(np.linalg.norm(vector))
    if norm < constants.ZERO_NORM_EPS:
        raise exceptions.DegenerateInput(
            reason="cosine distance undefined for a zero-norm vector")
    return norm


def cosine_distance(a, b):
    """Return 1 - cos(a, b), a value in [0, 2]."""
    a = as_vector(a)
    b = as_vector(b)
    if a.shape != b.shape:
        raise exceptions.DegenerateInput(
            reason="dimension mismatch %d != %d" % (a.size, b.size))
    cosine = float(np.dot(a, b)) / (_norm(a) * _norm(b))
    return float(np.clip(1.0 - cosine, 0.0, 2.0))


def cosine_distance_matrix(rows, columns):
    """Pairwise cosine distances between the rows of two matrices.

    Returns an array of shape (len(rows), len(columns)).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    columns = np.atleast_2d(np.asarray(columns, dtype=np.float64))
    if rows.shape[1] != columns.shape[1]:
        raise exceptions.DegenerateInput(
            reason="dimension mismatch %d != %d" % (rows.shape[1],
                                                   columns.shape[1]))
    row_norms = np.linalg.norm(rows, axis=1)
    column_norms = np.linalg.norm(columns, axis=1)
    if (np.any(row_norms < constants.ZERO_NORM_EPS) or
            np.any(column_norms < constants.ZERO_NORM_EPS)):
        raise exceptions.DegenerateInput(
            reason="cosine distance undefined for a zero-norm vector")
    cosine = (rows @ columns.T) / np.outer(row_norms, column_norms)
    return np.clip(1.0 - cosine, 0.0, 2.0)


def group_mean(vectors):
    """Coordinate-wise arithmetic mean of a non-empty list of vectors."""
    if len(vectors) == 0:
        raise exceptions.EmptyGroup()
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2:
        raise exceptions.DegenerateInput(
            reason="vectors must share one dimension")
    return matrix.mean(axis=0)


def l2_normalize(matrix):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms < constants.ZERO_NORM_EPS):
        raise exceptions.DegenerateInput(
            reason="cannot normalize a zero-norm vector")
    return matrix / norms


def make_rng(seed):
    """Single-owner random stream for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed)))


def child_seeds(seed, count):
    """Derive independent 64-bit seeds for parallel consumers."""
    sequence = np.random.SeedSequence(int(seed))
    return [int(child.generate_state(1, dtype=np.uint64)[0])
            for child in sequence.spawn(count)]


def checksum(*arrays):
    digest = hashlib.sha256()
    for array in arrays:
        array = np.ascontiguousarray(array)
        digest.update(str(array.dtype).encode())
        digest.update(str(array.shape).encode())
        digest.update(array.tobytes())
    return digest.hexdigest()
