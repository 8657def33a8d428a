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

# numerics
ZERO_NORM_EPS = 1e-12

# model
LOG_PROB_FLOOR = 1e-12
DIVERGENCE_LOSS = 1e6
CHECKPOINT_MAGIC = 'dl4nd-checkpoint'
CHECKPOINT_VERSION = 1

# datagen
DATASET_MAGIC = 'dl4nd-dataset'
DATASET_VERSION = 1
NOISE_MODE_BERNOULLI = 'bernoulli'
NOISE_MODE_EXACT = 'exact'
NOISE_STRAIN_RATIO = 0.5
NOISE_WARNING_STRAINED = 'ratio_strains_loss_split'

# loss split
GMM_VARIANCE_FLOOR = 1e-8
GMM_LL_SLACK = 1e-9
GMM_MAX_ITERS = 100
GMM_TOL = 1e-6
GMM_THRESHOLD = 0.5
GMM_INIT_PERCENTILES = (10.0, 90.0)
# Component means closer than this many pooled standard deviations are one
# mode.
GMM_MIN_SEPARATION = 2.0
# Classes with a smaller low-loss share get a split of their own.
GMM_MIN_CLASS_SHARE = 0.1

# relabel decisions
DECISION_KEPT = 'kept'
DECISION_RELABELED = 'relabeled'
DECISION_ABSTAINED = 'abstained'

# distance statistics
MEAN_SOURCE_ALL = 'all'
MEAN_SOURCE_LOW_LOSS = 'low_loss_only'

# training
ELR_INNER_CLAMP = 1e-6
METHOD_ERM = 'erm'
METHOD_ERM_ELR = 'erm+elr'
REFINE_SUFFIX = 'dl4nd'
REFINE_TRIGGER_FIXED = 'fixed'
REFINE_TRIGGER_GMM_GAP = 'gmm_gap'
OBJECTIVES_NAMESPACE = 'dl4nd.objectives'

# reports
REPORT_VERSION = 1
FORMAT_STRUCTURED = 'structured'
FORMAT_TABULAR = 'tabular'
FORMAT_TEXT = 'text'
FORMAT_EXTENSIONS = {
    FORMAT_STRUCTURED: 'json',
    FORMAT_TABULAR: 'csv',
    FORMAT_TEXT: 'txt',
}
UNAVAILABLE = 'unavailable'

# cli
COMMANDS = ('gen', 'train', 'refine', 'eval', 'sweep', 'distances')
EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_INVALID_CONFIG = 2

# Directed (class_a, class_b) flip pairs.
NOISE_PRESETS = {
    'none': (),
    'rotated_mnist': ((0, 6), (1, 7), (3, 5), (4, 9),
                      (5, 3), (6, 0), (7, 1), (9, 4)),
    'terra_incognita': ((0, 9), (1, 3), (2, 4), (3, 8), (4, 2),
                        (5, 0), (6, 8), (7, 9), (8, 6), (9, 7)),
    'office_home': ((16, 6), (14, 42), (15, 60), (10, 39), (1, 34),
                    (47, 63), (13, 21), (3, 54), (9, 60), (8, 53),
                    (4, 52), (19, 42), (5, 56), (24, 32), (12, 33),
                    (18, 32), (17, 27), (50, 22), (48, 60), (23, 34),
                    (26, 61), (58, 36), (44, 26), (45, 62), (49, 33),
                    (25, 47), (57, 30)),
}
