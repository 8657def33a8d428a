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

"""Training loop and the two-phase refinement pipeline."""

import collections
import dataclasses
import math
import typing

import numpy as np
from oslo_log import log as logging

from dl4nd import constants
from dl4nd.data import dataset as dataset_lib
from dl4nd import exceptions
from dl4nd.model import mlp
from dl4nd.refinement import loss_split
from dl4nd.refinement import proxies as proxy_lib
from dl4nd.refinement import relabel as relabel_lib
from dl4nd.training import objective_api
from dl4nd.training import swad
from dl4nd.utils import numerics

LOG = logging.getLogger(__name__)

SWAD_WINDOW_FRACTION = 0.25
DEFAULT_REFINE_FRACTION = 0.2

LossSnapshot = collections.namedtuple('LossSnapshot',
                                      ['losses', 'embeddings', 'checksum'])


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    total_steps: int = 2000
    batch_size: int = 128
    learning_rate: float = 0.05
    # Step after which labels are refined; None means 20% of total_steps.
    refine_step: typing.Optional[int] = None
    method: str = constants.METHOD_ERM
    elr_beta: float = 0.7
    elr_lambda: float = 3.0
    swad_enabled: bool = False
    swad_start: typing.Optional[int] = None
    swad_end: typing.Optional[int] = None
    hidden_dims: typing.Tuple[int, ...] = (32,)
    embedding_dim: int = 16
    gmm_max_iters: int = constants.GMM_MAX_ITERS
    gmm_tol: float = constants.GMM_TOL
    gmm_threshold: float = constants.GMM_THRESHOLD
    gmm_min_separation: float = constants.GMM_MIN_SEPARATION
    refine_passes: int = 1
    refine_trigger: str = constants.REFINE_TRIGGER_FIXED
    refine_check_interval: int = 50
    normalize_proxies: bool = False
    seed: int = 0

    @property
    def resolved_refine_step(self):
        if self.refine_step is not None:
            return self.refine_step
        return max(1, int(self.total_steps * DEFAULT_REFINE_FRACTION))

    def layer_dims(self, input_dim, num_classes):
        return ((input_dim,) + tuple(self.hidden_dims) +
                (self.embedding_dim, num_classes))

    def swad_window(self, first_step):
        """Inclusive averaging window for steps ``first_step..total_steps``.

        Explicit bounds win; otherwise the final quarter of those steps.
        """
        if self.swad_start is not None and self.swad_end is not None:
            return self.swad_start, self.swad_end
        length = self.total_steps - first_step + 1
        width = max(1, int(math.ceil(length * SWAD_WINDOW_FRACTION)))
        return self.total_steps - width + 1, self.total_steps

    def _check(self, condition, key, reason):
        if not condition:
            raise exceptions.InvalidConfig(key='train.' + key, reason=reason)

    def validate(self, pipeline=False):
        self._check(self.total_steps >= 0, 'total_steps', 'must be >= 0')
        self._check(self.batch_size >= 1, 'batch_size', 'must be >= 1')
        self._check(self.learning_rate > 0, 'learning_rate', 'must be > 0')
        self._check(0 <= self.elr_beta < 1, 'elr_beta', 'must be in [0, 1)')
        self._check(self.elr_lambda >= 0, 'elr_lambda', 'must be >= 0')
        self._check(self.method in (constants.METHOD_ERM,
                                    constants.METHOD_ERM_ELR),
                    'method', 'unknown method %r' % self.method)
        self._check(self.embedding_dim >= 1, 'embedding_dim', 'must be >= 1')
        self._check(all(d >= 1 for d in self.hidden_dims), 'hidden_dims',
                    'widths must be >= 1')
        self._check(0 < self.gmm_threshold < 1, 'gmm_threshold',
                    'must be in (0, 1)')
        self._check(self.gmm_min_separation >= 0, 'gmm_min_separation',
                    'must be >= 0')
        if (self.swad_start is None) != (self.swad_end is None):
            raise exceptions.InvalidConfig(
                key='train.swad_start',
                reason='swad_start and swad_end are set together')
        if self.swad_start is not None:
            self._check(1 <= self.swad_start <= self.swad_end <=
                        self.total_steps, 'swad_end',
                        'needs 1 <= swad_start <= swad_end <= total_steps')
        if pipeline:
            self._check(0 < self.resolved_refine_step < self.total_steps,
                        'refine_step', 'needs 0 < refine_step < total_steps')
            self._check(self.refine_passes >= 1, 'refine_passes',
                        'must be >= 1')
            self._check(self.refine_check_interval >= 1,
                        'refine_check_interval', 'must be >= 1')
            self._check(self.refine_trigger in (
                constants.REFINE_TRIGGER_FIXED,
                constants.REFINE_TRIGGER_GMM_GAP),
                'refine_trigger', 'unknown trigger %r' % self.refine_trigger)


@dataclasses.dataclass(frozen=True)
class RunArtifacts:
    params: mlp.ModelParams
    loss_history: typing.Tuple[float, ...]
    last_params: mlp.ModelParams = None
    swad_count: int = 0
    relabel_outcome: relabel_lib.RelabelOutcome = None
    outcomes: typing.Tuple[relabel_lib.RelabelOutcome, ...] = ()
    refined_dataset: dataset_lib.Dataset = None
    refine_step: typing.Optional[int] = None
    refine_params: mlp.ModelParams = None
    snapshot: LossSnapshot = None
    gmm: loss_split.GmmParams = None
    split: loss_split.LossSplit = None
    proxies: proxy_lib.ProxyTable = None
    fallback_reason: typing.Optional[str] = None

    @property
    def steps(self):
        return len(self.loss_history)

    @property
    def refined(self):
        return self.relabel_outcome is not None


class _BatchStream(object):
    """Endless shuffled minibatches; a fresh permutation per epoch."""

    def __init__(self, rng, num_rows, batch_size):
        self._rng = rng
        self._num_rows = num_rows
        self._batch_size = min(batch_size, num_rows)
        self._order = np.empty(0, dtype=np.int64)

    def next(self):
        if len(self._order) < self._batch_size:
            self._order = np.concatenate(
                [self._order, self._rng.permutation(self._num_rows)])
        rows, self._order = (self._order[:self._batch_size],
                             self._order[self._batch_size:])
        return rows


class _Run(object):
    """Mutable state of one training run; a single writer steps it."""

    def __init__(self, config, dataset, params, objective):
        self.config = config
        self.params = params
        self.objective = objective
        self.stream = _BatchStream(numerics.make_rng(config.seed),
                                   len(dataset), config.batch_size)
        self.history = []
        self.step = 0
        self.swad_state = None

    def enable_swad(self, first_step):
        start, end = self.config.swad_window(first_step)
        self.swad_state = swad.SwadState(start, end)

    def advance(self, dataset, until):
        while self.step < until:
            self.step += 1
            rows = self.stream.next()
            ids = dataset.ids[rows]
            try:
                result = mlp.batch_gradients(
                    self.params, dataset.features[rows],
                    dataset.noisy_labels[rows],
                    extra_terms=self.objective.extra_terms(ids), ids=ids)
            except exceptions.NumericOverflow as e:
                LOG.error("Non-finite values at step %(step)d: %(error)s",
                          {'step': self.step, 'error': e})
                raise exceptions.TrainingDiverged(step=self.step,
                                                  loss='non-finite')
            loss = result.total_loss
            if not np.isfinite(loss) or loss > constants.DIVERGENCE_LOSS:
                raise exceptions.TrainingDiverged(step=self.step, loss=loss)
            self.params = self.params - result.grads.scaled(
                self.config.learning_rate)
            if not self.params.is_finite():
                raise exceptions.TrainingDiverged(step=self.step,
                                                  loss='non-finite')
            self.history.append(loss)
            LOG.debug("step %(step)d loss %(loss).6f",
                      {'step': self.step, 'loss': loss})
            if (self.swad_state is not None and
                    self.swad_state.in_window(self.step)):
                swad.swad_accumulate(self.swad_state, self.params)

    def final_params(self):
        if self.swad_state is None:
            return self.params
        if self.swad_state.count == 0:
            LOG.warning("SWAD window %(start)s..%(end)s saw no steps, "
                        "using the last parameters",
                        {'start': self.swad_state.start,
                         'end': self.swad_state.end})
            return self.params
        return swad.swad_finalize(self.swad_state)


def _objective_for(config, dataset):
    return objective_api.ObjectiveBase.get_instance(
        config.method, dataset.ids, dataset.num_classes, config)


def _initial_params(config, dataset, initial_params):
    if initial_params is not None:
        return initial_params
    return mlp.init_params(
        config.layer_dims(dataset.dim, dataset.num_classes), config.seed)


def train(config, dataset, initial_params=None):
    """Plain SGD for ``config.total_steps`` steps on the noisy labels."""
    config.validate()
    if len(dataset) == 0:
        raise exceptions.InvalidSpec(reason="cannot train on an empty "
                                            "dataset")
    run = _Run(config, dataset, _initial_params(config, dataset,
                                                initial_params),
               _objective_for(config, dataset))
    if config.swad_enabled and config.total_steps > 0:
        run.enable_swad(1)
    run.advance(dataset, config.total_steps)
    LOG.info("Trained %(steps)d steps with %(method)s",
             {'steps': run.step, 'method': config.method})
    return RunArtifacts(
        params=run.final_params(), last_params=run.params,
        loss_history=tuple(run.history),
        swad_count=run.swad_state.count if run.swad_state else 0)


def snapshot(params, dataset):
    """Per-sample losses and embeddings, copied and checksummed."""
    losses, embeddings = mlp.sample_losses(params, dataset)
    losses = np.array(losses)
    embeddings = np.array(embeddings)
    for array in (losses, embeddings):
        array.flags.writeable = False
    return LossSnapshot(losses=losses, embeddings=embeddings,
                        checksum=numerics.checksum(losses, embeddings))


def _warm_up_until_gap_peak(run, config, dataset):
    """Train until the loss mixture's mean gap stops growing.

    The fixed refine step is the latest possible trigger.
    """
    limit = config.resolved_refine_step
    peak = -np.inf
    while run.step < limit:
        run.advance(dataset, min(limit, run.step +
                                 config.refine_check_interval))
        losses, _embeddings = mlp.sample_losses(run.params, dataset)
        try:
            gap = loss_split.fit_gmm(losses, config.gmm_max_iters,
                                     config.gmm_tol,
                                     config.gmm_min_separation).gap
        except exceptions.DegenerateFit:
            continue
        if gap < peak:
            LOG.info("Loss gap peaked, refining at step %d", run.step)
            break
        peak = gap


def refine_labels(config, params, dataset):
    """Snapshot, split, build proxies and relabel, without training.

    :returns: a dict with the snapshot, the fitted mixture, the split,
              proxies, every pass' outcome, the refined dataset and the
              fallback reason (None when refinement ran).
    """
    result = {'snapshot': snapshot(params, dataset), 'gmm': None,
              'split': None, 'proxies': None, 'outcomes': [],
              'dataset': dataset, 'fallback_reason': None}
    current = dataset
    for refine_pass in range(config.refine_passes):
        shot = (result['snapshot'] if refine_pass == 0
                else snapshot(params, current))
        try:
            gmm = loss_split.fit_gmm(shot.losses, config.gmm_max_iters,
                                     config.gmm_tol,
                                     config.gmm_min_separation)
            split = loss_split.cover_classes(
                loss_split.split(current.ids, shot.losses, gmm,
                                 config.gmm_threshold),
                shot.losses, current.noisy_labels, config.gmm_max_iters,
                config.gmm_tol, config.gmm_threshold,
                config.gmm_min_separation)
            proxies = proxy_lib.build_proxies(
                shot.embeddings, current, split.low_mask,
                normalize=config.normalize_proxies)
        except (exceptions.DegenerateFit,
                exceptions.EmptyProxyTable) as e:
            LOG.warning("Skipping label refinement: %s", e)
            result['fallback_reason'] = str(e)
            break
        outcome = relabel_lib.relabel(shot.embeddings, current, split,
                                      proxies)
        current = outcome.apply(current)
        result.update(gmm=gmm, split=split, proxies=proxies)
        result['outcomes'].append(outcome)
    result['dataset'] = current
    return result


def run_nag_pipeline(config, dataset, initial_params=None):
    """Warm up, refine the labels once, then resume on the new labels.

    The objective (and any per-sample state it holds) carries over
    between the two phases.
    """
    config.validate(pipeline=True)
    if len(dataset) == 0:
        raise exceptions.InvalidSpec(reason="cannot train on an empty "
                                            "dataset")
    run = _Run(config, dataset, _initial_params(config, dataset,
                                                initial_params),
               _objective_for(config, dataset))
    if config.refine_trigger == constants.REFINE_TRIGGER_GMM_GAP:
        _warm_up_until_gap_peak(run, config, dataset)
    else:
        run.advance(dataset, config.resolved_refine_step)
    refine_step = run.step
    refine_params = run.params
    LOG.info("Refinement step %d reached", refine_step)

    refined = refine_labels(config, refine_params, dataset)
    outcomes = tuple(refined['outcomes'])

    if config.swad_enabled:
        run.enable_swad(refine_step + 1)
    run.advance(refined['dataset'], config.total_steps)
    return RunArtifacts(
        params=run.final_params(), last_params=run.params,
        loss_history=tuple(run.history),
        swad_count=run.swad_state.count if run.swad_state else 0,
        relabel_outcome=outcomes[-1] if outcomes else None,
        outcomes=outcomes, refined_dataset=refined['dataset'],
        refine_step=refine_step, refine_params=refine_params,
        snapshot=refined['snapshot'], gmm=refined['gmm'],
        split=refined['split'], proxies=refined['proxies'],
        fallback_reason=refined['fallback_reason'])
