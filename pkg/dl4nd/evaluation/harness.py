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

"""Leave-one-domain-out evaluation and noise-ratio sweeps."""

from concurrent import futures
import dataclasses
import itertools
import typing

import numpy as np
from oslo_concurrency import lockutils
from oslo_log import log as logging
from oslo_serialization import jsonutils

from dl4nd import constants
from dl4nd.data import dataset as dataset_lib
from dl4nd.data import generator
from dl4nd.data import noise
from dl4nd.evaluation import balance
from dl4nd.evaluation import report as report_lib
from dl4nd import exceptions
from dl4nd.model import mlp
from dl4nd.refinement import diagnostics
from dl4nd.training import trainer
from dl4nd.utils import helpers
from dl4nd.utils import numerics

LOG = logging.getLogger(__name__)

DEFAULT_METHODS = (constants.METHOD_ERM,
                   constants.METHOD_ERM + '+' + constants.REFINE_SUFFIX)
MAX_SWEEP_RATIO = 0.5


@dataclasses.dataclass(frozen=True)
class ExperimentSpec:
    domain_spec: dataset_lib.DomainSpec = dataset_lib.DomainSpec()
    noise_pairs: typing.Tuple[typing.Tuple[int, int], ...] = ()
    noise_mode: str = constants.NOISE_MODE_BERNOULLI
    noise_ratios: typing.Tuple[float, ...] = (0.0,)
    train_config: trainer.TrainConfig = trainer.TrainConfig()
    methods: typing.Tuple[str, ...] = DEFAULT_METHODS
    # Empty means every domain is held out once.
    held_out_domains: typing.Tuple[int, ...] = ()
    seeds: typing.Tuple[int, ...] = (0, 1, 2, 3, 4)
    id_test_fraction: float = 0.2
    workers: int = 1

    @property
    def folds(self):
        return (tuple(self.held_out_domains) or
                tuple(range(self.domain_spec.num_domains)))

    def validate(self):
        num_domains = self.domain_spec.num_domains
        if num_domains < 2:
            raise exceptions.ProtocolError(
                reason="leave-one-domain-out needs at least 2 domains, "
                       "got %d" % num_domains)
        for domain in self.held_out_domains:
            if not 0 <= domain < num_domains:
                raise exceptions.InvalidConfig(
                    key='eval.held_out_domains',
                    reason="domain %d is not in [0, %d)" % (domain,
                                                            num_domains))
        if not self.noise_ratios:
            raise exceptions.InvalidConfig(key='eval.ratios',
                                           reason="at least one ratio")
        if not self.seeds:
            raise exceptions.InvalidConfig(key='eval.seeds',
                                           reason="at least one seed")
        for ratio in self.noise_ratios:
            if not 0.0 <= ratio < MAX_SWEEP_RATIO:
                raise exceptions.InvalidConfig(
                    key='eval.ratios',
                    reason="ratio %s is not in [0, 0.5)" % ratio)
        if not 0.0 < self.id_test_fraction < 1.0:
            raise exceptions.InvalidConfig(key='eval.id_test_fraction',
                                           reason="must be in (0, 1)")
        if self.workers < 1:
            raise exceptions.InvalidConfig(key='eval.workers',
                                           reason="must be >= 1")
        for method in self.methods:
            objective, _refine = helpers.parse_method(method)
            if objective not in (constants.METHOD_ERM,
                                 constants.METHOD_ERM_ELR):
                raise exceptions.InvalidConfig(
                    key='eval.methods', reason="unknown method %r" % method)
        self.domain_spec.validate()
        noise_spec = dataset_lib.NoiseSpec(pairs=self.noise_pairs,
                                           mode=self.noise_mode)
        noise_spec.validate(self.domain_spec.num_classes)

    def describe(self):
        return jsonutils.to_primitive(dataclasses.asdict(self))


@dataclasses.dataclass(frozen=True)
class SeedData:
    """Everything a fold job needs that is shared across methods."""
    seed: int
    noise_ratio: float
    dataset: dataset_lib.Dataset
    id_test_mask: np.ndarray
    train_seed: int


def id_test_mask(dataset, fraction, seed):
    """Hold out ``fraction`` of every domain's samples as the ID test."""
    rng = numerics.make_rng(seed)
    mask = np.zeros(len(dataset), dtype=bool)
    for domain in range(dataset.num_domains):
        rows = np.flatnonzero(dataset.domains == domain)
        count = int(round(fraction * len(rows)))
        mask[rng.permutation(rows)[:count]] = True
    return mask


def prepare_seed(spec, seed, ratios):
    """One clean dataset per seed, noised once per ratio."""
    data_seed, noise_seed, split_seed, train_seed = numerics.child_seeds(
        seed, 4)
    clean = generator.generate(dataclasses.replace(spec.domain_spec,
                                                   seed=data_seed))
    mask = id_test_mask(clean, spec.id_test_fraction, split_seed)
    prepared = []
    for ratio in ratios:
        noisy = noise.inject_pairwise_noise(clean, dataset_lib.NoiseSpec(
            pairs=spec.noise_pairs, ratio=ratio, seed=noise_seed,
            mode=spec.noise_mode))
        prepared.append(SeedData(seed=seed, noise_ratio=float(ratio),
                                 dataset=noisy, id_test_mask=mask,
                                 train_seed=train_seed))
    return prepared


def _fold_split(data, held_out):
    dataset = data.dataset
    in_domain = dataset.domains != held_out
    train_set = dataset.subset(in_domain & ~data.id_test_mask)
    if np.any(train_set.domains == held_out):
        raise exceptions.ProtocolError(
            reason="fold %d training set contains held-out samples" %
            held_out)
    return (train_set, dataset.subset(in_domain & data.id_test_mask),
            dataset.subset(~in_domain))


def _label_accuracy(labels, dataset):
    try:
        return diagnostics.label_accuracy(labels, dataset)
    except exceptions.MetricUnavailable:
        return None


def run_fold(spec, data, method, held_out):
    """Train one method with one domain held out and score it."""
    objective, refine = helpers.parse_method(method)
    config = dataclasses.replace(spec.train_config, method=objective,
                                 seed=data.train_seed)
    train_set, id_test, ood_test = _fold_split(data, held_out)
    before = _label_accuracy(train_set.noisy_labels, train_set)
    result = report_lib.FoldResult(
        seed=data.seed, noise_ratio=data.noise_ratio, method=method,
        held_out_domain=held_out, id_accuracy=None, ood_accuracy=None,
        label_accuracy_before=before, label_accuracy_after=before,
        dataset_checksum=data.dataset.checksum())
    if refine:
        artifacts = trainer.run_nag_pipeline(config, train_set)
        result.refine_step = artifacts.refine_step
        result.fallback_reason = artifacts.fallback_reason
        if artifacts.refined:
            summary = artifacts.relabel_outcome.summary
            result.relabeled = sum(o.summary['relabeled']
                                   for o in artifacts.outcomes)
            result.abstained = summary['abstained']
            result.low_loss = summary['low_loss']
            result.gmm = artifacts.gmm.to_dict()
            result.label_accuracy_after = _label_accuracy(
                artifacts.refined_dataset.noisy_labels, train_set)
            result.separability_rate = diagnostics.separability_rate(
                artifacts.snapshot.embeddings, train_set, artifacts.proxies,
                use_true_labels=train_set.has_true_labels)
            selected = balance.domain_balance(artifacts.split.low_ids,
                                              train_set)
            result.domain_balance = selected.to_dict()
            result.balance_gap = selected.l1_gap
    else:
        artifacts = trainer.train(config, train_set)
    result.id_accuracy = mlp.accuracy(artifacts.params, id_test)
    result.ood_accuracy = mlp.accuracy(artifacts.params, ood_test)
    LOG.info("Fold seed=%(seed)d ratio=%(ratio).2f method=%(method)s "
             "held_out=%(held_out)d: id %(id)s ood %(ood)s",
             {'seed': data.seed, 'ratio': data.noise_ratio,
              'method': method, 'held_out': held_out,
              'id': result.id_accuracy, 'ood': result.ood_accuracy})
    return result


class _FoldCollector(object):

    def __init__(self):
        self.results = []

    @lockutils.synchronized('dl4nd-fold-results')
    def add(self, result):
        self.results.append(result)

    def run(self, spec, data, method, held_out):
        self.add(run_fold(spec, data, method, held_out))


def _run(spec, ratios, config_echo):
    spec.validate()
    jobs = []
    for seed in spec.seeds:
        for data in prepare_seed(spec, seed, ratios):
            jobs.extend((data, method, held_out) for method, held_out in
                        itertools.product(spec.methods, spec.folds))
    LOG.info("Running %d fold jobs on %d worker(s)", len(jobs), spec.workers)
    collector = _FoldCollector()
    with futures.ThreadPoolExecutor(max_workers=spec.workers) as pool:
        pending = [pool.submit(collector.run, spec, data, method, held_out)
                   for data, method, held_out in jobs]
        for job in pending:
            job.result()
    echo = spec.describe() if config_echo is None else config_echo
    return report_lib.build_report(echo, collector.results)


def leave_one_out(spec, config_echo=None):
    """Every fold, seed and method at the first configured noise ratio."""
    return _run(spec, spec.noise_ratios[:1], config_echo)


def noise_sweep(spec, config_echo=None):
    """One leave-one-out block per noise ratio, paired on the same data."""
    return _run(spec, spec.noise_ratios, config_echo)
