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

"""Command handlers of the ``dl4nd`` console script."""

import os
import sys

import numpy as np
from oslo_config import cfg
from oslo_log import log as logging
from oslo_utils import fileutils

from dl4nd import config
from dl4nd import constants
from dl4nd.data import generator
from dl4nd.data import noise
from dl4nd.data import store
from dl4nd.evaluation import harness
from dl4nd.evaluation import report as report_lib
from dl4nd import exceptions
from dl4nd.model import checkpoint
from dl4nd.model import mlp
from dl4nd.refinement import diagnostics
from dl4nd.refinement import loss_split
from dl4nd.training import trainer
from dl4nd.utils import helpers

CONF = cfg.CONF
LOG = logging.getLogger(__name__)

DATASET_FILE = 'dataset.csv'
REFINED_DATASET_FILE = 'dataset.refined.csv'
CHECKPOINT_FILE = 'checkpoint.txt'
LOSS_COLUMNS = ('step', 'loss')
RELABEL_COLUMNS = ('id', 'old_label', 'new_label', 'decision',
                   'domains_used', 'class_distances')


def _out(name):
    try:
        fileutils.ensure_tree(CONF.out)
    except OSError as e:
        raise exceptions.ReportIOError(path=CONF.out, reason=e)
    return os.path.join(CONF.out, name)


def _report_path(stem):
    return _out(helpers.output_name(stem, CONF.format))


def _document(**sections):
    document = {'version': constants.REPORT_VERSION,
                'config': config.resolved_config()}
    document.update(sections)
    return document


def generate_dataset():
    clean = generator.generate(config.domain_spec())
    return noise.inject_pairwise_noise(clean, config.noise_spec())


def load_or_generate_dataset():
    if CONF.data.dataset_path:
        return store.load_dataset(CONF.data.dataset_path)
    return generate_dataset()


def _load_params(dataset, required=True):
    path = CONF.train.checkpoint
    if not path:
        if required:
            raise exceptions.InvalidConfig(key='train.checkpoint',
                                           reason="a checkpoint is required")
        return None
    params = checkpoint.load_checkpoint(path)
    if params.layer_dims[0] != dataset.dim:
        raise exceptions.InvalidConfig(
            key='train.checkpoint',
            reason="checkpoint expects %d input features, dataset has %d" %
            (params.layer_dims[0], dataset.dim))
    return params


def do_gen():
    dataset = generate_dataset()
    store.save_dataset(dataset, _out(DATASET_FILE))


def _run_summary(artifacts, dataset):
    run = {'steps': artifacts.steps,
           'final_loss': (artifacts.loss_history[-1]
                          if artifacts.loss_history else None),
           'swad_checkpoints': artifacts.swad_count,
           'train_accuracy_noisy': mlp.accuracy(artifacts.params, dataset,
                                                use_true_labels=False),
           'train_accuracy_true': None,
           'refine_step': artifacts.refine_step,
           'fallback_reason': artifacts.fallback_reason,
           'gmm': artifacts.gmm.to_dict() if artifacts.gmm else None,
           'relabel': (artifacts.relabel_outcome.summary
                       if artifacts.refined else None)}
    if dataset.has_true_labels:
        run['train_accuracy_true'] = mlp.accuracy(artifacts.params, dataset)
    return run


def do_train():
    dataset = load_or_generate_dataset()
    train_config = config.train_config()
    if CONF.train.refine:
        artifacts = trainer.run_nag_pipeline(train_config, dataset)
    else:
        artifacts = trainer.train(train_config, dataset)
    checkpoint.save_checkpoint(artifacts.params, _out(CHECKPOINT_FILE))
    if artifacts.refined:
        store.save_dataset(artifacts.refined_dataset,
                           _out(REFINED_DATASET_FILE))
    run = _run_summary(artifacts, dataset)
    rows = [{'step': step, 'loss': loss}
            for step, loss in enumerate(artifacts.loss_history, 1)]
    report_lib.emit_table(_document(run=run, loss_history=list(
        artifacts.loss_history)), LOSS_COLUMNS, rows,
        _report_path('report'), CONF.format, title='dl4nd train',
        summary={k: v for k, v in run.items()
                 if not isinstance(v, dict)})


def _relabel_row(record):
    return {'id': record.id, 'old_label': record.old_label,
            'new_label': record.new_label, 'decision': record.decision,
            'domains_used': ';'.join(str(d) for d in record.domains_used),
            'class_distances': ';'.join(
                constants.UNAVAILABLE if d is None else repr(d)
                for d in record.class_distances)}


def do_refine():
    dataset = load_or_generate_dataset()
    params = _load_params(dataset)
    refined = trainer.refine_labels(config.train_config(), params, dataset)
    outcomes = refined['outcomes']
    document = _document(fallback_reason=refined['fallback_reason'],
                         gmm=(refined['gmm'].to_dict() if refined['gmm']
                              else None),
                         passes=[o.to_dict() for o in outcomes])
    rows = [_relabel_row(r) for r in outcomes[-1].records] if outcomes else []
    summary = dict(outcomes[-1].summary) if outcomes else {}
    summary['fallback_reason'] = refined['fallback_reason']
    report_lib.emit_table(document, RELABEL_COLUMNS, rows,
                          _report_path('relabel'), CONF.format,
                          title='dl4nd refine', summary=summary)
    if outcomes:
        store.save_dataset(refined['dataset'], _out(REFINED_DATASET_FILE))


def do_eval():
    report = harness.leave_one_out(config.experiment_spec(),
                                   config_echo=config.resolved_config())
    report_lib.emit_report(report, _report_path('report'), CONF.format)


def do_sweep():
    spec = config.experiment_spec(ratios=CONF.eval.ratios)
    report = harness.noise_sweep(spec, config_echo=config.resolved_config())
    report_lib.emit_report(report, _report_path('report'), CONF.format)


def do_distances():
    dataset = load_or_generate_dataset()
    params = _load_params(dataset, required=False)
    features = (dataset.features if params is None
                else mlp.extract_features(params, dataset))
    low_mask = None
    if CONF.eval.distance_mean_source == constants.MEAN_SOURCE_LOW_LOSS:
        if params is None:
            raise exceptions.InvalidConfig(
                key='eval.distance_mean_source',
                reason="low_loss_only needs train.checkpoint")
        losses, _embeddings = mlp.sample_losses(params, dataset)
        try:
            gmm = loss_split.fit_gmm(losses, CONF.train.gmm_max_iters,
                                     CONF.train.gmm_tol,
                                     CONF.train.gmm_min_separation)
        except exceptions.DegenerateFit as e:
            LOG.warning("Loss mixture is degenerate, every sample counts "
                        "as low-loss: %s", e)
            low_mask = np.ones(len(dataset), dtype=bool)
        else:
            low_mask = loss_split.split(dataset.ids, losses, gmm,
                                        CONF.train.gmm_threshold).low_mask
    stats = diagnostics.distance_stats(
        features, dataset, mean_source=CONF.eval.distance_mean_source,
        low_mask=low_mask, class_pairs=tuple(config.distance_pairs()))
    report_lib.emit_table(
        _document(features='embedding' if params else 'input',
                  distances=stats.to_dict()),
        diagnostics.ROW_COLUMNS, stats.rows(), _report_path('distances'),
        CONF.format, title='dl4nd distances',
        summary={'overlap': stats.overlap,
                 'mean_source': stats.mean_source})


COMMANDS = {
    'gen': do_gen,
    'train': do_train,
    'refine': do_refine,
    'eval': do_eval,
    'sweep': do_sweep,
    'distances': do_distances,
}


def _fail(code, key, error):
    message = str(error).replace('\n', ' ').replace('"', '\\"')
    sys.stderr.write('error code=%d key=%s message="%s"\n' %
                     (code, key or '-', message))
    return code


def main(argv=None):
    config.register_opts()
    try:
        config.init(sys.argv[1:] if argv is None else argv)
        if CONF.command.name is None:
            raise exceptions.InvalidConfig(
                key='command', reason="one of %s is required" %
                ', '.join(constants.COMMANDS))
        config.validate()
    except exceptions.InvalidConfig as e:
        return _fail(constants.EXIT_INVALID_CONFIG, e.key, e)
    except cfg.Error as e:
        return _fail(constants.EXIT_INVALID_CONFIG, None, e)
    config.setup_logging()

    try:
        COMMANDS[CONF.command.name]()
    except exceptions.InvalidConfig as e:
        return _fail(constants.EXIT_INVALID_CONFIG, e.key, e)
    except (exceptions.DL4NDException, OSError) as e:
        LOG.error("Command %s failed: %s", CONF.command.name, e)
        return _fail(constants.EXIT_RUNTIME_ERROR, None, e)
    return constants.EXIT_OK
