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

import argparse
import glob
import os

from oslo_config import cfg
from oslo_config import types
from oslo_log import log as logging

from dl4nd import constants
from dl4nd.data import dataset as dataset_lib
from dl4nd.evaluation import harness
from dl4nd import exceptions
from dl4nd.training import trainer
from dl4nd.utils import helpers
from dl4nd.utils import numerics

LOG = logging.getLogger(__name__)

common_opts = [
    cfg.IntOpt('seed',
               default=0,
               min=0,
               help='Master seed. Group seeds left unset are derived from '
                    'it.'),
    cfg.StrOpt('out',
               default='.',
               help='Directory that receives every emitted file.'),
    cfg.StrOpt('format',
               default=constants.FORMAT_STRUCTURED,
               choices=[constants.FORMAT_STRUCTURED, constants.FORMAT_TABULAR,
                        constants.FORMAT_TEXT],
               help='Report format: structured (JSON), tabular (CSV) or '
                    'text.'),
]

data_opts = [
    cfg.IntOpt('num_classes', default=10, min=2,
               help='Number of classes.'),
    cfg.IntOpt('num_domains', default=4, min=1,
               help='Number of domains.'),
    cfg.IntOpt('samples_per_cell', default=30, min=1,
               help='Samples generated per (class, domain) cell.'),
    cfg.IntOpt('feature_dim', default=16, min=2,
               help='Dimension of the generated input features.'),
    cfg.FloatOpt('class_separation', default=3.0, min=0,
                 help='Norm of the class prototypes.'),
    cfg.ListOpt('rotation_angles', default=[],
                item_type=types.Float(),
                help='Rotation of each domain in degrees, one per domain. '
                     'Empty means multiples of rotation_step.'),
    cfg.FloatOpt('rotation_step', default=15.0,
                 help='Angle between consecutive domains when '
                      'rotation_angles is empty.'),
    cfg.FloatOpt('translation', default=0.2, min=0,
                 help='Norm of the per-domain offset.'),
    cfg.FloatOpt('cluster_noise_sigma', default=0.15, min=0,
                 help='Standard deviation of the per-sample jitter.'),
    cfg.IntOpt('seed', min=0,
               help='Generation seed; derived from the master seed when '
                    'unset.'),
    cfg.StrOpt('dataset_path',
               help='Read the dataset from this file instead of generating '
                    'it.'),
]

noise_opts = [
    cfg.StrOpt('preset',
               default='rotated_mnist',
               choices=sorted(constants.NOISE_PRESETS),
               help='Named table of asymmetric flip pairs.'),
    cfg.ListOpt('pairs', default=[],
                help='Explicit source:target flip pairs, e.g. 4:9,9:4. '
                     'Overrides the preset when set.'),
    cfg.FloatOpt('ratio', default=0.3, min=0,
                 help='Flip probability of each eligible sample, in [0, 1).'),
    cfg.StrOpt('mode', default=constants.NOISE_MODE_BERNOULLI,
               choices=[constants.NOISE_MODE_BERNOULLI,
                        constants.NOISE_MODE_EXACT],
               help='bernoulli flips each sample independently; exact flips '
                    'floor(ratio * n) samples per source class.'),
    cfg.IntOpt('seed', min=0,
               help='Noise seed; derived from the master seed when unset.'),
]

train_opts = [
    cfg.IntOpt('total_steps', default=2000, min=0,
               help='SGD steps per run.'),
    cfg.IntOpt('batch_size', default=128, min=1,
               help='Minibatch size; batches mix all training domains.'),
    cfg.FloatOpt('learning_rate', default=0.05,
                 help='Fixed SGD learning rate.'),
    cfg.IntOpt('refine_step', min=1,
               help='Step after which labels are refined. Defaults to 20% '
                    'of total_steps.'),
    cfg.StrOpt('method', default=constants.METHOD_ERM,
               choices=[constants.METHOD_ERM, constants.METHOD_ERM_ELR],
               help='Training objective.'),
    cfg.BoolOpt('refine', default=True,
                help='Run label refinement in the train command.'),
    cfg.FloatOpt('elr_beta', default=0.7,
                 help='Temporal ensembling momentum, in [0, 1).'),
    cfg.FloatOpt('elr_lambda', default=3.0,
                 help='Weight of the early-learning regularizer.'),
    cfg.BoolOpt('swad_enabled', default=False,
                help='Average the weights over the SWAD window.'),
    cfg.IntOpt('swad_start',
               help='First step of the averaging window. Defaults to the '
                    'start of the final 25% of post-refinement steps.'),
    cfg.IntOpt('swad_end',
               help='Last step of the averaging window.'),
    cfg.ListOpt('hidden_dims', default=[32], item_type=types.Integer(),
                help='Widths of the hidden layers before the embedding.'),
    cfg.IntOpt('embedding_dim', default=16, min=1,
               help='Width of the embedding layer.'),
    cfg.IntOpt('gmm_max_iters', default=constants.GMM_MAX_ITERS, min=1,
               help='EM iteration cap for the loss mixture.'),
    cfg.FloatOpt('gmm_tol', default=constants.GMM_TOL, min=0,
                 help='EM stops once the log-likelihood gain drops below '
                      'this.'),
    cfg.FloatOpt('gmm_threshold', default=constants.GMM_THRESHOLD,
                 help='Posterior of the low-loss component at or above which '
                      'a sample counts as low-loss.'),
    cfg.FloatOpt('gmm_min_separation',
                 default=constants.GMM_MIN_SEPARATION, min=0,
                 help='Least gap between the loss mixture means, in pooled '
                      'standard deviations, for the split to count. Closer '
                      'means skip refinement.'),
    cfg.IntOpt('refine_passes', default=1, min=1,
               help='Number of split/relabel passes at the refine step.'),
    cfg.StrOpt('refine_trigger', default=constants.REFINE_TRIGGER_FIXED,
               choices=[constants.REFINE_TRIGGER_FIXED,
                        constants.REFINE_TRIGGER_GMM_GAP],
               help='fixed refines at refine_step; gmm_gap refines once the '
                    'gap between the loss mixture means stops growing, at '
                    'refine_step at the latest.'),
    cfg.IntOpt('refine_check_interval', default=50, min=1,
               help='Steps between loss mixture checks for gmm_gap.'),
    cfg.BoolOpt('normalize_features', default=False,
                help='L2-normalize embeddings before building proxies.'),
    cfg.StrOpt('checkpoint',
               help='Model checkpoint read by refine and distances.'),
    cfg.IntOpt('seed', min=0,
               help='Training seed; derived from the master seed when '
                    'unset.'),
]

eval_opts = [
    cfg.ListOpt('held_out_domains', default=[], item_type=types.Integer(),
                help='Domains to hold out. Empty means every domain once.'),
    cfg.ListOpt('seeds', default=[], item_type=types.Integer(),
                help='Repetition seeds. Empty means repetitions consecutive '
                     'seeds starting at the master seed.'),
    cfg.IntOpt('repetitions', default=5, min=1,
               help='Number of seeds when seeds is empty.'),
    cfg.FloatOpt('id_test_fraction', default=0.2,
                 help='Share of each training domain held out as the '
                      'in-domain test set.'),
    cfg.ListOpt('ratios', default=[0.0, 0.2, 0.4], item_type=types.Float(),
                help='Noise ratios of the sweep command.'),
    cfg.ListOpt('methods', default=['erm', 'erm+dl4nd'],
                help='Methods compared: erm, erm+dl4nd, erm+elr, '
                     'erm+elr+dl4nd.'),
    cfg.IntOpt('workers', default=1, min=1,
               help='Fold jobs run concurrently.'),
    cfg.ListOpt('distance_pairs', default=['4:9'],
                help='Class pairs a:b reported by the distances command.'),
    cfg.StrOpt('distance_mean_source', default=constants.MEAN_SOURCE_ALL,
               choices=[constants.MEAN_SOURCE_ALL,
                        constants.MEAN_SOURCE_LOW_LOSS],
               help='Group means from all samples or from low-loss samples '
                    'only.'),
]

GROUPS = ('data', 'noise', 'train', 'eval')
COMMAND_HELP = {
    'gen': 'Generate a noisy multi-domain dataset.',
    'train': 'Train, refining the labels unless train.refine is off.',
    'refine': 'Relabel a dataset with a trained checkpoint.',
    'eval': 'Leave-one-domain-out evaluation.',
    'sweep': 'Leave-one-domain-out evaluation over eval.ratios.',
    'distances': 'Cross-class and cross-domain distance statistics.',
}

CONF = cfg.CONF

logging.register_options(CONF)


def add_command_parsers(subparsers):
    for name in constants.COMMANDS:
        subparsers.add_parser(name, help=COMMAND_HELP[name])


command_opt = cfg.SubCommandOpt('command',
                                title='Commands',
                                handler=add_command_parsers,
                                help='Available commands')


def register_opts():
    CONF.register_cli_opts(common_opts)
    CONF.register_cli_opts(data_opts, 'data')
    CONF.register_cli_opts(noise_opts, 'noise')
    CONF.register_cli_opts(train_opts, 'train')
    CONF.register_cli_opts(eval_opts, 'eval')
    CONF.register_cli_opt(command_opt)


def init(args, **kwargs):
    # Only files given with --config-file or --config-dir are read.
    kwargs.setdefault('default_config_files', [])
    kwargs.setdefault('default_config_dirs', [])
    check_file_values(list(kwargs['default_config_files']) +
                      config_paths(args))
    CONF(args=args, project='dl4nd', **kwargs)


def setup_logging():
    logging.setup(CONF, 'dl4nd')
    LOG.debug("Logging enabled")


def list_opts():
    return [
        ("DEFAULT", common_opts),
        ("data", data_opts),
        ("noise", noise_opts),
        ("train", train_opts),
        ("eval", eval_opts),
    ]


def _key(group, name):
    return name if group == 'DEFAULT' else '%s.%s' % (group, name)


def _parse_file(path):
    sections = {}
    try:
        cfg.ConfigParser(path, sections).parse()
    except (OSError, cfg.ParseError) as e:
        raise exceptions.InvalidConfig(key='config_file', reason=e)
    return sections


def config_paths(args):
    """Config files named by --config-file and --config-dir in ``args``."""
    parser = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    parser.add_argument('--config-file', action='append', default=[])
    parser.add_argument('--config-dir', action='append', default=[])
    known, _rest = parser.parse_known_args(args)
    paths = list(known.config_file)
    for directory in known.config_dir:
        paths.extend(sorted(glob.glob(os.path.join(directory, '*.conf'))))
    return paths


def check_file_values(paths):
    """Type-check file values of the dl4nd options.

    oslo.config exits the process on a bad file value of a command-line
    option, so this runs before it parses anything.

    :raises: InvalidConfig naming the offending key
    """
    for path in paths:
        sections = _parse_file(path)
        for group, opts in list_opts():
            values = sections.get(group, {})
            for opt in opts:
                if opt.dest not in values:
                    continue
                try:
                    opt.type(values[opt.dest][-1])
                except (ValueError, TypeError) as e:
                    raise exceptions.InvalidConfig(key=_key(group, opt.dest),
                                                   reason=e)


def reject_unknown_keys(conf=CONF):
    """Fail on sections or keys of the config files that match no option."""
    allowed = {'DEFAULT': set(conf) - set(GROUPS)}
    for group in GROUPS:
        allowed[group] = set(conf[group])
    for path in conf.config_file or []:
        for section, values in _parse_file(path).items():
            if section not in allowed:
                raise exceptions.InvalidConfig(
                    key=section, reason="unknown section in %s" % path)
            for key in values:
                if key not in allowed[section]:
                    raise exceptions.InvalidConfig(
                        key=_key(section, key),
                        reason="unknown key in %s" % path)


def resolved_seeds(conf=CONF):
    """Group seeds, each derived from the master seed when unset."""
    derived = numerics.child_seeds(conf.seed, 3)
    seeds = {'seed': conf.seed}
    for index, group in enumerate(('data', 'noise', 'train')):
        value = conf[group].seed
        seeds['%s.seed' % group] = (derived[index] if value is None
                                    else value)
    return seeds


def noise_pairs(conf=CONF):
    try:
        return helpers.resolve_noise_pairs(conf.noise.preset,
                                           conf.noise.pairs)
    except ValueError as e:
        raise exceptions.InvalidConfig(key='noise.pairs',
                                       reason="malformed pair %s" % e)


def distance_pairs(conf=CONF):
    try:
        return helpers.parse_class_pairs(conf.eval.distance_pairs)
    except ValueError as e:
        raise exceptions.InvalidConfig(key='eval.distance_pairs',
                                       reason="malformed pair %s" % e)


def domain_spec(conf=CONF):
    angles = (conf.data.rotation_angles or
              dataset_lib.DomainSpec.default_angles(conf.data.num_domains,
                                                    conf.data.rotation_step))
    return dataset_lib.DomainSpec(
        num_classes=conf.data.num_classes,
        num_domains=conf.data.num_domains,
        samples_per_cell=conf.data.samples_per_cell,
        feature_dim=conf.data.feature_dim,
        class_separation=conf.data.class_separation,
        rotation_angles=tuple(angles),
        translation=conf.data.translation,
        cluster_noise_sigma=conf.data.cluster_noise_sigma,
        seed=resolved_seeds(conf)['data.seed'])


def noise_spec(conf=CONF, ratio=None):
    return dataset_lib.NoiseSpec(
        pairs=tuple(noise_pairs(conf)),
        ratio=conf.noise.ratio if ratio is None else ratio,
        seed=resolved_seeds(conf)['noise.seed'],
        mode=conf.noise.mode)


def train_config(conf=CONF):
    train = conf.train
    return trainer.TrainConfig(
        total_steps=train.total_steps,
        batch_size=train.batch_size,
        learning_rate=train.learning_rate,
        refine_step=train.refine_step,
        method=train.method,
        elr_beta=train.elr_beta,
        elr_lambda=train.elr_lambda,
        swad_enabled=train.swad_enabled,
        swad_start=train.swad_start,
        swad_end=train.swad_end,
        hidden_dims=tuple(train.hidden_dims),
        embedding_dim=train.embedding_dim,
        gmm_max_iters=train.gmm_max_iters,
        gmm_tol=train.gmm_tol,
        gmm_threshold=train.gmm_threshold,
        gmm_min_separation=train.gmm_min_separation,
        refine_passes=train.refine_passes,
        refine_trigger=train.refine_trigger,
        refine_check_interval=train.refine_check_interval,
        normalize_proxies=train.normalize_features,
        seed=resolved_seeds(conf)['train.seed'])


def eval_seeds(conf=CONF):
    if conf.eval.seeds:
        return tuple(conf.eval.seeds)
    return tuple(conf.seed + i for i in range(conf.eval.repetitions))


def experiment_spec(conf=CONF, ratios=None):
    """The evaluation spec; ``ratios`` defaults to ``noise.ratio`` alone."""
    if ratios is None:
        ratios = [conf.noise.ratio]
    return harness.ExperimentSpec(
        domain_spec=domain_spec(conf),
        noise_pairs=tuple(noise_pairs(conf)),
        noise_mode=conf.noise.mode,
        noise_ratios=tuple(ratios),
        train_config=train_config(conf),
        methods=tuple(conf.eval.methods),
        held_out_domains=tuple(conf.eval.held_out_domains),
        seeds=eval_seeds(conf),
        id_test_fraction=conf.eval.id_test_fraction,
        workers=conf.eval.workers)


def validate(conf=CONF):
    """Check every key before any work starts.

    :raises: InvalidConfig naming the offending key
    """
    reject_unknown_keys(conf)
    data = conf.data
    if data.rotation_angles and (len(data.rotation_angles) !=
                                 data.num_domains):
        raise exceptions.InvalidConfig(
            key='data.rotation_angles',
            reason="expected %d angles, got %d" % (
                data.num_domains, len(data.rotation_angles)))
    try:
        domain_spec(conf).validate()
    except exceptions.InvalidSpec as e:
        raise exceptions.InvalidConfig(key='data', reason=e)
    if not 0.0 <= conf.noise.ratio < 1.0:
        raise exceptions.InvalidConfig(key='noise.ratio',
                                       reason="must be in [0, 1)")
    try:
        noise_spec(conf).validate(data.num_classes)
    except exceptions.InvalidSpec as e:
        raise exceptions.InvalidConfig(key='noise.pairs', reason=e)
    for class_a, class_b in distance_pairs(conf):
        if not (0 <= class_a < data.num_classes and
                0 <= class_b < data.num_classes):
            raise exceptions.InvalidConfig(
                key='eval.distance_pairs',
                reason="pair %d:%d is outside [0, %d)" % (
                    class_a, class_b, data.num_classes))
    train_config(conf).validate(pipeline=conf.train.refine)
    for domain in conf.eval.held_out_domains:
        if not 0 <= domain < data.num_domains:
            raise exceptions.InvalidConfig(
                key='eval.held_out_domains',
                reason="domain %d is not in [0, %d)" % (domain,
                                                        data.num_domains))
    for method in conf.eval.methods:
        objective, _refine = helpers.parse_method(method)
        if objective not in (constants.METHOD_ERM, constants.METHOD_ERM_ELR):
            raise exceptions.InvalidConfig(key='eval.methods',
                                           reason="unknown method %r" %
                                           method)
    for ratio in conf.eval.ratios:
        if not 0.0 <= ratio < 0.5:
            raise exceptions.InvalidConfig(key='eval.ratios',
                                           reason="ratio %s is not in "
                                                  "[0, 0.5)" % ratio)
    if not 0.0 < conf.eval.id_test_fraction < 1.0:
        raise exceptions.InvalidConfig(key='eval.id_test_fraction',
                                       reason="must be in (0, 1)")


def resolved_config(conf=CONF):
    """Every option value with the seeds filled in, for report echoes."""
    resolved = {'command': conf.command.name}
    seeds = resolved_seeds(conf)
    for group, opts in list_opts():
        section = conf if group == 'DEFAULT' else conf[group]
        values = {opt.dest: section[opt.dest] for opt in opts}
        if 'seed' in values and group != 'DEFAULT':
            values['seed'] = seeds['%s.seed' % group]
        resolved[group] = values
    # The output directory does not influence any result.
    del resolved['DEFAULT']['out']
    return resolved
