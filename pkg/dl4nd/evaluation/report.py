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

"""Report assembly, aggregation and emission.

Structured reports are sorted-key JSON, tabular reports are CSV with the
fixed column order of ``FOLD_COLUMNS`` and the text format is rendered
from a Jinja2 template.
"""

import csv
import dataclasses
import io
import os
import typing

import jinja2
import numpy as np
from oslo_log import log as logging
from oslo_serialization import jsonutils
from oslo_utils import fileutils

from dl4nd import constants
from dl4nd import exceptions

LOG = logging.getLogger(__name__)

AGGREGATED_METRICS = ('id_accuracy', 'ood_accuracy', 'label_accuracy_before',
                      'label_accuracy_after', 'separability_rate',
                      'balance_gap')


@dataclasses.dataclass
class FoldResult:
    seed: int
    noise_ratio: float
    method: str
    held_out_domain: int
    id_accuracy: typing.Optional[float]
    ood_accuracy: typing.Optional[float]
    label_accuracy_before: typing.Optional[float] = None
    label_accuracy_after: typing.Optional[float] = None
    relabeled: int = 0
    abstained: int = 0
    low_loss: typing.Optional[int] = None
    refine_step: typing.Optional[int] = None
    gmm: typing.Optional[dict] = None
    separability_rate: typing.Optional[float] = None
    domain_balance: typing.Optional[dict] = None
    balance_gap: typing.Optional[float] = None
    dataset_checksum: str = ''
    fallback_reason: typing.Optional[str] = None

    @property
    def sort_key(self):
        return (self.method, self.noise_ratio, self.seed,
                self.held_out_domain)

    def to_dict(self):
        return dataclasses.asdict(self)


FOLD_COLUMNS = ('method', 'noise_ratio', 'seed', 'held_out_domain',
                'id_accuracy', 'ood_accuracy', 'label_accuracy_before',
                'label_accuracy_after', 'relabeled', 'abstained', 'low_loss',
                'refine_step', 'gmm_low_mean', 'gmm_high_mean',
                'separability_rate', 'balance_gap', 'dataset_checksum',
                'fallback_reason')


@dataclasses.dataclass
class Report:
    config: dict
    folds: typing.List[FoldResult]
    aggregate: typing.List[dict]
    version: int = constants.REPORT_VERSION

    def to_dict(self):
        return {'version': self.version,
                'config': self.config,
                'folds': [f.to_dict() for f in self.folds],
                'aggregate': self.aggregate}

    def rows(self):
        rows = []
        for fold in self.folds:
            row = {k: v for k, v in fold.to_dict().items()
                   if k in FOLD_COLUMNS}
            means = fold.gmm['means'] if fold.gmm else (None, None)
            row['gmm_low_mean'], row['gmm_high_mean'] = means
            rows.append(row)
        return rows


def _spread(values):
    return float(np.mean(values)), float(np.std(values))


def aggregate(folds):
    """Means and standard deviations per (method, noise ratio).

    Folds are averaged within each seed first, then the seed means are
    averaged. ``std_folds`` is the mean over seeds of the per-seed fold
    spread; ``std_seeds`` is the spread of the seed means. Metrics with no
    values are None.
    """
    groups = {}
    for fold in folds:
        groups.setdefault((fold.method, fold.noise_ratio), {}).setdefault(
            fold.seed, []).append(fold)
    entries = []
    for (method, ratio), by_seed in sorted(groups.items()):
        entry = {'method': method, 'noise_ratio': ratio,
                 'seeds': len(by_seed),
                 'folds': sum(len(f) for f in by_seed.values())}
        for metric in AGGREGATED_METRICS:
            seed_means, seed_stds = [], []
            for seed in sorted(by_seed):
                values = [getattr(f, metric) for f in by_seed[seed]
                          if getattr(f, metric) is not None]
                if values:
                    mean, std = _spread(values)
                    seed_means.append(mean)
                    seed_stds.append(std)
            if not seed_means:
                entry[metric] = None
                continue
            mean, std_seeds = _spread(seed_means)
            entry[metric] = {'mean': mean, 'std_seeds': std_seeds,
                             'std_folds': float(np.mean(seed_stds))}
        entries.append(entry)
    return entries


def build_report(config, folds):
    folds = sorted(folds, key=lambda f: f.sort_key)
    return Report(config=config, folds=folds, aggregate=aggregate(folds))


def _cell(value):
    if value is None:
        return constants.UNAVAILABLE
    if isinstance(value, float):
        return repr(float(value))
    return value


def render_structured(document):
    return jsonutils.dumps(document, sort_keys=True, indent=2) + '\n'


def render_tabular(columns, rows):
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(column)) for column in columns])
    return stream.getvalue()


_ENVIRONMENT = jinja2.Environment(
    undefined=jinja2.StrictUndefined, trim_blocks=True, lstrip_blocks=True,
    keep_trailing_newline=True)
_ENVIRONMENT.filters['metric'] = lambda value: (
    constants.UNAVAILABLE if value is None
    else '%.4f +/- %.4f (folds %.4f)' % (value['mean'], value['std_seeds'],
                                         value['std_folds']))
_ENVIRONMENT.filters['cell'] = lambda value: (
    constants.UNAVAILABLE if value is None
    else '%.4f' % value if isinstance(value, float) else value)

REPORT_TEMPLATE = _ENVIRONMENT.from_string("""\
dl4nd report, format {{ version }}
{% for entry in aggregate %}

[{{ entry.method }}] noise ratio {{ entry.noise_ratio }}, \
{{ entry.seeds }} seed(s), {{ entry.folds }} fold(s)
{% for metric in metrics %}
  {{ metric }}: {{ entry[metric] | metric }}
{% endfor %}
{% endfor %}
""")

TABLE_TEMPLATE = _ENVIRONMENT.from_string("""\
{{ title }}
{% for key, value in summary %}
  {{ key }}: {{ value | cell }}
{% endfor %}

{{ columns | join('  ') }}
{% for row in rows %}
{% for column in columns %}{{ row.get(column) | cell }}\
{% if not loop.last %}  {% endif %}{% endfor %}

{% endfor %}
""")


def write_text(path, text):
    directory = os.path.dirname(path)
    try:
        if directory:
            fileutils.ensure_tree(directory)
    except OSError as e:
        LOG.error("Unable to create %s: %s", directory, e)
        raise exceptions.ReportIOError(path=path, reason=e)
    try:
        with open(path, 'w', newline='') as stream:
            stream.write(text)
    except OSError as e:
        LOG.error("Unable to write %s: %s", path, e)
        fileutils.delete_if_exists(path)
        raise exceptions.ReportIOError(path=path, reason=e)
    LOG.info("Wrote %s", path)
    return path


def emit_report(report, path, fmt=constants.FORMAT_STRUCTURED):
    if fmt == constants.FORMAT_STRUCTURED:
        text = render_structured(report.to_dict())
    elif fmt == constants.FORMAT_TABULAR:
        text = render_tabular(FOLD_COLUMNS, report.rows())
    else:
        text = REPORT_TEMPLATE.render(version=report.version,
                                      aggregate=report.aggregate,
                                      metrics=AGGREGATED_METRICS)
    return write_text(path, text)


def emit_table(document, columns, rows, path, fmt, title='',
               summary=None):
    """Emit a document with a row table (relabel records, distances).

    The structured format writes ``document`` as is; the tabular format
    writes only the rows; the text format writes the summary pairs and
    the rows.
    """
    if fmt == constants.FORMAT_STRUCTURED:
        text = render_structured(document)
    elif fmt == constants.FORMAT_TABULAR:
        text = render_tabular(columns, rows)
    else:
        text = TABLE_TEMPLATE.render(title=title, columns=columns,
                                     rows=rows,
                                     summary=sorted((summary or {}).items()))
    return write_text(path, text)


def load_report(path):
    """Parse a structured report written by ``emit_report``."""
    try:
        with open(path) as stream:
            document = jsonutils.loads(stream.read())
    except (OSError, ValueError) as e:
        raise exceptions.ReportIOError(path=path, reason=e)
    if document.get('version') != constants.REPORT_VERSION:
        raise exceptions.ReportIOError(
            path=path, reason="unsupported report version %r" %
            document.get('version'))
    try:
        folds = [FoldResult(**entry) for entry in document['folds']]
        return Report(config=document['config'], folds=folds,
                      aggregate=document['aggregate'],
                      version=document['version'])
    except (KeyError, TypeError) as e:
        raise exceptions.ReportIOError(path=path, reason=e)
