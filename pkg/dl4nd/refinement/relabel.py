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
import typing

import numpy as np
from oslo_log import log as logging

from dl4nd import constants
from dl4nd.refinement import diagnostics
from dl4nd.refinement import proxies as proxy_lib

LOG = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class RelabelRecord:
    id: int
    old_label: int
    new_label: int
    # Per-class cross-domain distance; None where the class is unavailable.
    class_distances: typing.Tuple[typing.Optional[float], ...]
    domains_used: typing.Tuple[int, ...]
    decision: str

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class RelabelOutcome:
    records: typing.Tuple[RelabelRecord, ...]
    assignment: np.ndarray
    summary: dict

    def count(self, decision):
        return sum(1 for r in self.records if r.decision == decision)

    @property
    def relabeled_ids(self):
        return [r.id for r in self.records
                if r.decision == constants.DECISION_RELABELED]

    def apply(self, dataset):
        return dataset.with_noisy_labels(
            self.assignment, relabeled=len(self.relabeled_ids))

    def to_dict(self):
        return {'summary': self.summary,
                'records': [r.to_dict() for r in self.records]}


def _decide(old_label, distances):
    available = ~np.isnan(distances)
    if not available.any():
        return old_label, constants.DECISION_ABSTAINED
    # nanargmin returns the first minimum: ties go to the lowest class.
    new_label = int(np.nanargmin(distances))
    if new_label == old_label:
        return old_label, constants.DECISION_KEPT
    return new_label, constants.DECISION_RELABELED


def _summary(dataset, split, assignment, decisions):
    relabeled = decisions == constants.DECISION_RELABELED
    summary = {
        'samples': len(dataset),
        'low_loss': int(split.low_mask.sum()),
        'high_loss': int((~split.low_mask).sum()),
        'relabeled': int(relabeled.sum()),
        'abstained': int((decisions == constants.DECISION_ABSTAINED).sum()),
        'label_accuracy_before': None,
        'label_accuracy_after': None,
    }
    if not dataset.has_true_labels:
        return summary
    noisy = dataset.noisy_labels != dataset.true_labels
    high = ~split.low_mask
    corrected = relabeled & noisy & (assignment == dataset.true_labels)
    summary.update({
        'label_accuracy_before': diagnostics.label_accuracy(
            dataset.noisy_labels, dataset),
        'label_accuracy_after': diagnostics.label_accuracy(
            assignment, dataset),
        'noisy_before': int(noisy.sum()),
        'corrected': int(corrected.sum()),
        'clean_changed': int((relabeled & ~noisy).sum()),
        'detection_precision': (float((high & noisy).sum() / high.sum())
                                if high.any() else None),
        'detection_recall': (float((high & noisy).sum() / noisy.sum())
                             if noisy.any() else None),
    })
    return summary


def relabel(features, dataset, split, proxies):
    """Assign each high-loss sample the class nearest across domains.

    Low-loss samples keep their label. A high-loss sample with no
    cross-domain evidence for any class keeps its label and is flagged as
    abstained. The input dataset is not modified.
    """
    distances, used = proxy_lib.class_distance_matrix(
        features, dataset.domains, proxies)
    assignment = np.array(dataset.noisy_labels)
    decisions = np.full(len(dataset), constants.DECISION_KEPT, dtype=object)
    records = []
    for row in range(len(dataset)):
        old_label = int(dataset.noisy_labels[row])
        if not split.low_mask[row]:
            assignment[row], decisions[row] = _decide(old_label,
                                                      distances[row])
        records.append(RelabelRecord(
            id=int(dataset.ids[row]), old_label=old_label,
            new_label=int(assignment[row]),
            class_distances=tuple(None if np.isnan(d) else float(d)
                                  for d in distances[row]),
            domains_used=tuple(int(u) for u in used[row]),
            decision=str(decisions[row])))
    assignment.flags.writeable = False
    summary = _summary(dataset, split, assignment, decisions)
    LOG.info("Relabel: %(relabeled)d relabeled, %(abstained)d abstained out "
             "of %(high_loss)d high-loss samples", summary)
    return RelabelOutcome(records=tuple(records), assignment=assignment,
                          summary=summary)
