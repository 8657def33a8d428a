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

from dl4nd._i18n import _


class DL4NDException(Exception):
    """Base dl4nd Exception.

    To correctly use this class, inherit from it and define
    a 'message' property. That message will get printf'd
    with the keyword arguments provided to the constructor.
    """

    message = _("An unknown exception occurred.")

    def __init__(self, **kwargs):
        self.kwargs = kwargs
        self.msg = self.message % kwargs
        super().__init__(self.msg)

    def __str__(self):
        return self.msg


class InvalidSpec(DL4NDException):
    """A generation, noise or model spec violates its constraints.

    :param reason: What is wrong with the spec
    """

    message = _("Invalid spec: %(reason)s")


class InvalidConfig(DL4NDException):
    """A configuration key failed validation.

    :param key: The offending key, in group.name form
    :param reason: Why the value was rejected
    """

    message = _("Invalid configuration for %(key)s: %(reason)s")

    @property
    def key(self):
        return self.kwargs.get('key')


class DegenerateInput(DL4NDException):
    message = _("Degenerate input: %(reason)s")


class EmptyGroup(DL4NDException):
    message = _("Cannot average an empty group of vectors.")


class EmptyProxyTable(DL4NDException):
    message = _("No low-loss samples available to build proxies.")


class DegenerateFit(DL4NDException):
    """The two loss components cannot be told apart.

    Callers treat every sample as low-loss when they see this.

    :param reason: Why the fit is degenerate
    """

    message = _("Degenerate loss mixture fit (%(reason)s); treat all "
                "samples as low-loss.")


class EmNotMonotonic(DL4NDException):
    message = _("EM log-likelihood decreased at iteration %(iteration)d: "
                "%(previous).12g -> %(current).12g")


class NumericOverflow(DL4NDException):
    message = _("Non-finite value while computing sample %(sample_id)s.")


class TrainingDiverged(DL4NDException):
    message = _("Training diverged at step %(step)d (loss %(loss)s).")


class LabelOutOfRange(DL4NDException):
    message = _("Label %(label)s outside [0, %(num_classes)d).")


class MetricUnavailable(DL4NDException):
    message = _("Metric %(metric)s unavailable: dataset carries no true "
                "labels.")


class DatasetParseError(DL4NDException):
    """Malformed dataset file.

    :param path: The file being read
    :param line: 1-based line number of the bad record
    :param reason: The parse failure
    """

    message = _("Cannot parse dataset %(path)s at line %(line)d: "
                "%(reason)s")


class CheckpointParseError(DL4NDException):
    message = _("Cannot parse checkpoint %(path)s at line %(line)d: "
                "%(reason)s")


class EmptySwadState(DL4NDException):
    message = _("Cannot finalize weight averaging without checkpoints.")


class ProtocolError(DL4NDException):
    message = _("Evaluation protocol violated: %(reason)s")


class ReportIOError(DL4NDException):
    message = _("Failed writing or reading %(path)s: %(reason)s")
