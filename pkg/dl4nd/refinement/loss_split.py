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

"""Two-component 1-D Gaussian mixture over per-sample losses.

Component 0 always carries the smaller mean and stands for the low-loss
(presumed clean) samples.
"""

import dataclasses
import typing

import numpy as np
from oslo_log import log as logging
from scipy import special
from scipy import stats

from dl4nd import constants
from dl4nd import exceptions

LOG = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class GmmParams:
    means: typing.Tuple[float, float]
    variances: typing.Tuple[float, float]
    weights: typing.Tuple[float, float]
    log_likelihood: float = float('-inf')
    iterations_used: int = 0
    history: typing.Tuple[float, ...] = ()

    @property
    def gap(self):
        return self.means[1] - self.means[0]

    @property
    def separation(self):
        """Gap between the means in pooled standard deviations."""
        return abs(self.gap) / np.sqrt(sum(self.variances) / 2.0)

    def to_dict(self):
        return {'means': list(self.means),
                'variances': list(self.variances),
                'weights': list(self.weights),
                'log_likelihood': self.log_likelihood,
                'iterations_used': self.iterations_used}


@dataclasses.dataclass(frozen=True)
class LossSplit:
    ids: np.ndarray
    low_mask: np.ndarray
    posterior: np.ndarray
    # Classes split on their own losses by cover_classes.
    refitted_classes: typing.Tuple[int, ...] = ()

    @property
    def low_ids(self):
        return frozenset(int(i) for i in self.ids[self.low_mask])

    @property
    def high_ids(self):
        return frozenset(int(i) for i in self.ids[~self.low_mask])


def _as_losses(losses):
    losses = np.asarray(losses, dtype=np.float64).ravel()
    if losses.size < 4:
        raise exceptions.DegenerateFit(reason="need at least 4 losses, got "
                                              "%d" % losses.size)
    if not np.all(np.isfinite(losses)) or np.any(losses < 0):
        raise exceptions.DegenerateInput(
            reason="losses must be finite and non-negative")
    return losses


def initial_params(losses):
    """Means at the 10th/90th percentiles, equal weights, shared variance."""
    losses = _as_losses(losses)
    low, high = np.percentile(losses, constants.GMM_INIT_PERCENTILES)
    if np.ptp(losses) == 0.0 or high <= low:
        raise exceptions.DegenerateFit(reason="all losses identical")
    variance = max(float(np.var(losses)), constants.GMM_VARIANCE_FLOOR)
    return GmmParams(means=(float(low), float(high)),
                     variances=(variance, variance), weights=(0.5, 0.5))


def _weighted_log_densities(losses, gmm):
    columns = [np.log(max(weight, np.finfo(float).tiny)) +
               stats.norm.logpdf(losses, loc=mean, scale=np.sqrt(var))
               for mean, var, weight in zip(gmm.means, gmm.variances,
                                            gmm.weights)]
    return np.stack(columns, axis=1)


def log_likelihood(losses, gmm):
    return float(special.logsumexp(
        _weighted_log_densities(np.asarray(losses, dtype=np.float64), gmm),
        axis=1).sum())


def e_step(losses, gmm):
    """Responsibilities, shape (n, 2), rows summing to one."""
    log_joint = _weighted_log_densities(np.asarray(losses, dtype=np.float64),
                                        gmm)
    return np.exp(log_joint - special.logsumexp(log_joint, axis=1,
                                                keepdims=True))


def m_step(losses, responsibilities):
    totals = responsibilities.sum(axis=0)
    if np.any(totals <= 0):
        raise exceptions.DegenerateFit(reason="a component lost all mass")
    means = (responsibilities * losses[:, np.newaxis]).sum(axis=0) / totals
    spread = (losses[:, np.newaxis] - means) ** 2
    variances = np.maximum((responsibilities * spread).sum(axis=0) / totals,
                           constants.GMM_VARIANCE_FLOOR)
    weights = totals / totals.sum()
    return GmmParams(means=tuple(float(m) for m in means),
                     variances=tuple(float(v) for v in variances),
                     weights=tuple(float(w) for w in weights))


def _ordered(gmm, **extra):
    order = (0, 1) if gmm.means[0] <= gmm.means[1] else (1, 0)
    return GmmParams(means=tuple(gmm.means[i] for i in order),
                     variances=tuple(gmm.variances[i] for i in order),
                     weights=tuple(gmm.weights[i] for i in order),
                     **extra)


def fit_gmm(losses, max_iters=constants.GMM_MAX_ITERS,
            tol=constants.GMM_TOL,
            min_separation=constants.GMM_MIN_SEPARATION):
    """Fit the mixture with EM.

    Losses are sorted first so the result does not depend on sample order.
    The log-likelihood must not decrease between iterations.

    :raises: DegenerateFit when the fitted means lie less than
             ``min_separation`` pooled standard deviations apart; callers
             then treat every sample as low-loss.
    """
    losses = np.sort(_as_losses(losses))
    gmm = initial_params(losses)
    previous = log_likelihood(losses, gmm)
    history = [previous]
    iterations = 0
    for iterations in range(1, max_iters + 1):
        gmm = m_step(losses, e_step(losses, gmm))
        current = log_likelihood(losses, gmm)
        if current < previous - constants.GMM_LL_SLACK * max(
                1.0, abs(previous)):
            raise exceptions.EmNotMonotonic(iteration=iterations,
                                            previous=previous,
                                            current=current)
        history.append(current)
        converged = abs(current - previous) < tol
        previous = current
        if converged:
            break
    if (abs(gmm.gap) < constants.GMM_VARIANCE_FLOOR or
            gmm.separation < min_separation):
        raise exceptions.DegenerateFit(
            reason="component means %.4g apart, %.3g standard deviations" %
            (abs(gmm.gap), gmm.separation))
    result = _ordered(gmm, log_likelihood=previous,
                      iterations_used=iterations, history=tuple(history))
    LOG.debug("Loss mixture fitted in %d iterations: means %s weights %s",
              iterations, result.means, result.weights)
    return result


def posterior(losses, gmm):
    """Probability that each loss belongs to the low-loss component."""
    return e_step(losses, gmm)[:, 0]


def split(ids, losses, gmm, threshold=constants.GMM_THRESHOLD):
    """Low-loss iff the low component's posterior is >= ``threshold``."""
    low_posterior = posterior(losses, gmm)
    return LossSplit(ids=np.asarray(ids), low_mask=low_posterior >= threshold,
                     posterior=low_posterior)


def cover_classes(base_split, losses, labels,
                  max_iters=constants.GMM_MAX_ITERS, tol=constants.GMM_TOL,
                  threshold=constants.GMM_THRESHOLD,
                  min_separation=constants.GMM_MIN_SEPARATION,
                  min_share=constants.GMM_MIN_CLASS_SHARE):
    """Split again inside every class the global split leaves bare.

    A class whose low-loss share is below ``min_share`` is split on its
    own losses. When that fit is degenerate all of its members count as
    low-loss.
    """
    losses = np.asarray(losses, dtype=np.float64)
    labels = np.asarray(labels)
    low_mask = base_split.low_mask.copy()
    low_posterior = np.array(base_split.posterior, dtype=np.float64)
    refitted = []
    for label in np.unique(labels):
        rows = np.flatnonzero(labels == label)
        if np.mean(low_mask[rows]) >= min_share:
            continue
        refitted.append(int(label))
        try:
            gmm = fit_gmm(losses[rows], max_iters, tol, min_separation)
        except exceptions.DegenerateFit as e:
            LOG.info("Class %(label)d keeps all %(count)d samples: %(error)s",
                     {'label': label, 'count': len(rows), 'error': e})
            low_mask[rows] = True
            low_posterior[rows] = 1.0
            continue
        class_posterior = posterior(losses[rows], gmm)
        low_mask[rows] = class_posterior >= threshold
        low_posterior[rows] = class_posterior
    if refitted:
        LOG.info("Split refitted inside classes %s", refitted)
    return LossSplit(ids=base_split.ids, low_mask=low_mask,
                     posterior=low_posterior,
                     refitted_classes=tuple(refitted))
