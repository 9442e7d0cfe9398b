"""
Module defining the two-group hypothesis tests.

Every function returns a two-sided p-value clipped to [0, 1].
"""

import itertools
import logging
import math

import numpy as np
from scipy import stats
from statsmodels.stats.diagnostic import lilliefors as _lilliefors

from fwaveorg.utils import BadParams, SampleTooSmall, log_and_raise_exception

LOG = logging.getLogger(__name__)

# combined sample size up to which Mann-Whitney enumerates every labelling
EXACT_MANN_WHITNEY_LIMIT = 10


def _clip(p_value):
    return float(min(1.0, max(0.0, p_value)))


def _sample(values, minimum, test):
    array = np.asarray(values, dtype=float).reshape(-1)
    if array.size < minimum:
        log_and_raise_exception(
            f"{test} needs at least {minimum} observations per sample, "
            f"got {array.size}", SampleTooSmall)
    return array


def lilliefors(sample):
    """
    Lilliefors test of normality with estimated mean and variance.

    A constant sample cannot be normal and gets ``p = 0``.
    """
    array = _sample(sample, 4, 'Lilliefors test')
    if np.ptp(array) == 0:
        return 0.0
    _, p_value = _lilliefors(array, dist='norm', pvalmethod='table')
    return _clip(p_value)


def levene(*groups):
    """Levene test of equal variances, centred on the group means."""
    arrays = [_sample(group, 2, 'Levene test') for group in groups]
    if len(arrays) < 2:
        log_and_raise_exception("Levene test needs two or more groups",
                                SampleTooSmall)
    result = stats.levene(*arrays, center='mean')
    if math.isnan(result.pvalue):
        # every group constant: nothing to tell the variances apart
        return 1.0
    return _clip(result.pvalue)


def t_test(a, b):
    """Student's t-test with pooled variance."""
    a = _sample(a, 2, 't-test')
    b = _sample(b, 2, 't-test')
    result = stats.ttest_ind(a, b, equal_var=True)
    if math.isnan(result.pvalue):
        return 1.0 if a.mean() == b.mean() else 0.0
    return _clip(result.pvalue)


def _u_statistic(ranks, n_first):
    return ranks[:n_first].sum() - n_first * (n_first + 1) / 2.0


def mann_whitney(a, b):
    """
    Mann-Whitney U test.

    For a combined size of at most ten, the p-value is the share of all
    relabellings whose U lies at least as far from its mean as the
    observed one (mid-ranks for ties). Larger samples use the normal
    approximation with tie and continuity correction.
    """
    a = _sample(a, 2, 'Mann-Whitney test')
    b = _sample(b, 2, 'Mann-Whitney test')
    if a.size + b.size > EXACT_MANN_WHITNEY_LIMIT:
        result = stats.mannwhitneyu(a, b, alternative='two-sided',
                                    use_continuity=True, method='asymptotic')
        return _clip(result.pvalue)

    ranks = stats.rankdata(np.concatenate([a, b]))
    centre = a.size * b.size / 2.0
    observed = abs(_u_statistic(ranks, a.size) - centre)
    extreme = total = 0
    for chosen in itertools.combinations(range(ranks.size), a.size):
        u_value = ranks[list(chosen)].sum() - a.size * (a.size + 1) / 2.0
        extreme += abs(u_value - centre) >= observed - 1e-9
        total += 1
    return _clip(extreme / total)


def fisher_exact(table):
    """Fisher exact test on a 2x2 contingency table of counts."""
    array = np.asarray(table)
    if array.shape != (2, 2) or np.any(array < 0):
        log_and_raise_exception(
            f"Fisher exact test needs a 2x2 table of non-negative counts, "
            f"got {table}", BadParams)
    result = stats.fisher_exact(array.astype(np.int64))
    return _clip(result[1])
