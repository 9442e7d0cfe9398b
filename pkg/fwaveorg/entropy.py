"""
Band-limited spectral measures: flatness (F), Shannon entropy (S), Renyi
entropy (R) and C0 complexity.

Every measure works on the PSD bins of one band, needs at least two bins
and some positive power, and lies in [0, 1].
"""

import functools
import logging

import numpy as np
from scipy import special, stats

from fwaveorg.utils import (AllZeroBand, BadAlpha, EmptyBand,
                            log_and_raise_exception)

LOG = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.1
# relative floor applied to zero bins before the geometric mean
FLATNESS_FLOOR = 1e-15


def _band_power(spec, band):
    values = spec.band_values(band)
    if values.size < 2:
        log_and_raise_exception(
            f"Band [{band.f_lower}, {band.f_upper}] Hz holds {values.size} "
            "bin(s); at least 2 are needed", EmptyBand)
    if not values.sum() > 0:
        log_and_raise_exception(
            f"Band [{band.f_lower}, {band.f_upper}] Hz holds no power",
            AllZeroBand)
    return values


def _probabilities(spec, band):
    values = _band_power(spec, band)
    return values / values.sum()


def spectral_flatness(spec, band):
    """Geometric over arithmetic mean of the band's PSD bins."""
    values = _band_power(spec, band)
    floored = np.maximum(values, FLATNESS_FLOOR * values.max())
    flatness = stats.gmean(floored) / values.mean()
    return float(np.clip(flatness, 0.0, 1.0))


def spectral_entropy(spec, band):
    """Shannon entropy of the unit-area band PSD over ``ln N``."""
    p = _probabilities(spec, band)
    entropy = special.entr(p).sum() / np.log(p.size)
    return float(np.clip(entropy, 0.0, 1.0))


def renyi_entropy(spec, band, alpha=DEFAULT_ALPHA):
    """
    Renyi entropy of order ``alpha`` of the unit-area band PSD over
    ``ln N``. Only bins with positive power enter the sum.
    """
    if alpha < 0 or alpha == 1:
        log_and_raise_exception(
            f"Renyi order {alpha} must be non-negative and different from 1",
            BadAlpha)
    p = _probabilities(spec, band)
    positive = p[p > 0]
    entropy = (np.log(np.sum(positive ** alpha))
               / ((1.0 - alpha) * np.log(p.size)))
    return float(np.clip(entropy, 0.0, 1.0))


def c0_complexity(spec, band):
    """
    Share of band power held by bins at or below twice the mean bin
    power.
    """
    p = _probabilities(spec, band)
    threshold = 2.0 * p.sum() / p.size
    kept = p[p <= threshold].sum()
    return float(np.clip(kept / p.sum(), 0.0, 1.0))


def band_measures(alpha=DEFAULT_ALPHA):
    """Measure functions keyed by their column prefix, in table order."""
    return {
        'F': spectral_flatness,
        'S': spectral_entropy,
        'R': functools.partial(renyi_entropy, alpha=alpha),
        'C0': c0_complexity,
    }


def renyi_alpha_sweep(spec, band, alphas=None):
    """
    Renyi entropy over a grid of orders.

    :param alphas: Orders to evaluate; defaults to 0.1 to 2.0 in steps of
        0.1 without 1.0.
    :returns: Dictionary ``{alpha: R}``.
    """
    if alphas is None:
        alphas = [round(0.1 * step, 1) for step in range(1, 21) if step != 10]
    return {alpha: renyi_entropy(spec, band, alpha) for alpha in alphas}
