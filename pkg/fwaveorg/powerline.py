"""
Module defining the powerline interference filters.

Two methods are registered: ``swt`` (stationary-wavelet shrinkage, the
default) and ``notch`` (a cascade of zero-phase IIR notches).
"""

import logging

import numpy as np
import pywt

from fwaveorg.filters import notch_sos, zero_phase
from fwaveorg.interface import PowerlineFilterInterface
from fwaveorg.utils import (BadParams, RecordTooShortForFilter,
                            log_and_raise_exception)

LOG = logging.getLogger(__name__)

# median absolute deviation of unit-variance Gaussian noise
_MAD_SCALE = 0.6745


class BasePowerlineFilter(PowerlineFilterInterface):
    """
    Base class holding the mains frequency shared by every method.
    """
    method = None

    def __init__(self, mains_freq=50.0):
        self.mains_freq = float(mains_freq)

    def check_validity(self, sampling_rate):
        if not 0 < self.mains_freq < sampling_rate / 2:
            log_and_raise_exception(
                f"Mains frequency {self.mains_freq} Hz must lie below the "
                f"Nyquist frequency {sampling_rate / 2} Hz", BadParams)

    def describe(self, sampling_rate):
        return {'method': self.method, 'mains_freq': self.mains_freq}


class SwtPowerlineFilter(BasePowerlineFilter):
    """
    Stationary-wavelet shrinkage of the detail levels that carry the mains
    frequency.

    The signal is decomposed down to the level whose detail band
    ``[fs / 2**(L+1), fs / 2**L]`` contains the mains frequency. Every
    detail level from 1 to L is soft-thresholded with the universal
    threshold ``sigma * sqrt(2 ln N)``, with ``sigma`` estimated per level
    from the median absolute coefficient. Mains harmonics fall in the
    finer levels and are shrunk by the same pass.
    """
    method = 'swt'

    def __init__(self, mains_freq=50.0, wavelet='db4'):
        super().__init__(mains_freq)
        self.wavelet = pywt.Wavelet(wavelet)

    @classmethod
    def from_config(cls, cfg):
        return cls(mains_freq=cfg.mains_freq, wavelet=cfg.wavelet)

    def level(self, sampling_rate):
        """Decomposition level whose detail band holds the mains frequency."""
        return max(1, int(np.floor(np.log2(sampling_rate / self.mains_freq))))

    def describe(self, sampling_rate):
        info = super().describe(sampling_rate)
        info.update(wavelet=self.wavelet.name,
                    level=self.level(sampling_rate),
                    threshold='universal, soft')
        return info

    def apply(self, samples, sampling_rate):
        self.check_validity(sampling_rate)
        samples = np.asarray(samples, dtype=float)
        level = self.level(sampling_rate)
        block = 2 ** level
        if samples.size < 2 * block:
            log_and_raise_exception(
                f"powerline: record of {samples.size} samples is too short "
                f"for a level-{level} wavelet decomposition",
                RecordTooShortForFilter)

        margin = max(block * self.wavelet.dec_len, int(round(sampling_rate)))
        extra = -(samples.size + 2 * margin) % block
        padded = np.pad(samples, (margin, margin + extra), mode='reflect')

        coeffs = pywt.swt(padded, self.wavelet, level=level, trim_approx=True)
        for index in range(1, len(coeffs)):
            detail = coeffs[index]
            sigma = np.median(np.abs(detail)) / _MAD_SCALE
            threshold = sigma * np.sqrt(2.0 * np.log(detail.size))
            if threshold > 0:
                coeffs[index] = pywt.threshold(detail, threshold, mode='soft')
        restored = pywt.iswt(coeffs, self.wavelet)
        return restored[margin:margin + samples.size]


class NotchPowerlineFilter(BasePowerlineFilter):
    """
    Zero-phase IIR notches at the mains frequency and its harmonics.

    By default every harmonic below the low-pass cut-off is notched;
    ``harmonics`` limits the cascade to the first few.
    """
    method = 'notch'

    def __init__(self, mains_freq=50.0, quality=30.0, lowpass_cutoff=70.0,
                 harmonics=None):
        super().__init__(mains_freq)
        self.quality = float(quality)
        self.lowpass_cutoff = float(lowpass_cutoff)
        self.harmonics = harmonics

    @classmethod
    def from_config(cls, cfg):
        return cls(mains_freq=cfg.mains_freq, quality=cfg.notch_q,
                   lowpass_cutoff=cfg.lowpass_cutoff,
                   harmonics=cfg.notch_harmonics)

    def frequencies(self, sampling_rate):
        """Notch centre frequencies in Hz."""
        nyquist = sampling_rate / 2
        if self.harmonics is None:
            limit = min(self.lowpass_cutoff, nyquist)
            count = max(1, int(np.ceil(limit / self.mains_freq)) - 1)
        else:
            count = int(self.harmonics)
        return [k * self.mains_freq for k in range(1, count + 1)
                if k * self.mains_freq < nyquist]

    def describe(self, sampling_rate):
        info = super().describe(sampling_rate)
        info.update(quality=self.quality,
                    frequencies=self.frequencies(sampling_rate))
        return info

    def apply(self, samples, sampling_rate):
        self.check_validity(sampling_rate)
        filtered = np.asarray(samples, dtype=float)
        for frequency in self.frequencies(sampling_rate):
            filtered = zero_phase(
                filtered, notch_sos(frequency, self.quality, sampling_rate),
                sampling_rate, label=f'notch {frequency:g} Hz')
        return filtered


POWERLINE_FILTERS = {
    'swt': SwtPowerlineFilter,
    'notch': NotchPowerlineFilter,
}


def new_powerline_filter(cfg):
    """
    Dispatch the powerline filter named by ``cfg.powerline_method``.

    If the method does not match one of the built-in filters, it will
    raise a ``BadParams``. Currently the built-in filters are:

    | * ``swt``
    | * ``notch``

    :param cfg: ``PreprocessConfig`` (or any object with its attributes).
    :returns: Filter object implementing ``PowerlineFilterInterface``.
    """
    try:
        filter_class = POWERLINE_FILTERS[cfg.powerline_method]
    except KeyError:
        log_and_raise_exception(
            f"{cfg.powerline_method} is not a recognized powerline method",
            BadParams)
    LOG.info("powerline method: %s", cfg.powerline_method)
    return filter_class.from_config(cfg)
