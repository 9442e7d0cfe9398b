"""
Zero-phase IIR filtering with reflected-signal padding.
"""

import functools
import logging

import numpy as np
from scipy import signal

from fwaveorg.utils import RecordTooShortForFilter, log_and_raise_exception

LOG = logging.getLogger(__name__)

# impulse-response energy left out of the effective length
_TAIL_ENERGY = 1e-8
_IMPULSE_SECONDS = 60.0

# (sos bytes, sampling rate) -> effective length
_LENGTHS = {}


@functools.lru_cache(maxsize=64)
def butterworth_sos(order, cutoff, sampling_rate, btype='low'):
    """
    Butterworth design in second-order sections.

    :param cutoff: Cut-off frequency in Hz, or a ``(low, high)`` tuple for
        ``btype='band'``.
    """
    return signal.butter(order, cutoff, btype=btype, fs=sampling_rate,
                         output='sos')


@functools.lru_cache(maxsize=64)
def notch_sos(frequency, quality, sampling_rate):
    """Second-order IIR notch at ``frequency`` as one SOS row."""
    b, a = signal.iirnotch(frequency, quality, fs=sampling_rate)
    return signal.tf2sos(b, a)


def effective_length(sos, sampling_rate):
    """
    Number of samples holding all but a 1e-8 fraction of the energy of
    the filter's impulse response.
    """
    sos = np.asarray(sos, dtype=float)
    key = (sos.tobytes(), float(sampling_rate))
    if key not in _LENGTHS:
        impulse = np.zeros(int(_IMPULSE_SECONDS * sampling_rate))
        impulse[0] = 1.0
        energy = np.cumsum(signal.sosfilt(sos, impulse) ** 2)
        cutoff = (1.0 - _TAIL_ENERGY) * energy[-1]
        _LENGTHS[key] = int(np.searchsorted(energy, cutoff)) + 1
    return _LENGTHS[key]


def zero_phase(samples, sos, sampling_rate, label='filter'):
    """
    Apply ``sos`` forward and backward.

    The input is extended on both sides by its mirror image over three
    effective impulse-response lengths, filtered without further padding,
    then trimmed back to its original length.

    :param samples: 1-D array.
    :param sos: Second-order sections.
    :param sampling_rate: Hz.
    :param label: Stage name for error messages.
    :returns: Filtered array of the same length.
    """
    samples = np.asarray(samples, dtype=float)
    sos = np.atleast_2d(sos)
    min_length = 3 * (2 * sos.shape[0] + 1)
    if samples.size <= min_length:
        log_and_raise_exception(
            f"{label}: record of {samples.size} samples is too short for "
            f"forward/backward filtering (needs more than {min_length})",
            RecordTooShortForFilter)
    pad = 3 * effective_length(sos, sampling_rate)
    padded = np.pad(samples, pad, mode='reflect')
    filtered = signal.sosfiltfilt(sos, padded, padtype=None)
    return filtered[pad:pad + samples.size]
