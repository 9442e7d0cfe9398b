"""
Helper functions and exceptions for ``fwaveorg``.
"""

import logging

import numpy as np
import parse
import yaml

LOG = logging.getLogger(__name__)


class FwaveError(Exception):
    """Base class for exceptions in this package."""
    exit_code = 4


class FormatError(FwaveError):
    """Input could not be parsed or does not follow the expected format."""
    exit_code = 2


class DataError(FwaveError):
    """Input was parsed but the data violate a signal or model invariant."""
    exit_code = 3


class BadConfig(FormatError):
    """Configuration file or cohort spec does not validate."""


class NonFiniteSample(DataError):
    """A signal holds NaN or infinite samples."""


class EmptyRecord(DataError):
    """A signal has no samples."""


class BadSamplingRate(DataError):
    """Sampling rate is not positive or gives an unusable frequency grid."""


class RecordTooShort(DataError):
    """Record is shorter than one analysis segment."""


class RecordTooShortForFilter(DataError):
    """Record is too short for forward/backward filtering."""


class NoBeatsFound(DataError):
    """Fewer than two R peaks were detected."""


class InsufficientBeats(DataError):
    """Fewer than two beats are available to build a QRST template."""


class WindowOutOfBounds(DataError):
    """A QRST window reaches past the edge of the record."""


class SegmentTooShort(DataError):
    """Segment holds fewer samples than one Welch window."""


class EmptyBand(DataError):
    """Band holds too few spectral bins."""


class AllZeroBand(DataError):
    """Band holds no spectral power."""


class HarmonicOutOfRange(DataError):
    """Harmonic search window lies outside the spectrum."""


class NonPositivePower(DataError):
    """Peak power is zero or negative."""


class BadAlpha(DataError):
    """Renyi order is negative or equal to one."""


class BadBand(DataError):
    """Band limits are not ordered or not positive."""


class EmptyList(DataError):
    """Nothing to aggregate."""


class SampleTooSmall(DataError):
    """Sample is too small for the requested test."""


class SingularCovariance(DataError):
    """Pooled covariance cannot be inverted."""


class ClassMissing(DataError):
    """One outcome class is absent or too small."""


class DimensionMismatch(DataError):
    """Feature vector length does not match the model."""


class OneClassOnly(DataError):
    """Scores carry a single class label."""


class FoldWithoutBothClasses(DataError):
    """A cross-validation fold lacks one of the classes."""


class LengthMismatch(DataError):
    """Paired vectors have different lengths."""


class BadParams(DataError):
    """Parameters fall outside their valid range."""


def log_and_raise_exception(msg, exception=FwaveError):
    """ Log error and raise exception """
    LOG.error(msg)
    raise exception(msg)


def read_yaml(filename):
    """
    Read a yaml file; return its contents as a dictionary.

    :param filename: Name of file to read.
    :returns: Dictionary of file contents.
    """
    with open(filename, 'r') as _file:
        content = yaml.safe_load(_file)
    return content


def parse_band(data):
    """
    Takes a frequency interval and returns it as ``(lower, upper)`` in Hz.

    If a list or tuple of two numbers is passed, it is returned as floats.

    If a dict is passed with the keys ``lower`` and ``upper`` (or
        ``min`` and ``max``), those values are used.

    If a string is passed, either of the form ``[lower:upper]`` or
        ``lower to upper``, it is parsed.

    :param data: Data to parse.
    :returns: Tuple of two floats.
    """
    values = None
    if isinstance(data, (list, tuple)) and len(data) == 2:
        values = data
    elif isinstance(data, dict):
        values = (data.get('lower', data.get('min')),
                  data.get('upper', data.get('max')))
    elif isinstance(data, str):
        for fmt in ('{lower} to {upper}', '[{lower}:{upper}]'):
            result = parse.parse(fmt, data.strip())
            if result:
                values = (result['lower'], result['upper'])
                break
    try:
        lower, upper = (float(value) for value in values)
    except (TypeError, ValueError):
        log_and_raise_exception(
            f"Unable to parse a frequency interval from {data!r}", BadBand)
    if not 0 <= lower < upper:
        log_and_raise_exception(
            f"Frequency interval {data!r} must satisfy 0 <= lower < upper",
            BadBand)
    return lower, upper


def spawn_seeds(rng_seed, count):
    """
    Derive ``count`` independent integer seeds from ``rng_seed``.

    :param rng_seed: Root seed.
    :param count: Number of child seeds.
    :returns: List of integers.
    """
    children = np.random.SeedSequence(rng_seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]
