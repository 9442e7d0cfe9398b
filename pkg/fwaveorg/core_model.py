"""
Module defining the shared value types of the f-wave pipeline.

Amplitudes are in millivolts and spectra in mV^2/Hz throughout. Every
type is immutable after construction; array fields are stored as
read-only numpy arrays.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from cached_property import cached_property

from fwaveorg.utils import (BadBand, BadParams, BadSamplingRate, EmptyRecord,
                            NonFiniteSample, RecordTooShort, SegmentTooShort,
                            log_and_raise_exception)

LOG = logging.getLogger(__name__)

SEGMENT_SECONDS = 6.0
REFERENCE_RATE = 977.0
F_STEP = 0.1
TF_LIMITS = (3.0, 25.0)

# guard for comparing grid frequencies against band edges
_EDGE = 1e-9


class Stage(str, Enum):
    RAW = 'raw'
    PREPROCESSED = 'preprocessed'
    FWAVE = 'fwave'


class Outcome(str, Enum):
    SR = 'SR'
    AF = 'AF'
    UNKNOWN = 'unknown'


class BandKind(str, Enum):
    LF = 'LF'
    HF = 'HF'
    TF = 'TF'


class Sex(str, Enum):
    MALE = 'male'
    FEMALE = 'female'


class AfDurationClass(str, Enum):
    UNDER_1Y = '<1y'
    FROM_1_TO_3Y = '1-3y'
    OVER_3Y = '>3y'


def _frozen_array(values):
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


def segment_length(sampling_rate):
    """Number of samples in one analysis segment at ``sampling_rate``."""
    return int(round(SEGMENT_SECONDS * sampling_rate))


@dataclass(frozen=True, eq=False)
class EcgRecord:
    """
    Single-lead ECG samples (mV) with their sampling rate and metadata.

    ``stage`` tracks how far through the pipeline the samples are:
    ``raw``, ``preprocessed`` or ``fwave`` (ventricular activity removed).
    """
    samples: np.ndarray
    sampling_rate: float
    lead: str = 'V1'
    patient_id: str = ''
    stage: Stage = Stage.RAW

    def __post_init__(self):
        object.__setattr__(self, 'samples', _frozen_array(self.samples))
        object.__setattr__(self, 'sampling_rate', float(self.sampling_rate))
        object.__setattr__(self, 'stage', Stage(self.stage))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        """Record duration in seconds."""
        return self.samples.size / self.sampling_rate

    @property
    def too_short_for_features(self):
        """True when the record holds less than one 6 s segment."""
        return self.samples.size < segment_length(self.sampling_rate)

    def replace(self, **changes):
        """Return a copy with ``changes`` applied."""
        return dataclasses.replace(self, **changes)


def validate_record(record, for_features=False):
    """
    Check the invariants of an ``EcgRecord``.

    Records shorter than one segment are accepted with a warning unless
    ``for_features`` is set, in which case ``RecordTooShort`` is raised.

    :param record: Record to check.
    :param for_features: Whether the record feeds feature extraction.
    :returns: The record itself.
    """
    rate = record.sampling_rate
    if not (math.isfinite(rate) and rate > 0):
        log_and_raise_exception(
            f"Record '{record.patient_id}' has sampling rate {rate}; "
            "it must be a positive number", BadSamplingRate)
    if record.samples.size == 0:
        log_and_raise_exception(
            f"Record '{record.patient_id}' holds no samples", EmptyRecord)
    bad = np.flatnonzero(~np.isfinite(record.samples))
    if bad.size:
        log_and_raise_exception(
            f"Record '{record.patient_id}' holds {bad.size} non-finite "
            f"sample(s), first at index {bad[0]}", NonFiniteSample)
    if record.too_short_for_features:
        msg = (f"Record '{record.patient_id}' lasts {record.duration:.3f} s, "
               f"shorter than one {SEGMENT_SECONDS:g} s segment")
        if for_features:
            log_and_raise_exception(msg, RecordTooShort)
        LOG.warning("%s; too short for feature extraction", msg)
    return record


@dataclass(frozen=True, eq=False)
class FWaveSegment:
    """Six-second excerpt of an f-wave record."""
    samples: np.ndarray
    sampling_rate: float
    segment_index: int = 0
    patient_id: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'samples', _frozen_array(self.samples))
        expected = segment_length(self.sampling_rate)
        if self.samples.size != expected:
            log_and_raise_exception(
                f"Segment {self.segment_index} of '{self.patient_id}' holds "
                f"{self.samples.size} samples, expected {expected}",
                SegmentTooShort)
        if not np.all(np.isfinite(self.samples)):
            log_and_raise_exception(
                f"Segment {self.segment_index} of '{self.patient_id}' holds "
                "non-finite samples", NonFiniteSample)


@dataclass(frozen=True)
class Band:
    """
    Frequency interval ``[f_lower, f_upper)`` in Hz.

    A bin belongs to the band when ``f_lower <= f < f_upper``. The upper
    edge is included when ``closed`` is set, which is always the case for
    the TF band.
    """
    f_lower: float
    f_upper: float
    kind: Optional[BandKind] = None
    closed: bool = False

    def __post_init__(self):
        if not 0 < self.f_lower < self.f_upper:
            log_and_raise_exception(
                f"Band [{self.f_lower}, {self.f_upper}] must satisfy "
                "0 < f_lower < f_upper", BadBand)
        if self.kind is not None:
            object.__setattr__(self, 'kind', BandKind(self.kind))
        if self.kind is BandKind.TF:
            if (self.f_lower, self.f_upper) != TF_LIMITS:
                log_and_raise_exception(
                    f"TF band must be exactly {list(TF_LIMITS)} Hz", BadBand)
            object.__setattr__(self, 'closed', True)


TF_BAND = Band(*TF_LIMITS, kind=BandKind.TF)


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """
    One-sided PSD (mV^2/Hz) on a uniform grid; bin ``k`` sits at
    ``f_start + k * f_step``.
    """
    values: np.ndarray
    f_step: float = F_STEP
    f_start: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen_array(self.values))
        if abs(self.f_step - F_STEP) > 1e-12:
            log_and_raise_exception(
                f"Spectrum step {self.f_step!r} Hz differs from {F_STEP} Hz",
                BadSamplingRate)
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            log_and_raise_exception(
                "Spectrum values must be finite and non-negative", BadParams)

    def __len__(self):
        return self.values.size

    def frequency_of(self, index):
        """Frequency (Hz) of bin ``index``, rounded onto the grid."""
        return round(self.f_start + index * self.f_step, 9)

    def index_of(self, frequency):
        """Index of the bin nearest to ``frequency``."""
        return int(round((frequency - self.f_start) / self.f_step))

    @cached_property
    def frequencies(self):
        """Bin frequencies as a read-only array."""
        freqs = np.round(
            self.f_start + np.arange(self.values.size) * self.f_step, 9)
        freqs.setflags(write=False)
        return freqs

    @property
    def f_max(self):
        return self.frequency_of(self.values.size - 1)

    def band_mask(self, band):
        """Boolean mask of the bins inside ``band``."""
        freqs = self.frequencies
        mask = freqs >= band.f_lower - _EDGE
        if band.closed:
            mask &= freqs <= band.f_upper + _EDGE
        else:
            mask &= freqs < band.f_upper - _EDGE
        return mask

    def band_values(self, band):
        """PSD values of the bins inside ``band``."""
        return self.values[self.band_mask(band)]


# Output column names, in table order, paired with attribute names.
FEATURE_COLUMNS = (
    ('f0', 'f0'), ('W_f0', 'w_f0'), ('f1', 'f1'), ('W_f1', 'w_f1'),
    ('gamma', 'gamma'), ('O', 'org_index'),
    ('F_LF', 'f_lf'), ('S_LF', 's_lf'), ('R_LF', 'r_lf'), ('C0_LF', 'c0_lf'),
    ('F_HF', 'f_hf'), ('S_HF', 's_hf'), ('R_HF', 'r_hf'), ('C0_HF', 'c0_hf'),
    ('F_TF', 'f_tf'), ('S_TF', 's_tf'), ('R_TF', 'r_tf'), ('C0_TF', 'c0_tf'),
)
FEATURE_NAMES = tuple(column for column, _ in FEATURE_COLUMNS)
ENTROPY_NAMES = FEATURE_NAMES[6:]


@dataclass(frozen=True)
class SpectralFeatures:
    """Spectral-organization features of one segment (or their mean)."""
    f0: float
    w_f0: float
    f1: float
    w_f1: float
    gamma: float
    org_index: float
    f_lf: float
    s_lf: float
    r_lf: float
    c0_lf: float
    f_hf: float
    s_hf: float
    r_hf: float
    c0_hf: float
    f_tf: float
    s_tf: float
    r_tf: float
    c0_tf: float

    def as_dict(self):
        """Features keyed by their table column names."""
        return {column: getattr(self, attr) for column, attr in FEATURE_COLUMNS}

    def as_array(self):
        return np.array([getattr(self, attr) for _, attr in FEATURE_COLUMNS])

    def __getitem__(self, column):
        return getattr(self, dict(FEATURE_COLUMNS)[column])

    @classmethod
    def from_dict(cls, values):
        """Build from a mapping keyed by column names."""
        return cls(**{attr: float(values[column])
                      for column, attr in FEATURE_COLUMNS})

    @classmethod
    def from_array(cls, values):
        return cls(**{attr: float(value)
                      for (_, attr), value in zip(FEATURE_COLUMNS, values)})


@dataclass(frozen=True)
class PatientFeatureVector:
    """Per-patient mean of up to five segment feature vectors."""
    patient_id: str
    features: SpectralFeatures
    n_segments: int
    outcome: Outcome = Outcome.UNKNOWN

    def __post_init__(self):
        object.__setattr__(self, 'outcome', Outcome(self.outcome))
        if not 1 <= self.n_segments <= 5:
            log_and_raise_exception(
                f"Patient '{self.patient_id}' has n_segments="
                f"{self.n_segments}; expected 1 to 5", BadParams)


@dataclass(frozen=True)
class ClinicalRecord:
    """Baseline clinical characteristics; every field but the id is optional."""
    patient_id: str
    sex: Optional[Sex] = None
    age: Optional[float] = None
    af_duration_class: Optional[AfDurationClass] = None
    bmi: Optional[float] = None
    la_diameter: Optional[float] = None

    def __post_init__(self):
        if self.sex is not None:
            object.__setattr__(self, 'sex', Sex(self.sex))
        if self.af_duration_class is not None:
            object.__setattr__(self, 'af_duration_class',
                               AfDurationClass(self.af_duration_class))
        for name in ('age', 'bmi', 'la_diameter'):
            value = getattr(self, name)
            if value is not None and not value > 0:
                log_and_raise_exception(
                    f"Clinical record '{self.patient_id}' has {name}="
                    f"{value}; it must be positive", BadParams)
