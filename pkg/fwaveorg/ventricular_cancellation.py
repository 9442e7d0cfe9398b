"""
Module defining R-peak detection and QRST cancellation.

Ventricular activity is removed by subtracting, beat by beat, an
amplitude-fitted template built from the dominant singular vector of the
aligned QRST complexes. A linear ramp then matches each subtracted
segment to its neighbouring samples.
"""

import logging
from dataclasses import dataclass, fields

import numpy as np
from scipy import signal

from fwaveorg.core_model import Stage
from fwaveorg.filters import butterworth_sos, zero_phase
from fwaveorg.utils import (BadParams, InsufficientBeats, NoBeatsFound,
                            WindowOutOfBounds, log_and_raise_exception)

LOG = logging.getLogger(__name__)

DETECTOR_BAND = (5.0, 25.0)
INTEGRATION_SECONDS = 0.150
REFINE_SECONDS = 0.075
LEARNING_SECONDS = 2.0


@dataclass(frozen=True)
class CancellationConfig:
    """QRST window and detector settings, in seconds."""
    window_pre: float = 0.10
    window_post: float = 0.45
    rr_fraction: float = 0.85
    refractory: float = 0.25
    strict: bool = False

    @classmethod
    def from_dict(cls, data):
        names = {field.name for field in fields(cls)}
        return cls(**{key: value for key, value in (data or {}).items()
                      if key in names})


@dataclass(frozen=True, eq=False)
class RPeakList:
    """Ascending sample positions of R peaks."""
    indices: np.ndarray

    def __post_init__(self):
        indices = np.array(self.indices, dtype=np.int64).reshape(-1)
        if np.any(np.diff(indices) <= 0):
            log_and_raise_exception(
                "R-peak indices must be strictly increasing", BadParams)
        indices.setflags(write=False)
        object.__setattr__(self, 'indices', indices)

    def __len__(self):
        return self.indices.size

    def __iter__(self):
        return iter(self.indices.tolist())


@dataclass(frozen=True, eq=False)
class QrstTemplate:
    """Ventricular template sampled from ``window_pre`` before R to
    ``window_post`` after it."""
    samples: np.ndarray
    sampling_rate: float
    window_pre: float = 0.10
    window_post: float = 0.45

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)
        expected = window_samples(self.window_pre, self.window_post,
                                  self.sampling_rate)[2]
        if samples.size != expected:
            log_and_raise_exception(
                f"Template holds {samples.size} samples, expected {expected}",
                BadParams)

    @property
    def pre_samples(self):
        return window_samples(self.window_pre, self.window_post,
                              self.sampling_rate)[0]


def window_samples(window_pre, window_post, sampling_rate):
    """Return ``(pre, post, total)`` sample counts of a QRST window."""
    total = int(round((window_pre + window_post) * sampling_rate))
    pre = int(round(window_pre * sampling_rate))
    return pre, total - pre, total


def detect_r_peaks(record, refractory=0.25):
    """
    Locate R peaks with a band-pass, derivative, squaring and
    moving-window-integration detector and an adaptive threshold.

    :param record: Preprocessed ``EcgRecord`` of at least 2 s.
    :param refractory: Minimum gap between peaks in seconds.
    :returns: ``RPeakList``.
    """
    fs = record.sampling_rate
    samples = record.samples
    if record.duration < LEARNING_SECONDS:
        log_and_raise_exception(
            f"Record '{record.patient_id}' lasts {record.duration:.2f} s; "
            f"R-peak detection needs {LEARNING_SECONDS:g} s", NoBeatsFound)

    sos = butterworth_sos(2, DETECTOR_BAND, fs, btype='band')
    bandpassed = zero_phase(samples, sos, fs, label='QRS band-pass')
    squared = np.gradient(bandpassed) ** 2
    width = max(1, int(round(INTEGRATION_SECONDS * fs)))
    integrated = np.convolve(squared, np.ones(width) / width, mode='same')
    if not np.any(integrated > 0):
        log_and_raise_exception(
            f"Record '{record.patient_id}' has no QRS-band energy",
            NoBeatsFound)

    distance = max(1, int(round(refractory * fs)))
    candidates, _ = signal.find_peaks(integrated, distance=distance)

    learning = integrated[:int(LEARNING_SECONDS * fs)]
    signal_level = learning.max() / 3.0
    noise_level = learning.mean() / 2.0
    accepted = []
    for candidate in candidates:
        value = integrated[candidate]
        threshold = noise_level + 0.25 * (signal_level - noise_level)
        if value > threshold:
            accepted.append(candidate)
            signal_level = 0.125 * value + 0.875 * signal_level
        else:
            noise_level = 0.125 * value + 0.875 * noise_level

    reach = int(round(REFINE_SECONDS * fs))
    magnitude = np.abs(bandpassed)
    refined = []
    for candidate in accepted:
        start = max(0, candidate - reach)
        stop = min(samples.size, candidate + reach + 1)
        peak = start + int(np.argmax(magnitude[start:stop]))
        if refined and peak - refined[-1] < distance:
            if magnitude[peak] > magnitude[refined[-1]]:
                refined[-1] = peak
            continue
        refined.append(peak)

    if len(refined) < 2:
        log_and_raise_exception(
            f"Record '{record.patient_id}': {len(refined)} R peak(s) found, "
            "at least 2 are needed", NoBeatsFound)
    LOG.debug("Record '%s': %d R peaks", record.patient_id, len(refined))
    return RPeakList(refined)


def _beat_matrix(samples, peaks, pre, post):
    """Columns are the in-bounds beats; beats whose window stays clear of
    the next R peak are preferred when at least two exist."""
    indices = list(peaks)
    inside = [
        position for position in indices
        if position - pre >= 0 and position + post <= samples.size
    ]
    following = dict(zip(indices, indices[1:]))
    clear = [
        position for position in inside
        if position not in following or position + post <= following[position]
    ]
    chosen = clear if len(clear) >= 2 else inside
    if len(chosen) < 2:
        log_and_raise_exception(
            f"{len(chosen)} beat(s) with a full QRST window; at least 2 are "
            "needed for a template", InsufficientBeats)
    return np.column_stack(
        [samples[position - pre:position + post] for position in chosen])


def build_qrst_template(record, peaks, window_pre=0.10, window_post=0.45):
    """
    Build the cancellation template from the aligned beats.

    The template is the dominant left singular vector of the beat matrix,
    signed to agree with the ensemble mean and scaled to the mean beat
    energy.

    :param record: ``EcgRecord``.
    :param peaks: ``RPeakList``.
    :returns: ``QrstTemplate``.
    """
    fs = record.sampling_rate
    pre, post, _ = window_samples(window_pre, window_post, fs)
    beats = _beat_matrix(record.samples, peaks, pre, post)
    left, _, _ = np.linalg.svd(beats, full_matrices=False)
    direction = left[:, 0]
    if direction @ beats.mean(axis=1) < 0:
        direction = -direction
    scale = np.sqrt(np.mean(np.sum(beats ** 2, axis=0)))
    LOG.debug("Template from %d beats of '%s'",
              beats.shape[1], record.patient_id)
    return QrstTemplate(direction * scale, fs, window_pre, window_post)


def fit_beat_amplitude(segment, template):
    """Least-squares amplitude ``a`` minimising ``|segment - a*template|``."""
    energy = float(template @ template)
    if energy == 0.0:
        return 0.0
    return float(template @ segment) / energy


def cancel_qrst(record, peaks, template, rr_fraction=0.85, strict=False):
    """
    Subtract the amplitude-fitted template from every beat.

    Each window runs from ``window_pre`` before R to ``window_post`` after
    it, cut to ``rr_fraction`` of the interval to the next R. The fitted
    template is corrected by the straight line through its end samples
    before subtraction, so the output meets the untouched samples on
    either side of the window without a step.

    Beats whose window leaves the record are left as they are and logged,
    or raise ``WindowOutOfBounds`` when ``strict`` is set.

    :returns: ``EcgRecord`` with ``stage == fwave``.
    """
    fs = record.sampling_rate
    output = np.array(record.samples, dtype=float)
    pre = template.pre_samples
    indices = list(peaks)
    skipped = []
    for number, position in enumerate(indices):
        post = template.samples.size - pre
        if number + 1 < len(indices):
            gap = indices[number + 1] - position
            post = min(post, int(round(rr_fraction * gap)))
        start, stop = position - pre, position + post
        if start < 0 or stop > output.size:
            msg = (f"Record '{record.patient_id}': QRST window of the beat "
                   f"at sample {position} leaves the record")
            if strict:
                log_and_raise_exception(msg, WindowOutOfBounds)
            skipped.append(position)
            continue
        shape = template.samples[:pre + post]
        fitted = fit_beat_amplitude(output[start:stop], shape) * shape
        fitted -= np.linspace(fitted[0], fitted[-1], fitted.size)
        output[start:stop] -= fitted
    if skipped:
        LOG.warning("Record '%s': %d beat(s) left uncancelled at samples %s",
                    record.patient_id, len(skipped), skipped)
    return record.replace(samples=output, stage=Stage.FWAVE)


def extract_fwaves(record, cfg=CancellationConfig()):
    """
    Detect R peaks, build the template and cancel every QRST complex.

    :param record: Preprocessed ``EcgRecord``.
    :param cfg: ``CancellationConfig``.
    :returns: ``EcgRecord`` with ``stage == fwave``.
    """
    peaks = detect_r_peaks(record, cfg.refractory)
    template = build_qrst_template(record, peaks, cfg.window_pre,
                                   cfg.window_post)
    return cancel_qrst(record, peaks, template, cfg.rr_fraction, cfg.strict)
