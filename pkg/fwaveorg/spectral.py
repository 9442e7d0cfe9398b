"""
Module defining Welch PSD estimation and the per-segment spectral
features: dominant frequency, first harmonic, harmonic decay,
organization index, band split and the band entropies.
"""

import logging
import math
from dataclasses import dataclass, fields
from decimal import ROUND_HALF_UP, Decimal
from typing import Tuple

import numpy as np
import pandas as pd
from scipy import signal

from fwaveorg.core_model import (F_STEP, REFERENCE_RATE, TF_BAND, TF_LIMITS,
                                 Band, BandKind, PowerSpectrum,
                                 SpectralFeatures)
from fwaveorg.entropy import DEFAULT_ALPHA, band_measures
from fwaveorg.utils import (AllZeroBand, BadBand, BadParams, BadSamplingRate,
                            EmptyBand, HarmonicOutOfRange, NonPositivePower,
                            SegmentTooShort, log_and_raise_exception,
                            parse_band)

LOG = logging.getLogger(__name__)

# half-width of the harmonic search and organization windows, Hz
HALF_WINDOW = 0.5


@dataclass(frozen=True)
class WelchConfig:
    """
    Welch estimator settings.

    ``window_len`` and ``overlap`` are sample counts at
    ``reference_rate``; other sampling rates rescale them proportionally.
    """
    window_len: int = 4000
    overlap: int = 3000
    window_kind: str = 'hamming'
    fft_resolution: float = F_STEP
    df_search_band: Tuple[float, float] = (3.0, 12.0)
    reference_rate: float = REFERENCE_RATE
    renyi_alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        object.__setattr__(self, 'df_search_band',
                           parse_band(self.df_search_band))
        if not 0 <= self.overlap < self.window_len:
            log_and_raise_exception(
                f"Welch overlap {self.overlap} must satisfy "
                f"0 <= overlap < window_len={self.window_len}", BadParams)

    @classmethod
    def from_dict(cls, data):
        names = {field.name for field in fields(cls)}
        return cls(**{key: value for key, value in (data or {}).items()
                      if key in names})

    @property
    def search_band(self):
        return Band(*self.df_search_band, closed=True)

    def resolve(self, sampling_rate):
        """
        Sample counts at ``sampling_rate``.

        :returns: ``(nperseg, noverlap, nfft)``.
        """
        ratio = sampling_rate / self.reference_rate
        nperseg = int(round(self.window_len * ratio))
        noverlap = min(int(round(self.overlap * ratio)), nperseg - 1)
        nfft = int(round(sampling_rate / self.fft_resolution))
        step = sampling_rate / nfft
        if abs(step - F_STEP) > 1e-12:
            log_and_raise_exception(
                f"Sampling rate {sampling_rate} Hz gives a {step} Hz grid; "
                f"the spectrum needs exactly {F_STEP} Hz", BadSamplingRate)
        return nperseg, noverlap, nfft


def welch_psd(segment, cfg=WelchConfig()):
    """
    One-sided Welch PSD on the 0.1 Hz grid.

    Sections are Hamming-windowed, overlapped, mean-removed and
    zero-padded to ``fs / 0.1`` points; the density scaling makes
    ``sum(PSD) * df`` match the signal variance.

    :param segment: ``FWaveSegment`` (or any object with ``samples`` and
        ``sampling_rate``).
    :param cfg: ``WelchConfig``.
    :returns: ``PowerSpectrum``.
    """
    fs = segment.sampling_rate
    nperseg, noverlap, nfft = cfg.resolve(fs)
    if segment.samples.size < nperseg:
        log_and_raise_exception(
            f"Segment of {segment.samples.size} samples is shorter than the "
            f"{nperseg}-sample Welch window", SegmentTooShort)
    if fs / 2 < TF_LIMITS[1]:
        log_and_raise_exception(
            f"Sampling rate {fs} Hz does not cover the {TF_LIMITS} Hz band",
            BadSamplingRate)
    _, psd = signal.welch(
        segment.samples, fs=fs, window=cfg.window_kind, nperseg=nperseg,
        noverlap=noverlap, nfft=nfft, detrend='constant',
        return_onesided=True, scaling='density')
    return PowerSpectrum(np.maximum(psd, 0.0), f_step=fs / nfft)


def _peak(spec, band, what):
    mask = spec.band_mask(band)
    if not mask.any():
        log_and_raise_exception(
            f"{what}: band [{band.f_lower}, {band.f_upper}] Hz holds no bins",
            EmptyBand)
    index = np.flatnonzero(mask)[int(np.argmax(spec.values[mask]))]
    return spec.frequency_of(index), float(spec.values[index] * spec.f_step)


def dominant_frequency(spec, band=None):
    """
    Frequency of the highest PSD bin within the search band; ties go to
    the lower frequency.

    :param spec: ``PowerSpectrum``.
    :param band: Search ``Band``; defaults to the closed [3, 12] Hz band.
    :returns: ``(f0, w_f0)`` with ``w_f0 = PSD(f0) * df`` in mV^2.
    """
    if band is None:
        band = WelchConfig().search_band
    return _peak(spec, band, 'dominant frequency')


def first_harmonic(spec, f0):
    """
    Highest PSD bin in the closed 1 Hz window centred on ``2 * f0``.

    :returns: ``(f1, w_f1)``.
    """
    centre = 2.0 * f0
    if centre + HALF_WINDOW > spec.f_max + 1e-9:
        log_and_raise_exception(
            f"First-harmonic window around {centre:g} Hz exceeds the "
            f"spectrum ({spec.f_max:g} Hz)", HarmonicOutOfRange)
    window = Band(centre - HALF_WINDOW, centre + HALF_WINDOW, closed=True)
    return _peak(spec, window, 'first harmonic')


def harmonic_decay(w_f0, w_f1):
    """Natural log of the fundamental-to-first-harmonic power ratio."""
    if not (w_f0 > 0 and w_f1 > 0):
        log_and_raise_exception(
            f"Harmonic decay needs positive powers, got {w_f0} and {w_f1}",
            NonPositivePower)
    return math.log(w_f0 / w_f1)


def organization_index(spec, f0, f1=None):
    """
    Share of the 3-25 Hz power held by 1 Hz windows around the DF, the
    first harmonic and the peak near ``3 * f0``.

    Windows are ``[c - 0.5, c + 0.5)``, clipped to 3-25 Hz and merged, so
    overlapping windows count once.

    :param spec: ``PowerSpectrum``.
    :param f0: Dominant frequency.
    :param f1: Detected first harmonic; found with ``first_harmonic`` when
        omitted.
    :returns: O in [0, 1].
    """
    tf_mask = spec.band_mask(TF_BAND)
    total = spec.values[tf_mask].sum()
    if not tf_mask.any():
        log_and_raise_exception("Spectrum holds no 3-25 Hz bins", EmptyBand)
    if not total > 0:
        log_and_raise_exception("Spectrum holds no 3-25 Hz power",
                                AllZeroBand)
    if f1 is None:
        f1, _ = first_harmonic(spec, f0)
    centres = [f0, f1]
    second_lower = 3.0 * f0 - HALF_WINDOW
    second_upper = min(3.0 * f0 + HALF_WINDOW, TF_LIMITS[1])
    if second_lower < second_upper:
        centres.append(_peak(spec, Band(second_lower, second_upper,
                                        closed=True), 'second harmonic')[0])
    windows = np.zeros_like(tf_mask)
    for centre in centres:
        windows |= spec.band_mask(Band(max(centre - HALF_WINDOW, 1e-9),
                                       centre + HALF_WINDOW))
    organized = spec.values[windows & tf_mask].sum()
    return float(np.clip(organized / total, 0.0, 1.0))


def band_split(f0, search_band=None):
    """
    Split 3-25 Hz at ``1.5 * f0`` rounded half-up onto the 0.1 Hz grid.

    :param search_band: DF search band ``f0`` must lie in; defaults to
        the ``WelchConfig`` one.
    :returns: ``(LF, HF, TF)`` bands; LF is ``[3, cut)``, HF is
        ``[cut, 25]``.
    """
    search_band = search_band or WelchConfig().search_band
    if not search_band.f_lower <= f0 <= search_band.f_upper:
        log_and_raise_exception(
            f"Band split needs {search_band.f_lower} <= f0 <= "
            f"{search_band.f_upper} Hz, got {f0}", BadBand)
    cut = float((Decimal(repr(float(f0))) * Decimal('1.5')).quantize(
        Decimal('0.1'), rounding=ROUND_HALF_UP))
    low = Band(TF_LIMITS[0], cut, BandKind.LF)
    high = Band(cut, TF_LIMITS[1], BandKind.HF, closed=True)
    return low, high, TF_BAND


def extract_features(segment, cfg=WelchConfig()):
    """
    Compute the full feature vector of one segment.

    :param segment: ``FWaveSegment``.
    :param cfg: ``WelchConfig``.
    :returns: ``SpectralFeatures``.
    """
    spec = welch_psd(segment, cfg)
    return features_from_spectrum(spec, cfg)


def features_from_spectrum(spec, cfg=WelchConfig()):
    """Feature vector of an already estimated spectrum."""
    if not spec.band_values(TF_BAND).sum() > 0:
        log_and_raise_exception("Segment holds no 3-25 Hz power",
                                AllZeroBand)
    f0, w_f0 = dominant_frequency(spec, cfg.search_band)
    f1, w_f1 = first_harmonic(spec, f0)
    values = {
        'f0': f0, 'w_f0': w_f0, 'f1': f1, 'w_f1': w_f1,
        'gamma': harmonic_decay(w_f0, w_f1),
        'org_index': organization_index(spec, f0, f1),
    }
    measures = band_measures(cfg.renyi_alpha)
    for band in band_split(f0, cfg.search_band):
        for prefix, measure in measures.items():
            values[f'{prefix.lower()}_{band.kind.value.lower()}'] = \
                measure(spec, band)
    return SpectralFeatures(**values)


def averaged_aligned_spectrum(spectra, f0s, below=3.0, above=20.0):
    """
    Mean of spectra shifted so that every DF lands at 0 Hz.

    Each spectrum is divided by its 3-25 Hz power before averaging. Bins
    that fall outside a spectrum after shifting are left out of that
    bin's mean.

    :param spectra: ``PowerSpectrum`` objects on the same grid.
    :param f0s: Dominant frequency of each spectrum.
    :param below: Hz kept below the DF.
    :param above: Hz kept above the DF.
    :returns: ``DataFrame`` with ``relative_frequency``, ``mean_psd`` and
        ``n`` columns.
    """
    offsets = np.arange(-int(round(below / F_STEP)),
                        int(round(above / F_STEP)) + 1)
    stack = np.full((len(spectra), offsets.size), np.nan)
    for row, (spec, f0) in enumerate(zip(spectra, f0s)):
        total = spec.band_values(TF_BAND).sum()
        if not total > 0:
            continue
        positions = spec.index_of(f0) + offsets
        valid = (positions >= 0) & (positions < len(spec))
        stack[row, valid] = spec.values[positions[valid]] / total
    counts = np.sum(~np.isnan(stack), axis=0)
    sums = np.nansum(stack, axis=0)
    mean = np.divide(sums, counts, out=np.full(offsets.size, np.nan),
                     where=counts > 0)
    return pd.DataFrame({
        'relative_frequency': np.round(offsets * F_STEP, 9),
        'mean_psd': mean,
        'n': counts,
    })
