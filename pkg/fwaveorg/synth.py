"""
Module defining the synthetic data generator: harmonic f-waves, full
ECG mixtures with a fixed QRST morphology and artifacts, and labeled
cohorts drawn from group distributions.

Every generator is driven by an explicit seed; identical arguments give
bit-identical output.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from fwaveorg.cohort import Cohort
from fwaveorg.core_model import (AfDurationClass, ClinicalRecord, EcgRecord,
                                 Outcome, Sex, Stage, TF_LIMITS)
from fwaveorg.pipeline import PipelineSettings, process_records
from fwaveorg.schema import validate_cohort_spec
from fwaveorg.utils import (BadParams, DataError, log_and_raise_exception,
                            spawn_seeds)
from fwaveorg.ventricular_cancellation import RPeakList

LOG = logging.getLogger(__name__)

# (offset from R in s, amplitude in mV, Gaussian width in s)
QRST_WAVES = (
    (-0.040, -0.10, 0.010),
    (0.000, 1.00, 0.010),
    (0.040, -0.25, 0.012),
    (0.280, 0.25, 0.050),
)
BEAT_SUPPORT = (-0.2, 0.6)
PHASE_SMOOTHING = 0.5
HEART_RATE_RANGE = (40.0, 180.0)

# clipping ranges for drawn cohort parameters
F0_RANGE = (3.5, 11.0)
GAMMA_RANGE = (0.2, 5.0)
BACKGROUND_RANGE = (0.0, 0.9)

# baseline characteristics per group: male share, age, AF-duration class
# counts (<1y, 1-3y, >3y), BMI and LA diameter (mean, sd)
CLINICAL_PROFILES = {
    Outcome.SR: {'male': 79 / 103, 'age': (59.37, 12.24),
                 'duration': (6, 70, 27), 'bmi': (27.79, 3.55),
                 'la_diameter': (44.11, 5.70)},
    Outcome.AF: {'male': 37 / 48, 'age': (57.23, 12.82),
                 'duration': (6, 31, 11), 'bmi': (29.06, 4.86),
                 'la_diameter': (45.65, 5.32)},
}


@dataclass(frozen=True)
class FWaveParams:
    """
    Harmonic f-wave model.

    Harmonic ``k`` (``k = 0`` is the fundamental) has amplitude
    ``amplitude * exp(-k * gamma_true / 2)``, so the fundamental to first
    harmonic power ratio is ``exp(gamma_true)`` and later harmonics keep
    decaying at the same rate.

    ``background`` is the share of the f-wave power spread evenly over
    3-25 Hz as random-phase noise.
    """
    f0: float = 6.0
    n_harmonics: int = 3
    gamma_true: float = 2.0
    amplitude: float = 0.05
    freq_jitter: float = 0.0
    phase_noise: float = 0.0
    modulation_freq: float = 0.2
    background: float = 0.0

    def validate(self, sampling_rate):
        problems = []
        if not 3.0 <= self.f0 <= 12.0:
            problems.append(f"f0={self.f0} outside [3, 12] Hz")
        if self.n_harmonics < 1:
            problems.append(f"n_harmonics={self.n_harmonics} < 1")
        elif self.n_harmonics * self.f0 >= sampling_rate / 2:
            problems.append(f"harmonic {self.n_harmonics * self.f0:g} Hz "
                            "reaches the Nyquist frequency")
        if not self.amplitude > 0:
            problems.append(f"amplitude={self.amplitude} must be positive")
        if self.freq_jitter < 0 or self.phase_noise < 0:
            problems.append("freq_jitter and phase_noise must be >= 0")
        if not self.modulation_freq > 0:
            problems.append("modulation_freq must be positive")
        if not 0 <= self.background < 1:
            problems.append(f"background={self.background} outside [0, 1)")
        if problems:
            log_and_raise_exception(
                "Invalid f-wave parameters: " + "; ".join(problems),
                BadParams)

    def harmonic_amplitudes(self):
        steps = np.arange(self.n_harmonics)
        return self.amplitude * np.exp(-steps * self.gamma_true / 2.0)


def _sample_count(duration, sampling_rate):
    if not (sampling_rate > 0 and duration > 0):
        log_and_raise_exception(
            f"Duration {duration} s and sampling rate {sampling_rate} Hz "
            "must be positive", BadParams)
    return int(round(duration * sampling_rate))


def _fwave_samples(params, count, sampling_rate, rng):
    times = np.arange(count) / sampling_rate
    phase = 2 * np.pi * params.f0 * times
    if params.freq_jitter > 0:
        deviation = params.freq_jitter * math.sqrt(2.0)
        phase = phase + (deviation / params.modulation_freq) * np.sin(
            2 * np.pi * params.modulation_freq * times
            + rng.uniform(0, 2 * np.pi))
    if params.phase_noise > 0:
        width = max(1, int(round(PHASE_SMOOTHING * sampling_rate)))
        wander = np.convolve(rng.standard_normal(count + width),
                             np.ones(width) / width, mode='same')[:count]
        wander -= wander.mean()
        rms = np.sqrt(np.mean(wander ** 2))
        if rms > 0:
            phase = phase + params.phase_noise * wander / rms
    offsets = rng.uniform(0, 2 * np.pi, params.n_harmonics)
    samples = np.zeros(count)
    for step, amplitude in enumerate(params.harmonic_amplitudes()):
        samples += amplitude * np.sin((step + 1) * phase + offsets[step])
    if params.background > 0:
        harmonic_power = np.sum(params.harmonic_amplitudes() ** 2) / 2
        samples += _broadband(
            count, sampling_rate,
            harmonic_power * params.background / (1 - params.background),
            rng)
    return samples


def _broadband(count, sampling_rate, power, rng):
    """Random-phase noise of mean power ``power``, flat over 3-25 Hz."""
    freqs = np.fft.rfftfreq(count, 1.0 / sampling_rate)
    inside = (freqs >= TF_LIMITS[0]) & (freqs <= TF_LIMITS[1])
    if not inside.any():
        return np.zeros(count)
    spectrum = np.zeros(freqs.size, dtype=complex)
    spectrum[inside] = np.exp(1j * rng.uniform(0, 2 * np.pi, inside.sum()))
    samples = np.fft.irfft(spectrum, n=count)
    return samples * math.sqrt(power / np.mean(samples ** 2))


def synth_fwave(params, duration=30.0, sampling_rate=977.0, seed=None,
                patient_id=''):
    """
    Synthesize an f-wave signal.

    :param params: ``FWaveParams``.
    :param duration: Length in seconds.
    :param sampling_rate: Hz.
    :param seed: Seed of the random phases and modulations.
    :returns: ``EcgRecord`` with ``stage == fwave``.
    """
    params.validate(sampling_rate)
    count = _sample_count(duration, sampling_rate)
    samples = _fwave_samples(params, count, sampling_rate,
                             np.random.default_rng(seed))
    return EcgRecord(samples, sampling_rate, patient_id=patient_id,
                     stage=Stage.FWAVE)


def qrst_waveform(times, r_amplitude=1.0):
    """Bundled QRST morphology (mV) at ``times`` seconds from the R peak."""
    times = np.asarray(times, dtype=float)
    wave = np.zeros_like(times)
    for offset, amplitude, width in QRST_WAVES:
        wave += amplitude * np.exp(-0.5 * ((times - offset) / width) ** 2)
    return r_amplitude * wave


def ventricular_activity(peaks, count, sampling_rate, r_amplitude=1.0):
    """
    Place one QRST complex at every R peak.

    Every beat uses the same sampled waveform, so the ventricular
    component is exactly periodic in shape.
    """
    lags = np.arange(int(round(BEAT_SUPPORT[0] * sampling_rate)),
                     int(round(BEAT_SUPPORT[1] * sampling_rate)) + 1)
    beat = qrst_waveform(lags / sampling_rate, r_amplitude)
    activity = np.zeros(count)
    for peak in peaks:
        positions = peak + lags
        inside = (positions >= 0) & (positions < count)
        activity[positions[inside]] += beat[inside]
    return activity


@dataclass(frozen=True)
class ArtifactSpec:
    """
    Additive artifacts: sinusoidal baseline drift, mains interference and
    white noise at ``noise_snr_db`` below the f-wave power.
    """
    drift_amplitude: float = 0.0
    drift_freq: float = 0.3
    mains_amplitude: float = 0.0
    mains_freq: float = 50.0
    noise_snr_db: Optional[float] = None

    def render(self, fwave, sampling_rate, rng):
        """Artifact samples matching ``fwave`` in length."""
        if self.drift_amplitude < 0 or self.mains_amplitude < 0:
            log_and_raise_exception(
                "Artifact amplitudes must be non-negative", BadParams)
        times = np.arange(fwave.size) / sampling_rate
        total = np.zeros(fwave.size)
        if self.drift_amplitude > 0:
            total += self.drift_amplitude * np.sin(
                2 * np.pi * self.drift_freq * times + rng.uniform(0, 2 * np.pi))
        if self.mains_amplitude > 0:
            total += self.mains_amplitude * np.sin(
                2 * np.pi * self.mains_freq * times + rng.uniform(0, 2 * np.pi))
        if self.noise_snr_db is not None:
            power = np.mean(fwave ** 2)
            sigma = math.sqrt(power / 10 ** (self.noise_snr_db / 10.0))
            total += sigma * rng.standard_normal(fwave.size)
        return total


@dataclass(frozen=True, eq=False)
class SyntheticEcg:
    """Synthetic ECG and the ground-truth components it is the sum of."""
    raw: EcgRecord
    fwave: EcgRecord
    peaks: RPeakList
    ventricular: np.ndarray
    artifacts: np.ndarray


def beat_positions(heart_rate_mean, rr_irregularity, duration, sampling_rate,
                   rng, window_pre=0.10, window_post=0.45):
    """
    R-peak sample positions with independent RR intervals
    ``60 / heart_rate * (1 + u)``, ``u`` uniform in
    ``[-rr_irregularity, rr_irregularity]``.

    Beats start after ``window_pre`` and stop once a full
    ``window_post`` no longer fits in the record.
    """
    if not HEART_RATE_RANGE[0] <= heart_rate_mean <= HEART_RATE_RANGE[1]:
        log_and_raise_exception(
            f"Heart rate {heart_rate_mean} bpm outside "
            f"{list(HEART_RATE_RANGE)}", BadParams)
    if not 0 <= rr_irregularity < 1:
        log_and_raise_exception(
            f"RR irregularity {rr_irregularity} must lie in [0, 1)",
            BadParams)
    mean_rr = 60.0 / heart_rate_mean
    moment = window_pre + rng.uniform(0, mean_rr)
    last = (_sample_count(duration, sampling_rate) - 1) / sampling_rate
    positions = []
    while moment + window_post <= last:
        positions.append(int(round(moment * sampling_rate)))
        moment += mean_rr * (1 + rng.uniform(-rr_irregularity,
                                             rr_irregularity))
    return positions


def synth_ecg(fwave_params, heart_rate_mean=75.0, rr_irregularity=0.15,
              artifacts=ArtifactSpec(), duration=30.0, sampling_rate=977.0,
              seed=None, patient_id=''):
    """
    Synthesize an AF-like ECG: f-waves plus QRST complexes at irregular
    RR intervals plus artifacts.

    ``raw.samples`` is exactly ``fwave + ventricular + artifacts``.

    :param fwave_params: ``FWaveParams``.
    :param heart_rate_mean: Mean ventricular rate, 40 to 180 bpm.
    :param rr_irregularity: Half-width of the relative RR spread.
    :param artifacts: ``ArtifactSpec``.
    :returns: ``SyntheticEcg``.
    """
    fwave_params.validate(sampling_rate)
    count = _sample_count(duration, sampling_rate)
    fwave_rng, rhythm_rng, artifact_rng = (
        np.random.default_rng(child)
        for child in np.random.SeedSequence(seed).spawn(3))
    fwave = _fwave_samples(fwave_params, count, sampling_rate, fwave_rng)
    positions = beat_positions(heart_rate_mean, rr_irregularity, duration,
                               sampling_rate, rhythm_rng)
    ventricular = ventricular_activity(positions, count, sampling_rate)
    noise = artifacts.render(fwave, sampling_rate, artifact_rng)
    return SyntheticEcg(
        raw=EcgRecord(fwave + ventricular + noise, sampling_rate,
                      patient_id=patient_id, stage=Stage.RAW),
        fwave=EcgRecord(fwave, sampling_rate, patient_id=patient_id,
                        stage=Stage.FWAVE),
        peaks=RPeakList(positions),
        ventricular=ventricular,
        artifacts=noise)


@dataclass(frozen=True)
class CohortSpec:
    """
    Group distributions of a synthetic cohort.

    The ``(mean, sd)`` defaults are the SR and AF group statistics of the
    clinical cohort. With ``sampling='quantile'`` the drawn values sit at
    the normal quantiles ``(i + 0.5) / n`` in shuffled order, so each group
    matches its target moments closely; ``'random'`` draws them
    independently.

    ``sr_background`` and ``af_background`` are the group moments of the
    broadband share of f-wave power. Their defaults are the group means and
    spreads of the 3-25 Hz spectral flatness; ``(0, 0)`` turns the share off.
    """
    n_sr: int = 103
    n_af: int = 48
    sr_f0: Tuple[float, float] = (5.69, 1.12)
    af_f0: Tuple[float, float] = (6.14, 0.99)
    sr_gamma: Tuple[float, float] = (2.20, 0.77)
    af_gamma: Tuple[float, float] = (2.80, 0.57)
    sr_background: Tuple[float, float] = (0.28, 0.10)
    af_background: Tuple[float, float] = (0.22, 0.06)
    amplitude: float = 0.05
    noise_snr_db: Optional[float] = 20.0
    heart_rate: float = 75.0
    rr_irregularity: float = 0.15
    duration: float = 30.0
    sampling_rate: float = 977.0
    rng_seed: int = 0
    sampling: str = 'quantile'
    with_clinical: bool = False

    def __post_init__(self):
        for name in ('sr_f0', 'af_f0', 'sr_gamma', 'af_gamma',
                     'sr_background', 'af_background'):
            moments = tuple(float(value) for value in getattr(self, name))
            object.__setattr__(self, name, moments)
            if len(moments) != 2 or moments[1] < 0:
                log_and_raise_exception(
                    f"Cohort spec {name}={moments} must be (mean, sd) with "
                    "sd >= 0", BadParams)
        if self.n_sr < 1 or self.n_af < 1:
            log_and_raise_exception(
                f"Cohort spec needs n_sr >= 1 and n_af >= 1, got "
                f"{self.n_sr} and {self.n_af}", BadParams)
        if self.sampling not in ('quantile', 'random'):
            log_and_raise_exception(
                f"Unknown cohort sampling '{self.sampling}'", BadParams)

    @classmethod
    def from_dict(cls, data):
        """Validate a ``synth`` configuration block and build the spec."""
        data = data or {}
        validate_cohort_spec(data)
        names = {field.name for field in fields(cls)}
        return cls(**{key: value for key, value in data.items()
                      if key in names})

    def moments(self, outcome):
        if outcome is Outcome.SR:
            return self.n_sr, self.sr_f0, self.sr_gamma
        return self.n_af, self.af_f0, self.af_gamma

    def background_moments(self, outcome):
        if outcome is Outcome.SR:
            return self.sr_background
        return self.af_background

    @property
    def with_background(self):
        return any(self.sr_background + self.af_background)


@dataclass(frozen=True)
class PatientPlan:
    """Drawn parameters of one synthetic patient."""
    patient_id: str
    outcome: Outcome
    params: FWaveParams
    seed: int
    clinical: Optional[ClinicalRecord] = None


def _draw(moments, count, sampling, rng, limits):
    mean, sd = moments
    if sampling == 'quantile':
        levels = (np.arange(count) + 0.5) / count
        values = rng.permutation(mean + sd * stats.norm.ppf(levels))
    else:
        values = mean + sd * rng.standard_normal(count)
    return np.clip(values, *limits)


def _draw_clinical(patient_id, outcome, rng):
    profile = CLINICAL_PROFILES[outcome]
    counts = np.array(profile['duration'], dtype=float)
    duration = list(AfDurationClass)[rng.choice(counts.size,
                                                p=counts / counts.sum())]

    def positive(moments, floor):
        return float(max(floor, rng.normal(*moments)))

    return ClinicalRecord(
        patient_id=patient_id,
        sex=Sex.MALE if rng.uniform() < profile['male'] else Sex.FEMALE,
        age=round(positive(profile['age'], 18.0)),
        af_duration_class=duration,
        bmi=round(positive(profile['bmi'], 15.0), 1),
        la_diameter=round(positive(profile['la_diameter'], 25.0), 1))


def plan_cohort(spec):
    """
    Draw every patient's parameters.

    Patient ids are ``SR001``... and ``AF001``...; SR patients come
    first.

    :param spec: ``CohortSpec``.
    :returns: List of ``PatientPlan``.
    """
    total = spec.n_sr + spec.n_af
    draw_seed, clinical_seed, *patient_seeds = spawn_seeds(spec.rng_seed,
                                                           total + 2)
    draw_rng = np.random.default_rng(draw_seed)
    clinical_rng = np.random.default_rng(clinical_seed)
    draws = {}
    for outcome in (Outcome.SR, Outcome.AF):
        count, f0_moments, gamma_moments = spec.moments(outcome)
        draws[outcome] = [
            _draw(f0_moments, count, spec.sampling, draw_rng, F0_RANGE),
            _draw(gamma_moments, count, spec.sampling, draw_rng, GAMMA_RANGE),
        ]
    # background shares come after every f0 and gamma draw
    for outcome, values in draws.items():
        count = values[0].size
        values.append(
            _draw(spec.background_moments(outcome), count, spec.sampling,
                  draw_rng, BACKGROUND_RANGE)
            if spec.with_background else np.zeros(count))
    plans = []
    for outcome, (f0s, gammas, backgrounds) in draws.items():
        for number in range(f0s.size):
            patient_id = f'{outcome.value}{number + 1:03d}'
            clinical = (_draw_clinical(patient_id, outcome, clinical_rng)
                        if spec.with_clinical else None)
            plans.append(PatientPlan(
                patient_id=patient_id, outcome=outcome,
                params=FWaveParams(f0=float(f0s[number]),
                                   gamma_true=float(gammas[number]),
                                   amplitude=spec.amplitude,
                                   background=float(backgrounds[number])),
                seed=patient_seeds[len(plans)],
                clinical=clinical))
    return plans


def synth_patient(plan, spec):
    """Synthesize the ECG of one planned patient."""
    return synth_ecg(
        plan.params, heart_rate_mean=spec.heart_rate,
        rr_irregularity=spec.rr_irregularity,
        artifacts=ArtifactSpec(noise_snr_db=spec.noise_snr_db),
        duration=spec.duration, sampling_rate=spec.sampling_rate,
        seed=plan.seed, patient_id=plan.patient_id)


def synth_cohort_records(spec):
    """
    Yield ``(PatientPlan, SyntheticEcg)`` for every patient, one at a
    time.
    """
    for plan in plan_cohort(spec):
        yield plan, synth_patient(plan, spec)


def truth_frame(plans):
    """Ground-truth table of drawn parameters."""
    return pd.DataFrame({
        'patient_id': [plan.patient_id for plan in plans],
        'outcome': [plan.outcome.value for plan in plans],
        'f0_true': [plan.params.f0 for plan in plans],
        'gamma_true': [plan.params.gamma_true for plan in plans],
        'background_true': [plan.params.background for plan in plans],
    })


def _synth_and_process(task):
    plan, spec, settings = task
    ecg = synth_patient(plan, spec)
    results = process_records([ecg.raw], settings, [plan.outcome])
    return results[0]


def synth_cohort(spec=CohortSpec(), settings=PipelineSettings(), jobs=1):
    """
    Synthesize a labeled cohort and run every patient through the full
    pipeline.

    :param spec: ``CohortSpec``.
    :param settings: ``PipelineSettings`` of the pipeline.
    :param jobs: Number of worker processes.
    :returns: ``(Cohort, truth DataFrame)``.
    """
    plans = plan_cohort(spec)
    tasks = [(plan, spec, settings) for plan in plans]
    LOG.info("Synthesizing %d SR and %d AF patients with %d worker(s)",
             spec.n_sr, spec.n_af, jobs)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_synth_and_process, tasks))
    else:
        results = [_synth_and_process(task) for task in tasks]
    patients = []
    for plan, (result, error) in zip(plans, results):
        if error is not None:
            log_and_raise_exception(
                f"Synthetic patient '{plan.patient_id}' failed: {error}",
                DataError)
        patients.append((result.vector, plan.clinical))
    return Cohort(tuple(patients)), truth_frame(plans)
