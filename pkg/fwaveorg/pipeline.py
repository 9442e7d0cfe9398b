"""
Module defining the per-patient pipeline: preprocessing, QRST
cancellation, segmentation, feature extraction and averaging.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np

from fwaveorg.cohort import aggregate_patient, segment_signal
from fwaveorg.core_model import (Outcome, PatientFeatureVector, PowerSpectrum,
                                 SpectralFeatures, Stage)
from fwaveorg.preprocess import PreprocessConfig, preprocess
from fwaveorg.spectral import WelchConfig, features_from_spectrum, welch_psd
from fwaveorg.utils import DataError
from fwaveorg.ventricular_cancellation import (CancellationConfig,
                                               extract_fwaves)

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineSettings:
    """Settings of every pipeline stage."""
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    cancellation: CancellationConfig = field(
        default_factory=CancellationConfig)
    welch: WelchConfig = field(default_factory=WelchConfig)

    @classmethod
    def from_config(cls, config):
        """Build from an effective configuration (see ``load_config``)."""
        return cls(
            preprocess=PreprocessConfig.from_dict(config.get('preprocess')),
            cancellation=CancellationConfig.from_dict(
                config.get('cancellation')),
            welch=WelchConfig.from_dict(config.get('welch')))


@dataclass(frozen=True, eq=False)
class PatientResult:
    """Pipeline output for one patient."""
    vector: PatientFeatureVector
    segment_features: List[SpectralFeatures]
    spectrum: PowerSpectrum

    @property
    def patient_id(self):
        return self.vector.patient_id


def to_fwave(record, settings=PipelineSettings()):
    """
    Bring a record to the f-wave stage, running only the stages it has
    not been through yet.
    """
    if record.stage is Stage.RAW:
        record = preprocess(record, settings.preprocess)
    if record.stage is Stage.PREPROCESSED:
        record = extract_fwaves(record, settings.cancellation)
    return record


def process_record(record, settings=PipelineSettings(),
                   outcome=Outcome.UNKNOWN):
    """
    Run a record through the whole pipeline.

    Raw records are preprocessed, preprocessed records have their QRST
    complexes cancelled and f-wave records go straight to segmentation.
    Up to five 6 s segments are analysed and their features averaged.

    :param record: ``EcgRecord`` at any stage.
    :param settings: ``PipelineSettings``.
    :param outcome: Patient outcome label.
    :returns: ``PatientResult``; its spectrum is the mean segment PSD.
    """
    fwave = to_fwave(record, settings)
    segments = segment_signal(fwave)
    spectra = [welch_psd(segment, settings.welch) for segment in segments]
    features = [features_from_spectrum(spec, settings.welch)
                for spec in spectra]
    vector = aggregate_patient(features, record.patient_id, outcome)
    mean_spectrum = PowerSpectrum(
        np.mean([spec.values for spec in spectra], axis=0),
        f_step=spectra[0].f_step)
    LOG.debug("Patient '%s': %d segment(s), f0=%.2f Hz gamma=%.3f",
              record.patient_id, len(segments), vector.features.f0,
              vector.features.gamma)
    return PatientResult(vector, features, mean_spectrum)


def _process_task(task):
    record, settings, outcome = task
    try:
        return process_record(record, settings, outcome), None
    except DataError as exception:
        return None, str(exception)


def process_records(records, settings=PipelineSettings(), outcomes=None,
                    jobs=1):
    """
    Run many records, optionally on a pool of worker processes.

    Data errors do not stop the run: the failing patient gets ``None`` and
    the error message instead of a result.

    :param records: Sequence of ``EcgRecord``.
    :param outcomes: Matching outcomes; unknown when omitted.
    :param jobs: Number of worker processes.
    :returns: List of ``(PatientResult or None, error or None)``, in input
        order.
    """
    records = list(records)
    if outcomes is None:
        outcomes = [Outcome.UNKNOWN] * len(records)
    tasks = [(record, settings, Outcome(outcome))
             for record, outcome in zip(records, outcomes)]
    LOG.info("Processing %d record(s) with %d worker(s)", len(tasks), jobs)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_process_task, tasks))
    else:
        results = [_process_task(task) for task in tasks]
    for (record, _, _), (_, error) in zip(tasks, results):
        if error is not None:
            LOG.warning("Patient '%s' failed: %s", record.patient_id, error)
    return results
