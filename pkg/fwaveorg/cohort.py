"""
Module defining cohorts: segmentation, per-patient averaging and the
SR-versus-AF group comparisons.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from fwaveorg.core_model import (FEATURE_NAMES, AfDurationClass,
                                 ClinicalRecord, FWaveSegment, Outcome,
                                 PatientFeatureVector, Sex, SpectralFeatures,
                                 segment_length, validate_record)
from fwaveorg.stats import (fisher_exact, levene, lilliefors, mann_whitney,
                            t_test)
from fwaveorg.utils import (BadParams, ClassMissing, EmptyList,
                            log_and_raise_exception)

LOG = logging.getLogger(__name__)

MAX_SEGMENTS = 5
SIGNIFICANCE = 0.05
CLINICAL_NUMERIC = ('age', 'bmi', 'la_diameter')


@dataclass(frozen=True)
class GroupComparison:
    """One row of a group-comparison table."""
    feature_name: str
    mean_sr: float
    sd_sr: float
    mean_af: float
    sd_af: float
    test_used: str
    p_value: float
    n_sr: int = 0
    n_af: int = 0


@dataclass(frozen=True)
class Cohort:
    """Patients with their optional clinical records."""
    patients: Tuple[Tuple[PatientFeatureVector, Optional[ClinicalRecord]], ...]

    def __post_init__(self):
        patients = tuple(
            entry if isinstance(entry, tuple) else (entry, None)
            for entry in self.patients)
        object.__setattr__(self, 'patients', patients)
        ids = [vector.patient_id for vector, _ in patients]
        duplicates = sorted({pid for pid in ids if ids.count(pid) > 1})
        if duplicates:
            log_and_raise_exception(
                f"Duplicate patient ids in cohort: {duplicates}", BadParams)

    def __len__(self):
        return len(self.patients)

    @property
    def vectors(self):
        return [vector for vector, _ in self.patients]

    @property
    def patient_ids(self):
        return [vector.patient_id for vector, _ in self.patients]

    def labeled(self):
        """Cohort of the patients whose outcome is known."""
        kept = tuple(entry for entry in self.patients
                     if entry[0].outcome is not Outcome.UNKNOWN)
        if len(kept) < len(self.patients):
            LOG.warning("Leaving out %d patient(s) without outcome",
                        len(self.patients) - len(kept))
        return Cohort(kept)

    def labels(self):
        """1 for AF recurrence, 0 for SR; raises on other outcomes."""
        labels = []
        for vector in self.vectors:
            if vector.outcome is Outcome.UNKNOWN:
                log_and_raise_exception(
                    f"Patient '{vector.patient_id}' has no outcome",
                    ClassMissing)
            labels.append(int(vector.outcome is Outcome.AF))
        return np.array(labels, dtype=np.int64)

    def require_both_classes(self):
        labels = self.labels()
        for outcome, count in ((Outcome.SR, np.sum(labels == 0)),
                               (Outcome.AF, np.sum(labels == 1))):
            if count == 0:
                log_and_raise_exception(
                    f"Cohort holds no {outcome.value} patients", ClassMissing)
        return labels

    def frame(self):
        """
        One row per patient: id, outcome, n_segments, every feature and,
        when present, the clinical fields.
        """
        rows = []
        for vector, clinical in self.patients:
            row = {'patient_id': vector.patient_id,
                   'outcome': vector.outcome.value,
                   'n_segments': vector.n_segments}
            row.update(vector.features.as_dict())
            if clinical is not None:
                row.update(clinical_row(clinical))
            rows.append(row)
        return pd.DataFrame(rows)

    def design(self, feature_names):
        """Feature matrix for ``feature_names`` (features or clinical
        numeric fields)."""
        frame = self.frame()
        missing = [name for name in feature_names if name not in frame]
        if missing:
            log_and_raise_exception(
                f"Unknown model variables: {missing}", BadParams)
        matrix = frame[list(feature_names)].to_numpy(dtype=float)
        if not np.all(np.isfinite(matrix)):
            log_and_raise_exception(
                f"Model variables {list(feature_names)} hold missing or "
                "non-finite values", BadParams)
        return matrix

    def values(self, name, outcome):
        """Values of one feature for one outcome group."""
        return np.array([
            vector.features[name] for vector in self.vectors
            if vector.outcome is Outcome(outcome)
        ])


def clinical_row(clinical):
    return {
        'sex': None if clinical.sex is None else clinical.sex.value,
        'age': clinical.age,
        'af_duration_class': (None if clinical.af_duration_class is None
                              else clinical.af_duration_class.value),
        'bmi': clinical.bmi,
        'la_diameter': clinical.la_diameter,
    }


def segment_signal(fwave, max_segments=MAX_SEGMENTS):
    """
    Cut consecutive non-overlapping 6 s segments from the start of the
    record, keeping at most ``max_segments``; the remainder is dropped.

    :param fwave: ``EcgRecord`` of at least 6 s.
    :returns: List of ``FWaveSegment``.
    """
    validate_record(fwave, for_features=True)
    length = segment_length(fwave.sampling_rate)
    count = min(max_segments, fwave.samples.size // length)
    return [
        FWaveSegment(fwave.samples[index * length:(index + 1) * length],
                     fwave.sampling_rate, index, fwave.patient_id)
        for index in range(count)
    ]


def aggregate_patient(features, patient_id, outcome=Outcome.UNKNOWN):
    """
    Per-feature arithmetic mean of one patient's segment features.

    :param features: One to five ``SpectralFeatures``.
    :returns: ``PatientFeatureVector``.
    """
    features = list(features)
    if not features:
        log_and_raise_exception(
            f"No segment features to aggregate for '{patient_id}'", EmptyList)
    stacked = np.vstack([item.as_array() for item in features])
    return PatientFeatureVector(
        patient_id=patient_id,
        features=SpectralFeatures.from_array(stacked.mean(axis=0)),
        n_segments=len(features),
        outcome=outcome)


def compare_samples(sr_values, af_values, feature_name=''):
    """
    Compare two samples with the test their distributions allow.

    Student's t-test runs when both samples pass Lilliefors and the pair
    passes Levene at the 0.05 level; otherwise Mann-Whitney runs.

    :returns: ``GroupComparison``.
    """
    sr_values = np.asarray(sr_values, dtype=float)
    af_values = np.asarray(af_values, dtype=float)
    normal = (lilliefors(sr_values) >= SIGNIFICANCE
              and lilliefors(af_values) >= SIGNIFICANCE)
    homoscedastic = levene(sr_values, af_values) >= SIGNIFICANCE
    if normal and homoscedastic:
        test_used, p_value = 't', t_test(sr_values, af_values)
    else:
        test_used, p_value = 'mann_whitney', mann_whitney(sr_values,
                                                          af_values)
    LOG.info("%s: normal=%s homoscedastic=%s -> %s (p=%.3g)",
             feature_name, normal, homoscedastic, test_used, p_value)
    return GroupComparison(
        feature_name=feature_name,
        mean_sr=float(sr_values.mean()), sd_sr=float(sr_values.std(ddof=1)),
        mean_af=float(af_values.mean()), sd_af=float(af_values.std(ddof=1)),
        test_used=test_used, p_value=p_value,
        n_sr=int(sr_values.size), n_af=int(af_values.size))


def compare_groups(cohort, feature_name):
    """
    Compare one feature between SR and AF patients.

    :returns: ``GroupComparison``.
    """
    cohort.require_both_classes()
    return compare_samples(cohort.values(feature_name, Outcome.SR),
                           cohort.values(feature_name, Outcome.AF),
                           feature_name)


def compare_features(cohort, feature_names=FEATURE_NAMES):
    """Group comparison of every feature, one row each."""
    return pd.DataFrame([
        vars(compare_groups(cohort, name)) for name in feature_names
    ])


def compare_clinical(cohort):
    """
    Baseline clinical characteristics per group.

    Sex and each AF-duration class are compared with Fisher's exact test
    (class against the rest); age, BMI and LA diameter with the same
    normality- and variance-gated choice as the spectral features.

    :returns: ``DataFrame`` with one row per characteristic.
    """
    labels = cohort.require_both_classes()
    records = [clinical for _, clinical in cohort.patients]
    if all(record is None for record in records):
        log_and_raise_exception("Cohort holds no clinical records",
                                ClassMissing)

    def counts(predicate):
        table = np.zeros((2, 2), dtype=np.int64)
        for label, record in zip(labels, records):
            if record is None:
                continue
            outcome_row = 0 if label == 0 else 1
            hit = predicate(record)
            if hit is None:
                continue
            table[outcome_row, 0 if hit else 1] += 1
        return table

    rows = []
    categorical = [('male', lambda rec: None if rec.sex is None
                    else rec.sex is Sex.MALE)]
    for duration in AfDurationClass:
        categorical.append((
            f'af_duration {duration.value}',
            lambda rec, duration=duration: (
                None if rec.af_duration_class is None
                else rec.af_duration_class is duration)))
    for name, predicate in categorical:
        table = counts(predicate)
        n_sr, n_af = table.sum(axis=1)
        rows.append({
            'characteristic': name, 'kind': 'count',
            'sr': int(table[0, 0]),
            'sr_percent': 100.0 * table[0, 0] / n_sr if n_sr else np.nan,
            'af': int(table[1, 0]),
            'af_percent': 100.0 * table[1, 0] / n_af if n_af else np.nan,
            'test_used': 'fisher', 'p_value': fisher_exact(table),
        })

    for name in CLINICAL_NUMERIC:
        groups = ([], [])
        for label, record in zip(labels, records):
            value = None if record is None else getattr(record, name)
            if value is not None:
                groups[label].append(value)
        comparison = compare_samples(groups[0], groups[1], name)
        rows.append({
            'characteristic': name, 'kind': 'mean_sd',
            'sr': comparison.mean_sr, 'sr_sd': comparison.sd_sr,
            'af': comparison.mean_af, 'af_sd': comparison.sd_af,
            'test_used': comparison.test_used,
            'p_value': comparison.p_value,
        })
    return pd.DataFrame(rows, columns=[
        'characteristic', 'kind', 'sr', 'sr_percent', 'sr_sd', 'af',
        'af_percent', 'af_sd', 'test_used', 'p_value'])
