"""
Module defining the on-disk formats.

Signals are CSV files with the header ``sample_index,amplitude_mv`` and a
JSON sidecar of the same stem holding ``patient_id``, ``lead``,
``sampling_rate_hz``, ``stage`` and optionally ``outcome``. Tables are
CSV with a JSON mirror using the same field names. Floats are written
with ``%.17g`` so every value re-parses to the same double.
"""

import csv
import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from fwaveorg.cohort import Cohort, clinical_row
from fwaveorg.core_model import (FEATURE_NAMES, ClinicalRecord, EcgRecord,
                                 Outcome, PatientFeatureVector,
                                 SpectralFeatures, Stage)
from fwaveorg.utils import FormatError, log_and_raise_exception

LOG = logging.getLogger(__name__)

SIGNAL_HEADER = ['sample_index', 'amplitude_mv']
SIDECAR_KEYS = ('patient_id', 'lead', 'sampling_rate_hz', 'stage')
FLOAT_FORMAT = '%.17g'
FEATURE_TABLE_COLUMNS = ['patient_id', 'outcome', 'n_segments', 'status',
                         *FEATURE_NAMES]
CLINICAL_COLUMNS = ['patient_id', 'sex', 'age', 'af_duration_class', 'bmi',
                    'la_diameter']


def sidecar_path(path):
    return Path(path).with_suffix('.json')


def read_signal_csv(path):
    """
    Read the samples of a signal CSV.

    :param path: CSV file.
    :returns: Float numpy array.
    :raises FormatError: naming the offending line.
    """
    values = []
    try:
        with open(path, newline='') as _file:
            reader = csv.reader(_file)
            header = next(reader, None)
            if header is None:
                log_and_raise_exception(f"{path}: file is empty", FormatError)
            if [token.strip() for token in header] != SIGNAL_HEADER:
                log_and_raise_exception(
                    f"{path}:1: expected header "
                    f"'{','.join(SIGNAL_HEADER)}', got '{','.join(header)}'",
                    FormatError)
            for line, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 2:
                    log_and_raise_exception(
                        f"{path}:{line}: expected 2 fields, got {len(row)}",
                        FormatError)
                try:
                    index, value = int(row[0]), float(row[1])
                except ValueError:
                    log_and_raise_exception(
                        f"{path}:{line}: cannot parse {row}", FormatError)
                if index != len(values):
                    log_and_raise_exception(
                        f"{path}:{line}: sample_index {index}, expected "
                        f"{len(values)}", FormatError)
                values.append(value)
    except OSError as exception:
        log_and_raise_exception(f"Unable to read {path}: {exception}",
                                FormatError)
    return np.array(values, dtype=float)


def read_sidecar(path):
    """Read and check the JSON sidecar of a signal file."""
    side = sidecar_path(path)
    try:
        with open(side) as _file:
            meta = json.load(_file)
    except OSError as exception:
        log_and_raise_exception(f"Unable to read sidecar {side}: {exception}",
                                FormatError)
    except json.JSONDecodeError as exception:
        log_and_raise_exception(
            f"{side}:{exception.lineno}: invalid JSON: {exception.msg}",
            FormatError)
    if not isinstance(meta, dict):
        log_and_raise_exception(f"{side}: expected a JSON object",
                                FormatError)
    missing = [key for key in SIDECAR_KEYS if key not in meta]
    if missing:
        log_and_raise_exception(f"{side}: missing keys {missing}",
                                FormatError)
    try:
        meta['stage'] = Stage(meta['stage'])
        meta['outcome'] = Outcome(meta.get('outcome') or 'unknown')
        meta['sampling_rate_hz'] = float(meta['sampling_rate_hz'])
    except (TypeError, ValueError) as exception:
        log_and_raise_exception(f"{side}: {exception}", FormatError)
    return meta


def read_record(path):
    """
    Read a signal file and its sidecar.

    :returns: ``(EcgRecord, Outcome)``.
    """
    meta = read_sidecar(path)
    samples = read_signal_csv(path)
    record = EcgRecord(samples, meta['sampling_rate_hz'],
                       lead=str(meta['lead']),
                       patient_id=str(meta['patient_id']),
                       stage=meta['stage'])
    return record, meta['outcome']


def write_json(data, path):
    """Write ``data`` as indented key-sorted JSON; NaN becomes ``null``."""
    with open(path, 'w') as _file:
        json.dump(_plain(data), _file, indent=2, sort_keys=True,
                  allow_nan=False)
        _file.write('\n')


def write_record(record, directory, outcome=None, name=None):
    """
    Write ``<name>.csv`` and its sidecar ``<name>.json`` to ``directory``.

    :param name: File stem; defaults to the patient id.
    :returns: Path of the CSV file.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f'{name or record.patient_id}.csv'
    with open(path, 'w', newline='') as _file:
        writer = csv.writer(_file, lineterminator='\n')
        writer.writerow(SIGNAL_HEADER)
        for index, value in enumerate(record.samples):
            writer.writerow([index, FLOAT_FORMAT % value])
    meta = {
        'patient_id': record.patient_id,
        'lead': record.lead,
        'sampling_rate_hz': record.sampling_rate,
        'stage': record.stage.value,
    }
    if outcome is not None and Outcome(outcome) is not Outcome.UNKNOWN:
        meta['outcome'] = Outcome(outcome).value
    write_json(meta, sidecar_path(path))
    return path


def _plain(value):
    """Turn numpy scalars and NaN into JSON-ready values."""
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def write_table(frame, directory, name, mirror=True):
    """
    Write ``<name>.csv`` and, with ``mirror``, the JSON mirror
    ``<name>.json``.

    :returns: Path of the CSV file.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f'{name}.csv'
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    if not mirror:
        return path
    rows = [
        {column: _plain(value) for column, value in zip(frame.columns, row)}
        for row in frame.itertuples(index=False, name=None)
    ]
    write_json(rows, directory / f'{name}.json')
    return path


def read_table(path, required=()):
    """Read a CSV table, checking that ``required`` columns exist."""
    try:
        frame = pd.read_csv(path, float_precision='round_trip',
                            dtype={'patient_id': str})
    except OSError as exception:
        log_and_raise_exception(f"Unable to read {path}: {exception}",
                                FormatError)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exception:
        log_and_raise_exception(f"{path}: {exception}", FormatError)
    missing = [column for column in required if column not in frame]
    if missing:
        log_and_raise_exception(f"{path}: missing columns {missing}",
                                FormatError)
    return frame


def feature_row(patient_id, outcome, vector=None, error=None):
    """One feature-table row; failed patients keep empty feature cells."""
    row = {'patient_id': patient_id, 'outcome': Outcome(outcome).value,
           'n_segments': 0, 'status': 'ok' if vector else 'failed'}
    if vector is not None:
        row['n_segments'] = vector.n_segments
        row.update(vector.features.as_dict())
    else:
        LOG.info("Row '%s' marked failed: %s", patient_id, error)
        row.update({name: np.nan for name in FEATURE_NAMES})
    return row


def feature_frame(rows):
    return pd.DataFrame(rows, columns=FEATURE_TABLE_COLUMNS)


def read_feature_table(path, clinical=None):
    """
    Read a feature table into a ``Cohort``.

    Rows not marked ``ok`` are left out.

    :param clinical: Optional ``{patient_id: ClinicalRecord}``.
    :raises FormatError: when the outcome or a feature column is missing.
    """
    frame = read_table(path, required=['patient_id', 'outcome',
                                       *FEATURE_NAMES])
    if 'status' in frame:
        failed = frame['status'] != 'ok'
        if failed.any():
            LOG.warning("%s: skipping %d failed row(s)", path, failed.sum())
        frame = frame[~failed]
    patients = []
    for _, row in frame.iterrows():
        try:
            outcome = Outcome(row['outcome'] if isinstance(row['outcome'], str)
                              else 'unknown')
        except ValueError:
            log_and_raise_exception(
                f"{path}: patient '{row['patient_id']}' has outcome "
                f"{row['outcome']!r}; expected SR, AF or unknown",
                FormatError)
        n_segments = int(row['n_segments']) if 'n_segments' in row else 1
        vector = PatientFeatureVector(
            patient_id=row['patient_id'],
            features=SpectralFeatures.from_dict(row),
            n_segments=n_segments, outcome=outcome)
        record = (clinical or {}).get(row['patient_id'])
        patients.append((vector, record))
    return Cohort(tuple(patients))


def _optional(value, cast=float):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return cast(value)


def read_clinical_table(path):
    """
    Read a clinical table.

    :returns: ``{patient_id: ClinicalRecord}``.
    """
    frame = read_table(path, required=['patient_id'])
    frame = frame.astype(object).where(frame.notna(), None)
    records = {}
    for _, row in frame.iterrows():
        try:
            records[row['patient_id']] = ClinicalRecord(
                patient_id=row['patient_id'],
                sex=_optional(row.get('sex'), str),
                age=_optional(row.get('age')),
                af_duration_class=_optional(row.get('af_duration_class'), str),
                bmi=_optional(row.get('bmi')),
                la_diameter=_optional(row.get('la_diameter')))
        except ValueError as exception:
            log_and_raise_exception(
                f"{path}: patient '{row['patient_id']}': {exception}",
                FormatError)
    return records


def clinical_frame(records):
    """Clinical records as a table with the clinical columns."""
    return pd.DataFrame(
        [{'patient_id': record.patient_id, **clinical_row(record)}
         for record in records],
        columns=CLINICAL_COLUMNS)
