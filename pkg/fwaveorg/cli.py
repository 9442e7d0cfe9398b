"""
Command-line entry point.

Subcommands: ``preprocess``, ``extract-fwaves``, ``features``, ``stats``,
``evaluate`` and ``synth``. Exit codes: 0 success, 2 input or format
error, 3 data or validation error, 4 internal error.
"""

import argparse
import itertools
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import pandas as pd

from fwaveorg import __version__
from fwaveorg.cohort import compare_clinical, compare_features
from fwaveorg.config import load_config
from fwaveorg.core_model import TF_BAND, Outcome
from fwaveorg.io import (clinical_frame, feature_frame, feature_row,
                         read_clinical_table, read_feature_table,
                         read_record, sidecar_path, write_json, write_record,
                         write_table)
from fwaveorg.learn import (CvConfig, compare_models, repeated_cv,
                            sequential_forward_selection)
from fwaveorg.pipeline import PipelineSettings, process_records, to_fwave
from fwaveorg.preprocess import describe, preprocess
from fwaveorg.spectral import averaged_aligned_spectrum
from fwaveorg.synth import CohortSpec, synth_cohort_records
from fwaveorg.utils import (DataError, FormatError, FwaveError,
                            log_and_raise_exception)

LOG = logging.getLogger(__name__)

LOG_FORMAT = '%(levelname)s %(name)s: %(message)s'
DEFAULT_CANDIDATES = ('f0', 'gamma', 'O', 'F_TF', 'S_TF', 'R_TF', 'C0_TF')


def setup_logging(verbosity=0):
    """
    Configure the root logger from ``-v`` flags, falling back to the
    ``FWAVE_LOG`` environment variable, then to WARNING.
    """
    if verbosity:
        level = logging.DEBUG if verbosity > 1 else logging.INFO
    else:
        name = os.environ.get('FWAVE_LOG', 'WARNING').upper()
        level = logging.getLevelName(name)
        if not isinstance(level, int):
            level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr,
                        force=True)


def input_files(paths):
    """
    Expand the input arguments into signal files.

    Directories contribute every ``*.csv`` with a JSON sidecar.
    """
    files = []
    for path in map(Path, paths):
        if path.is_dir():
            files.extend(sorted(
                item for item in path.glob('*.csv')
                if sidecar_path(item).is_file()))
        else:
            files.append(path)
    if not files:
        log_and_raise_exception("No input signal files given", FormatError)
    return files


def _config(args, **overrides):
    return load_config(getattr(args, 'config', None), overrides)


def _jobs(args, config):
    return args.jobs or config['cv']['jobs']


def _pipeline_overrides(args):
    return {'preprocess': {'powerline_method': args.powerline,
                           'mains_freq': args.mains}}


def cmd_preprocess(args):
    """Filter raw signals and write them with a processing log."""
    config = _config(args, **_pipeline_overrides(args))
    settings = PipelineSettings.from_config(config)
    entries = []
    for path in input_files(args.inputs):
        record, outcome = read_record(path)
        cleaned = preprocess(record, settings.preprocess)
        out = write_record(cleaned, args.output_dir, outcome, path.stem)
        entries.append({
            'input': str(path), 'output': out.name,
            'patient_id': record.patient_id,
            'n_samples': len(record),
            'duration_s': record.duration,
            'too_short_for_features': record.too_short_for_features,
            'filters': describe(settings.preprocess, record.sampling_rate),
        })
    write_json({'version': __version__, 'records': entries},
               Path(args.output_dir) / 'preprocess_log.json')


def cmd_extract_fwaves(args):
    """Cancel QRST complexes and write f-wave signals."""
    config = _config(args, **_pipeline_overrides(args))
    settings = PipelineSettings.from_config(config)
    entries = []
    for path in input_files(args.inputs):
        record, outcome = read_record(path)
        fwave = to_fwave(record, settings)
        out = write_record(fwave, args.output_dir, outcome, path.stem)
        entries.append({
            'input': str(path), 'output': out.name,
            'patient_id': record.patient_id,
            'input_stage': record.stage.value,
            'too_short_for_features': record.too_short_for_features,
            'cancellation': asdict(settings.cancellation),
        })
    write_json({'version': __version__, 'records': entries},
               Path(args.output_dir) / 'extract_fwaves_log.json')


def spectra_frames(results):
    """
    Per-patient mean spectra over 0-25 Hz, and the DF-aligned mean
    spectrum of each outcome group.
    """
    rows = []
    groups = {}
    for result in results:
        spec = result.spectrum
        mask = spec.frequencies <= TF_BAND.f_upper + 1e-9
        rows.append(pd.DataFrame({
            'patient_id': result.patient_id,
            'frequency_hz': spec.frequencies[mask],
            'psd': spec.values[mask],
        }))
        groups.setdefault(result.vector.outcome, []).append(result)
    aligned = []
    for outcome in Outcome:
        members = groups.get(outcome)
        if not members:
            continue
        frame = averaged_aligned_spectrum(
            [member.spectrum for member in members],
            [member.vector.features.f0 for member in members])
        frame.insert(0, 'outcome', outcome.value)
        aligned.append(frame)
    return (pd.concat(rows, ignore_index=True),
            pd.concat(aligned, ignore_index=True))


def cmd_features(args):
    """
    Run the full pipeline and write the per-patient feature table.

    Unreadable inputs get a failed row named after the file stem.
    """
    config = _config(args, **_pipeline_overrides(args))
    settings = PipelineSettings.from_config(config)
    entries, records, outcomes = [], [], []
    for path in input_files(args.inputs):
        try:
            record, outcome = read_record(path)
        except (FormatError, DataError) as exception:
            LOG.warning("Cannot read '%s': %s", path, exception)
            entries.append((path.stem, Outcome.UNKNOWN, str(exception)))
            continue
        entries.append((record.patient_id, outcome, None))
        records.append(record)
        outcomes.append(outcome)
    results = iter(process_records(records, settings, outcomes,
                                   _jobs(args, config)))
    rows, done = [], []
    for patient_id, outcome, read_error in entries:
        result, error = (None, read_error) if read_error else next(results)
        if result is not None:
            done.append(result)
        rows.append(feature_row(patient_id, outcome,
                                result.vector if result else None, error))
    write_table(feature_frame(rows), args.output_dir, 'features')
    if not done:
        log_and_raise_exception("Every patient failed", DataError)
    if len(done) < len(entries):
        LOG.warning("%d of %d patient(s) failed", len(entries) - len(done),
                    len(entries))
    spectra, aligned = spectra_frames(done)
    write_table(spectra, args.output_dir, 'spectra', mirror=False)
    write_table(aligned, args.output_dir, 'spectra_aligned', mirror=False)


def _cohort(args):
    clinical = (read_clinical_table(args.clinical)
                if getattr(args, 'clinical', None) else None)
    cohort = read_feature_table(args.features, clinical).labeled()
    cohort.require_both_classes()
    return cohort, clinical


def cmd_stats(args):
    """Write the group-comparison tables."""
    cohort, clinical = _cohort(args)
    write_table(compare_features(cohort), args.output_dir, 'table2')
    if clinical is not None:
        write_table(compare_clinical(cohort), args.output_dir, 'table1')


def parse_models(values):
    """``['gamma', 'gamma,F_TF', 'auto']`` to tuples of feature names."""
    models = []
    for value in values or ['gamma']:
        names = tuple(name.strip() for name in value.split(',')
                      if name.strip())
        if not names:
            log_and_raise_exception(f"Empty model '{value}'", FormatError)
        models.append(names)
    return models


def cmd_evaluate(args):
    """Cross-validate the requested models and compare them pairwise."""
    config = _config(args, cv={'rng_seed': args.seed,
                               'n_repeats': args.repeats,
                               'n_folds': args.folds,
                               'priors': args.priors})
    cfg = CvConfig.from_dict({**config['cv'], 'jobs': _jobs(args, config)})
    cohort, _ = _cohort(args)
    reports = {}
    selection = None
    for names in parse_models(args.model):
        if names == ('auto',):
            candidates = (parse_models([args.candidates])[0]
                          if args.candidates else DEFAULT_CANDIDATES)
            selection = sequential_forward_selection(cohort, candidates, cfg)
            reports['auto'] = selection.evaluation
        else:
            reports['+'.join(names)] = repeated_cv(cohort, names, cfg)

    write_table(pd.DataFrame([report.summary(name)
                              for name, report in reports.items()]),
                args.output_dir, 'evaluation')
    per_repeat = []
    roc = []
    for name, report in reports.items():
        per_repeat.append(report.per_repeat.assign(model=name))
        roc.append(report.roc_frame().assign(model=name))
    write_table(pd.concat(per_repeat, ignore_index=True), args.output_dir,
                'per_repeat', mirror=False)
    write_table(pd.concat(roc, ignore_index=True), args.output_dir, 'roc',
                mirror=False)
    if selection is not None:
        write_table(selection.frame(), args.output_dir, 'selection')
        LOG.info("Most frequent selected set: %s",
                 selection.most_frequent_set)
    comparisons = []
    for (name_a, report_a), (name_b, report_b) in itertools.combinations(
            reports.items(), 2):
        _, summary = compare_models(report_a, report_b)
        summary.update(model_a=name_a, model_b=name_b)
        comparisons.append(summary)
    if comparisons:
        write_table(pd.DataFrame(comparisons), args.output_dir, 'mcnemar')


def cmd_synth(args):
    """Write a synthetic cohort: signals, truth sidecars and a manifest."""
    config = _config(args, synth={'n_sr': args.n_sr, 'n_af': args.n_af,
                                  'rng_seed': args.seed,
                                  'duration': args.duration,
                                  'noise_snr_db': args.snr_db,
                                  'with_clinical': args.with_clinical})
    spec = CohortSpec.from_dict(config['synth'])
    out = Path(args.output_dir)
    patients = []
    clinical = []
    for plan, ecg in synth_cohort_records(spec):
        signal = write_record(ecg.raw, out, plan.outcome)
        truth = out / f'{plan.patient_id}_truth.json'
        write_json({
            'patient_id': plan.patient_id,
            'outcome': plan.outcome.value,
            'fwave': asdict(plan.params),
            'r_peaks': ecg.peaks.indices.tolist(),
        }, truth)
        patients.append({'patient_id': plan.patient_id,
                         'outcome': plan.outcome.value,
                         'signal': signal.name, 'truth': truth.name})
        if plan.clinical is not None:
            clinical.append(plan.clinical)
    if clinical:
        write_table(clinical_frame(clinical), out, 'clinical', mirror=False)
    write_json({'version': __version__, 'spec': asdict(spec),
                'patients': patients}, out / 'manifest.json')


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path,
                        help='YAML file overriding the built-in defaults')
    common.add_argument('-o', '--output-dir', type=Path, default=Path('.'),
                        help='directory receiving the outputs')
    common.add_argument('--jobs', type=int, default=None,
                        help='worker processes')
    common.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for INFO, -vv for DEBUG')

    signals = argparse.ArgumentParser(add_help=False)
    signals.add_argument('inputs', nargs='*',
                         help='signal CSV files or directories')
    signals.add_argument('--powerline', choices=['swt', 'notch'])
    signals.add_argument('--mains', type=float, help='mains frequency, Hz')

    parser = argparse.ArgumentParser(
        prog='fwaveorg',
        description='Spectral organization of atrial fibrillatory waves')
    parser.add_argument('--version', action='version',
                        version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    for name, handler, text in (
            ('preprocess', cmd_preprocess, 'denoise raw ECG signals'),
            ('extract-fwaves', cmd_extract_fwaves,
             'cancel ventricular activity'),
            ('features', cmd_features, 'compute per-patient features')):
        sub = commands.add_parser(name, parents=[common, signals], help=text)
        sub.set_defaults(handler=handler)

    sub = commands.add_parser('stats', parents=[common],
                              help='compare SR and AF groups')
    sub.add_argument('features', type=Path, help='feature table CSV')
    sub.add_argument('--clinical', type=Path, help='clinical table CSV')
    sub.set_defaults(handler=cmd_stats)

    sub = commands.add_parser('evaluate', parents=[common],
                              help='cross-validate LDA models')
    sub.add_argument('features', type=Path, help='feature table CSV')
    sub.add_argument('--model', action='append',
                     help="comma-separated features, or 'auto'; repeatable")
    sub.add_argument('--candidates',
                     help="comma-separated candidates for 'auto'")
    sub.add_argument('--seed', type=int)
    sub.add_argument('--repeats', type=int)
    sub.add_argument('--folds', type=int)
    sub.add_argument('--clinical', type=Path,
                     help='clinical table CSV, for clinical model variables')
    sub.add_argument('--priors', choices=['empirical', 'equal'])
    sub.set_defaults(handler=cmd_evaluate)

    sub = commands.add_parser('synth', parents=[common],
                              help='write a synthetic cohort')
    sub.add_argument('--spec', type=Path, dest='config',
                     help="YAML file with a 'synth' section")
    sub.add_argument('--n-sr', type=int)
    sub.add_argument('--n-af', type=int)
    sub.add_argument('--seed', type=int)
    sub.add_argument('--duration', type=float, help='seconds')
    sub.add_argument('--snr-db', type=float)
    sub.add_argument('--with-clinical', action='store_true', default=None)
    sub.set_defaults(handler=cmd_synth)
    return parser


def main(argv=None):
    """Run the command line; return the exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    LOG.info("fwaveorg %s: %s", __version__, args.command)
    try:
        args.handler(args)
    except FwaveError as exception:
        print(f"fwaveorg: error: {exception}", file=sys.stderr)
        return exception.exit_code
    except Exception as exception:  # pylint: disable=broad-except
        LOG.exception("Internal error")
        print(f"fwaveorg: internal error: {exception}", file=sys.stderr)
        return FwaveError.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
