"""
JSON schema for validating configuration files and cohort specs.
"""

import jsonschema

from fwaveorg.utils import BadConfig, log_and_raise_exception


def validate_config(config_data):
    """
    Validate configuration data against the built-in schema.

    If the data is invalid, it will raise a ``BadConfig`` carrying the
    path of the offending entry.

    If no exceptions are raised, then the data is valid.

    :param config_data: data to validate.
    """
    _validate(config_data, CONFIG_SCHEMA, 'configuration')


def validate_cohort_spec(spec_data):
    """
    Validate a synthetic cohort spec (the ``synth`` block on its own).

    :param spec_data: data to validate.
    """
    _validate(spec_data, SYNTH_SCHEMA, 'cohort spec')


def _validate(data, schema, what):
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exception:
        location = '/'.join(str(part) for part in exception.absolute_path)
        log_and_raise_exception(
            f"Invalid {what} at '{location or '<root>'}': "
            f"{exception.message}", BadConfig)


POSITIVE = {'type': 'number', 'exclusiveMinimum': 0}
NON_NEGATIVE = {'type': 'number', 'minimum': 0}

BAND_SCHEMA = {
    'oneOf': [
        {
            'type': 'array',
            'items': NON_NEGATIVE,
            'minItems': 2,
            'maxItems': 2,
        },
        {
            'type': 'string',
            'anyOf': [
                {'pattern': r'^\s*\[[0-9]*\.?[0-9]+:[0-9]*\.?[0-9]+\]\s*$'},
                {'pattern': r'^\s*[0-9]*\.?[0-9]+ to [0-9]*\.?[0-9]+\s*$'},
            ]
        }
    ]
}

# (mean, sd) pair of a group distribution
MOMENTS_SCHEMA = {
    'type': 'array',
    'prefixItems': [{'type': 'number'}, NON_NEGATIVE],
    'items': {'type': 'number'},
    'minItems': 2,
    'maxItems': 2,
}

PREPROCESS_SCHEMA = {
    'type': 'object',
    'properties': {
        'baseline_cutoff': POSITIVE,
        'baseline_order': {'type': 'integer', 'minimum': 1},
        'mains_freq': POSITIVE,
        'lowpass_cutoff': POSITIVE,
        'lowpass_order': {'type': 'integer', 'minimum': 1},
        'notch_harmonics': {
            'oneOf': [{'type': 'null'}, {'type': 'integer', 'minimum': 1}]},
        'notch_q': POSITIVE,
        'powerline_method': {'enum': ['swt', 'notch']},
        'wavelet': {'type': 'string'},
    },
    'additionalProperties': False,
}

CANCELLATION_SCHEMA = {
    'type': 'object',
    'properties': {
        'window_pre': POSITIVE,
        'window_post': POSITIVE,
        'rr_fraction': {'type': 'number', 'exclusiveMinimum': 0,
                        'maximum': 1},
        'refractory': POSITIVE,
        'strict': {'type': 'boolean'},
    },
    'additionalProperties': False,
}

WELCH_SCHEMA = {
    'type': 'object',
    'properties': {
        'window_len': {'type': 'integer', 'minimum': 2},
        'overlap': {'type': 'integer', 'minimum': 0},
        'reference_rate': POSITIVE,
        'fft_resolution': POSITIVE,
        'df_search_band': BAND_SCHEMA,
        'renyi_alpha': NON_NEGATIVE,
    },
    'additionalProperties': False,
}

CV_SCHEMA = {
    'type': 'object',
    'properties': {
        'n_folds': {'type': 'integer', 'minimum': 2},
        'n_repeats': {'type': 'integer', 'minimum': 1},
        'rng_seed': {'type': 'integer', 'minimum': 0},
        'priors': {'enum': ['empirical', 'equal']},
        'jobs': {'type': 'integer', 'minimum': 1},
    },
    'additionalProperties': False,
}

SYNTH_SCHEMA = {
    'type': 'object',
    'properties': {
        'n_sr': {'type': 'integer', 'minimum': 1},
        'n_af': {'type': 'integer', 'minimum': 1},
        'sr_f0': MOMENTS_SCHEMA,
        'af_f0': MOMENTS_SCHEMA,
        'sr_gamma': MOMENTS_SCHEMA,
        'af_gamma': MOMENTS_SCHEMA,
        'sr_background': MOMENTS_SCHEMA,
        'af_background': MOMENTS_SCHEMA,
        'amplitude': POSITIVE,
        'noise_snr_db': {'oneOf': [{'type': 'null'}, {'type': 'number'}]},
        'heart_rate': {'type': 'number', 'minimum': 40, 'maximum': 180},
        'rr_irregularity': {'type': 'number', 'minimum': 0,
                            'exclusiveMaximum': 1},
        'duration': POSITIVE,
        'sampling_rate': POSITIVE,
        'rng_seed': {'type': 'integer', 'minimum': 0},
        'sampling': {'enum': ['quantile', 'random']},
        'with_clinical': {'type': 'boolean'},
    },
    'additionalProperties': False,
}

CONFIG_SCHEMA = {
    'type': 'object',
    'properties': {
        'preprocess': PREPROCESS_SCHEMA,
        'cancellation': CANCELLATION_SCHEMA,
        'welch': WELCH_SCHEMA,
        'cv': CV_SCHEMA,
        'synth': SYNTH_SCHEMA,
    },
    'additionalProperties': False,
}
