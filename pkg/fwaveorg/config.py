"""
Module defining configuration loading and precedence.

Values come from three layers: the built-in ``config.yaml`` shipped with
the package, an optional user YAML file, and command-line flags. A flag
wins over the file, which wins over the default.
"""

import copy
import logging
from pathlib import Path

import yaml

from fwaveorg.schema import validate_config
from fwaveorg.utils import BadConfig, log_and_raise_exception, read_yaml

LOG = logging.getLogger(__name__)

DEFAULTS_FILE = Path(__file__).with_name('config.yaml')


def load_defaults():
    """Return the built-in defaults as a fresh dictionary."""
    return read_yaml(DEFAULTS_FILE)


def load_config(config_file=None, overrides=None):
    """
    Build the effective configuration.

    :param config_file: Optional path to a YAML file with the same layout
        as the built-in defaults. Missing sections or keys fall back to
        the defaults.
    :param overrides: Optional ``{section: {key: value}}`` dictionary from
        command-line flags. ``None`` values are ignored.
    :returns: Nested dictionary with every section and key filled in.
    """
    effective = load_defaults()
    sources = {
        (section, key): 'default'
        for section, values in effective.items()
        for key in values
    }

    if config_file is not None:
        try:
            file_data = read_yaml(config_file)
        except OSError as exception:
            log_and_raise_exception(
                f"Unable to read config file {config_file}: {exception}",
                BadConfig)
        except yaml.YAMLError as exception:
            log_and_raise_exception(
                f"Config file {config_file} is not valid YAML: {exception}",
                BadConfig)
        file_data = file_data or {}
        if not isinstance(file_data, dict):
            log_and_raise_exception(
                f"Config file {config_file} must hold a mapping", BadConfig)
        validate_config(file_data)
        _merge(effective, file_data, sources, f'file {config_file}')

    if overrides:
        flags = {
            section: {key: value for key, value in values.items()
                      if value is not None}
            for section, values in overrides.items()
        }
        _merge(effective, flags, sources, 'flag')

    validate_config(effective)
    for (section, key), source in sorted(sources.items()):
        LOG.info("config %s.%s = %r (%s)",
                 section, key, effective[section][key], source)
    return effective


def _merge(target, layer, sources, label):
    for section, values in layer.items():
        if section not in target:
            log_and_raise_exception(
                f"Unknown configuration section '{section}'", BadConfig)
        for key, value in (values or {}).items():
            target[section][key] = copy.deepcopy(value)
            sources[(section, key)] = label
