"""
Configuration Tests

Unit tests for loading the effective configuration from the built-in
defaults, a user YAML file and command-line flags.
"""

import os
import shutil
import tempfile
import unittest

from fwaveorg.config import load_config, load_defaults
from fwaveorg.schema import validate_cohort_spec, validate_config
from fwaveorg.utils import BadConfig


class TestConfigPrecedence(unittest.TestCase):
    """
    Scenario: combining defaults, a config file and flags
    """

    CONFIG = """
        welch:
            renyi_alpha: 2.0
            df_search_band: "3 to 10"
        cv:
            n_repeats: 5
        """

    def setUp(self):
        self.tmp_dir = tempfile.mkdtemp()
        self.config_file = os.path.join(self.tmp_dir, "config.yaml")
        with open(self.config_file, 'w') as _file:
            _file.write(self.CONFIG)

    def tearDown(self):
        shutil.rmtree(self.tmp_dir, ignore_errors=True)

    def test_defaults(self):
        """
        Given no config file and no flags
        Then I should get the built-in defaults
        """
        config = load_config()
        self.assertEqual(config, load_defaults())
        self.assertEqual(config['welch']['window_len'], 4000)
        self.assertEqual(config['welch']['overlap'], 3000)
        self.assertEqual(config['preprocess']['lowpass_order'], 10)
        self.assertEqual(config['cv']['n_folds'], 10)
        self.assertEqual(config['cv']['n_repeats'], 100)
        self.assertEqual(config['synth']['n_sr'], 103)
        self.assertEqual(config['synth']['n_af'], 48)

    def test_file_over_default(self):
        """
        Given a config file
        Then its keys should replace the defaults
        And the other keys should keep their defaults
        """
        config = load_config(self.config_file)
        self.assertEqual(config['welch']['renyi_alpha'], 2.0)
        self.assertEqual(config['welch']['df_search_band'], "3 to 10")
        self.assertEqual(config['welch']['window_len'], 4000)
        self.assertEqual(config['cv']['n_repeats'], 5)
        self.assertEqual(config['cv']['n_folds'], 10)

    def test_flag_over_file(self):
        """
        Given a config file and a flag for the same key
        Then the flag should win
        And flags left as None should be ignored
        """
        config = load_config(
            self.config_file,
            {'cv': {'n_repeats': 3, 'rng_seed': None}})
        self.assertEqual(config['cv']['n_repeats'], 3)
        self.assertEqual(config['cv']['rng_seed'], 0)

    def test_defaults_not_shared(self):
        """
        Changing one effective config should not leak into the next.
        """
        config = load_config()
        config['cv']['n_repeats'] = 1
        self.assertEqual(load_config()['cv']['n_repeats'], 100)


class TestConfigErrors(unittest.TestCase):
    """
    Scenario: invalid configuration input
    """

    def setUp(self):
        self.tmp_dir = tempfile.mkdtemp()
        self.config_file = os.path.join(self.tmp_dir, "config.yaml")

    def tearDown(self):
        shutil.rmtree(self.tmp_dir, ignore_errors=True)

    def write(self, text):
        with open(self.config_file, 'w') as _file:
            _file.write(text)

    def test_unknown_key(self):
        """
        Given a config file with an unknown key
        Then I should get a BadConfig naming the section
        """
        self.write("welch:\n    window_length: 4000\n")
        with self.assertRaises(BadConfig) as context:
            load_config(self.config_file)
        self.assertTrue("welch" in str(context.exception))

    def test_unknown_section(self):
        """
        Given a config file with an unknown section
        Then I should get a BadConfig
        """
        self.write("plotting:\n    dpi: 300\n")
        with self.assertRaises(BadConfig):
            load_config(self.config_file)

    def test_bad_value(self):
        """
        Given a config file with a value outside its range
        Then I should get a BadConfig naming the entry
        """
        self.write("cv:\n    n_folds: 1\n")
        with self.assertRaises(BadConfig) as context:
            load_config(self.config_file)
        self.assertTrue("cv/n_folds" in str(context.exception))

    def test_bad_flag(self):
        """
        Given a flag with an invalid value
        Then I should get a BadConfig
        """
        with self.assertRaises(BadConfig):
            load_config(overrides={'preprocess': {'powerline_method': 'fft'}})

    def test_not_yaml(self):
        """
        Given a file that is not YAML
        Then I should get a BadConfig
        """
        self.write("welch: [unclosed\n")
        with self.assertRaises(BadConfig) as context:
            load_config(self.config_file)
        self.assertTrue("not valid YAML" in str(context.exception))

    def test_not_a_mapping(self):
        """
        Given a YAML file holding a list
        Then I should get a BadConfig
        """
        self.write("- 1\n- 2\n")
        with self.assertRaises(BadConfig) as context:
            load_config(self.config_file)
        self.assertTrue("mapping" in str(context.exception))

    def test_missing_file(self):
        """
        Given a config file that does not exist
        Then I should get a BadConfig
        """
        with self.assertRaises(BadConfig) as context:
            load_config(os.path.join(self.tmp_dir, "missing.yaml"))
        self.assertTrue("Unable to read" in str(context.exception))

    def test_empty_file(self):
        """
        Given an empty config file
        Then I should get the defaults
        """
        self.write("")
        self.assertEqual(load_config(self.config_file), load_defaults())


class TestSchema(unittest.TestCase):
    """
    Scenario: validating bands and cohort specs
    """

    def test_band_forms(self):
        for band in ([3, 12], "[3:12]", "3.5 to 12"):
            validate_config({'welch': {'df_search_band': band}})

    def test_bad_band(self):
        with self.assertRaises(BadConfig):
            validate_config({'welch': {'df_search_band': [3, 12, 20]}})

    def test_cohort_spec(self):
        validate_cohort_spec({'n_sr': 5, 'n_af': 5, 'sr_gamma': [2.2, 0.77]})
        with self.assertRaises(BadConfig):
            validate_cohort_spec({'n_sr': 0})
        with self.assertRaises(BadConfig):
            validate_cohort_spec({'sr_gamma': [2.2]})
        with self.assertRaises(BadConfig):
            validate_cohort_spec({'heart_rate': 200})

    def test_negative_sd(self):
        """
        Given a group distribution with a negative spread
        Then the cohort spec should be rejected
        """
        validate_cohort_spec({'af_f0': [6.1, 0.0]})
        with self.assertRaises(BadConfig):
            validate_cohort_spec({'sr_gamma': [2.2, -0.5]})
