"""
Pipeline Tests

Unit tests for running records through every stage.
"""

import unittest

import numpy as np

from fwaveorg.core_model import EcgRecord, Outcome, Stage
from fwaveorg.pipeline import (PipelineSettings, process_record,
                               process_records, to_fwave)
from fwaveorg.config import load_config
from fwaveorg.synth import FWaveParams, synth_ecg, synth_fwave

FS = 977.0


class TestPipeline(unittest.TestCase):
    """
    Scenario: processing single records
    """

    def test_raw_record(self):
        """
        Given a raw synthetic ECG
        Then the patient vector should recover the true f0
        """
        ecg = synth_ecg(FWaveParams(f0=7.0, gamma_true=2.0), duration=20.0,
                        seed=1, patient_id='P1')
        result = process_record(ecg.raw, outcome=Outcome.AF)
        self.assertEqual(result.patient_id, 'P1')
        self.assertEqual(result.vector.n_segments, 3)
        self.assertIs(result.vector.outcome, Outcome.AF)
        self.assertAlmostEqual(result.vector.features.f0, 7.0, delta=0.15)
        self.assertEqual(len(result.segment_features), 3)
        self.assertEqual(result.spectrum.f_step, 0.1)

    def test_fwave_record(self):
        """
        Given a record already at the f-wave stage
        Then it should go straight to feature extraction
        """
        record = synth_fwave(FWaveParams(f0=5.0), duration=6.5, seed=2)
        self.assertIs(to_fwave(record), record)
        result = process_record(record)
        self.assertEqual(result.vector.features.f0, 5.0)
        self.assertEqual(result.vector.n_segments, 1)

    def test_settings_from_config(self):
        config = load_config(overrides={'welch': {'renyi_alpha': 2.0},
                                        'preprocess': {'mains_freq': 60.0}})
        settings = PipelineSettings.from_config(config)
        self.assertEqual(settings.welch.renyi_alpha, 2.0)
        self.assertEqual(settings.preprocess.mains_freq, 60.0)
        self.assertEqual(settings.cancellation.window_post, 0.45)

    def test_failures_collected(self):
        """
        Given one good and one too-short record
        Then the good one should be processed
        And the short one should carry an error message
        """
        good = synth_fwave(FWaveParams(), duration=7.0, seed=3,
                           patient_id='GOOD')
        short = EcgRecord(np.zeros(int(3 * FS)), FS, patient_id='SHORT',
                          stage=Stage.FWAVE)
        with self.assertLogs('fwaveorg.pipeline', level='WARNING'):
            results = process_records([good, short],
                                      outcomes=['SR', 'AF'])
        self.assertEqual(results[0][0].patient_id, 'GOOD')
        self.assertIsNone(results[0][1])
        self.assertIsNone(results[1][0])
        self.assertTrue("SHORT" in results[1][1])
