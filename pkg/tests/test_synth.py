"""
Synthetic Data Tests

Unit tests for the f-wave, ECG and cohort generators.
"""

import unittest

import numpy as np

from fwaveorg.core_model import Outcome, Stage
from fwaveorg.synth import (ArtifactSpec, CohortSpec, FWaveParams,
                            beat_positions, plan_cohort, qrst_waveform,
                            synth_cohort, synth_cohort_records, synth_ecg,
                            synth_fwave, truth_frame)
from fwaveorg.utils import BadConfig, BadParams

FS = 977.0


class TestFWave(unittest.TestCase):
    """
    Scenario: generating f-waves
    """

    def test_deterministic(self):
        """
        Given the same seed
        Then I should get bit-identical samples
        """
        params = FWaveParams(freq_jitter=0.2, phase_noise=0.3)
        first = synth_fwave(params, duration=10.0, seed=3)
        second = synth_fwave(params, duration=10.0, seed=3)
        np.testing.assert_array_equal(first.samples, second.samples)
        third = synth_fwave(params, duration=10.0, seed=4)
        self.assertFalse(np.array_equal(first.samples, third.samples))
        self.assertIs(first.stage, Stage.FWAVE)
        self.assertEqual(len(first), 9770)

    def test_harmonic_amplitudes(self):
        """
        Harmonic k has amplitude a * exp(-k * gamma / 2).
        """
        params = FWaveParams(amplitude=0.1, gamma_true=2.0, n_harmonics=3)
        np.testing.assert_allclose(params.harmonic_amplitudes(),
                                   [0.1, 0.1 * np.exp(-1), 0.1 * np.exp(-2)])

    def test_power(self):
        """
        Without modulation the mean power is the sum of a_k^2 / 2.
        """
        params = FWaveParams(f0=6.0, amplitude=0.05, gamma_true=2.0)
        record = synth_fwave(params, duration=10.0, seed=1)
        expected = np.sum(params.harmonic_amplitudes() ** 2) / 2
        self.assertAlmostEqual(np.mean(record.samples ** 2) / expected, 1.0,
                               delta=0.01)

    def test_bad_params(self):
        for params in (FWaveParams(f0=2.0), FWaveParams(n_harmonics=0),
                       FWaveParams(amplitude=0.0),
                       FWaveParams(freq_jitter=-1.0)):
            with self.assertRaises(BadParams):
                synth_fwave(params, duration=1.0)
        with self.assertRaises(BadParams):
            synth_fwave(FWaveParams(f0=10.0, n_harmonics=20), duration=1.0,
                        sampling_rate=300.0)


class TestBackground(unittest.TestCase):
    """
    Scenario: adding a broadband share to the f-waves
    """

    def test_share(self):
        """
        Given a background share of 0.3
        Then the harmonics should stay as without it
        And the added part should carry 0.3 / 0.7 of their power
        And it should hold no power outside 3-25 Hz
        """
        plain = synth_fwave(FWaveParams(), duration=10.0, seed=1)
        mixed = synth_fwave(FWaveParams(background=0.3), duration=10.0,
                            seed=1)
        added = mixed.samples - plain.samples
        harmonic_power = np.sum(FWaveParams().harmonic_amplitudes() ** 2) / 2
        self.assertAlmostEqual(np.mean(added ** 2),
                               harmonic_power * 0.3 / 0.7, places=12)
        spectrum = np.abs(np.fft.rfft(added))
        freqs = np.fft.rfftfreq(added.size, 1 / FS)
        outside = (freqs < 2.9) | (freqs > 25.1)
        self.assertLess(spectrum[outside].max(), 1e-9 * spectrum.max())

    def test_bad_share(self):
        for share in (-0.1, 1.0):
            with self.assertRaises(BadParams):
                synth_fwave(FWaveParams(background=share), duration=1.0)


class TestEcg(unittest.TestCase):
    """
    Scenario: mixing f-waves, QRST complexes and artifacts
    """

    def test_additive(self):
        """
        Given a synthetic ECG
        Then the raw samples are exactly the sum of its components
        """
        ecg = synth_ecg(FWaveParams(), duration=10.0, seed=5,
                        artifacts=ArtifactSpec(drift_amplitude=0.2,
                                               mains_amplitude=0.05,
                                               noise_snr_db=10.0))
        np.testing.assert_array_equal(
            ecg.raw.samples,
            ecg.fwave.samples + ecg.ventricular + ecg.artifacts)
        self.assertIs(ecg.raw.stage, Stage.RAW)

    def test_deterministic(self):
        first = synth_ecg(FWaveParams(), duration=10.0, seed=8)
        second = synth_ecg(FWaveParams(), duration=10.0, seed=8)
        np.testing.assert_array_equal(first.raw.samples, second.raw.samples)
        np.testing.assert_array_equal(first.peaks.indices,
                                      second.peaks.indices)

    def test_noise_level(self):
        """
        White noise sits the requested number of dB below the f-waves.
        """
        ecg = synth_ecg(FWaveParams(), duration=30.0, seed=2,
                        artifacts=ArtifactSpec(noise_snr_db=20.0))
        ratio = (np.mean(ecg.fwave.samples ** 2)
                 / np.mean(ecg.artifacts ** 2))
        self.assertAlmostEqual(10 * np.log10(ratio), 20.0, delta=0.2)

    def test_beats(self):
        """
        Beats keep their windows inside the record and their RR
        intervals within the irregularity range.
        """
        rng = np.random.default_rng(0)
        positions = beat_positions(60.0, 0.2, 30.0, FS, rng)
        intervals = np.diff(positions) / FS
        self.assertGreaterEqual(positions[0], round(0.1 * FS))
        self.assertLessEqual(positions[-1] + 0.45 * FS, 30 * FS)
        self.assertTrue(np.all(intervals >= 0.8 - 0.002))
        self.assertTrue(np.all(intervals <= 1.2 + 0.002))
        with self.assertRaises(BadParams):
            beat_positions(200.0, 0.1, 30.0, FS, rng)
        with self.assertRaises(BadParams):
            beat_positions(60.0, 1.0, 30.0, FS, rng)

    def test_qrst_waveform(self):
        """The R wave peaks at 1 mV at the R time."""
        self.assertAlmostEqual(float(qrst_waveform([0.0])[0]), 1.0, places=2)
        self.assertLess(abs(float(qrst_waveform([0.6])[0])), 1e-3)


class TestCohort(unittest.TestCase):
    """
    Scenario: planning and synthesizing labeled cohorts
    """

    def test_plan(self):
        """
        Given a cohort spec
        Then SR patients come first with ids SR001...
        And quantile sampling reproduces the group means
        """
        spec = CohortSpec(n_sr=20, n_af=10, with_clinical=True)
        plans = plan_cohort(spec)
        self.assertEqual(len(plans), 30)
        self.assertEqual(plans[0].patient_id, 'SR001')
        self.assertEqual(plans[20].patient_id, 'AF001')
        self.assertIs(plans[25].outcome, Outcome.AF)
        self.assertIsNotNone(plans[0].clinical)
        gammas = [plan.params.gamma_true for plan in plans[:20]]
        self.assertAlmostEqual(np.mean(gammas), 2.20, places=6)
        self.assertEqual(len({plan.seed for plan in plans}), 30)

    def test_plan_deterministic(self):
        spec = CohortSpec(n_sr=5, n_af=5, rng_seed=4, sampling='random')
        first = truth_frame(plan_cohort(spec))
        second = truth_frame(plan_cohort(spec))
        self.assertTrue(first.equals(second))
        self.assertEqual(list(first.columns),
                         ['patient_id', 'outcome', 'f0_true', 'gamma_true',
                          'background_true'])
        off = truth_frame(plan_cohort(CohortSpec(
            n_sr=5, n_af=5, sr_background=(0.0, 0.0),
            af_background=(0.0, 0.0))))
        self.assertTrue((off['background_true'] == 0.0).all())

    def test_plan_background(self):
        """
        Given the default group moments of the broadband share
        Then quantile sampling reproduces their means
        And the f0 and gamma draws stay as without a background
        """
        plain = CohortSpec(n_sr=20, n_af=10, sr_background=(0.0, 0.0),
                           af_background=(0.0, 0.0))
        spec = CohortSpec(n_sr=20, n_af=10)
        truth = truth_frame(plan_cohort(spec))
        self.assertAlmostEqual(truth['background_true'][:20].mean(), 0.28,
                               places=6)
        self.assertAlmostEqual(truth['background_true'][20:].mean(), 0.22,
                               places=6)
        expected = truth_frame(plan_cohort(plain))
        for name in ('f0_true', 'gamma_true'):
            self.assertTrue(truth[name].equals(expected[name]))

    def test_spec_validation(self):
        with self.assertRaises(BadParams):
            CohortSpec(n_sr=0)
        with self.assertRaises(BadParams):
            CohortSpec(sr_gamma=(2.2, -0.1))
        with self.assertRaises(BadParams):
            CohortSpec(sampling='sobol')
        with self.assertRaises(BadConfig):
            CohortSpec.from_dict({'n_sr': 'many'})
        spec = CohortSpec.from_dict({'n_sr': 4, 'af_gamma': [3.0, 0.5]})
        self.assertEqual(spec.af_gamma, (3.0, 0.5))
        self.assertEqual(spec.n_af, 48)

    def test_records(self):
        spec = CohortSpec(n_sr=1, n_af=1, duration=8.0)
        records = list(synth_cohort_records(spec))
        self.assertEqual([plan.patient_id for plan, _ in records],
                         ['SR001', 'AF001'])
        self.assertEqual(len(records[0][1].raw), round(8.0 * FS))

    def test_disjoint_groups(self):
        """
        Given groups with clearly different harmonic decay
        Then the pipeline should recover the ordering
        """
        spec = CohortSpec(n_sr=3, n_af=3, sr_gamma=(1.0, 0.0),
                          af_gamma=(3.5, 0.0), sr_f0=(6.0, 0.3),
                          af_f0=(6.0, 0.3), duration=12.0)
        cohort, truth = synth_cohort(spec)
        self.assertEqual(len(cohort), 6)
        self.assertEqual(list(truth['gamma_true']), [1.0] * 3 + [3.5] * 3)
        sr = cohort.values('gamma', Outcome.SR)
        af = cohort.values('gamma', Outcome.AF)
        self.assertLess(sr.max(), af.min())
        for vector in cohort.vectors:
            self.assertEqual(vector.n_segments, 2)
