"""
Tests for the band-limited spectral measures.
"""

import unittest
from decimal import Decimal, getcontext

import numpy as np

from fwaveorg.core_model import TF_BAND, Band, PowerSpectrum
from fwaveorg.entropy import (band_measures, c0_complexity, renyi_alpha_sweep,
                              renyi_entropy, spectral_entropy,
                              spectral_flatness)
from fwaveorg.utils import AllZeroBand, BadAlpha, EmptyBand

# 3.0 to 6.1 Hz: 32 bins
SMALL_BAND = Band(3.0, 6.2)


def decimal_entropies(values, alpha):
    """Shannon and Renyi entropies computed in 40-digit decimals."""
    getcontext().prec = 40
    values = [Decimal(repr(float(value))) for value in values]
    total = sum(values)
    probs = [value / total for value in values]
    log_n = Decimal(len(probs)).ln()
    shannon = -sum(p * p.ln() for p in probs if p > 0) / log_n
    alpha = Decimal(repr(alpha))
    renyi = (sum(p ** alpha for p in probs if p > 0).ln()
             / ((1 - alpha) * log_n))
    return float(shannon), float(renyi)


def decimal_c0(values):
    """Share of power in bins at or below twice the mean, in decimals."""
    getcontext().prec = 40
    values = [Decimal(repr(float(value))) for value in values]
    total = sum(values)
    threshold = 2 * total / len(values)
    return float(sum(value for value in values if value <= threshold)
                 / total)


class TestMeasures(unittest.TestCase):
    """
    Scenario: measures of known spectra
    """

    def test_uniform(self):
        """
        Given a flat spectrum
        Then every measure should be 1
        """
        spec = PowerSpectrum(np.ones(300))
        for name, measure in band_measures().items():
            self.assertAlmostEqual(measure(spec, TF_BAND), 1.0, places=12,
                                   msg=name)

    def test_single_peak(self):
        """
        Given all power in one bin
        Then S, R and C0 should be 0
        And F should be vanishingly small
        """
        values = np.zeros(300)
        values[60] = 1.0
        spec = PowerSpectrum(values)
        self.assertEqual(spectral_entropy(spec, TF_BAND), 0.0)
        self.assertEqual(renyi_entropy(spec, TF_BAND), 0.0)
        self.assertEqual(c0_complexity(spec, TF_BAND), 0.0)
        self.assertLess(spectral_flatness(spec, TF_BAND), 1e-10)

    def test_decimal_oracle(self):
        """
        Given a random spectrum
        Then S and R should match a high-precision computation
        """
        rng = np.random.default_rng(3)
        values = np.zeros(300)
        values[30:62] = rng.exponential(size=32)
        spec = PowerSpectrum(values)
        band_values = spec.band_values(SMALL_BAND)
        self.assertEqual(band_values.size, 32)
        for alpha in (0.1, 0.5, 2.0):
            shannon, renyi = decimal_entropies(band_values, alpha)
            self.assertAlmostEqual(spectral_entropy(spec, SMALL_BAND),
                                   shannon, places=12)
            self.assertAlmostEqual(renyi_entropy(spec, SMALL_BAND, alpha),
                                   renyi, places=12)

    def test_decimal_oracle_random_vectors(self):
        """
        Given 1000 random spectra of 2 to 64 bins, some bins empty
        Then S, R with alpha 0.1 and C0 should match a high-precision
            computation within 1e-12
        """
        rng = np.random.default_rng(21)
        for _ in range(1000):
            size = int(rng.integers(2, 65))
            band_values = rng.exponential(size=size) ** rng.uniform(1, 4)
            band_values[rng.uniform(size=size) < 0.1] = 0.0
            band_values[rng.integers(size)] += 1.0
            values = np.zeros(300)
            values[30:30 + size] = band_values
            spec = PowerSpectrum(values)
            band = Band(3.0, round(3.0 + 0.1 * size, 1))
            self.assertEqual(spec.band_values(band).size, size)
            shannon, renyi = decimal_entropies(band_values, 0.1)
            self.assertAlmostEqual(spectral_entropy(spec, band), shannon,
                                   delta=1e-12)
            self.assertAlmostEqual(renyi_entropy(spec, band, 0.1), renyi,
                                   delta=1e-12)
            self.assertAlmostEqual(c0_complexity(spec, band),
                                   decimal_c0(band_values), delta=1e-12)

    def test_flatness_two_levels(self):
        """
        Given half the bins at 1 and half at 4
        Then F should be 2 / 2.5
        """
        values = np.zeros(300)
        values[30:46] = 1.0
        values[46:62] = 4.0
        spec = PowerSpectrum(values)
        self.assertAlmostEqual(spectral_flatness(spec, SMALL_BAND), 0.8,
                               places=12)

    def test_c0(self):
        """
        Given one bin far above twice the mean
        Then C0 should be the share of the remaining bins
        """
        values = np.zeros(300)
        values[30:62] = 1.0
        values[40] = 68.0
        spec = PowerSpectrum(values)
        self.assertAlmostEqual(c0_complexity(spec, SMALL_BAND), 31 / 99,
                               places=12)

    def test_bounds(self):
        """
        Measures of random spectra should lie in [0, 1].
        """
        rng = np.random.default_rng(5)
        for _ in range(20):
            spec = PowerSpectrum(rng.exponential(size=300) ** 3)
            for measure in band_measures(0.5).values():
                value = measure(spec, TF_BAND)
                self.assertGreaterEqual(value, 0.0)
                self.assertLessEqual(value, 1.0)


class TestRenyi(unittest.TestCase):

    def test_bad_alpha(self):
        spec = PowerSpectrum(np.ones(300))
        for alpha in (1.0, -0.5):
            with self.assertRaises(BadAlpha):
                renyi_entropy(spec, TF_BAND, alpha)

    def test_alpha_zero(self):
        """
        With alpha = 0, R counts the bins holding power.
        """
        values = np.zeros(300)
        values[30:46] = 1.0
        spec = PowerSpectrum(values)
        self.assertAlmostEqual(renyi_entropy(spec, SMALL_BAND, 0.0),
                               np.log(16) / np.log(32), places=12)

    def test_sweep(self):
        """
        The sweep skips alpha = 1 and never increases with alpha.
        """
        rng = np.random.default_rng(9)
        spec = PowerSpectrum(rng.exponential(size=300))
        sweep = renyi_alpha_sweep(spec, TF_BAND)
        self.assertEqual(len(sweep), 19)
        self.assertNotIn(1.0, sweep)
        values = [sweep[alpha] for alpha in sorted(sweep)]
        self.assertTrue(all(later <= earlier + 1e-12
                            for earlier, later in zip(values, values[1:])))


class TestBandErrors(unittest.TestCase):

    def test_one_bin(self):
        spec = PowerSpectrum(np.ones(300))
        with self.assertRaises(EmptyBand):
            spectral_entropy(spec, Band(3.0, 3.1))

    def test_no_power(self):
        spec = PowerSpectrum(np.zeros(300))
        for measure in band_measures().values():
            with self.assertRaises(AllZeroBand):
                measure(spec, TF_BAND)
