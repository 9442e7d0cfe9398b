"""
Classification Tests

Unit tests for the LDA, repeated cross-validation, ROC analysis, forward
selection and McNemar comparison.
"""

import unittest

import numpy as np
from scipy import stats

from fwaveorg.core_model import Outcome
from fwaveorg.learn import (CvConfig, as_labels, compare_models,
                            cross_validate, fit_lda, mcnemar, roc_curve,
                            score, select_features, select_threshold,
                            sequential_forward_selection, stratified_folds)
from fwaveorg.utils import (BadParams, ClassMissing, DimensionMismatch,
                            FoldWithoutBothClasses, LengthMismatch,
                            OneClassOnly, SingularCovariance)

from tests.test_cohort import make_cohort


def two_gaussians(separation, per_class):
    """Deterministic 1-D classes at 0 and ``separation`` with unit sd."""
    base = stats.norm.ppf((np.arange(per_class) + 0.5) / per_class)
    rng = np.random.default_rng(0)
    features = np.concatenate([rng.permutation(base),
                               rng.permutation(base) + separation])
    labels = np.repeat([0, 1], per_class)
    return features, labels


class TestLda(unittest.TestCase):
    """
    Scenario: fitting the two-class discriminant
    """

    def test_equal_classes(self):
        """
        Given equal class sizes
        Then the boundary sits midway between the class means
        """
        model = fit_lda([0, 1, 2, 3, 4, 5], [0, 0, 0, 1, 1, 1])
        self.assertAlmostEqual(model.weights[0], 3.0, places=6)
        self.assertAlmostEqual(model.bias, -7.5, places=5)
        self.assertAlmostEqual(score(model, [2.5]), 0.0, places=5)
        self.assertGreater(score(model, [5.0]), 0)

    def test_empirical_priors(self):
        """
        Given twice as many AF as SR patients
        Then the score shifts by ln 2
        Unless equal priors are requested
        """
        features = [0, 1, 2, 3, 4, 5, 3, 4, 5]
        labels = [0, 0, 0, 1, 1, 1, 1, 1, 1]
        empirical = fit_lda(features, labels)
        equal = fit_lda(features, labels, priors='equal')
        self.assertAlmostEqual(empirical.bias - equal.bias, np.log(2))

    def test_outcome_labels(self):
        model = fit_lda([0, 1, 2, 3], ['SR', 'SR', 'AF', 'AF'])
        self.assertGreater(model.weights[0], 0)
        np.testing.assert_array_equal(
            as_labels([Outcome.AF, Outcome.SR, 'AF', 0]), [1, 0, 1, 0])
        with self.assertRaises(ClassMissing):
            as_labels(['AF', 'unknown'])

    def test_matrix_scores(self):
        rng = np.random.default_rng(1)
        features = rng.normal(size=(40, 3))
        labels = np.repeat([0, 1], 20)
        model = fit_lda(features, labels, ('a', 'b', 'c'))
        self.assertEqual(model.feature_names, ('a', 'b', 'c'))
        self.assertEqual(score(model, features).shape, (40,))
        self.assertIsInstance(score(model, features[0]), float)
        with self.assertRaises(DimensionMismatch):
            score(model, features[:, :2])

    def test_errors(self):
        with self.assertRaises(ClassMissing):
            fit_lda([0, 1, 2], [0, 0, 1])
        with self.assertRaises(LengthMismatch):
            fit_lda([0, 1, 2, 3], [0, 0, 1])
        with self.assertRaises(BadParams):
            fit_lda([0, np.nan, 2, 3], [0, 0, 1, 1])
        with self.assertRaises(SingularCovariance):
            fit_lda([1, 1, 2, 2], [0, 0, 1, 1])


class TestRoc(unittest.TestCase):
    """
    Scenario: ROC analysis and threshold choice
    """

    def test_perfect(self):
        curve, auc = roc_curve([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
        self.assertEqual(auc, 1.0)
        self.assertEqual(curve.thresholds[0], np.inf)
        self.assertEqual(curve.fpr[0], 0.0)
        self.assertEqual(curve.tpr[-1], 1.0)
        self.assertEqual(select_threshold(curve), 0.8)

    def test_balanced_threshold(self):
        """
        The chosen threshold minimises |Se - Sp|.
        """
        scores = [0.1, 0.4, 0.35, 0.8, 0.2, 0.7, 0.6, 0.9]
        labels = [0, 0, 1, 1, 0, 1, 0, 1]
        curve, auc = roc_curve(scores, labels)
        self.assertAlmostEqual(auc, 0.875)
        threshold = select_threshold(curve)
        predicted = np.array(scores) >= threshold
        truth = np.array(labels) == 1
        se = np.mean(predicted[truth])
        sp = np.mean(~predicted[~truth])
        self.assertEqual(se, sp)

    def test_one_class(self):
        with self.assertRaises(OneClassOnly):
            roc_curve([0.1, 0.2], [1, 1])
        with self.assertRaises(LengthMismatch):
            roc_curve([0.1, 0.2, 0.3], [0, 1])


class TestCrossValidation(unittest.TestCase):
    """
    Scenario: repeated stratified cross-validation
    """

    def test_folds(self):
        """
        Every fold holds both classes and the folds partition the patients.
        """
        labels = np.repeat([0, 1], [30, 12])
        folds = stratified_folds(labels, 10, 3)
        self.assertEqual(len(folds), 10)
        self.assertEqual(sorted(np.concatenate(folds)), list(range(42)))
        for fold in folds:
            self.assertEqual(set(labels[fold]), {0, 1})
        with self.assertRaises(FoldWithoutBothClasses):
            stratified_folds(np.repeat([0, 1], [30, 5]), 10, 3)

    def test_analytic_auc(self):
        """
        Given unit-variance classes separated by d
        Then the AUC should approach Phi(d / sqrt(2))
        """
        for separation, expected in ((1.0, 0.7602), (2.0, 0.9214)):
            features, labels = two_gaussians(separation, 1000)
            report = cross_validate(features, labels,
                                    CvConfig(n_repeats=2, rng_seed=1))
            self.assertAlmostEqual(report.auc, expected, delta=0.015)

    def test_separable(self):
        features, labels = two_gaussians(10.0, 50)
        report = cross_validate(features, labels, CvConfig(n_repeats=3))
        self.assertGreater(report.acc, 0.98)
        self.assertGreater(report.se, 0.98)
        self.assertGreater(report.sp, 0.98)

    def test_null(self):
        """
        Given features unrelated to the labels
        Then the AUC should stay near chance
        """
        rng = np.random.default_rng(7)
        features = rng.normal(size=200)
        labels = np.repeat([0, 1], 100)
        report = cross_validate(features, labels, CvConfig(n_repeats=5))
        self.assertGreater(report.auc, 0.35)
        self.assertLess(report.auc, 0.62)

    def test_report(self):
        """
        Given a seed
        Then repeats are reproducible
        And the report carries one row per repeat
        """
        features, labels = two_gaussians(1.0, 30)
        cfg = CvConfig(n_folds=5, n_repeats=4, rng_seed=11)
        first = cross_validate(features, labels, cfg, ('gamma',))
        second = cross_validate(features, labels, cfg, ('gamma',))
        np.testing.assert_array_equal(first.predictions, second.predictions)
        self.assertEqual(first.predictions.shape, (4, 60))
        self.assertEqual(len(first.per_repeat), 4)
        self.assertEqual(list(first.per_repeat.columns),
                         ['repeat', 'se', 'sp', 'acc', 'auc', 'ppv', 'npv',
                          'threshold'])
        summary = first.summary()
        self.assertEqual(summary['model'], 'gamma')
        self.assertAlmostEqual(summary['acc_percent'], 100 * first.acc)
        self.assertEqual(summary['n_repeats'], 4)
        roc = first.roc_frame()
        self.assertEqual(set(roc['repeat']), {0, 1, 2, 3})

    def test_config(self):
        with self.assertRaises(BadParams):
            CvConfig(n_folds=1)
        with self.assertRaises(BadParams):
            CvConfig(priors='uniform')
        cfg = CvConfig.from_dict({'n_repeats': 7, 'unknown': 1})
        self.assertEqual(cfg.n_repeats, 7)


class TestSelection(unittest.TestCase):
    """
    Scenario: nested forward selection
    """

    def test_informative_feature(self):
        """
        Given one informative and two noise features
        Then the informative feature should almost always be selected
        """
        informative, labels = two_gaussians(2.0, 50)
        noise = np.random.default_rng(2).normal(size=(100, 2))
        features = np.column_stack([noise[:, 0], informative, noise[:, 1]])
        report = select_features(features, labels,
                                 CvConfig(n_folds=5, n_repeats=2),
                                 ('n1', 'gamma', 'n2'))
        self.assertGreaterEqual(report.frequencies['gamma'], 0.95)
        self.assertIn('gamma', report.most_frequent_set)
        self.assertEqual(list(report.frame()['feature']),
                         ['n1', 'gamma', 'n2'])

    def test_duplicate_feature(self):
        """
        Given two copies of the same feature
        Then exactly one of them should be selected
        """
        informative, labels = two_gaussians(2.0, 40)
        features = np.column_stack([informative, informative])
        report = select_features(features, labels,
                                 CvConfig(n_folds=4, n_repeats=2))
        self.assertEqual(report.most_frequent_set, ('x0',))
        self.assertEqual(report.frequencies['x0'], 1.0)
        self.assertEqual(report.frequencies['x1'], 0.0)

    def test_cohort_selection(self):
        cohort = make_cohort(20, 10)
        report = sequential_forward_selection(
            cohort, ['gamma', 'f0'], CvConfig(n_folds=3, n_repeats=1))
        self.assertEqual(report.candidates, ('gamma', 'f0'))
        self.assertEqual(report.evaluation.predictions.shape, (1, 30))
        with self.assertRaises(BadParams):
            sequential_forward_selection(cohort, ['gamma'])


class TestMcNemar(unittest.TestCase):
    """
    Scenario: comparing two classifiers on the same patients
    """

    def test_chi_square(self):
        """
        Given 15 patients only A gets right and 3 only B gets right
        Then the statistic is 144 / 18 = 8 with one degree of freedom
        """
        truth = np.ones(28, dtype=int)
        pred_a = np.array([1] * 10 + [1] * 15 + [0] * 3)
        pred_b = np.array([1] * 10 + [0] * 15 + [1] * 3)
        self.assertAlmostEqual(mcnemar(pred_a, pred_b, truth),
                               stats.chi2.sf(8.0, 1), places=4)

    def test_no_discordance(self):
        self.assertEqual(mcnemar([1, 0, 1], [1, 0, 1], [1, 1, 0]), 1.0)

    def test_lengths(self):
        with self.assertRaises(LengthMismatch):
            mcnemar([1, 0], [1, 0, 1], [1, 1, 0])

    def test_compare_models(self):
        features, labels = two_gaussians(1.0, 30)
        cfg = CvConfig(n_folds=5, n_repeats=3)
        report = cross_validate(features, labels, cfg, ('gamma',))
        frame, summary = compare_models(report, report)
        self.assertEqual(len(frame), 3)
        self.assertEqual(summary['median_p'], 1.0)
        self.assertEqual(summary['fraction_significant'], 0.0)
