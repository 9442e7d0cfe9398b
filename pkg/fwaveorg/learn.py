"""
Module defining the classification protocol: linear discriminant
analysis, repeated stratified cross-validation, ROC analysis, threshold
selection, nested forward feature selection and McNemar comparison.

Label 1 (positive) is AF recurrence, label 0 is SR maintenance.
"""

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import List, Tuple

import numpy as np
import pandas as pd
from cached_property import cached_property
from sklearn import metrics
from sklearn.model_selection import StratifiedKFold
from statsmodels.stats.contingency_tables import mcnemar as _mcnemar

from fwaveorg.utils import (BadParams, ClassMissing, DimensionMismatch,
                            FoldWithoutBothClasses, LengthMismatch,
                            OneClassOnly, SingularCovariance,
                            log_and_raise_exception, spawn_seeds)

LOG = logging.getLogger(__name__)

RIDGE = 1e-8
METRICS = ('se', 'sp', 'acc', 'auc', 'ppv', 'npv')


@dataclass(frozen=True)
class CvConfig:
    """Repeated stratified cross-validation settings."""
    n_folds: int = 10
    n_repeats: int = 100
    stratified: bool = True
    rng_seed: int = 0
    priors: str = 'empirical'
    jobs: int = 1

    def __post_init__(self):
        if self.n_folds < 2 or self.n_repeats < 1:
            log_and_raise_exception(
                f"Cross-validation needs n_folds >= 2 and n_repeats >= 1, "
                f"got {self.n_folds} and {self.n_repeats}", BadParams)
        if self.priors not in ('empirical', 'equal'):
            log_and_raise_exception(
                f"Unknown priors '{self.priors}'", BadParams)

    @classmethod
    def from_dict(cls, data):
        names = {field.name for field in fields(cls)}
        return cls(**{key: value for key, value in (data or {}).items()
                      if key in names})


@dataclass(frozen=True, eq=False)
class LdaModel:
    """Two-class linear discriminant; ``score = x @ weights + bias``."""
    weights: np.ndarray
    bias: float
    class_means: Tuple[np.ndarray, np.ndarray]
    pooled_covariance: np.ndarray
    feature_names: Tuple[str, ...] = ()


def as_labels(labels):
    """Map outcomes (``'AF'``/``'SR'``, enums or 0/1) onto 0/1 integers."""
    if isinstance(labels, np.ndarray) and labels.dtype.kind in 'biu':
        if np.all((labels == 0) | (labels == 1)):
            return labels.astype(np.int64).reshape(-1)
    mapped = []
    for label in labels:
        value = getattr(label, 'value', label)
        if value in ('AF', 1, True):
            mapped.append(1)
        elif value in ('SR', 0, False):
            mapped.append(0)
        else:
            log_and_raise_exception(
                f"Label {label!r} is neither AF nor SR", ClassMissing)
    return np.array(mapped, dtype=np.int64)


def fit_lda(features, labels, feature_names=(), priors='empirical'):
    """
    Fit class means, the pooled within-class covariance and the linear
    discriminant.

    A ridge of ``1e-8 * trace / d`` is added to the covariance diagonal.
    The bias puts the boundary at the midpoint of the class means,
    shifted by the log prior ratio (training frequencies, or equal priors
    when ``priors='equal'``).

    :param features: ``(n, d)`` matrix.
    :param labels: Length-``n`` labels.
    :returns: ``LdaModel``.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    labels = as_labels(labels)
    if features.shape[0] != labels.size:
        log_and_raise_exception(
            f"{features.shape[0]} feature rows for {labels.size} labels",
            LengthMismatch)
    if not np.all(np.isfinite(features)):
        log_and_raise_exception("Features hold non-finite values", BadParams)
    counts = np.bincount(labels, minlength=2)
    if counts.min() < 2:
        log_and_raise_exception(
            f"LDA needs at least 2 samples per class, got SR={counts[0]} "
            f"AF={counts[1]}", ClassMissing)

    means = [features[labels == k].mean(axis=0) for k in (0, 1)]
    centred = np.vstack([features[labels == k] - means[k] for k in (0, 1)])
    dims = features.shape[1]
    covariance = centred.T @ centred / (labels.size - 2)
    ridge = RIDGE * np.trace(covariance) / dims
    if not ridge > 0:
        log_and_raise_exception(
            "Pooled covariance is zero; every feature is constant within "
            "its class", SingularCovariance)
    regularized = covariance + ridge * np.eye(dims)
    try:
        weights = np.linalg.solve(regularized, means[1] - means[0])
    except np.linalg.LinAlgError:
        log_and_raise_exception("Pooled covariance is singular",
                                SingularCovariance)
    if not np.all(np.isfinite(weights)):
        log_and_raise_exception("Pooled covariance is singular",
                                SingularCovariance)

    if priors == 'equal':
        prior_shift = 0.0
    else:
        prior_shift = float(np.log(counts[1] / counts[0]))
    bias = float(-weights @ (means[0] + means[1]) / 2.0 + prior_shift)
    return LdaModel(weights=weights, bias=bias,
                    class_means=(means[0], means[1]),
                    pooled_covariance=covariance,
                    feature_names=tuple(feature_names))


def score(model, x):
    """
    Signed discriminant score; larger means more AF-like.

    :param x: One feature vector or an ``(n, d)`` matrix.
    :returns: Float, or array for matrix input.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.weights.size:
        log_and_raise_exception(
            f"Feature vector has {x.shape[-1]} entries, model expects "
            f"{model.weights.size}", DimensionMismatch)
    result = x @ model.weights + model.bias
    return float(result) if x.ndim == 1 else result


@dataclass(frozen=True, eq=False)
class RocCurve:
    """ROC staircase; ``thresholds[0]`` is ``inf`` (nothing called AF)."""
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def frame(self):
        return pd.DataFrame({'fpr': self.fpr, 'tpr': self.tpr,
                             'threshold': self.thresholds})


def roc_curve(scores, labels):
    """
    ROC curve over every distinct score and its trapezoidal area.

    :returns: ``(RocCurve, auc)``.
    """
    labels = as_labels(labels)
    scores = np.asarray(scores, dtype=float)
    if labels.size != scores.size:
        log_and_raise_exception(
            f"{scores.size} scores for {labels.size} labels", LengthMismatch)
    if np.unique(labels).size < 2:
        log_and_raise_exception("ROC analysis needs both classes",
                                OneClassOnly)
    fpr, tpr, thresholds = metrics.roc_curve(labels, scores,
                                             drop_intermediate=False)
    thresholds = np.array(thresholds, dtype=float)
    thresholds[0] = np.inf
    return RocCurve(fpr, tpr, thresholds), float(metrics.auc(fpr, tpr))


def select_threshold(curve):
    """
    Threshold with the smallest ``|Se - Sp|``; ties go to the largest
    ``Se + Sp``, then to the lowest threshold.
    """
    sensitivity = curve.tpr
    specificity = 1.0 - curve.fpr
    imbalance = np.round(np.abs(sensitivity - specificity), 12)
    balance = np.round(sensitivity + specificity, 12)
    order = np.lexsort((curve.thresholds, -balance, imbalance))
    return float(curve.thresholds[order[0]])


def _rates(labels, predicted):
    tn, fp, fn, tp = metrics.confusion_matrix(
        labels, predicted, labels=[0, 1]).ravel()

    def ratio(num, den):
        return num / den if den else np.nan

    return {
        'se': ratio(tp, tp + fn), 'sp': ratio(tn, tn + fp),
        'acc': (tp + tn) / labels.size,
        'ppv': ratio(tp, tp + fp), 'npv': ratio(tn, tn + fn),
    }


def stratified_folds(labels, n_folds, seed):
    """
    Shuffled stratified partition into ``n_folds`` test folds.

    :raises FoldWithoutBothClasses: when some fold misses a class.
    """
    labels = np.asarray(labels)
    splitter = StratifiedKFold(n_splits=n_folds, shuffle=True,
                               random_state=int(seed))
    try:
        folds = [test for _, test in
                 splitter.split(np.zeros(labels.size), labels)]
    except ValueError as exception:
        log_and_raise_exception(str(exception), FoldWithoutBothClasses)
    for number, test in enumerate(folds):
        if np.unique(labels[test]).size < 2:
            log_and_raise_exception(
                f"Fold {number} of {n_folds} holds a single class; each "
                "class needs at least one patient per fold",
                FoldWithoutBothClasses)
    return folds


@dataclass(frozen=True, eq=False)
class RepeatResult:
    """Out-of-fold outcome of one cross-validation repeat."""
    scores: np.ndarray
    predictions: np.ndarray
    threshold: float
    auc: float
    curve: RocCurve
    rates: dict
    selected: Tuple[Tuple[str, ...], ...] = ()


def _finish_repeat(labels, scores, selected=()):
    curve, auc = roc_curve(scores, labels)
    threshold = select_threshold(curve)
    predictions = (scores >= threshold).astype(np.int64)
    return RepeatResult(scores=scores, predictions=predictions,
                        threshold=threshold, auc=auc, curve=curve,
                        rates=_rates(labels, predictions),
                        selected=tuple(selected))


def _run_repeat(task):
    features, labels, n_folds, seed, priors = task
    scores = np.empty(labels.size)
    for test in stratified_folds(labels, n_folds, seed):
        train = np.setdiff1d(np.arange(labels.size), test)
        model = fit_lda(features[train], labels[train], priors=priors)
        scores[test] = score(model, features[test])
    return _finish_repeat(labels, scores)


def _map(function, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        LOG.info("Running %d repeats on %d workers", len(tasks), jobs)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(function, tasks))
    return [function(task) for task in tasks]


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    """
    Metrics of a cross-validated model.

    ``per_repeat`` holds one row per repeat; the ``se`` ... ``npv``
    properties are their means.
    """
    feature_names: Tuple[str, ...]
    labels: np.ndarray
    repeats: List[RepeatResult]
    patient_ids: Tuple[str, ...] = ()

    @cached_property
    def per_repeat(self):
        rows = []
        for number, result in enumerate(self.repeats):
            row = {'repeat': number, 'auc': result.auc,
                   'threshold': result.threshold}
            row.update(result.rates)
            rows.append(row)
        return pd.DataFrame(rows, columns=['repeat', *METRICS, 'threshold'])

    def mean(self, name):
        return float(np.nanmean(self.per_repeat[name].to_numpy(dtype=float)))

    @property
    def se(self):
        return self.mean('se')

    @property
    def sp(self):
        return self.mean('sp')

    @property
    def acc(self):
        return self.mean('acc')

    @property
    def auc(self):
        return self.mean('auc')

    @property
    def ppv(self):
        return self.mean('ppv')

    @property
    def npv(self):
        return self.mean('npv')

    @property
    def predictions(self):
        """``(n_repeats, n_patients)`` out-of-fold predicted labels."""
        return np.vstack([result.predictions for result in self.repeats])

    def summary(self, model=None):
        """Table row: Se, Sp, Acc, PPV, NPV in percent and AUC as a fraction."""
        return {
            'model': model or '+'.join(self.feature_names),
            'features': ' '.join(self.feature_names),
            'se_percent': 100.0 * self.se, 'sp_percent': 100.0 * self.sp,
            'acc_percent': 100.0 * self.acc, 'auc': self.auc,
            'ppv_percent': 100.0 * self.ppv, 'npv_percent': 100.0 * self.npv,
            'n_repeats': len(self.repeats),
        }

    def roc_frame(self):
        """ROC points of every repeat, stacked."""
        frames = []
        for number, result in enumerate(self.repeats):
            frame = result.curve.frame()
            frame.insert(0, 'repeat', number)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)


def cross_validate(features, labels, cfg=CvConfig(), feature_names=(),
                   patient_ids=()):
    """
    Repeated stratified cross-validation of an LDA model on arrays.

    Every repeat reshuffles and re-stratifies the folds, pools the
    out-of-fold scores, picks the balanced threshold on their ROC curve
    and scores Se, Sp, Acc, AUC, PPV and NPV.

    :returns: ``EvaluationReport``.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    labels = as_labels(labels)
    tasks = [(features, labels, cfg.n_folds, seed, cfg.priors)
             for seed in spawn_seeds(cfg.rng_seed, cfg.n_repeats)]
    repeats = _map(_run_repeat, tasks, cfg.jobs)
    report = EvaluationReport(tuple(feature_names), labels, repeats,
                              tuple(patient_ids))
    LOG.info("%s: AUC %.3f over %d repeats; PPV/NPV averaged per repeat",
             '+'.join(feature_names) or 'model', report.auc, len(repeats))
    return report


def repeated_cv(cohort, feature_set, cfg=CvConfig()):
    """
    Repeated stratified cross-validation on a ``Cohort``.

    :param feature_set: Feature (or clinical) column names.
    :returns: ``EvaluationReport``.
    """
    labels = cohort.require_both_classes()
    return cross_validate(cohort.design(feature_set), labels, cfg,
                          feature_set, cohort.patient_ids)


def _criterion(features, labels, columns, n_folds, seed, priors):
    """Inner cross-validated misclassification rate of an LDA on
    ``columns``; the empty set predicts the majority class."""
    if not columns:
        return float(np.bincount(labels, minlength=2).min() / labels.size)
    errors = 0
    subset = features[:, list(columns)]
    for test in stratified_folds(labels, n_folds, seed):
        train = np.setdiff1d(np.arange(labels.size), test)
        model = fit_lda(subset[train], labels[train], priors=priors)
        errors += np.sum((score(model, subset[test]) >= 0) != labels[test])
    return errors / labels.size


def forward_select(features, labels, n_folds, seed, priors='empirical'):
    """
    Sequential forward selection on one training partition.

    Features are added one at a time, each time the one that lowers the
    inner cross-validated error most, until no addition lowers it.
    Ties go to the earlier column.

    :returns: Tuple of selected column indices, in order of addition.
    """
    inner_folds = min(n_folds, int(np.bincount(labels, minlength=2).min()))
    if inner_folds < 2:
        log_and_raise_exception(
            "Training partition holds fewer than 2 patients of a class",
            FoldWithoutBothClasses)
    selected = []
    best = _criterion(features, labels, selected, inner_folds, seed, priors)
    remaining = list(range(features.shape[1]))
    while remaining:
        trials = [
            _criterion(features, labels, selected + [column], inner_folds,
                       seed, priors)
            for column in remaining
        ]
        winner = int(np.argmin(trials))
        if not trials[winner] < best:
            break
        best = trials[winner]
        selected.append(remaining.pop(winner))
    return tuple(selected)


def _run_selection_repeat(task):
    features, labels, n_folds, seed, priors = task
    scores = np.empty(labels.size)
    inner_seeds = spawn_seeds(seed, n_folds)
    chosen = []
    for number, test in enumerate(stratified_folds(labels, n_folds, seed)):
        train = np.setdiff1d(np.arange(labels.size), test)
        columns = forward_select(features[train], labels[train], n_folds,
                                 inner_seeds[number], priors)
        chosen.append(columns)
        if columns:
            subset = features[:, list(columns)]
            model = fit_lda(subset[train], labels[train], priors=priors)
            scores[test] = score(model, subset[test])
        else:
            counts = np.bincount(labels[train], minlength=2)
            scores[test] = (0.0 if priors == 'equal'
                            else np.log(counts[1] / counts[0]))
    return _finish_repeat(labels, scores, chosen)


@dataclass(frozen=True, eq=False)
class SelectionReport:
    """
    Outcome of nested forward selection.

    ``frequencies`` gives, per candidate, the share of training
    partitions that selected it; ``set_counts`` counts every selected
    set; ``evaluation`` scores the nested procedure itself.
    """
    candidates: Tuple[str, ...]
    frequencies: pd.Series
    set_counts: Counter
    evaluation: EvaluationReport

    @property
    def most_frequent_set(self):
        ranked = sorted(self.set_counts.items(),
                        key=lambda item: (-item[1], len(item[0]), item[0]))
        return ranked[0][0]

    def frame(self):
        return pd.DataFrame({'feature': self.frequencies.index,
                             'frequency': self.frequencies.to_numpy()})


def sequential_forward_selection(cohort, candidate_features, cfg=CvConfig()):
    """
    Nested cross-validated forward selection.

    In every repeat and outer fold, selection runs on the training
    partition with an inner stratified cross-validation (LDA
    misclassification rate as criterion); the selected model then scores
    the held-out fold.

    :returns: ``SelectionReport``.
    """
    candidates = tuple(candidate_features)
    if len(candidates) < 2:
        log_and_raise_exception(
            "Forward selection needs at least 2 candidate features",
            BadParams)
    labels = cohort.require_both_classes()
    return select_features(cohort.design(candidates), labels, cfg,
                           candidates, cohort.patient_ids)


def select_features(features, labels, cfg=CvConfig(), candidates=(),
                    patient_ids=()):
    """Array form of ``sequential_forward_selection``."""
    features = np.asarray(features, dtype=float)
    labels = as_labels(labels)
    candidates = tuple(candidates) or tuple(
        f'x{index}' for index in range(features.shape[1]))
    tasks = [(features, labels, cfg.n_folds, seed, cfg.priors)
             for seed in spawn_seeds(cfg.rng_seed, cfg.n_repeats)]
    repeats = _map(_run_selection_repeat, tasks, cfg.jobs)

    picks = Counter()
    sets = Counter()
    runs = 0
    for result in repeats:
        for columns in result.selected:
            runs += 1
            names = tuple(candidates[column] for column in columns)
            picks.update(names)
            sets[tuple(sorted(names))] += 1
    frequencies = pd.Series(
        {name: picks[name] / runs for name in candidates}, name='frequency')
    evaluation = EvaluationReport(('auto',), labels, repeats,
                                  tuple(patient_ids))
    report = SelectionReport(candidates, frequencies, sets, evaluation)
    LOG.info("Forward selection: most frequent set %s",
             report.most_frequent_set)
    return report


def mcnemar(pred_a, pred_b, truth):
    """
    Asymptotic McNemar test without continuity correction on the
    discordant correct/incorrect counts of two classifiers.
    """
    pred_a, pred_b, truth = (np.asarray(item).reshape(-1)
                             for item in (pred_a, pred_b, truth))
    if not pred_a.size == pred_b.size == truth.size:
        log_and_raise_exception(
            f"Prediction lengths {pred_a.size}, {pred_b.size} and truth "
            f"length {truth.size} differ", LengthMismatch)
    right_a = pred_a == truth
    right_b = pred_b == truth
    only_a = int(np.sum(right_a & ~right_b))
    only_b = int(np.sum(~right_a & right_b))
    if only_a + only_b == 0:
        return 1.0
    table = [[int(np.sum(right_a & right_b)), only_a],
             [only_b, int(np.sum(~right_a & ~right_b))]]
    result = _mcnemar(table, exact=False, correction=False)
    return float(min(1.0, max(0.0, result.pvalue)))


def compare_models(report_a, report_b, alpha=0.05):
    """
    McNemar test between two evaluated models, repeat by repeat.

    :returns: ``(per-repeat DataFrame, summary dict)``.
    """
    if not np.array_equal(report_a.labels, report_b.labels):
        log_and_raise_exception(
            "Models were evaluated on different patients", LengthMismatch)
    count = min(len(report_a.repeats), len(report_b.repeats))
    p_values = [
        mcnemar(report_a.repeats[number].predictions,
                report_b.repeats[number].predictions, report_a.labels)
        for number in range(count)
    ]
    frame = pd.DataFrame({'repeat': range(count), 'p_value': p_values})
    summary = {
        'model_a': '+'.join(report_a.feature_names),
        'model_b': '+'.join(report_b.feature_names),
        'median_p': float(np.median(p_values)),
        'fraction_significant': float(np.mean(np.array(p_values) < alpha)),
        'n_repeats': count,
    }
    return frame, summary
