"""Evaluation metrics: accuracy, rank-based AUC, normalized score, generalization gap."""
import numpy as np
from scipy.stats import rankdata

from .errors import DataError, DegenerateInputError, LabelError


def _probs_labels(probs, labels):
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise DataError("need a non-empty 2-D array of class probabilities")
    if labels.shape != (probs.shape[0],):
        raise DataError(f"{probs.shape[0]} prediction rows but labels have shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= probs.shape[1]:
        raise LabelError(f"labels must lie in [0, {probs.shape[1]})")
    return probs, labels


def accuracy(probs, labels) -> float:
    """Fraction of rows whose argmax equals the label; ties resolve to the lowest class."""
    probs, labels = _probs_labels(probs, labels)
    return float(np.mean(np.argmax(probs, axis=1) == labels))


def auc_binary(scores, labels) -> float:
    """Mann-Whitney estimate of P(score+ > score-) + P(score+ == score-) / 2."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(labels).astype(bool)
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError("AUC needs both positive and negative samples")
    ranks = rankdata(scores)  # ties get average ranks
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_macro(probs, labels) -> float:
    """Unweighted mean of one-vs-rest AUCs."""
    probs, labels = _probs_labels(probs, labels)
    k = probs.shape[1]
    if k < 2:
        raise DegenerateInputError("AUC needs at least two classes")
    missing = sorted(set(range(k)) - set(np.unique(labels).tolist()))
    if missing:
        raise DegenerateInputError(f"classes {missing} absent from labels")
    return float(np.mean([auc_binary(probs[:, c], labels == c) for c in range(k)]))


METRICS = {"acc": accuracy, "auc": auc_macro}


def score(metric: str, probs, labels) -> float:
    try:
        fn = METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}") from None
    return fn(probs, labels)


def normalized_score(observed, optimum, random_baseline) -> float:
    """0 at the random-search baseline, 100 at the optimum."""
    gap = optimum - random_baseline
    if gap == 0:
        raise DegenerateInputError("optimum equals the random baseline")
    return 100.0 * (1.0 - (optimum - observed) / gap)


def generalization_gap(train_score, test_score) -> float:
    if not (np.isfinite(train_score) and np.isfinite(test_score)):
        raise ValueError("scores must be finite")
    return float(train_score - test_score)
