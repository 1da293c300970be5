"""Binary classification metrics in the reporting conventions of the comparison tables."""
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
import numpy.typing as npt
from scipy.stats import rankdata
from sklearn import metrics as sk_metrics

from concept_meta.errors import UndefinedMetricError

logger = logging.getLogger(__name__)

LOG_LOSS_EPS = 1e-15
METRIC_NAMES = ("accuracy", "roc_auc", "f1", "kappa", "log_loss")
BINARY_LABELS = [0.0, 1.0]


def _binary(labels: npt.ArrayLike) -> npt.NDArray[np.float64]:
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if not np.all(np.isin(labels, (0.0, 1.0))):
        raise ValueError("Labels must be 0 or 1")
    return labels


def roc_auc(scores: npt.ArrayLike, labels: npt.ArrayLike) -> float:
    """
    Mann-Whitney rank statistic with midranks for ties.

    Equals the probability that a random positive outscores a random
    negative, ties counting one half.

    Raises:
        UndefinedMetricError: If only one class is present
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = _binary(labels)
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC-AUC needs at least one positive and one negative instance")

    ranks = rankdata(scores, method="average")
    u = float(ranks[labels == 1.0].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def hard_predictions(probs: npt.ArrayLike, threshold: float = 0.5) -> npt.NDArray[np.float64]:
    return (np.asarray(probs, dtype=np.float64).reshape(-1) >= threshold).astype(np.float64)


def confusion_matrix(predictions: npt.ArrayLike, labels: npt.ArrayLike) -> npt.NDArray[np.int64]:
    """[[tn, fp], [fn, tp]]."""
    predictions = _binary(predictions)
    labels = _binary(labels)
    if labels.size == 0:
        return np.zeros((2, 2), dtype=np.int64)
    return sk_metrics.confusion_matrix(labels, predictions, labels=BINARY_LABELS).astype(np.int64)


def accuracy(predictions: npt.ArrayLike, labels: npt.ArrayLike) -> float:
    predictions = _binary(predictions)
    labels = _binary(labels)
    if labels.size == 0:
        return 0.0
    return float(sk_metrics.accuracy_score(labels, predictions))


def f1_score(predictions: npt.ArrayLike, labels: npt.ArrayLike) -> float:
    """F1 of the positive class; 0 when there are no true positives."""
    predictions = _binary(predictions)
    labels = _binary(labels)
    if labels.size == 0:
        return 0.0
    return float(sk_metrics.f1_score(labels, predictions, pos_label=1.0, zero_division=0.0))


def cohen_kappa(predictions: npt.ArrayLike, labels: npt.ArrayLike) -> float:
    """Cohen's kappa; 0 when chance agreement is 1 (one class in both predictions and labels)."""
    predictions = _binary(predictions)
    labels = _binary(labels)
    if np.unique(np.concatenate([predictions, labels])).size < 2:
        return 0.0
    return float(sk_metrics.cohen_kappa_score(labels, predictions, labels=BINARY_LABELS))


def hard_log_loss(predictions: npt.ArrayLike, labels: npt.ArrayLike, eps: float = LOG_LOSS_EPS) -> float:
    """
    Log loss of hard 0/1 predictions clipped to [eps, 1 - eps].

    Every error costs -ln(eps), so this equals (1 - accuracy) * -ln(eps) up
    to the ln(1 - eps) paid by correct rows.
    """
    p = np.clip(_binary(predictions), eps, 1.0 - eps)
    y = _binary(labels)
    if y.size == 0:
        return 0.0
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def probability_log_loss(probs: npt.ArrayLike, labels: npt.ArrayLike, eps: float = LOG_LOSS_EPS) -> float:
    """Ordinary log loss of predicted probabilities, clipped to [eps, 1 - eps]."""
    p = np.clip(np.asarray(probs, dtype=np.float64).reshape(-1), eps, 1.0 - eps)
    y = _binary(labels)
    if y.size == 0:
        return 0.0
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass(frozen=True)
class MetricsReport:
    """Metrics of one (model, dataset, split)."""

    task_id: str
    n: int
    threshold: float
    accuracy: float
    roc_auc: float
    f1: float
    kappa: float
    log_loss: float
    probability_log_loss: float = math.nan

    def metric(self, name: str) -> float:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_predictions(
    probs: npt.ArrayLike, labels: npt.ArrayLike, task_id: str = "", threshold: float = 0.5
) -> MetricsReport:
    """
    Compute every reported metric from predicted probabilities.

    ROC-AUC is nan (with a warning) when only one class is present.
    """
    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    labels = _binary(labels)
    predictions = hard_predictions(probs, threshold)
    try:
        auc = roc_auc(probs, labels)
    except UndefinedMetricError as e:
        logger.warning("%s: %s", task_id or "task", e)
        auc = math.nan

    report = MetricsReport(
        task_id=task_id,
        n=int(labels.shape[0]),
        threshold=threshold,
        accuracy=accuracy(predictions, labels),
        roc_auc=auc,
        f1=f1_score(predictions, labels),
        kappa=cohen_kappa(predictions, labels),
        log_loss=hard_log_loss(predictions, labels),
        probability_log_loss=probability_log_loss(probs, labels),
    )
    logger.info(
        "%s: n=%d acc=%.4f auc=%.4f f1=%.4f kappa=%.4f log_loss=%.4f prob_log_loss=%.4f",
        task_id or "task", report.n, report.accuracy, report.roc_auc, report.f1,
        report.kappa, report.log_loss, report.probability_log_loss,
    )
    return report
