"""Metrics, the Overall score, comparison tables and task attention."""
from .metrics import (
    LOG_LOSS_EPS,
    METRIC_NAMES,
    MetricsReport,
    accuracy,
    cohen_kappa,
    confusion_matrix,
    evaluate_predictions,
    f1_score,
    hard_log_loss,
    hard_predictions,
    probability_log_loss,
    roc_auc,
)
from .overall import comparison_table, overall_score, relative_changes
from .predict import evaluate_task, predict_logits, predict_proba
from .attention import AttentionMatrix, log_likelihood, task_attention

__all__ = [
    "LOG_LOSS_EPS",
    "METRIC_NAMES",
    "MetricsReport",
    "accuracy",
    "cohen_kappa",
    "confusion_matrix",
    "evaluate_predictions",
    "f1_score",
    "hard_log_loss",
    "hard_predictions",
    "probability_log_loss",
    "roc_auc",
    "comparison_table",
    "overall_score",
    "relative_changes",
    "evaluate_task",
    "predict_logits",
    "predict_proba",
    "AttentionMatrix",
    "log_likelihood",
    "task_attention",
]
