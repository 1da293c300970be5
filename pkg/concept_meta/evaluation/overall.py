"""Signed relative improvement over a reference, summed across metrics."""
import logging
from collections.abc import Mapping

from concept_meta.evaluation.metrics import MetricsReport

logger = logging.getLogger(__name__)

HIGHER_IS_BETTER = ("accuracy", "roc_auc", "f1", "kappa")
LOWER_IS_BETTER = ("log_loss",)


def relative_changes(candidate: MetricsReport, reference: MetricsReport) -> dict[str, float | None]:
    """
    Percent change per metric, sign-flipped for log loss so improvement is positive.

    A metric whose reference value is zero maps to None.
    """
    changes: dict[str, float | None] = {}
    for name in HIGHER_IS_BETTER + LOWER_IS_BETTER:
        ref = reference.metric(name)
        cand = candidate.metric(name)
        if ref == 0:
            changes[name] = None
            continue
        delta = (cand - ref) if name in HIGHER_IS_BETTER else (ref - cand)
        changes[name] = 100.0 * delta / ref
    return changes


def overall_score(candidate: MetricsReport, reference: MetricsReport) -> float:
    """
    Sum of per-metric relative improvements, in percent.

    Terms with a zero reference value are skipped with a warning.
    """
    total = 0.0
    for name, change in relative_changes(candidate, reference).items():
        if change is None:
            logger.warning("Reference %s is zero; skipping it in the overall score", name)
            continue
        total += change
    return total


def comparison_table(reference: MetricsReport, candidates: Mapping[str, MetricsReport]) -> list[dict]:
    """
    Rows of absolute metric values, relative change against the reference, and Overall.

    Args:
        reference: The reference model's report (its row has zero changes)
        candidates: Reports keyed by model name

    Returns:
        One dict per model with keys model, each metric, <metric>_change and overall
    """
    rows = []
    for model, report in candidates.items():
        row: dict = {"model": model}
        changes = relative_changes(report, reference)
        for name in HIGHER_IS_BETTER + LOWER_IS_BETTER:
            row[name] = report.metric(name)
            row[f"{name}_change"] = changes[name]
        row["overall"] = overall_score(report, reference)
        rows.append(row)
    return rows
