"""Output formatting module for run artifacts."""
import csv
import io
import math
from collections.abc import Iterable, Sequence

import yaml

from concept_meta.evaluation import AttentionMatrix, MetricsReport
from concept_meta.evaluation.overall import HIGHER_IS_BETTER, LOWER_IS_BETTER
from concept_meta.numeric import GradCheckReport

METRICS_COLUMNS = ("model", "dataset", "split", "accuracy", "auc", "f1", "kappa", "log_loss", "n")
SWEEP_COLUMNS = ("meta_epochs", "accuracy", "auc", "f1", "kappa", "log_loss", "n")
GRADCHECK_COLUMNS = ("max_relative_error", "worst_parameter", "worst_index", "checked", "excluded", "passed")


def format_output(content, format_type: str = "metrics", **kwargs) -> str:
    """
    Render an artifact as text.

    Args:
        content: The object to render (see the format-specific functions)
        format_type: One of metrics, attention, comparison, sweep, gradcheck, manifest
        **kwargs: Passed to the format-specific function

    Returns:
        Formatted content string
    """
    formatters = {
        "metrics": format_metrics,
        "attention": format_attention,
        "comparison": format_comparison,
        "sweep": format_sweep,
        "gradcheck": format_gradcheck,
        "manifest": format_manifest,
    }
    try:
        formatter = formatters[format_type]
    except KeyError:
        raise ValueError(f"Unknown format {format_type!r}; expected one of {', '.join(formatters)}") from None
    return formatter(content, **kwargs)


def _number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_number(v) for v in row])
    return buffer.getvalue()


def format_metrics(reports: Iterable[tuple[str, str, str, MetricsReport]]) -> str:
    """
    One CSV row per (model, dataset, split, report).

    Args:
        reports: Tuples of model name, dataset (task id), split name and its report
    """
    return _csv(
        METRICS_COLUMNS,
        (
            (model, dataset, split, r.accuracy, r.roc_auc, r.f1, r.kappa, r.log_loss, r.n)
            for model, dataset, split, r in reports
        ),
    )


def format_attention(matrix: AttentionMatrix) -> str:
    """(K+1) x (K+1) grid with task ids heading rows and columns."""
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(matrix.to_rows())
    return buffer.getvalue()


def format_comparison(rows: list[dict]) -> str:
    """Rows from comparison_table: absolute values, percent changes and Overall."""
    metrics = HIGHER_IS_BETTER + LOWER_IS_BETTER
    header = ["model", *metrics, *(f"{m}_change" for m in metrics), "overall"]
    return _csv(header, ([row[column] for column in header] for row in rows))


def format_sweep(results: Iterable[tuple[int, MetricsReport]]) -> str:
    """One row per meta-epoch count."""
    return _csv(
        SWEEP_COLUMNS,
        ((epochs, r.accuracy, r.roc_auc, r.f1, r.kappa, r.log_loss, r.n) for epochs, r in results),
    )


def format_gradcheck(report: GradCheckReport, tolerance: float = 1e-4) -> str:
    index = "" if report.worst_index is None else " ".join(map(str, report.worst_index))
    return _csv(
        GRADCHECK_COLUMNS,
        [(
            report.max_relative_error,
            report.worst_parameter,
            index,
            report.checked,
            report.excluded,
            str(report.passed(tolerance)).lower(),
        )],
    )


def format_manifest(manifest: dict) -> str:
    """Dataset manifest as YAML, keys in insertion order."""
    return yaml.safe_dump(manifest, sort_keys=False, default_flow_style=False)
