"""Chunked, thread-fanned inference over a meta-dataset split."""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import numpy.typing as npt
from scipy.special import expit

from concept_meta.concepts import LossKind
from concept_meta.data import MetaDataset
from concept_meta.evaluation.metrics import MetricsReport, evaluate_predictions
from concept_meta.model import Model

logger = logging.getLogger(__name__)

CHUNK_SIZE = 2048


def predict_logits(
    params: Model,
    meta: MetaDataset,
    task: int,
    split: str = "test",
    keep: npt.NDArray[np.float64] | None = None,
    threads: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> npt.NDArray[np.float64]:
    """
    Raw outputs of the task's head for every row of a split.

    Chunks are evaluated on up to `threads` workers and reassembled in
    their original order, so results do not depend on the thread count.

    Args:
        params: Trained model with a head for the task
        meta: Meta-dataset holding the rows
        task: Task index in meta
        split: Split name
        keep: Keep-mask override for the inputs (defaults to the task's own)
        threads: Worker threads
        chunk_size: Rows per chunk

    Returns:
        One output per row
    """
    head = params.head_index(meta.task_ids[task])
    n = meta.labels(task, split).shape[0]
    starts = list(range(0, n, chunk_size))

    def run(start: int) -> npt.NDArray[np.float64]:
        rows = np.arange(start, min(start + chunk_size, n))
        X = meta.dense(task, split, rows, keep)
        logits, _ = params.forward_batch(X, np.full(rows.shape[0], head))
        return logits

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(start) for start in starts]
    return np.concatenate(parts) if parts else np.zeros(0)


def predict_proba(
    params: Model,
    meta: MetaDataset,
    task: int,
    split: str = "test",
    threads: int = 1,
) -> npt.NDArray[np.float64]:
    """Probabilities for binary tasks; regression tasks return raw predictions."""
    logits = predict_logits(params, meta, task, split, threads=threads)
    if meta.tasks[task].schema.loss_kind is LossKind.BINARY:
        return expit(logits)
    return logits


def evaluate_task(
    params: Model,
    meta: MetaDataset,
    task: int,
    split: str = "test",
    threshold: float = 0.5,
    threads: int = 1,
) -> MetricsReport:
    """MetricsReport of a binary task's head on one split."""
    probs = predict_proba(params, meta, task, split, threads)
    return evaluate_predictions(probs, meta.labels(task, split), meta.task_ids[task], threshold)
