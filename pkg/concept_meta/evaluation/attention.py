"""Task-attention matrix: how much task i relies on the concepts task j masks."""
import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from concept_meta.concepts import LossKind
from concept_meta.data import MetaDataset
from concept_meta.evaluation.predict import predict_logits
from concept_meta.model import Model
from concept_meta.numeric import logistic_loss_with_logit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttentionMatrix:
    """K x K scores; row i is the task whose labels are predicted."""

    task_ids: tuple[str, ...]
    scores: npt.NDArray[np.float64]

    def score(self, i: int, j: int) -> float:
        return float(self.scores[i, j])

    def strongest(self, i: int) -> int:
        """Column of the largest off-diagonal score in row i."""
        row = self.scores[i].copy()
        row[i] = -np.inf
        return int(np.argmax(row))

    def to_rows(self) -> list[list[str]]:
        """(K+1) x (K+1) grid with task ids as header row and column."""
        rows = [["task", *self.task_ids]]
        for task_id, values in zip(self.task_ids, self.scores):
            rows.append([task_id, *(repr(float(v)) for v in values)])
        return rows


def log_likelihood(outputs: npt.NDArray[np.float64], labels: npt.NDArray[np.float64], kind: LossKind):
    """Per-row log-likelihood of the labels: Bernoulli for binary, unit Gaussian (constants dropped) otherwise."""
    if kind is LossKind.BINARY:
        loss, _ = logistic_loss_with_logit(outputs, labels)
        return -np.atleast_1d(loss)
    return -0.5 * (outputs - labels) ** 2


def task_attention(params: Model, meta: MetaDataset, split: str = "test", threads: int = 1) -> AttentionMatrix:
    """
    score(i, j) = mean over task-i rows of log p(y | x masked by CMask(i))
    minus log p(y | x masked by CMask(i) and CMask(j)).

    The diagonal is exactly zero. A task without rows in the split gets a
    zero row and a warning.

    Args:
        params: Trained model with a head for every task of meta
        meta: Meta-dataset
        split: Split whose rows are scored
        threads: Inference worker threads

    Returns:
        AttentionMatrix over meta's tasks
    """
    k = meta.num_tasks
    scores = np.zeros((k, k), dtype=np.float64)
    for i in range(k):
        labels = meta.labels(i, split)
        if labels.shape[0] == 0:
            logger.warning("Task %s has no %s rows; attention row left at zero", meta.task_ids[i], split)
            continue
        kind = meta.tasks[i].schema.loss_kind
        keep_i = meta.keep(i)
        before = log_likelihood(predict_logits(params, meta, i, split, threads=threads), labels, kind)
        for j in range(k):
            if j == i:
                continue
            keep = keep_i * meta.keep(j)
            if np.array_equal(keep, keep_i):
                continue
            after = log_likelihood(
                predict_logits(params, meta, i, split, keep=keep, threads=threads), labels, kind
            )
            scores[i, j] = float(np.mean(before - after))
    return AttentionMatrix(meta.task_ids, scores)
