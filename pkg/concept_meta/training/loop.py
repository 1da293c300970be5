"""The minibatch loop shared by meta-training, baseline training and online adaptation.

Every step samples a batch mixing tasks in proportion to their training
sizes, applies each row's own task loss at its own head, sums the losses
and takes one Adam step on the summed gradient.
"""
import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import numpy.typing as npt
from tqdm import tqdm

from concept_meta.concepts import LossKind
from concept_meta.data import BatchSampler, MetaDataset, sample_batch
from concept_meta.errors import ConfigurationError, NonFiniteLossError
from concept_meta.numeric import (
    AdamState,
    Matrix,
    ParamStore,
    adam_step,
    clip_grad_norm,
    logistic_loss_with_logit,
    squared_loss,
)
from concept_meta.training.configs import MetaTrainConfig
from concept_meta.training.run_log import LogRow, RunLog

logger = logging.getLogger(__name__)

EVAL_CHUNK = 4096


class Trainable(Protocol):
    """What the loop needs from a network: a store, batched forward and backward."""

    store: ParamStore
    task_ids: tuple[str, ...]

    @property
    def num_tasks(self) -> int: ...

    def forward_batch(self, X, tasks: npt.ArrayLike): ...

    def backward(self, cache, dlogits: Matrix) -> None: ...


@dataclass
class FitResult:
    """Trained parameters plus the run log and early-stopping outcome."""

    params: Trainable
    log: RunLog = field(default_factory=RunLog)
    best_epoch: int | None = None
    best_val_loss: float = math.nan
    stopped_early: bool = False
    steps: int = 0


def instance_losses(
    logits: Matrix, labels: Matrix, regression: npt.NDArray[np.bool_]
) -> tuple[Matrix, Matrix]:
    """Per-row loss and d(loss)/d(logit): logistic for binary rows, squared for regression rows."""
    log_loss, log_grad = logistic_loss_with_logit(logits, np.where(regression, 0.0, labels))
    sq_loss, sq_grad = squared_loss(logits, labels)
    losses = np.where(regression, sq_loss, log_loss)
    grads = np.where(regression, sq_grad, log_grad)
    return np.atleast_1d(losses), np.atleast_1d(grads)


def regression_mask(meta: MetaDataset) -> npt.NDArray[np.bool_]:
    return np.array([kind is LossKind.REGRESSION for kind in meta.loss_kinds()], dtype=bool)


def resolve_head_map(model: Trainable, meta: MetaDataset, head_map: Sequence[int] | None) -> npt.NDArray[np.int64]:
    """Model head of every meta-dataset task (identity by default)."""
    if head_map is None:
        if meta.num_tasks != model.num_tasks:
            raise ConfigurationError(
                f"Model has {model.num_tasks} heads but the meta-dataset has {meta.num_tasks} tasks"
            )
        return np.arange(meta.num_tasks, dtype=np.int64)
    heads = np.asarray(head_map, dtype=np.int64)
    if heads.shape != (meta.num_tasks,) or heads.min(initial=0) < 0 or heads.max(initial=0) >= model.num_tasks:
        raise ConfigurationError(f"Invalid head map {heads.tolist()} for {model.num_tasks} heads")
    return heads


def meta_loss(
    params: Trainable,
    meta: MetaDataset,
    split: str = "val",
    reduction: str = "sum",
    head_map: Sequence[int] | None = None,
) -> float:
    """
    Sum (or per-instance mean) of every task's loss at its own head on a split.

    Returns:
        The loss; nan for a mean over an empty split
    """
    if reduction not in ("sum", "mean"):
        raise ConfigurationError(f"Unknown reduction {reduction!r}")
    heads = resolve_head_map(params, meta, head_map)
    regression = regression_mask(meta)

    total = 0.0
    count = 0
    for task in range(meta.num_tasks):
        labels = meta.labels(task, split)
        for start in range(0, labels.shape[0], EVAL_CHUNK):
            rows = np.arange(start, min(start + EVAL_CHUNK, labels.shape[0]))
            X = meta.dense(task, split, rows)
            logits, _ = params.forward_batch(X, np.full(rows.shape[0], heads[task]))
            losses, _ = instance_losses(logits, labels[rows], np.full(rows.shape[0], regression[task]))
            total += float(losses.sum())
            count += rows.shape[0]

    if reduction == "mean":
        return total / count if count else math.nan
    return total


def fit(
    model: Trainable,
    meta: MetaDataset,
    config: MetaTrainConfig,
    head_map: Sequence[int] | None = None,
    restore_best: bool = False,
    progress: bool = True,
    desc: str = "train",
) -> FitResult:
    """
    Train in place with in-batch task mixing.

    One epoch is ceil(total train instances / batch_size) steps. The
    validation mean loss is recorded before training (epoch 0) and after
    every epoch. The best snapshot is restored when early stopping fires or
    when restore_best is set.

    Args:
        model: Network to train (mutated)
        meta: Meta-dataset supplying batches and validation rows
        config: Loop settings
        head_map: Model head of each meta-dataset task
        restore_best: Always return the best validation snapshot
        progress: Show tqdm progress bars
        desc: Progress bar label

    Returns:
        FitResult holding the model and its run log

    Raises:
        NonFiniteLossError: If a batch loss is NaN or infinite
        ConfigurationError: If the meta-dataset has no training instances
    """
    store = model.store
    heads = resolve_head_map(model, meta, head_map)
    regression = regression_mask(meta)
    started = time.perf_counter()
    result = FitResult(model)

    def evaluate(epoch: int, train_loss: float) -> float:
        val = meta_loss(model, meta, "val", "mean", heads)
        result.log.append(LogRow(store.step, epoch, train_loss, val, time.perf_counter() - started))
        return val

    best_state = None
    val = evaluate(0, math.nan)
    if math.isfinite(val):
        best_state, result.best_epoch, result.best_val_loss = store.state_dict(), 0, val

    if config.meta_epochs == 0:
        return result

    if len(meta) == 0:
        raise ConfigurationError("Cannot train on a meta-dataset without training instances")
    sampler = BatchSampler(meta.train_sizes, config.batch_size, config.seed)
    adam = AdamState.for_params(store, config.beta1, config.beta2, config.eps)
    steps_per_epoch = math.ceil(len(meta) / config.batch_size)
    stale_epochs = 0

    for epoch in range(1, config.meta_epochs + 1):
        epoch_loss = 0.0
        epoch_rows = 0
        for _ in tqdm(
            range(steps_per_epoch), desc=f"{desc} {epoch}/{config.meta_epochs}", disable=not progress, leave=False
        ):
            batch = sample_batch(meta, sampler)
            logits, cache = model.forward_batch(batch.features, heads[batch.tasks])
            losses, dlogits = instance_losses(logits, batch.labels, regression[batch.tasks])
            loss = float(losses.sum())
            if not math.isfinite(loss):
                bad = np.flatnonzero(~np.isfinite(losses))
                task = int(batch.tasks[bad[0]]) if bad.size else int(batch.tasks[0])
                raise NonFiniteLossError(store.step, meta.task_ids[task], loss)
            model.backward(cache, dlogits)
            if config.clip_norm is not None:
                clip_grad_norm(store, config.clip_norm)
            adam_step(store, adam, config.learning_rate)
            epoch_loss += loss
            epoch_rows += len(batch)
            result.steps += 1

        val = evaluate(epoch, epoch_loss / epoch_rows)
        logger.info("%s epoch %d: train %.6f, val %.6f", desc, epoch, epoch_loss / epoch_rows, val)
        if math.isfinite(val) and not val >= result.best_val_loss:
            best_state, result.best_epoch, result.best_val_loss = store.state_dict(), epoch, val
            stale_epochs = 0
        else:
            stale_epochs += 1
        if config.early_stop_patience and stale_epochs >= config.early_stop_patience:
            result.stopped_early = True
            logger.info("%s stopped early after epoch %d (best epoch %s)", desc, epoch, result.best_epoch)
            break

    if best_state is not None and (restore_best or result.stopped_early):
        store.load_state_dict(best_state)
    return result
