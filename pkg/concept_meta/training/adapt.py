"""Online adaptation of a trained meta-model to one task."""
import logging
import math
from dataclasses import dataclass, field

from concept_meta.concepts import Vocabulary
from concept_meta.data import TaskDataset, build_meta_dataset
from concept_meta.errors import SchemaError
from concept_meta.model import Model
from concept_meta.training.configs import AdaptConfig, MetaTrainConfig
from concept_meta.training.loop import fit
from concept_meta.training.run_log import RunLog

logger = logging.getLogger(__name__)


@dataclass
class AdaptResult:
    """Adapted snapshot, chosen learning rate and the log of every grid point."""

    params: Model
    learning_rate: float | None
    val_loss: float
    logs: dict[float, RunLog] = field(default_factory=dict)


def check_compatible(params: Model, task: TaskDataset, meta_vocab: Vocabulary) -> None:
    """
    Raises:
        SchemaError: If the model, the task and the meta-vocabulary disagree on the vocabulary hash
    """
    digest = meta_vocab.digest()
    if params.meta_digest != digest:
        raise SchemaError("Model was trained on a different meta-vocabulary")
    if task.schema.meta_digest != digest:
        raise SchemaError(f"Task {task.task_id} was aligned to a different meta-vocabulary")


def online_adapt(
    params: Model,
    task: TaskDataset,
    meta_vocab: Vocabulary,
    config: AdaptConfig,
    progress: bool = True,
) -> AdaptResult:
    """
    Fine-tune every parameter on one task's training rows, loss at its own head.

    Each learning rate of the grid starts from a copy of the trained model
    and keeps its best validation snapshot, the untouched model included.
    The grid point with the lowest validation loss wins.

    Args:
        params: Trained model; not modified
        task: Task to adapt to, with a head in the model
        meta_vocab: Meta-vocabulary the model was trained on
        config: Epochs, learning-rate grid, batch size and seed
        progress: Show progress bars

    Returns:
        AdaptResult; with 0 epochs the parameters equal the input's

    Raises:
        SchemaError: On a vocabulary hash mismatch
    """
    check_compatible(params, task, meta_vocab)
    head = params.head_index(task.task_id)
    if config.epochs == 0:
        return AdaptResult(params.copy(), None, math.nan)

    view = build_meta_dataset([task], meta_vocab)
    best: AdaptResult | None = None
    logs: dict[float, RunLog] = {}
    for lr in config.lr_grid:
        loop_config = MetaTrainConfig(
            meta_epochs=config.epochs,
            batch_size=config.batch_size,
            learning_rate=lr,
            seed=config.seed,
        )
        result = fit(
            params.copy(), view, loop_config, head_map=[head], restore_best=True,
            progress=progress, desc=f"adapt lr={lr:g}",
        )
        logs[lr] = result.log
        logger.info("Adaptation at lr=%g: best val %.6f (epoch %s)", lr, result.best_val_loss, result.best_epoch)
        if best is None or (math.isfinite(result.best_val_loss) and not result.best_val_loss >= best.val_loss):
            best = AdaptResult(result.params, lr, result.best_val_loss)

    best.logs = logs
    return best
