"""Supervised baseline training through the shared minibatch loop."""
import logging
from collections.abc import Sequence
from dataclasses import replace

from concept_meta.concepts import Vocabulary
from concept_meta.data import TaskDataset, build_meta_dataset
from concept_meta.errors import ConfigurationError
from concept_meta.model import BaselineConfig, BaselineKind, MetaAugConfig, init, init_baseline
from concept_meta.training.configs import MetaTrainConfig
from concept_meta.training.loop import FitResult, fit

logger = logging.getLogger(__name__)


def train_baseline(
    tasks: TaskDataset | Sequence[TaskDataset],
    meta_vocab: Vocabulary,
    architecture: BaselineConfig | MetaAugConfig,
    train_config: MetaTrainConfig,
    progress: bool = True,
) -> FitResult:
    """
    Train a baseline on pad-masked inputs of one task (or several, for a shared trunk).

    The tasks form their own meta-dataset, so a single task under a
    MetaAugConfig follows exactly the same code path and sampling as
    meta-training on that one task.

    Args:
        tasks: One task, or several for shared_trunk_multitask
        meta_vocab: Meta-vocabulary the tasks are aligned to
        architecture: Baseline MLP settings, or a MetaAug architecture
        train_config: Loop settings
        progress: Show progress bars

    Returns:
        FitResult with the trained model

    Raises:
        ConfigurationError: If a single-task MLP is given several tasks
    """
    tasks = [tasks] if isinstance(tasks, TaskDataset) else list(tasks)
    view = build_meta_dataset(tasks, meta_vocab)

    if isinstance(architecture, MetaAugConfig):
        model = init(replace(architecture, input_dim=view.input_dim, num_tasks=view.num_tasks))
    else:
        if architecture.kind is BaselineKind.SINGLE_TASK_MLP and len(tasks) != 1:
            raise ConfigurationError("single_task_mlp trains on exactly one task")
        model = init_baseline(replace(architecture, input_dim=view.input_dim, num_tasks=view.num_tasks))
    model.bind(view.task_ids, view.loss_kinds(), meta_vocab.digest())

    logger.info(
        "Training %s baseline on %s (%d parameters)",
        architecture.kind.value if isinstance(architecture, BaselineConfig) else "meta_aug",
        ", ".join(view.task_ids), model.store.num_parameters(),
    )
    return fit(model, view, train_config, progress=progress, desc="baseline")
