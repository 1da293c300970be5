"""Meta-training of a MetaAug network on a meta-dataset."""
import logging
from dataclasses import replace

from concept_meta.data import MetaDataset
from concept_meta.errors import ConfigurationError
from concept_meta.model import MetaAugConfig, MetaAugParams, init
from concept_meta.training.configs import MetaTrainConfig
from concept_meta.training.loop import FitResult, fit

logger = logging.getLogger(__name__)


def sized_for(config: MetaAugConfig, meta: MetaDataset) -> MetaAugConfig:
    """The same architecture with input width and head count taken from a meta-dataset."""
    return replace(config, input_dim=meta.input_dim, num_tasks=meta.num_tasks)


def init_for(config: MetaAugConfig, meta: MetaDataset) -> MetaAugParams:
    """Fresh parameters bound to a meta-dataset's tasks and vocabulary hash."""
    if config.input_dim != meta.input_dim or config.num_tasks != meta.num_tasks:
        raise ConfigurationError(
            f"Model expects {config.input_dim} inputs and {config.num_tasks} tasks, "
            f"meta-dataset has {meta.input_dim} and {meta.num_tasks}"
        )
    return init(config).bind(meta.task_ids, meta.loss_kinds(), meta.meta_vocab.digest())


def meta_train(
    meta: MetaDataset,
    model_config: MetaAugConfig,
    train_config: MetaTrainConfig,
    progress: bool = True,
) -> FitResult:
    """
    Train a fresh MetaAug network on every task of the meta-dataset.

    Args:
        meta: Aligned meta-dataset
        model_config: Architecture; input_dim and num_tasks must match meta
        train_config: Loop settings
        progress: Show progress bars

    Returns:
        FitResult with the trained parameters (best validation snapshot if
        early stopping fired) and the run log
    """
    params = init_for(model_config, meta)
    logger.info(
        "Meta-training %d tasks for %d epochs (%d parameters)",
        meta.num_tasks, train_config.meta_epochs, params.store.num_parameters(),
    )
    return fit(params, meta, train_config, progress=progress, desc="meta-train")
