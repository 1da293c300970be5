"""Meta learning on a single dataset through auxiliary tasks, and the meta-epoch sweep."""
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

from concept_meta.concepts import Vocabulary
from concept_meta.data import AuxPolicy, MetaDataset, TaskDataset, build_auxiliary_tasks, build_meta_dataset
from concept_meta.evaluation import MetricsReport, evaluate_task
from concept_meta.model import MetaAugConfig, Model
from concept_meta.training.adapt import AdaptResult, online_adapt
from concept_meta.training.configs import AdaptConfig, MetaTrainConfig
from concept_meta.training.loop import FitResult
from concept_meta.training.meta_train import meta_train, sized_for

logger = logging.getLogger(__name__)


@dataclass
class SingleTaskResult:
    """Adapted model, the meta-trained model it started from, and how it was made."""

    params: Model
    meta_params: Model
    meta: MetaDataset
    train: FitResult
    adapt: AdaptResult
    provenance: dict = field(default_factory=dict)


def single_task_meta(
    base: TaskDataset,
    meta_vocab: Vocabulary,
    policy: AuxPolicy,
    model_config: MetaAugConfig,
    train_config: MetaTrainConfig,
    adapt_config: AdaptConfig,
    min_support: int = 1,
    progress: bool = True,
) -> SingleTaskResult:
    """
    Meta-train on the primary task plus auxiliary tasks, then adapt to the primary task.

    With policy sample:0 the meta-dataset holds only the primary task and
    this is plain supervised training through the MetaAug architecture.

    Args:
        base: Primary task
        meta_vocab: Its concepts plus its label
        policy: Which concepts become auxiliary tasks
        model_config: Architecture; input width and head count are derived
        train_config: Meta-training loop settings
        adapt_config: Online adaptation settings
        min_support: Minimum support for auxiliary causal masks
        progress: Show progress bars

    Returns:
        SingleTaskResult with a provenance record
    """
    auxiliary = build_auxiliary_tasks(base, meta_vocab, policy, min_support)
    meta = build_meta_dataset([base, *auxiliary], meta_vocab)
    config = sized_for(model_config, meta)

    trained = meta_train(meta, config, train_config, progress=progress)
    adapted = online_adapt(trained.params, base, meta_vocab, adapt_config, progress=progress)

    provenance = {
        "base_task": base.task_id,
        "aux_policy": str(policy),
        "aux_tasks": len(auxiliary),
        "meta_tasks": meta.num_tasks,
        "meta_epochs": train_config.meta_epochs,
        "meta_steps": trained.steps,
        "adapt_epochs": adapt_config.epochs,
        "adapt_learning_rate": adapted.learning_rate,
        "seeds": {
            "model": config.seed,
            "meta_train": train_config.seed,
            "adapt": adapt_config.seed,
            "aux": policy.seed,
        },
    }
    logger.info("Single-task meta learning on %s: %s", base.task_id, provenance)
    return SingleTaskResult(adapted.params, trained.params, meta, trained, adapted, provenance)


def meta_epoch_sweep(
    base: TaskDataset,
    meta_vocab: Vocabulary,
    policy: AuxPolicy,
    model_config: MetaAugConfig,
    train_config: MetaTrainConfig,
    adapt_config: AdaptConfig,
    epochs_list: Sequence[int],
    split: str = "test",
    threshold: float = 0.5,
    min_support: int = 1,
    progress: bool = True,
) -> list[tuple[int, MetricsReport]]:
    """
    Run single-task meta learning for each meta-epoch count and score the adapted model.

    A count of 0 skips meta-training, which leaves only the adaptation.

    Returns:
        (meta_epochs, MetricsReport of the primary task) per count, in order
    """
    results = []
    for epochs in epochs_list:
        outcome = single_task_meta(
            base, meta_vocab, policy, model_config,
            replace(train_config, meta_epochs=epochs), adapt_config, min_support, progress,
        )
        report = evaluate_task(outcome.params, outcome.meta, 0, split, threshold)
        logger.info("meta_epochs=%d: auc=%.4f acc=%.4f", epochs, report.roc_auc, report.accuracy)
        results.append((epochs, report))
    return results
