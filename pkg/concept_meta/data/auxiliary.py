"""Self-supervised auxiliary tasks: predict one concept from the others."""
import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from concept_meta.concepts import LossKind, TaskSchema, Vocabulary, compute_cmask
from concept_meta.data.splits import InstanceSplit, TaskDataset
from concept_meta.errors import ConfigurationError

logger = logging.getLogger(__name__)

AUX_PREFIX = "aux::"


@dataclass(frozen=True)
class AuxPolicy:
    """Which concepts become auxiliary tasks: all of them, or a seeded sample of k."""

    kind: str = "all"
    k: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("all", "sample"):
            raise ConfigurationError(f"Unknown auxiliary policy {self.kind!r}")
        if self.k < 0:
            raise ConfigurationError(f"Auxiliary sample size must be >= 0, got {self.k}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "AuxPolicy":
        """
        Parse "all" or "sample:K".

        Raises:
            ConfigurationError: On any other form
        """
        text = text.strip()
        if text == "all":
            return cls("all", 0, seed)
        head, sep, tail = text.partition(":")
        if head == "sample" and sep:
            try:
                return cls("sample", int(tail), seed)
            except ValueError:
                pass
        raise ConfigurationError(f"Auxiliary policy must be 'all' or 'sample:K', got {text!r}")

    def __str__(self) -> str:
        return "all" if self.kind == "all" else f"sample:{self.k}"

    def select(self, candidates: Sequence[str]) -> list[str]:
        """Apply the policy to candidate concepts, keeping their order."""
        if self.kind == "all":
            return list(candidates)
        if self.k > len(candidates):
            logger.warning(
                "Requested %d auxiliary tasks but only %d concepts exist; using all",
                self.k, len(candidates),
            )
            return list(candidates)
        chosen = np.random.default_rng(self.seed).choice(len(candidates), size=self.k, replace=False)
        return [candidates[i] for i in np.sort(chosen)]


def aux_task_id(concept: str, base_task_id: str | None = None) -> str:
    """aux::<concept>, or aux::<task>::<concept> when several tasks contribute."""
    if base_task_id is None:
        return f"{AUX_PREFIX}{concept}"
    return f"{AUX_PREFIX}{base_task_id}::{concept}"


def _column(split: InstanceSplit, index: int) -> npt.NDArray[np.float64]:
    return split.features[:, [index]].toarray().ravel()


def with_label_column(base: TaskDataset) -> dict[str, InstanceSplit]:
    """
    The base splits over task_vocab + [label concept], the label appended as a last column.

    Auxiliary tasks read their inputs from C u {Y}, so the primary label is an
    ordinary concept for them and may enter their causal masks.
    """
    vocab = Vocabulary([*base.schema.task_vocab, base.schema.label_concept])
    splits = {}
    for name in ("train", "val", "test"):
        split = base.split(name)
        if len(split) == 0:
            splits[name] = InstanceSplit.empty(vocab)
            continue
        label = sp.csr_matrix(split.labels.reshape(-1, 1))
        features = sp.hstack([split.features, label], format="csr", dtype=np.float64)
        splits[name] = InstanceSplit(features, split.labels, vocab, split.row_ids)
    return splits


def build_auxiliary_task(
    base: TaskDataset,
    concept: str,
    meta_vocab: Vocabulary,
    min_support: int = 1,
    task_id: str | None = None,
    labelled: dict[str, InstanceSplit] | None = None,
) -> TaskDataset | None:
    """
    One auxiliary task whose label is the value of `concept`.

    Args:
        base: Primary task
        concept: Concept of base.schema.task_vocab to predict
        meta_vocab: Meta-vocabulary, containing the base label concept
        min_support: Minimum support for causal mask concepts
        task_id: Defaults to aux::<concept>
        labelled: Output of with_label_column(base), shared between auxiliary tasks

    Returns:
        The task, or None when the concept is constant on the training split
    """
    if labelled is None:
        labelled = with_label_column(base)
    vocab = labelled["train"].vocab
    column = vocab.index(concept)
    values = {name: _column(split, column) for name, split in labelled.items()}

    train_values = values["train"]
    if train_values.size == 0 or float(np.std(train_values)) == 0.0:
        logger.warning("Skipping auxiliary task for constant concept %s", concept)
        return None

    every = np.concatenate(list(values.values()))
    if np.all(np.isin(every, (0.0, 1.0))):
        loss_kind = LossKind.BINARY
    else:
        loss_kind = LossKind.REGRESSION
        mean, std = float(train_values.mean()), float(train_values.std())
        values = {name: (v - mean) / std for name, v in values.items()}

    train = labelled["train"].with_labels(values["train"])
    cmask = compute_cmask(train, concept, meta_vocab, min_support)
    schema = TaskSchema.build(task_id or aux_task_id(concept), concept, vocab, cmask, meta_vocab, loss_kind)
    return TaskDataset(
        schema,
        train,
        labelled["val"].with_labels(values["val"]),
        labelled["test"].with_labels(values["test"]),
    )


def build_auxiliary_tasks(
    base: TaskDataset | Sequence[TaskDataset],
    meta_vocab: Vocabulary,
    policy: AuxPolicy,
    min_support: int = 1,
) -> list[TaskDataset]:
    """
    Build auxiliary tasks for every concept the policy selects.

    With several base tasks the candidates are pooled as (task, concept) pairs
    and ids are qualified with the task id.

    Args:
        base: Primary task, or several primary tasks
        meta_vocab: Meta-vocabulary the base schemas were built against
        policy: all | sample(k, seed)
        min_support: Minimum support for causal mask concepts

    Returns:
        Auxiliary task datasets, constant concepts skipped
    """
    bases = [base] if isinstance(base, TaskDataset) else list(base)
    qualify = len(bases) > 1
    candidates = [
        (task_index, concept)
        for task_index, task in enumerate(bases)
        for concept in task.schema.task_vocab
    ]
    labels = [f"{bases[t].task_id}::{c}" if qualify else c for t, c in candidates]
    selected = set(policy.select(labels))

    tasks = []
    labelled: dict[int, dict[str, InstanceSplit]] = {}
    for (task_index, concept), label in zip(candidates, labels):
        if label not in selected:
            continue
        owner = bases[task_index]
        if task_index not in labelled:
            labelled[task_index] = with_label_column(owner)
        task_id = aux_task_id(concept, owner.task_id if qualify else None)
        aux = build_auxiliary_task(owner, concept, meta_vocab, min_support, task_id, labelled[task_index])
        if aux is not None:
            tasks.append(aux)

    logger.info("Built %d auxiliary tasks (policy %s)", len(tasks), policy)
    return tasks
