"""Task datasets, their splits, and the alignment pipeline that produces schemas."""
import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field, replace

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from concept_meta.concepts import (
    ConceptVector,
    LossKind,
    TaskSchema,
    Vocabulary,
    align_vocabularies,
    compute_cmask,
)
from concept_meta.errors import ConfigurationError, SchemaError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InstanceSplit:
    """Rows of (ConceptVector, label) stored as one CSR matrix over `vocab`."""

    features: sp.csr_matrix
    labels: npt.NDArray[np.float64]
    vocab: Vocabulary
    row_ids: npt.NDArray[np.int64] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        features = self.features
        # CSR float64 input is kept as is; relabelled splits share it
        if not (isinstance(features, sp.csr_matrix) and features.dtype == np.float64):
            features = sp.csr_matrix(features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if features.shape[0] != labels.shape[0]:
            raise SchemaError(f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
        if features.shape[1] != len(self.vocab):
            raise SchemaError(
                f"Feature matrix has {features.shape[1]} columns, vocabulary has {len(self.vocab)}"
            )
        row_ids = self.row_ids
        if row_ids is None:
            row_ids = np.arange(labels.shape[0], dtype=np.int64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "row_ids", np.asarray(row_ids, dtype=np.int64))

    @classmethod
    def empty(cls, vocab: Vocabulary) -> "InstanceSplit":
        return cls(sp.csr_matrix((0, len(vocab))), np.zeros(0), vocab, np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def __iter__(self) -> Iterator[tuple[ConceptVector, float]]:
        for row in range(len(self)):
            yield self.vector(row), float(self.labels[row])

    def vector(self, row: int) -> ConceptVector:
        start, end = self.features.indptr[row], self.features.indptr[row + 1]
        order = np.argsort(self.features.indices[start:end], kind="stable")
        return ConceptVector(
            self.features.indices[start:end][order],
            self.features.data[start:end][order],
            self.vocab,
        )

    def subset(self, rows: npt.ArrayLike) -> "InstanceSplit":
        rows = np.asarray(rows, dtype=np.int64)
        return InstanceSplit(self.features[rows], self.labels[rows], self.vocab, self.row_ids[rows])

    def with_labels(self, labels: npt.ArrayLike) -> "InstanceSplit":
        """Same rows (shared storage) with different labels."""
        return replace(self, labels=np.asarray(labels, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class TaskDataset:
    """A task's schema plus its train/val/test splits."""

    schema: TaskSchema
    train: InstanceSplit
    val: InstanceSplit
    test: InstanceSplit

    def __post_init__(self):
        for name in ("train", "val", "test"):
            split = getattr(self, name)
            if split.vocab != self.schema.task_vocab:
                raise SchemaError(f"Task {self.schema.task_id}: {name} split uses another vocabulary")
            if self.schema.is_binary and len(split) and not np.all(np.isin(split.labels, (0.0, 1.0))):
                raise SchemaError(f"Task {self.schema.task_id}: binary {name} labels outside {{0,1}}")
        if np.intersect1d(self.train.row_ids, self.val.row_ids).size:
            raise SchemaError(f"Task {self.schema.task_id}: train and val share instances")

    @property
    def task_id(self) -> str:
        return self.schema.task_id

    def split(self, name: str) -> InstanceSplit:
        if name not in ("train", "val", "test"):
            raise ConfigurationError(f"Unknown split {name!r}")
        return getattr(self, name)


@dataclass(frozen=True, eq=False)
class RawTask:
    """A task before alignment: vocabulary, label concept and splits."""

    task_id: str
    label_concept: str
    vocab: Vocabulary
    train: InstanceSplit
    val: InstanceSplit
    test: InstanceSplit
    loss_kind: LossKind = LossKind.BINARY


def split_train_val(
    train: InstanceSplit, val_fraction: float, seed: int
) -> tuple[InstanceSplit, InstanceSplit]:
    """
    Seeded shuffle, then prefix for training and suffix for validation.

    Args:
        train: Rows to split
        val_fraction: Fraction in [0, 1) moved to validation
        seed: Shuffle seed

    Returns:
        Tuple of (train', val), disjoint and exhaustive

    Raises:
        ConfigurationError: If val_fraction is outside [0, 1)
    """
    if not 0.0 <= val_fraction < 1.0:
        raise ConfigurationError(f"val_fraction must be in [0, 1), got {val_fraction}")
    n = len(train)
    order = np.random.default_rng(seed).permutation(n)
    n_val = int(n * val_fraction)
    cut = n - n_val
    return train.subset(order[:cut]), train.subset(order[cut:])


def prepare_tasks(
    raw_tasks: Sequence[RawTask], min_support: int = 1
) -> tuple[Vocabulary, list[TaskDataset]]:
    """
    Align vocabularies, compute causal masks on training data, build schemas.

    Args:
        raw_tasks: Tasks with their own vocabularies
        min_support: Minimum active rows for a concept to enter a causal mask

    Returns:
        Tuple of (meta-vocabulary, aligned task datasets)
    """
    meta_vocab = align_vocabularies([t.vocab for t in raw_tasks], [t.label_concept for t in raw_tasks])
    tasks = []
    for raw in raw_tasks:
        cmask = compute_cmask(raw.train, raw.label_concept, meta_vocab, min_support)
        schema = TaskSchema.build(raw.task_id, raw.label_concept, raw.vocab, cmask, meta_vocab, raw.loss_kind)
        logger.info(
            "Task %s: %d train / %d val / %d test, causal mask of %d concepts",
            raw.task_id, len(raw.train), len(raw.val), len(raw.test), len(schema.cmask),
        )
        tasks.append(TaskDataset(schema, raw.train, raw.val, raw.test))
    return meta_vocab, tasks
