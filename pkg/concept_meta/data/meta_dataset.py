"""The aligned meta-dataset: every task's rows over the meta-vocabulary."""
import hashlib
import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from concept_meta.concepts import (
    LossKind,
    TaskSchema,
    Vocabulary,
    column_map,
    keep_mask,
    reindex_rows,
)
from concept_meta.data.splits import InstanceSplit, TaskDataset
from concept_meta.errors import ConfigurationError, SchemaError

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")


@dataclass(frozen=True, eq=False)
class _AlignedSplit:
    features: sp.csr_matrix  # unmasked, over C_meta
    labels: npt.NDArray[np.float64]
    source: InstanceSplit


def split_checksum(split: InstanceSplit) -> str:
    """SHA-256 over a split's CSR buffers and labels."""
    csr = split.features
    digest = hashlib.sha256()
    for array in (csr.indptr, csr.indices, csr.data, split.labels):
        digest.update(np.ascontiguousarray(array).tobytes())
    return digest.hexdigest()


class MetaDataset:
    """
    Aligned instances of every task over C_meta, each tagged with its task.

    Vectors are stored unmasked and sparse. Every served vector (dense batch or
    single instance) has its task's causal mask coordinates set to zero.
    """

    def __init__(
        self,
        meta_vocab: Vocabulary,
        tasks: Sequence[TaskDataset],
        aligned: Sequence[dict[str, _AlignedSplit]],
    ):
        self.meta_vocab = meta_vocab
        self.tasks = tuple(tasks)
        self._aligned = tuple(aligned)
        rows = [keep_mask(meta_vocab, t.schema.cmask) for t in self.tasks]
        self._keep = np.stack(rows) if rows else np.zeros((0, len(meta_vocab)))
        self._keep.setflags(write=False)

    @property
    def schemas(self) -> tuple[TaskSchema, ...]:
        return tuple(t.schema for t in self.tasks)

    @property
    def task_ids(self) -> tuple[str, ...]:
        return tuple(t.task_id for t in self.tasks)

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    @property
    def input_dim(self) -> int:
        return len(self.meta_vocab)

    def loss_kinds(self) -> tuple[LossKind, ...]:
        return tuple(t.schema.loss_kind for t in self.tasks)

    def sizes(self, split: str = "train") -> npt.NDArray[np.int64]:
        """Per-task instance counts of a split."""
        return np.array([len(self._split(i, split).labels) for i in range(self.num_tasks)], dtype=np.int64)

    @property
    def train_sizes(self) -> npt.NDArray[np.int64]:
        return self.sizes("train")

    def __len__(self) -> int:
        return int(self.train_sizes.sum())

    def task_index(self, task_id: str) -> int:
        try:
            return self.task_ids.index(task_id)
        except ValueError:
            raise ConfigurationError(f"Unknown task {task_id!r}") from None

    def keep(self, task: int) -> npt.NDArray[np.float64]:
        """Keep-mask of a task: 0.0 on its causal mask, 1.0 elsewhere."""
        return self._keep[task]

    def labels(self, task: int, split: str = "train") -> npt.NDArray[np.float64]:
        return self._split(task, split).labels

    def aligned(self, task: int, split: str = "train") -> sp.csr_matrix:
        """Unmasked CSR rows of a task split over C_meta."""
        return self._split(task, split).features

    def dense(
        self,
        task: int,
        split: str = "train",
        rows: npt.ArrayLike | None = None,
        keep: npt.NDArray[np.float64] | None = None,
    ) -> npt.NDArray[np.float64]:
        """
        Dense pad-masked batch for a task split.

        Args:
            task: Task index
            split: Split name
            rows: Row positions; all rows when omitted
            keep: Keep-mask override (defaults to the task's own)

        Returns:
            Array of shape (len(rows), |C_meta|)
        """
        features = self._split(task, split).features
        if rows is not None:
            features = features[np.asarray(rows, dtype=np.int64)]
        return features.toarray() * (self._keep[task] if keep is None else keep)

    def instance(self, task: int, row: int, split: str = "train") -> tuple[npt.NDArray[np.float64], float]:
        """(pad-masked dense vector, label) of one instance."""
        aligned = self._split(task, split)
        return self.dense(task, split, [row])[0], float(aligned.labels[row])

    def instances(self, split: str = "train") -> Iterator[tuple[int, npt.NDArray[np.float64], float]]:
        """Every (task index, pad-masked vector, label), task by task."""
        for task in range(self.num_tasks):
            batch = self.dense(task, split)
            labels = self.labels(task, split)
            for row in range(batch.shape[0]):
                yield task, batch[row], float(labels[row])

    def project_task(self, task: int, split: str = "train") -> InstanceSplit:
        """
        Restrict to task rows and task columns C_i, with the label column.

        Returns the source split (same rows, vocabulary and labels) recovered
        from the aligned storage.
        """
        aligned = self._split(task, split)
        source = aligned.source
        columns = column_map(source.vocab, self.meta_vocab)
        features = aligned.features[:, columns]
        return InstanceSplit(sp.csr_matrix(features), aligned.labels.copy(), source.vocab, source.row_ids.copy())

    def subset(self, task_indices: Sequence[int]) -> "MetaDataset":
        """View over a subset of tasks, sharing storage."""
        indices = list(task_indices)
        return MetaDataset(
            self.meta_vocab, [self.tasks[i] for i in indices], [self._aligned[i] for i in indices]
        )

    def manifest(self, vocab_path: str = "vocab.txt") -> dict:
        """Structured description: vocabulary, per-task schema, sizes and split checksums."""
        tasks = []
        for task in self.tasks:
            schema = task.schema
            tasks.append(
                {
                    "id": schema.task_id,
                    "label": schema.label_concept,
                    "loss_kind": schema.loss_kind.value,
                    "num_concepts": len(schema.task_vocab),
                    "cmask": sorted(schema.cmask),
                    "sizes": {name: len(task.split(name)) for name in SPLITS},
                    "checksums": {name: split_checksum(task.split(name)) for name in SPLITS},
                }
            )
        return {
            "meta_vocab": vocab_path,
            "meta_vocab_size": len(self.meta_vocab),
            "meta_vocab_digest": self.meta_vocab.digest(),
            "tasks": tasks,
        }

    def _split(self, task: int, split: str) -> _AlignedSplit:
        if not 0 <= task < self.num_tasks:
            raise ConfigurationError(f"Task index {task} out of range for {self.num_tasks} tasks")
        if split not in SPLITS:
            raise ConfigurationError(f"Unknown split {split!r}")
        return self._aligned[task][split]


def build_meta_dataset(tasks: Sequence[TaskDataset], meta_vocab: Vocabulary) -> MetaDataset:
    """
    Re-index every task's splits into C_meta.

    Source matrices shared between tasks (auxiliary tasks relabel their base
    task's rows) are re-indexed once.

    Args:
        tasks: Aligned task datasets
        meta_vocab: Meta-vocabulary the schemas were built against

    Returns:
        MetaDataset with per-task sizes recorded

    Raises:
        ConfigurationError: If no task is given
        SchemaError: If a schema was aligned to another meta-vocabulary
    """
    if not tasks:
        raise ConfigurationError("Cannot build a meta-dataset without tasks")

    digest = meta_vocab.digest()
    cache: dict[tuple[int, int], tuple[sp.csr_matrix, sp.csr_matrix]] = {}
    aligned = []
    for task in tasks:
        schema = task.schema
        if schema.meta_digest != digest:
            raise SchemaError(f"Task {schema.task_id} was aligned to a different meta-vocabulary")
        schema.check_partition(meta_vocab)
        columns = None
        per_split = {}
        for name in SPLITS:
            split = task.split(name)
            key = (id(split.features), id(split.vocab))
            if key not in cache:
                if columns is None:
                    columns = column_map(schema.task_vocab, meta_vocab)
                # The source is kept in the value so its id stays valid
                cache[key] = (split.features, reindex_rows(split.features, columns, len(meta_vocab)))
            per_split[name] = _AlignedSplit(cache[key][1], split.labels, split)
        aligned.append(per_split)

    meta = MetaDataset(meta_vocab, tasks, aligned)
    logger.info(
        "Built meta-dataset: %d tasks, %d train instances, |C_meta| = %d",
        meta.num_tasks, len(meta), len(meta_vocab),
    )
    return meta

