"""Proportional in-batch task mixing."""
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from concept_meta.data.meta_dataset import MetaDataset
from concept_meta.errors import ConfigurationError


class BatchSampler:
    """
    Draws (task, row) pairs: task with probability proportional to its size,
    row uniform within the task, with replacement.
    """

    def __init__(self, sizes: Sequence[int], batch_size: int, seed: int = 0):
        """
        Build the cumulative weight table.

        Raises:
            ConfigurationError: If there are no instances or batch_size < 1
        """
        sizes = np.asarray(sizes, dtype=np.int64)
        if batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")
        if sizes.size == 0 or sizes.sum() <= 0:
            raise ConfigurationError("Cannot sample from an empty meta-dataset")
        if np.any(sizes < 0):
            raise ConfigurationError("Task sizes must be non-negative")

        self.sizes = sizes
        self.batch_size = batch_size
        self.weights = sizes / sizes.sum()
        self.cumulative = np.cumsum(self.weights)
        self.cumulative[-1] = 1.0
        self._rng = np.random.default_rng(seed)

    def draw(self, n: int | None = None) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]]:
        """Return (task indices, row indices) for n draws (default batch_size)."""
        n = self.batch_size if n is None else n
        tasks = np.searchsorted(self.cumulative, self._rng.random(n), side="right")
        rows = np.floor(self._rng.random(n) * self.sizes[tasks]).astype(np.int64)
        return tasks.astype(np.int64), rows


@dataclass(frozen=True)
class Batch:
    """A mixed batch: owning task of every row, pad-masked features, labels."""

    tasks: npt.NDArray[np.int64]
    rows: npt.NDArray[np.int64]
    features: npt.NDArray[np.float64]
    labels: npt.NDArray[np.float64]

    def __len__(self) -> int:
        return int(self.tasks.shape[0])


def gather(meta: MetaDataset, tasks: npt.NDArray[np.int64], rows: npt.NDArray[np.int64], split: str = "train") -> Batch:
    """Assemble pad-masked dense rows for explicit (task, row) pairs."""
    features = np.zeros((tasks.shape[0], meta.input_dim), dtype=np.float64)
    labels = np.zeros(tasks.shape[0], dtype=np.float64)
    for task in np.unique(tasks):
        where = np.flatnonzero(tasks == task)
        features[where] = meta.dense(int(task), split, rows[where])
        labels[where] = meta.labels(int(task), split)[rows[where]]
    return Batch(tasks, rows, features, labels)


def sample_batch(meta: MetaDataset, sampler: BatchSampler) -> Batch:
    """
    Draw one mixed batch.

    Raises:
        ConfigurationError: If the meta-dataset has no training instances
    """
    if len(meta) == 0:
        raise ConfigurationError("Cannot sample from an empty meta-dataset")
    tasks, rows = sampler.draw()
    return gather(meta, tasks, rows)
