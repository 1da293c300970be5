"""Synthetic multi-task problem with shared latent structure and a planted cross-task dependency."""
import logging

import numpy as np
import scipy.sparse as sp

from concept_meta.concepts import Vocabulary, label_concept_name
from concept_meta.data.splits import InstanceSplit, RawTask

logger = logging.getLogger(__name__)

BLOCK_SIZE = 4


def feature_names(n_features: int) -> list[str]:
    width = len(str(max(n_features - 1, 0)))
    return [f"f{i:0{width}d}" for i in range(n_features)]


def block_names() -> list[str]:
    return [f"block_{b}" for b in range(BLOCK_SIZE)]


def make_synthetic_tasks(
    seed: int = 0,
    n_tasks: int = 3,
    n_train: int = 100,
    n_val: int = 50,
    n_test: int = 1000,
    latent_dim: int = 16,
    n_features: int = 48,
    noise: float = 0.1,
) -> list[RawTask]:
    """
    Generate tasks t0..t{K-1} over a shared latent space.

    Every task observes x = zA + noise for a 16-dim latent z and labels
    y_k = 1[z . (w0 + 0.5 u_k) > 0]. Task k also sees a leak concept
    leak_t<k> equal to y_k, which lands in its causal mask. A block of
    concepts is active in t0 only when y_0 = 1 (so it joins CMask(t0)) and
    carries y_1 in t1, where it is active on every row.

    Args:
        seed: Generator seed
        n_tasks: Number of tasks (at least 2 for the planted block)
        n_train: Training rows per task
        n_val: Validation rows per task
        n_test: Test rows per task
        latent_dim: Latent dimension
        n_features: Shared continuous features
        noise: Observation noise scale

    Returns:
        Raw binary tasks, ready for prepare_tasks
    """
    rng = np.random.default_rng(seed)
    mixing = rng.normal(size=(latent_dim, n_features)) / np.sqrt(latent_dim)
    shared = rng.normal(size=latent_dim)
    weights = [shared + 0.5 * rng.normal(size=latent_dim) for _ in range(n_tasks)]

    base_names = feature_names(n_features)
    tasks = []
    for k in range(n_tasks):
        task_id = f"t{k}"
        names = base_names + [f"leak_{task_id}"]
        if k in (0, 1):
            names = names + block_names()
        vocab = Vocabulary(names)

        splits = []
        offset = 0
        for n in (n_train, n_val, n_test):
            z = rng.normal(size=(n, latent_dim))
            x = z @ mixing + noise * rng.normal(size=(n, n_features))
            y = (z @ weights[k] > 0).astype(np.float64)
            columns = [x, y[:, None]]
            if k == 0:
                # Active only on positives of t0
                magnitude = 0.5 + np.abs(rng.normal(size=(n, BLOCK_SIZE)))
                columns.append(magnitude * y[:, None])
            elif k == 1:
                # Signed signal for t1, nonzero on every row
                columns.append((2.0 * y - 1.0)[:, None] + 0.3 * rng.normal(size=(n, BLOCK_SIZE)))
            dense = np.hstack(columns)
            features = sp.csr_matrix(dense)
            splits.append(
                InstanceSplit(features, y, vocab, np.arange(n, dtype=np.int64) + offset)
            )
            offset += n

        tasks.append(
            RawTask(
                task_id=task_id,
                label_concept=label_concept_name(task_id),
                vocab=vocab,
                train=splits[0],
                val=splits[1],
                test=splits[2],
            )
        )

    logger.info("Generated %d synthetic tasks (seed %d)", n_tasks, seed)
    return tasks
