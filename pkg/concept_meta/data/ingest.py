"""LIBSVM ingestion into raw tasks."""
import logging
from pathlib import Path

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from concept_meta.concepts import Vocabulary, label_concept_name, libsvm_vocabulary
from concept_meta.data.splits import InstanceSplit, RawTask, split_train_val
from concept_meta.parsers import LibSVMData, LibSVMParser

logger = logging.getLogger(__name__)

_parser = LibSVMParser()


def parse_libsvm(path: str | Path, prefix: str = "x") -> tuple[InstanceSplit, int]:
    """
    Parse a LIBSVM file into (ConceptVector, label) rows.

    Args:
        path: Path to the file
        prefix: Concept name prefix of the generated vocabulary

    Returns:
        Tuple of (rows over a vocabulary of max_index concepts, max_index)
    """
    data = _parser.parse(path)
    vocab = libsvm_vocabulary(data.max_index, prefix)
    return InstanceSplit(data.features, data.labels, vocab), data.max_index


def serialize_libsvm(path: str | Path, features: sp.spmatrix, labels: npt.ArrayLike) -> Path:
    """Write rows in LIBSVM format; the inverse of parse_libsvm."""
    return _parser.serialize(path, features, labels)


def _widen(data: LibSVMData, width: int) -> sp.csr_matrix:
    csr = data.features
    return sp.csr_matrix((csr.data, csr.indices, csr.indptr), shape=(csr.shape[0], width))


def load_libsvm_task(
    task_id: str,
    train_path: str | Path,
    test_path: str | Path,
    prefix: str = "x",
    val_fraction: float = 0.1,
    seed: int = 0,
    n_features: int | None = None,
) -> RawTask:
    """
    Load a train/test LIBSVM pair as one binary task.

    The vocabulary spans the largest index seen in either file (or n_features
    when larger). Validation rows are carved from train.

    Args:
        task_id: Task identifier
        train_path: Training file
        test_path: Test file
        prefix: Concept name prefix; tasks sharing a prefix share concepts
        val_fraction: Fraction of train moved to validation
        seed: Split seed
        n_features: Optional declared feature count

    Returns:
        RawTask with label concept label::<task_id>
    """
    train = _parser.parse(train_path)
    test = _parser.parse(test_path)
    width = max(train.max_index, test.max_index, n_features or 0)
    vocab: Vocabulary = libsvm_vocabulary(width, prefix)

    full_train = InstanceSplit(_widen(train, width), train.labels, vocab)
    test_split = InstanceSplit(
        _widen(test, width),
        test.labels,
        vocab,
        np.arange(len(test), dtype=np.int64) + len(train),
    )
    train_split, val_split = split_train_val(full_train, val_fraction, seed)
    logger.info(
        "Loaded %s: %d features, %d train, %d test", task_id, width, len(train), len(test)
    )
    return RawTask(
        task_id=task_id,
        label_concept=label_concept_name(task_id),
        vocab=vocab,
        train=train_split,
        val=val_split,
        test=test_split,
    )
