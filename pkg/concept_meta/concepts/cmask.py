"""Empirical causal mask: concepts whose presence determines the label."""
import logging
from typing import Protocol

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from concept_meta.concepts.vocabulary import Vocabulary
from concept_meta.errors import ConfigurationError

logger = logging.getLogger(__name__)


class LabeledMatrix(Protocol):
    """Rows of concept vectors over `vocab` with one label per row."""

    features: sp.csr_matrix
    labels: npt.NDArray[np.float64]
    vocab: Vocabulary


def compute_cmask(
    data: LabeledMatrix,
    label_concept: str,
    candidates: Vocabulary | None = None,
    min_support: int = 1,
) -> frozenset[str]:
    """
    Find concepts x that imply the label on the observed data.

    x is kept when it is active (nonzero) on at least min_support rows and the
    label takes a single value on every row where x is active. Either label
    value counts, so a sibling bucket that always means "negative" is masked.

    Args:
        data: Task instances with labels
        label_concept: The task's label concept (always part of the mask)
        candidates: Concepts eligible for the mask; defaults to data.vocab
        min_support: Minimum number of active rows

    Returns:
        The causal mask, including label_concept

    Raises:
        ConfigurationError: If min_support < 1
    """
    if min_support < 1:
        raise ConfigurationError("min_support must be at least 1")

    mask = {label_concept}
    n_rows = data.features.shape[0]
    if n_rows == 0:
        return frozenset(mask)

    active = (sp.csr_matrix(data.features) != 0).tocsc()
    active.sort_indices()
    support = np.diff(active.indptr)
    labels = np.asarray(data.labels, dtype=np.float64)

    constant = np.zeros(active.shape[1], dtype=bool)
    populated = support > 0
    if np.any(populated):
        row_labels = labels[active.indices]
        starts = active.indptr[:-1][populated]
        low = np.minimum.reduceat(row_labels, starts)
        high = np.maximum.reduceat(row_labels, starts)
        constant[populated] = low == high

    implied = np.flatnonzero(constant & (support >= min_support))
    eligible = candidates if candidates is not None else data.vocab
    for column in implied:
        name = data.vocab.name(int(column))
        if name in eligible:
            mask.add(name)

    logger.debug("Causal mask for %s: %d concepts", label_concept, len(mask))
    return frozenset(mask)
