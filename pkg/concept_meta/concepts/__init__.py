"""Concept vocabularies, causal masks and the pad-mask transform."""
from .vocabulary import (
    LABEL_PREFIX,
    Vocabulary,
    align_vocabularies,
    label_concept_name,
    libsvm_vocabulary,
)
from .vectors import ConceptVector
from .schema import LossKind, TaskSchema, augmented_vocab
from .cmask import LabeledMatrix, compute_cmask
from .padmask import PadMasker, column_map, keep_mask, pad_mask, reindex_rows

__all__ = [
    "LABEL_PREFIX",
    "Vocabulary",
    "align_vocabularies",
    "label_concept_name",
    "libsvm_vocabulary",
    "ConceptVector",
    "LossKind",
    "TaskSchema",
    "augmented_vocab",
    "LabeledMatrix",
    "compute_cmask",
    "PadMasker",
    "column_map",
    "keep_mask",
    "pad_mask",
    "reindex_rows",
]
