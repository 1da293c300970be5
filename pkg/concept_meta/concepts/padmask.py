"""PadMask: embed task-level vectors into the meta-vocabulary with the mask zeroed."""
from functools import lru_cache

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from concept_meta.concepts.schema import TaskSchema
from concept_meta.concepts.vectors import ConceptVector
from concept_meta.concepts.vocabulary import Vocabulary
from concept_meta.errors import SchemaError


def keep_mask(meta_vocab: Vocabulary, cmask: frozenset[str]) -> npt.NDArray[np.float64]:
    """1.0 on augmented coordinates, 0.0 on masked ones."""
    keep = np.ones(len(meta_vocab), dtype=np.float64)
    for name in cmask:
        if name in meta_vocab:
            keep[meta_vocab.index(name)] = 0.0
    return keep


def column_map(source: Vocabulary, meta_vocab: Vocabulary) -> npt.NDArray[np.int64]:
    """Meta-vocabulary index of every source concept."""
    return np.fromiter((meta_vocab.index(name) for name in source), dtype=np.int64, count=len(source))


def reindex_rows(features: sp.spmatrix, columns: npt.NDArray[np.int64], width: int) -> sp.csr_matrix:
    """Move CSR columns to new positions in a matrix of the given width."""
    csr = sp.csr_matrix(features)
    if csr.shape[1] != columns.shape[0]:
        raise SchemaError(
            f"Feature matrix has {csr.shape[1]} columns, vocabulary has {columns.shape[0]}"
        )
    out = sp.csr_matrix(
        (csr.data.astype(np.float64, copy=True), columns[csr.indices], csr.indptr.copy()),
        shape=(csr.shape[0], width),
    )
    out.sort_indices()
    return out


class PadMasker:
    """Precomputed pad-mask transform for one (source vocabulary, schema, meta-vocabulary)."""

    def __init__(self, source: Vocabulary, schema: TaskSchema, meta_vocab: Vocabulary):
        """
        Prepare the column map and keep-mask.

        Raises:
            SchemaError: If source is neither the task nor the augmented vocabulary
                of the schema, or the schema was built on another meta-vocabulary
        """
        if source != schema.task_vocab and source != schema.aug_vocab:
            raise SchemaError(
                f"Vector vocabulary is incompatible with task {schema.task_id}"
            )
        if schema.meta_digest != meta_vocab.digest():
            raise SchemaError(f"Task {schema.task_id} was aligned to a different meta-vocabulary")
        self.source = source
        self.schema = schema
        self.meta_vocab = meta_vocab
        self.columns = column_map(source, meta_vocab)
        self.keep = keep_mask(meta_vocab, schema.cmask)

    def transform(self, vector: ConceptVector) -> npt.NDArray[np.float64]:
        """Dense meta-vector with masked coordinates exactly zero."""
        if vector.vocab != self.source:
            raise SchemaError("Vector vocabulary does not match this masker")
        dense = np.zeros(len(self.meta_vocab), dtype=np.float64)
        dense[self.columns[vector.indices]] = vector.values
        return dense * self.keep

    def transform_rows(self, features: sp.spmatrix) -> npt.NDArray[np.float64]:
        """Dense [rows x |C_meta|] batch from CSR rows over the source vocabulary."""
        aligned = reindex_rows(features, self.columns, len(self.meta_vocab))
        return aligned.toarray() * self.keep


@lru_cache(maxsize=256)
def _masker(source: Vocabulary, schema: TaskSchema, meta_vocab: Vocabulary) -> PadMasker:
    return PadMasker(source, schema, meta_vocab)


def pad_mask(vector: ConceptVector, schema: TaskSchema, meta_vocab: Vocabulary) -> npt.NDArray[np.float64]:
    """
    Pad a task-level vector onto C_meta and zero the task's causal mask.

    Args:
        vector: Vector over the task vocabulary or the augmented vocabulary
        schema: Owning task's schema
        meta_vocab: Meta-vocabulary

    Returns:
        Dense vector of length |C_meta|

    Raises:
        SchemaError: On incompatible vocabularies
    """
    return _masker(vector.vocab, schema, meta_vocab).transform(vector)
