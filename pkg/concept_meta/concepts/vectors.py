"""Sparse concept vectors."""
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from concept_meta.concepts.vocabulary import Vocabulary
from concept_meta.errors import SchemaError


@dataclass(frozen=True, eq=False)
class ConceptVector:
    """One entity's unfolded footprint: sorted (index, value) pairs over a vocabulary."""

    indices: npt.NDArray[np.int64]
    values: npt.NDArray[np.float64]
    vocab: Vocabulary

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if indices.shape != values.shape or indices.ndim != 1:
            raise SchemaError("ConceptVector indices and values must be 1-D and equal length")
        if indices.size:
            if np.any(np.diff(indices) <= 0):
                raise SchemaError("ConceptVector indices must be strictly increasing")
            if indices[0] < 0 or indices[-1] >= len(self.vocab):
                raise SchemaError(
                    f"ConceptVector index out of range for vocabulary of size {len(self.vocab)}"
                )
        if not np.all(np.isfinite(values)):
            raise SchemaError("ConceptVector values must be finite")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float], vocab: Vocabulary) -> "ConceptVector":
        """Build from {concept name: value}; zero values are dropped."""
        pairs = sorted((vocab.index(name), float(v)) for name, v in mapping.items() if v != 0.0)
        indices = np.array([p[0] for p in pairs], dtype=np.int64)
        values = np.array([p[1] for p in pairs], dtype=np.float64)
        return cls(indices, values, vocab)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def get(self, name: str) -> float:
        """Value of a concept, 0 when absent."""
        i = self.vocab.index(name)
        pos = np.searchsorted(self.indices, i)
        if pos < self.indices.size and self.indices[pos] == i:
            return float(self.values[pos])
        return 0.0

    def to_dense(self) -> npt.NDArray[np.float64]:
        dense = np.zeros(len(self.vocab), dtype=np.float64)
        dense[self.indices] = self.values
        return dense

    def as_dict(self) -> dict[str, float]:
        return {self.vocab.name(int(i)): float(v) for i, v in zip(self.indices, self.values)}

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ConceptVector)
            and self.vocab == other.vocab
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]
