"""Concept vocabularies and their alignment into the meta-vocabulary."""
import hashlib
from collections.abc import Iterable, Iterator, Sequence

from concept_meta.errors import ConfigurationError, SchemaError

LABEL_PREFIX = "label::"


class Vocabulary:
    """Ordered, duplicate-free sequence of concept names."""

    def __init__(self, names: Iterable[str]):
        """
        Build a vocabulary.

        Args:
            names: Concept names in index order

        Raises:
            SchemaError: If a name repeats
        """
        self._names = tuple(names)
        self._index = {name: i for i, name in enumerate(self._names)}
        if len(self._index) != len(self._names):
            seen: set[str] = set()
            dupes = sorted({n for n in self._names if n in seen or seen.add(n)})
            raise SchemaError(f"Duplicate concepts in vocabulary: {dupes[:5]}")

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    def index(self, name: str) -> int:
        """Position of a concept; SchemaError when absent."""
        try:
            return self._index[name]
        except KeyError:
            raise SchemaError(f"Concept not in vocabulary: {name!r}") from None

    def name(self, index: int) -> str:
        if not 0 <= index < len(self._names):
            raise SchemaError(f"Concept index {index} out of range [0, {len(self._names)})")
        return self._names[index]

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._names == other._names

    def __hash__(self) -> int:
        return hash(self._names)

    def __repr__(self) -> str:
        preview = ", ".join(self._names[:4])
        more = ", ..." if len(self._names) > 4 else ""
        return f"Vocabulary([{preview}{more}], size={len(self._names)})"

    def digest(self) -> str:
        """SHA-256 over the newline-joined names; the vocabulary hash."""
        return hashlib.sha256("\n".join(self._names).encode("utf-8")).hexdigest()


def label_concept_name(task_id: str) -> str:
    """Namespaced label concept so labels never collide with feature names."""
    return f"{LABEL_PREFIX}{task_id}"


def libsvm_vocabulary(n_features: int, prefix: str = "x") -> Vocabulary:
    """Names for 1-based LIBSVM columns, zero-padded so sorting keeps index order."""
    width = max(len(str(n_features)), 1)
    return Vocabulary(f"{prefix}{i:0{width}d}" for i in range(1, n_features + 1))


def align_vocabularies(task_vocabs: Sequence[Vocabulary], labels: Sequence[str]) -> Vocabulary:
    """
    Build the meta-vocabulary: sorted union of all task concepts and labels.

    Args:
        task_vocabs: Concept vocabulary of each task
        labels: Label concept of each task

    Returns:
        Meta-vocabulary containing every task vocabulary and every label

    Raises:
        ConfigurationError: If no task is given
    """
    if not task_vocabs:
        raise ConfigurationError("Cannot align an empty list of task vocabularies")
    union: set[str] = set(labels)
    for vocab in task_vocabs:
        union.update(vocab.names)
    return Vocabulary(sorted(union))
