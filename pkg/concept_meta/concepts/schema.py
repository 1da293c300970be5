"""Task schemas: label concept, causal mask and augmented vocabulary."""
from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum

from concept_meta.concepts.vocabulary import Vocabulary
from concept_meta.errors import SchemaError


class LossKind(str, Enum):
    BINARY = "binary"
    REGRESSION = "regression"


def augmented_vocab(meta_vocab: Vocabulary, cmask: Iterable[str]) -> Vocabulary:
    """
    Ordered set difference C_meta minus the causal mask.

    Args:
        meta_vocab: Meta-vocabulary
        cmask: Concepts to remove

    Returns:
        Vocabulary in meta_vocab order without the masked concepts

    Raises:
        SchemaError: If a masked concept is missing from meta_vocab
    """
    masked = frozenset(cmask)
    missing = sorted(c for c in masked if c not in meta_vocab)
    if missing:
        raise SchemaError(f"Causal mask concepts missing from meta-vocabulary: {missing[:5]}")
    return Vocabulary(name for name in meta_vocab if name not in masked)


@dataclass(frozen=True)
class TaskSchema:
    """Everything the meta-model needs to know about one task's inputs and label."""

    task_id: str
    label_concept: str
    task_vocab: Vocabulary
    cmask: frozenset[str]
    aug_vocab: Vocabulary
    loss_kind: LossKind
    meta_digest: str

    @classmethod
    def build(
        cls,
        task_id: str,
        label_concept: str,
        task_vocab: Vocabulary,
        cmask: Iterable[str],
        meta_vocab: Vocabulary,
        loss_kind: LossKind = LossKind.BINARY,
    ) -> "TaskSchema":
        """
        Validate and assemble a schema against a meta-vocabulary.

        The label is always added to the mask; the augmented vocabulary is
        derived from the mask so the two partition meta_vocab.

        Raises:
            SchemaError: If the task vocabulary or label is not in meta_vocab
        """
        if label_concept not in meta_vocab:
            raise SchemaError(f"Label concept {label_concept!r} missing from meta-vocabulary")
        outside = [c for c in task_vocab if c not in meta_vocab]
        if outside:
            raise SchemaError(f"Task {task_id} concepts missing from meta-vocabulary: {outside[:5]}")

        mask = frozenset(cmask) | {label_concept}
        aug = augmented_vocab(meta_vocab, mask)
        return cls(
            task_id=task_id,
            label_concept=label_concept,
            task_vocab=task_vocab,
            cmask=mask,
            aug_vocab=aug,
            loss_kind=LossKind(loss_kind),
            meta_digest=meta_vocab.digest(),
        )

    def check_partition(self, meta_vocab: Vocabulary) -> None:
        """Assert aug_vocab and cmask are disjoint and cover meta_vocab."""
        aug = set(self.aug_vocab)
        if aug & self.cmask:
            raise SchemaError(f"Task {self.task_id}: augmented vocabulary overlaps the mask")
        if aug | self.cmask != set(meta_vocab):
            raise SchemaError(f"Task {self.task_id}: mask and augmented vocabulary do not cover C_meta")
        if self.label_concept not in self.cmask:
            raise SchemaError(f"Task {self.task_id}: label concept not masked")

    @property
    def is_binary(self) -> bool:
        return self.loss_kind is LossKind.BINARY
