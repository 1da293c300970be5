"""Training and adaptation settings."""
from dataclasses import asdict, dataclass

from concept_meta.errors import ConfigurationError


@dataclass(frozen=True)
class MetaTrainConfig:
    """
    Settings of the minibatch loop shared by meta-training and baselines.

    meta_epochs = 0 is legal and returns the initialization untouched.
    early_stop_patience = 0 disables early stopping; clip_norm = None
    disables gradient clipping.
    """

    meta_epochs: int = 1
    batch_size: int = 256
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    early_stop_patience: int = 0
    clip_norm: float | None = None

    def __post_init__(self):
        if self.meta_epochs < 0:
            raise ConfigurationError(f"meta_epochs must be >= 0, got {self.meta_epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.early_stop_patience < 0:
            raise ConfigurationError("early_stop_patience must be >= 0")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ConfigurationError(f"clip_norm must be > 0 when set, got {self.clip_norm}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AdaptConfig:
    """Online adaptation: epochs of Adam at each learning rate of the grid."""

    epochs: int = 30
    lr_grid: tuple[float, ...] = (1e-6, 3e-6, 1e-5)
    batch_size: int = 256
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lr_grid", tuple(float(lr) for lr in self.lr_grid))
        if self.epochs < 0:
            raise ConfigurationError(f"adapt epochs must be >= 0, got {self.epochs}")
        if not self.lr_grid or any(not lr > 0 for lr in self.lr_grid):
            raise ConfigurationError(f"lr_grid must hold positive learning rates, got {self.lr_grid}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["lr_grid"] = list(self.lr_grid)
        return data
