"""Architecture configurations."""
from dataclasses import asdict, dataclass, fields
from enum import Enum

from concept_meta.errors import ConfigurationError


@dataclass(frozen=True)
class MetaAugConfig:
    """
    Shape of a MetaAug network.

    The defaults are the reference configuration: 3 experts of 6 residual
    blocks at width 512, gate and head hidden layers of 32.
    """

    input_dim: int
    num_tasks: int
    num_experts: int = 3
    expert_depth: int = 6
    expert_width: int = 512
    gate_hidden: int = 32
    head_hidden: int = 32
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            if f.name == "seed":
                continue
            value = getattr(self, f.name)
            if not isinstance(value, int) or value < 1:
                raise ConfigurationError(f"MetaAugConfig.{f.name} must be an integer >= 1, got {value!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MetaAugConfig":
        return cls(**data)


class BaselineKind(str, Enum):
    SINGLE_TASK_MLP = "single_task_mlp"
    SHARED_TRUNK_MULTITASK = "shared_trunk_multitask"


@dataclass(frozen=True)
class BaselineConfig:
    """Plain MLP (one head) or shared trunk with one linear head per task."""

    input_dim: int
    kind: BaselineKind = BaselineKind.SINGLE_TASK_MLP
    hidden_widths: tuple[int, ...] = (256, 128, 64)
    num_tasks: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", BaselineKind(self.kind))
        object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))
        if self.input_dim < 1:
            raise ConfigurationError(f"BaselineConfig.input_dim must be >= 1, got {self.input_dim}")
        if any(w < 1 for w in self.hidden_widths):
            raise ConfigurationError(f"Baseline layer widths must be >= 1, got {self.hidden_widths}")
        if self.num_tasks < 1:
            raise ConfigurationError(f"BaselineConfig.num_tasks must be >= 1, got {self.num_tasks}")
        if self.kind is BaselineKind.SINGLE_TASK_MLP and self.num_tasks != 1:
            raise ConfigurationError("single_task_mlp has exactly one task")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["kind"] = self.kind.value
        data["hidden_widths"] = list(self.hidden_widths)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "BaselineConfig":
        return cls(**data)

