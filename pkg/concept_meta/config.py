"""Configuration module for ConceptMeta: environment settings and YAML run configurations."""
import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv

from concept_meta.data import AuxPolicy
from concept_meta.errors import ConfigurationError
from concept_meta.model import BaselineKind
from concept_meta.training import AdaptConfig, MetaTrainConfig

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Config:
    """Process-level configuration from the environment."""

    def __init__(self, env_path: str | Path | None = None):
        """Initialize configuration by loading environment variables."""
        # Load .env file from project root
        env_path = Path(env_path) if env_path else Path(__file__).parent.parent / ".env"
        load_dotenv(dotenv_path=env_path)

        threads = os.getenv("CONCEPT_META_THREADS", "1")
        try:
            self.threads = int(threads)
        except ValueError:
            raise ValueError(f"CONCEPT_META_THREADS must be an integer, got {threads!r}") from None
        if self.threads < 1:
            raise ValueError(f"CONCEPT_META_THREADS must be >= 1, got {self.threads}")

        self.log_level = os.getenv("CONCEPT_META_LOG_LEVEL", "INFO").upper()
        if self.log_level not in LOG_LEVELS:
            raise ValueError(
                f"CONCEPT_META_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got {self.log_level!r}"
            )

        self.progress = os.getenv("CONCEPT_META_PROGRESS", "1").strip().lower() not in ("0", "false", "no", "off")
        self.output_dir = Path(os.getenv("CONCEPT_META_OUTPUT_DIR", "runs/default"))

    @property
    def logging_level(self) -> int:
        return getattr(logging, self.log_level)


# Global config instance
config = Config()


# -- run configuration ------------------------------------------------------------------


@dataclass(frozen=True)
class TaskSource:
    """One LIBSVM train/test pair."""

    id: str
    train: str
    test: str
    prefix: str = "x"


@dataclass(frozen=True)
class SyntheticSection:
    seed: int = 0
    n_tasks: int = 3
    n_train: int = 100
    n_val: int = 50
    n_test: int = 1000
    latent_dim: int = 16
    n_features: int = 48


@dataclass(frozen=True)
class DataSection:
    source: str = "libsvm"
    tasks: tuple[TaskSource, ...] = ()
    val_fraction: float = 0.1
    seed: int = 0
    min_support: int = 1
    synthetic: SyntheticSection = field(default_factory=SyntheticSection)


@dataclass(frozen=True)
class TasksSection:
    aux: str = "all"
    aux_seed: int = 0

    @property
    def policy(self) -> AuxPolicy:
        return AuxPolicy.parse(self.aux, self.aux_seed)


@dataclass(frozen=True)
class ModelSection:
    num_experts: int = 3
    expert_depth: int = 6
    expert_width: int = 512
    gate_hidden: int = 32
    head_hidden: int = 32
    seed: int = 0


@dataclass(frozen=True)
class MetaTrainSection:
    epochs: int = 1
    batch_size: int = 256
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip: float | None = None
    patience: int = 0
    seed: int = 0

    def to_config(self) -> MetaTrainConfig:
        return MetaTrainConfig(
            meta_epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            seed=self.seed,
            early_stop_patience=self.patience,
            clip_norm=self.clip,
        )


@dataclass(frozen=True)
class AdaptSection:
    epochs: int = 30
    lr_grid: tuple[float, ...] = (1e-6, 3e-6, 1e-5)
    batch_size: int = 256
    seed: int = 0

    def to_config(self) -> AdaptConfig:
        return AdaptConfig(self.epochs, self.lr_grid, self.batch_size, self.seed)


@dataclass(frozen=True)
class BaselineSection:
    kind: str = BaselineKind.SINGLE_TASK_MLP.value
    hidden_widths: tuple[int, ...] = (256, 128, 64)
    epochs: int = 10
    batch_size: int = 256
    learning_rate: float = 1e-3
    patience: int = 2
    seed: int = 0

    def to_config(self) -> MetaTrainConfig:
        return MetaTrainConfig(
            meta_epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=self.seed,
            early_stop_patience=self.patience,
        )


@dataclass(frozen=True)
class EvalSection:
    threshold: float = 0.5
    split: str = "test"
    sweep_epochs: tuple[int, ...] = (0, 1, 15)


@dataclass(frozen=True)
class OutputSection:
    directory: str | None = None


@dataclass(frozen=True)
class RunConfig:
    """Every setting of one experiment; each key has a default."""

    data: DataSection = field(default_factory=DataSection)
    tasks: TasksSection = field(default_factory=TasksSection)
    model: ModelSection = field(default_factory=ModelSection)
    meta_train: MetaTrainSection = field(default_factory=MetaTrainSection)
    adapt: AdaptSection = field(default_factory=AdaptSection)
    baseline: BaselineSection = field(default_factory=BaselineSection)
    eval: EvalSection = field(default_factory=EvalSection)
    output: OutputSection = field(default_factory=OutputSection)

    @property
    def output_dir(self) -> Path:
        return Path(self.output.directory) if self.output.directory else config.output_dir

    def with_overrides(
        self,
        seed: int | None = None,
        meta_epochs: int | None = None,
        aux: str | None = None,
        out: str | Path | None = None,
    ) -> "RunConfig":
        """Apply command-line flags; they win over the file."""
        run = self
        if seed is not None:
            run = replace(
                run,
                data=replace(run.data, seed=seed, synthetic=replace(run.data.synthetic, seed=seed)),
                tasks=replace(run.tasks, aux_seed=seed),
                model=replace(run.model, seed=seed),
                meta_train=replace(run.meta_train, seed=seed),
                adapt=replace(run.adapt, seed=seed),
                baseline=replace(run.baseline, seed=seed),
            )
        if meta_epochs is not None:
            run = replace(run, meta_train=replace(run.meta_train, epochs=meta_epochs))
        if aux is not None:
            AuxPolicy.parse(aux)
            run = replace(run, tasks=replace(run.tasks, aux=aux))
        if out is not None:
            run = replace(run, output=OutputSection(str(out)))
        return run


FLOAT_TYPES = (float, float | None, tuple[float, ...])


def _coerce(kind, value, where: str):
    """YAML 1.1 reads 1e-4 as a string; accept it for float settings."""
    if kind in FLOAT_TYPES and isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ConfigurationError(f"[{where}] must be a number, got {value!r}") from None
    return value


def _build(cls, data: Any, where: str):
    """Instantiate a section dataclass from a mapping, rejecting unknown keys."""
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigurationError(f"[{where}] must be a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(f"Unknown key(s) in [{where}]: {', '.join(map(str, unknown))}")

    values = {}
    for name, value in data.items():
        if cls is DataSection and name == "tasks":
            if not isinstance(value, list):
                raise ConfigurationError("[data.tasks] must be a list")
            value = tuple(_build(TaskSource, item, "data.tasks[]") for item in value)
        elif cls is DataSection and name == "synthetic":
            value = _build(SyntheticSection, value, "data.synthetic")
        elif isinstance(value, list):
            value = tuple(_coerce(known[name].type, v, f"{where}.{name}") for v in value)
        else:
            value = _coerce(known[name].type, value, f"{where}.{name}")
        values[name] = value
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigurationError(f"Invalid [{where}] section: {e}") from e


def parse_run_config(data: Any) -> RunConfig:
    """
    Build a RunConfig from a parsed YAML document.

    Raises:
        ConfigurationError: On unknown sections or keys, or invalid values
    """
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError("Run configuration must be a mapping of sections")
    sections = {f.name: f for f in fields(RunConfig)}
    unknown = sorted(set(data) - set(sections))
    if unknown:
        raise ConfigurationError(f"Unknown section(s): {', '.join(map(str, unknown))}")

    section_types = {
        "data": DataSection,
        "tasks": TasksSection,
        "model": ModelSection,
        "meta_train": MetaTrainSection,
        "adapt": AdaptSection,
        "baseline": BaselineSection,
        "eval": EvalSection,
        "output": OutputSection,
    }
    run = RunConfig(**{name: _build(section_types[name], data.get(name), name) for name in sections})
    _validate(run)
    return run


def _validate(run: RunConfig) -> None:
    if run.data.source not in ("libsvm", "synthetic"):
        raise ConfigurationError(f"data.source must be libsvm or synthetic, got {run.data.source!r}")
    ids = [t.id for t in run.data.tasks]
    if len(ids) != len(set(ids)):
        raise ConfigurationError(f"Duplicate task ids in data.tasks: {ids}")
    if run.eval.split not in ("train", "val", "test"):
        raise ConfigurationError(f"eval.split must be train, val or test, got {run.eval.split!r}")
    if run.baseline.kind not in {k.value for k in BaselineKind}:
        raise ConfigurationError(f"baseline.kind must be one of {[k.value for k in BaselineKind]}, got {run.baseline.kind!r}")
    try:
        AuxPolicy.parse(run.tasks.aux, run.tasks.aux_seed)
        run.meta_train.to_config()
        run.adapt.to_config()
        run.baseline.to_config()
    except (TypeError, AttributeError) as e:
        raise ConfigurationError(f"Invalid run configuration value: {e}") from e


def load_run_config(path: str | Path | None) -> RunConfig:
    """
    Read a YAML run configuration; None gives every default.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ConfigurationError: On malformed YAML or invalid settings
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Run configuration not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Malformed run configuration {path}: {e}") from e
    return parse_run_config(data)
