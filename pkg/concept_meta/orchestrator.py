"""Orchestrator for the ConceptMeta experiment workflow."""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from concept_meta.concepts import LossKind, Vocabulary
from concept_meta.config import RunConfig, config
from concept_meta.data import (
    MetaDataset,
    TaskDataset,
    build_auxiliary_tasks,
    build_meta_dataset,
    load_libsvm_task,
    make_synthetic_tasks,
    prepare_tasks,
)
from concept_meta.errors import ConfigurationError, SchemaError
from concept_meta.evaluation import MetricsReport, comparison_table, evaluate_task, task_attention
from concept_meta.formatter import format_output
from concept_meta.model import BaselineConfig, BaselineKind, MetaAugConfig, Model, load_checkpoint, save_checkpoint
from concept_meta.parsers import VocabularyParser
from concept_meta.training import meta_epoch_sweep, meta_train, online_adapt, tiny_gradcheck, train_baseline

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.txt"
VOCAB_FILE = "vocab.txt"
CHECKPOINT_FILE = "checkpoint.bin"
RUNLOG_FILE = "runlog.csv"
METRICS_FILE = "metrics.csv"
ATTENTION_FILE = "attention.csv"
ADAPTED_FILE = "adapted.bin"
BASELINE_FILE = "baseline.bin"
BASELINE_RUNLOG_FILE = "baseline_runlog.csv"
COMPARISON_FILE = "comparison.csv"
GRADCHECK_FILE = "gradcheck.csv"
SWEEP_FILE = "sweep.csv"

GRADCHECK_TOLERANCE = 1e-4


@dataclass
class CommandResult:
    """Files a command wrote and whether its checks passed."""

    written: list[Path] = field(default_factory=list)
    passed: bool = True
    summary: str = ""


class ConceptMetaOrchestrator:
    """Builds the datasets of a run configuration and runs one command on them."""

    def __init__(self, run: RunConfig, progress: bool | None = None, threads: int | None = None):
        """
        Args:
            run: Run configuration with flag overrides applied
            progress: Show progress bars (defaults to the environment setting)
            threads: Inference worker threads (defaults to the environment setting)
        """
        self.run = run
        self.progress = config.progress if progress is None else progress
        self.threads = config.threads if threads is None else threads
        self.out_dir = run.output_dir

    # -- datasets -------------------------------------------------------------------------

    @cached_property
    def prepared(self) -> tuple[Vocabulary, list[TaskDataset]]:
        """Meta-vocabulary and the listed (primary) tasks, aligned."""
        data = self.run.data
        if data.source == "synthetic":
            s = data.synthetic
            raw = make_synthetic_tasks(
                seed=s.seed,
                n_tasks=s.n_tasks,
                n_train=s.n_train,
                n_val=s.n_val,
                n_test=s.n_test,
                latent_dim=s.latent_dim,
                n_features=s.n_features,
            )
        else:
            if not data.tasks:
                raise ConfigurationError("data.tasks must list at least one task for libsvm input")
            raw = [
                load_libsvm_task(t.id, t.train, t.test, t.prefix, data.val_fraction, data.seed)
                for t in data.tasks
            ]
        return prepare_tasks(raw, data.min_support)

    @property
    def meta_vocab(self) -> Vocabulary:
        return self.prepared[0]

    @property
    def bases(self) -> list[TaskDataset]:
        return self.prepared[1]

    @cached_property
    def meta(self) -> MetaDataset:
        """Listed tasks followed by their auxiliary tasks."""
        auxiliary = build_auxiliary_tasks(
            self.bases, self.meta_vocab, self.run.tasks.policy, self.run.data.min_support
        )
        return build_meta_dataset([*self.bases, *auxiliary], self.meta_vocab)

    def primary(self, task_id: str | None = None) -> TaskDataset:
        """The named listed task, or the first one."""
        if task_id is None:
            return self.bases[0]
        for task in self.bases:
            if task.task_id == task_id:
                return task
        raise ConfigurationError(
            f"Unknown task {task_id!r}; listed tasks are {', '.join(t.task_id for t in self.bases)}"
        )

    def model_config(self) -> MetaAugConfig:
        m = self.run.model
        return MetaAugConfig(
            input_dim=len(self.meta_vocab),
            num_tasks=self.meta.num_tasks,
            num_experts=m.num_experts,
            expert_depth=m.expert_depth,
            expert_width=m.expert_width,
            gate_hidden=m.gate_hidden,
            head_hidden=m.head_hidden,
            seed=m.seed,
        )

    def baseline_config(self) -> BaselineConfig:
        b = self.run.baseline
        return BaselineConfig(
            input_dim=len(self.meta_vocab),
            kind=BaselineKind(b.kind),
            hidden_widths=tuple(b.hidden_widths),
            seed=b.seed,
        )

    # -- files ----------------------------------------------------------------------------

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def _write(self, name: str, text: str) -> Path:
        path = self._path(name)
        path.write_text(text, encoding="utf-8")
        return path

    def _load(self, name: str) -> Model:
        """Load a checkpoint from the output directory and check its vocabulary hash."""
        path = self.out_dir / name
        if not path.exists():
            raise FileNotFoundError(f"Checkpoint not found: {path}")
        params = load_checkpoint(path)
        if params.meta_digest != self.meta_vocab.digest():
            raise SchemaError(f"{path} was trained on a different meta-vocabulary")
        logger.info("Loaded %s checkpoint %s (tasks: %s)", params.kind, path, ", ".join(params.task_ids[:5]))
        return params

    def _reports(self, params: Model, split: str, tasks: list[TaskDataset]) -> list[MetricsReport]:
        reports = []
        for task in tasks:
            if task.schema.loss_kind is not LossKind.BINARY or task.task_id not in params.task_ids:
                continue
            index = self.meta.task_index(task.task_id)
            reports.append(evaluate_task(params, self.meta, index, split, self.run.eval.threshold, self.threads))
        return reports

    # -- commands -------------------------------------------------------------------------

    def ingest(self) -> CommandResult:
        """Parse, split and align every task; write the vocabulary and the manifest."""
        vocab_path = VocabularyParser().write(self._path(VOCAB_FILE), self.meta_vocab)
        manifest = self.meta.manifest(VOCAB_FILE)
        manifest_path = self._write(MANIFEST_FILE, format_output(manifest, "manifest"))
        sizes = ", ".join(
            f"{t['id']}: {t['num_concepts']} concepts, {t['sizes']['train']}/{t['sizes']['val']}/{t['sizes']['test']}"
            for t in manifest["tasks"][: len(self.bases)]
        )
        return CommandResult(
            [vocab_path, manifest_path],
            summary=f"{len(self.meta_vocab)} concepts, {self.meta.num_tasks} tasks ({sizes})",
        )

    def train_meta(self) -> CommandResult:
        """Meta-train on the listed and auxiliary tasks; write checkpoint, run log and validation metrics."""
        result = meta_train(self.meta, self.model_config(), self.run.meta_train.to_config(), self.progress)
        checkpoint = save_checkpoint(self._path(CHECKPOINT_FILE), result.params, seed=self.run.meta_train.seed)
        runlog = result.log.write(self._path(RUNLOG_FILE))
        reports = self._reports(result.params, "val", self.bases)
        metrics = self._write(
            METRICS_FILE, format_output([("meta", r.task_id, "val", r) for r in reports], "metrics")
        )
        return CommandResult(
            [checkpoint, runlog, metrics],
            summary=f"{result.steps} steps, best validation loss {result.best_val_loss:.6f}",
        )

    def adapt(self, task_id: str | None = None) -> CommandResult:
        """Fine-tune the meta-trained checkpoint on one listed task."""
        task = self.primary(task_id)
        params = self._load(CHECKPOINT_FILE)
        result = online_adapt(params, task, self.meta_vocab, self.run.adapt.to_config(), self.progress)
        adapted = save_checkpoint(self._path(ADAPTED_FILE), result.params, seed=self.run.adapt.seed)
        lr = "none" if result.learning_rate is None else f"{result.learning_rate:g}"
        return CommandResult(
            [adapted], summary=f"{task.task_id}: learning rate {lr}, validation loss {result.val_loss:.6f}"
        )

    def evaluate(self, task_id: str | None = None) -> CommandResult:
        """
        Score every available model on the evaluation split.

        The meta-trained model covers all listed tasks; the adapted model
        and a baseline cover the tasks they were trained for. With a
        baseline present, a comparison table against it is written too.
        """
        split = self.run.eval.split
        primary = self.primary(task_id)
        rows: list[tuple[str, str, str, MetricsReport]] = []

        models: dict[str, Model] = {"meta": self._load(CHECKPOINT_FILE)}
        if (self.out_dir / ADAPTED_FILE).exists():
            models["adapted"] = self._load(ADAPTED_FILE)
        if (self.out_dir / BASELINE_FILE).exists():
            models["baseline"] = self._load(BASELINE_FILE)

        primary_reports: dict[str, MetricsReport] = {}
        for name, params in models.items():
            tasks = [primary] if name == "adapted" else self.bases
            for report in self._reports(params, split, tasks):
                rows.append((name, report.task_id, split, report))
                if report.task_id == primary.task_id:
                    primary_reports[name] = report

        written = [self._write(METRICS_FILE, format_output(rows, "metrics"))]
        if "baseline" in primary_reports:
            table = comparison_table(primary_reports["baseline"], primary_reports)
            written.append(self._write(COMPARISON_FILE, format_output(table, "comparison")))
        return CommandResult(written, summary=f"{len(rows)} reports on {split}")

    def attention(self) -> CommandResult:
        """Task-attention grid of the meta-trained model over every meta-dataset task."""
        params = self._load(CHECKPOINT_FILE)
        matrix = task_attention(params, self.meta, self.run.eval.split, self.threads)
        path = self._write(ATTENTION_FILE, format_output(matrix, "attention"))
        return CommandResult([path], summary=f"{self.meta.num_tasks}x{self.meta.num_tasks} scores")

    def baseline(self, task_id: str | None = None) -> CommandResult:
        """Train the configured baseline: one task for single_task_mlp, every listed task for a shared trunk."""
        architecture = self.baseline_config()
        if architecture.kind is BaselineKind.SINGLE_TASK_MLP:
            tasks = [self.primary(task_id)]
        else:
            tasks = list(self.bases)
        result = train_baseline(tasks, self.meta_vocab, architecture, self.run.baseline.to_config(), self.progress)
        checkpoint = save_checkpoint(self._path(BASELINE_FILE), result.params, seed=self.run.baseline.seed)
        runlog = result.log.write(self._path(BASELINE_RUNLOG_FILE))
        return CommandResult(
            [checkpoint, runlog],
            summary=f"{architecture.kind.value}: {result.steps} steps, best validation loss {result.best_val_loss:.6f}",
        )

    def gradcheck(self) -> CommandResult:
        """Finite-difference check on the built-in tiny network; independent of the datasets."""
        report = tiny_gradcheck(seed=self.run.model.seed)
        path = self._write(GRADCHECK_FILE, format_output(report, "gradcheck", tolerance=GRADCHECK_TOLERANCE))
        return CommandResult(
            [path],
            passed=report.passed(GRADCHECK_TOLERANCE),
            summary=f"max relative error {report.max_relative_error:.3e} "
            f"({report.checked} checked, {report.excluded} excluded)",
        )

    def sweep(self, task_id: str | None = None) -> CommandResult:
        """Single-task meta learning on one listed task for each configured meta-epoch count."""
        task = self.primary(task_id)
        results = meta_epoch_sweep(
            task,
            self.meta_vocab,
            self.run.tasks.policy,
            self.model_config(),
            self.run.meta_train.to_config(),
            self.run.adapt.to_config(),
            self.run.eval.sweep_epochs,
            self.run.eval.split,
            self.run.eval.threshold,
            self.run.data.min_support,
            self.progress,
        )
        path = self._write(SWEEP_FILE, format_output(results, "sweep"))
        return CommandResult([path], summary=f"{task.task_id}: meta-epochs {list(self.run.eval.sweep_epochs)}")
