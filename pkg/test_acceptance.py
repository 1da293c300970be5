"""Desk-scale experiment checks. Slow: run with `pytest -m slow`."""
from pathlib import Path

import numpy as np
import pytest

from concept_meta import ConceptMetaOrchestrator
from concept_meta.config import load_run_config
from concept_meta.data import AuxPolicy, build_auxiliary_tasks
from concept_meta.evaluation import evaluate_task, task_attention
from concept_meta.training import meta_train, single_task_meta, train_baseline

ROOT = Path(__file__).parent
SEEDS = range(5)

pytestmark = pytest.mark.slow


@pytest.fixture(autouse=True)
def run_from_root(monkeypatch):
    # data paths in configs/ are relative to the repository root
    monkeypatch.chdir(ROOT)


def orchestrator(name: str, tmp_path, seed: int | None = None) -> ConceptMetaOrchestrator:
    run = load_run_config(ROOT / "configs" / f"{name}.yaml").with_overrides(seed=seed, out=tmp_path)
    return ConceptMetaOrchestrator(run, progress=False)


def require_data(*names: str) -> None:
    missing = [n for n in names if not (ROOT / "data" / n).exists()]
    if missing:
        pytest.skip(f"LIBSVM files not found under data/: {', '.join(missing)}")


def synthetic_aucs(tmp_path, seed: int) -> tuple[float, float]:
    """Mean test AUC of meta-training and of independent MLPs on one synthetic draw."""
    orch = orchestrator("synthetic", tmp_path, seed)
    meta = orch.meta
    trained = meta_train(meta, orch.model_config(), orch.run.meta_train.to_config(), progress=False).params

    meta_aucs, mlp_aucs = [], []
    for index, task in enumerate(orch.bases):
        meta_aucs.append(evaluate_task(trained, meta, index).roc_auc)
        mlp = train_baseline(task, orch.meta_vocab, orch.baseline_config(), orch.run.baseline.to_config(), progress=False)
        mlp_aucs.append(evaluate_task(mlp.params, meta, index).roc_auc)
    return float(np.mean(meta_aucs)), float(np.mean(mlp_aucs))


def test_synthetic_meta_training_beats_independent_mlps(tmp_path):
    gains = [np.subtract(*synthetic_aucs(tmp_path, seed)) for seed in SEEDS]
    assert np.mean(gains) >= 0.02, gains


def test_synthetic_attention_finds_the_planted_dependency(tmp_path):
    hits = 0
    for seed in SEEDS:
        orch = orchestrator("synthetic", tmp_path, seed)
        trained = meta_train(orch.meta, orch.model_config(), orch.run.meta_train.to_config(), progress=False).params
        attention = task_attention(trained, orch.meta, "test")
        assert np.all(np.diag(attention.scores) == 0.0)
        hits += attention.strongest(1) == 0
    assert hits >= 3


def single_task_run(orch: ConceptMetaOrchestrator, policy: AuxPolicy):
    base = orch.bases[0]
    outcome = single_task_meta(
        base, orch.meta_vocab, policy, orch.model_config(), orch.run.meta_train.to_config(),
        orch.run.adapt.to_config(), orch.run.data.min_support, progress=False,
    )
    meta_report = evaluate_task(outcome.params, outcome.meta, 0)
    mlp = train_baseline(base, orch.meta_vocab, orch.baseline_config(), orch.run.baseline.to_config(), progress=False)
    mlp_report = evaluate_task(mlp.params, outcome.meta, 0)
    return meta_report, mlp_report


def test_a9a_one_pass(tmp_path):
    require_data("a9a", "a9a.t")
    orch = orchestrator("a9a", tmp_path)
    assert len(orch.meta_vocab) == 124
    base = orch.bases[0]
    assert len(base.train) + len(base.val) == 32561
    assert len(base.test) == 16281

    meta_report, mlp_report = single_task_run(orch, AuxPolicy("all"))
    assert mlp_report.roc_auc >= 0.86
    assert meta_report.roc_auc >= mlp_report.roc_auc
    assert meta_report.accuracy >= 0.82


def test_madelon(tmp_path):
    require_data("madelon", "madelon.t")
    orch = orchestrator("madelon", tmp_path)
    base = orch.bases[0]
    assert len(base.schema.task_vocab) == 500
    assert 1 + len(build_auxiliary_tasks(base, orch.meta_vocab, AuxPolicy("all"))) == 501

    meta_report, mlp_report = single_task_run(orch, orch.run.tasks.policy)
    assert meta_report.roc_auc >= 0.58
    assert meta_report.roc_auc > mlp_report.roc_auc
