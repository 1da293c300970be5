"""Test the minibatch loop, meta-training, adaptation, baselines and single-task meta learning."""
import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from concept_meta.concepts import Vocabulary, label_concept_name
from concept_meta.data import AuxPolicy, InstanceSplit, RawTask, build_meta_dataset, prepare_tasks
from concept_meta.errors import ConfigurationError, NonFiniteLossError, SchemaError
from concept_meta.evaluation import evaluate_task
from concept_meta.model import (
    BaselineConfig,
    BaselineKind,
    MetaAugConfig,
    embed_single_task_learners,
    init,
    predict_logits,
)
from concept_meta.training import (
    COLUMNS,
    AdaptConfig,
    MetaTrainConfig,
    RunLog,
    TINY_CONFIG,
    fit,
    init_for,
    instance_losses,
    meta_epoch_sweep,
    meta_loss,
    meta_train,
    online_adapt,
    single_task_meta,
    sized_for,
    tiny_problem,
    train_baseline,
)

FAST = MetaTrainConfig(meta_epochs=2, batch_size=32, learning_rate=1e-2, seed=0)


def same_params(a, b) -> bool:
    return list(a.store) == list(b.store) and all(np.array_equal(a.store[n], b.store[n]) for n in a.store)


def test_zero_epochs_returns_initialization(synthetic_meta, small_model):
    result = meta_train(synthetic_meta, small_model, replace(FAST, meta_epochs=0), progress=False)
    assert same_params(result.params, init(small_model))
    assert len(result.log) == 1
    assert result.log.rows[0].epoch == 0
    assert math.isnan(result.log.rows[0].train_loss)
    assert result.steps == 0


def test_gradient_steps_descend_on_a_fixed_batch():
    params = init(TINY_CONFIG)
    problem = tiny_problem()

    def loss_and_grad() -> float:
        logits, cache = params.forward_batch(problem.X, problem.tasks)
        losses, grads = instance_losses(logits, problem.labels, problem.regression)
        params.backward(cache, grads)
        return float(losses.sum())

    previous = math.inf
    for _ in range(3):
        loss = loss_and_grad()
        assert loss < previous
        previous = loss
        for name in params.store:
            params.store[name] = params.store[name] - 1e-3 * params.store.grad(name)
        params.store.zero_grad()


def test_training_improves_validation_loss(synthetic_meta, small_model):
    result = meta_train(synthetic_meta, small_model, replace(FAST, meta_epochs=5), progress=False)
    assert len(result.log) == 6
    assert result.best_epoch > 0
    assert result.best_val_loss < result.log.rows[0].val_loss
    assert result.steps == 5 * math.ceil(len(synthetic_meta) / FAST.batch_size)
    assert result.params.task_ids == synthetic_meta.task_ids


def test_meta_training_is_deterministic(synthetic_meta, small_model):
    first = meta_train(synthetic_meta, small_model, FAST, progress=False)
    second = meta_train(synthetic_meta, small_model, FAST, progress=False)
    assert same_params(first.params, second.params)
    assert first.log.losses("val_loss") == second.log.losses("val_loss")


def test_single_task_meta_training_equals_baseline(synthetic, small_model):
    meta_vocab, tasks = synthetic
    baseline = train_baseline(tasks[1], meta_vocab, small_model, FAST, progress=False)

    view = build_meta_dataset([tasks[1]], meta_vocab)
    meta = meta_train(view, sized_for(small_model, view), FAST, progress=False)

    assert same_params(baseline.params, meta.params)
    assert baseline.log.losses("train_loss") == meta.log.losses("train_loss")
    assert baseline.log.losses("val_loss") == meta.log.losses("val_loss")


def test_non_finite_loss_stops_training(synthetic_meta, small_model):
    params = init_for(small_model, synthetic_meta)
    params.store["expert0.proj.b"] = np.full(small_model.expert_width, np.nan)
    with pytest.raises(NonFiniteLossError) as info:
        fit(params, synthetic_meta, FAST, progress=False)
    assert info.value.step == 0
    assert info.value.task_id in synthetic_meta.task_ids


def test_restore_best_returns_the_best_snapshot(synthetic_meta, small_model):
    params = init_for(small_model, synthetic_meta)
    result = fit(params, synthetic_meta, replace(FAST, meta_epochs=3, learning_rate=5e-2), restore_best=True, progress=False)
    assert meta_loss(result.params, synthetic_meta, "val", "mean") == pytest.approx(result.best_val_loss, rel=1e-12)


def test_early_stopping_restores_best(synthetic_meta, small_model):
    config = replace(FAST, meta_epochs=30, learning_rate=0.5, early_stop_patience=1)
    result = fit(init_for(small_model, synthetic_meta), synthetic_meta, config, progress=False)
    if result.stopped_early:
        assert len(result.log) < 31
        assert meta_loss(result.params, synthetic_meta, "val", "mean") == pytest.approx(result.best_val_loss, rel=1e-12)


def test_meta_loss_rejects_unknown_reduction(synthetic_meta, small_model):
    with pytest.raises(ConfigurationError):
        meta_loss(init_for(small_model, synthetic_meta), synthetic_meta, "val", "median")


def test_init_for_checks_sizes(synthetic_meta, small_model):
    with pytest.raises(ConfigurationError):
        init_for(replace(small_model, num_tasks=2), synthetic_meta)


def test_adapt_with_zero_epochs_copies(synthetic, synthetic_meta, small_model):
    meta_vocab, tasks = synthetic
    params = init_for(small_model, synthetic_meta)
    result = online_adapt(params, tasks[2], meta_vocab, AdaptConfig(epochs=0), progress=False)
    assert result.params is not params
    assert same_params(result.params, params)
    assert result.learning_rate is None
    assert math.isnan(result.val_loss)


def test_adapt_rejects_foreign_vocabulary(synthetic, synthetic_meta, small_model):
    meta_vocab, tasks = synthetic
    params = init_for(small_model, synthetic_meta).copy()
    params.meta_digest = "0" * 64
    with pytest.raises(SchemaError):
        online_adapt(params, tasks[0], meta_vocab, AdaptConfig(epochs=1), progress=False)


def test_adapt_never_worsens_validation(synthetic, synthetic_meta, small_model):
    meta_vocab, tasks = synthetic
    params = meta_train(synthetic_meta, small_model, FAST, progress=False).params
    view = build_meta_dataset([tasks[1]], meta_vocab)
    before = meta_loss(params, view, "val", "mean", head_map=[1])

    config = AdaptConfig(epochs=3, lr_grid=(1e-4, 1e-2), batch_size=16)
    result = online_adapt(params, tasks[1], meta_vocab, config, progress=False)

    assert result.learning_rate in config.lr_grid
    assert set(result.logs) == set(config.lr_grid)
    assert result.val_loss <= before + 1e-12
    assert meta_loss(result.params, view, "val", "mean", head_map=[1]) == pytest.approx(result.val_loss, rel=1e-12)
    assert same_params(params, meta_train(synthetic_meta, small_model, FAST, progress=False).params)


def test_shared_trunk_baseline(synthetic):
    meta_vocab, tasks = synthetic
    config = BaselineConfig(input_dim=1, kind=BaselineKind.SHARED_TRUNK_MULTITASK, hidden_widths=(8,), num_tasks=1)
    result = train_baseline(tasks, meta_vocab, config, FAST, progress=False)
    assert result.params.num_tasks == 3
    assert result.params.input_dim == len(meta_vocab)
    assert result.params.task_ids == ("t0", "t1", "t2")

    with pytest.raises(ConfigurationError):
        train_baseline(tasks, meta_vocab, BaselineConfig(input_dim=1, hidden_widths=(8,)), FAST, progress=False)


def test_trained_baselines_embed_into_one_network(synthetic, synthetic_meta):
    meta_vocab, tasks = synthetic
    config = BaselineConfig(input_dim=1, hidden_widths=(8, 4))
    mlps = [train_baseline(task, meta_vocab, config, FAST, progress=False).params for task in tasks]
    params = embed_single_task_learners(mlps, [t.schema for t in tasks], meta_vocab)
    for i, mlp in enumerate(mlps):
        X = synthetic_meta.dense(i, "test")
        expected, _ = mlp.forward_batch(X, np.zeros(X.shape[0], dtype=np.int64))
        np.testing.assert_allclose(predict_logits(params, X, i), expected, rtol=0, atol=1e-9)


def separable_task(seed: int = 0):
    # label is the sign of x1; |x1| >= 1 leaves a margin of 2
    rng = np.random.default_rng(seed)
    vocab = Vocabulary(["x1", "x2"])

    def split(n, offset):
        labels = rng.integers(0, 2, size=n).astype(float)
        x1 = np.where(labels == 1, 1.0, -1.0) * rng.uniform(1.0, 2.0, size=n)
        return InstanceSplit(np.c_[x1, rng.normal(size=n)], labels, vocab, np.arange(offset, offset + n))

    train, val = split(40, 0), split(20, 40)
    return prepare_tasks([RawTask("toy", label_concept_name("toy"), vocab, train, val, InstanceSplit.empty(vocab))])


@pytest.mark.parametrize("widths", [(), (8,)])
def test_baseline_separates_a_linearly_separable_toy(widths):
    meta_vocab, (task,) = separable_task()
    config = BaselineConfig(input_dim=1, hidden_widths=widths)
    loop = MetaTrainConfig(meta_epochs=100, batch_size=16, learning_rate=5e-2, seed=0)
    result = train_baseline(task, meta_vocab, config, loop, progress=False)

    meta = build_meta_dataset([task], meta_vocab)
    assert evaluate_task(result.params, meta, 0, "train").accuracy == 1.0


def test_single_task_meta_without_auxiliary_tasks(synthetic, small_model):
    meta_vocab, tasks = synthetic
    result = single_task_meta(
        tasks[0], meta_vocab, AuxPolicy.parse("sample:0"), small_model, FAST,
        AdaptConfig(epochs=1, lr_grid=(1e-3,), batch_size=16), progress=False,
    )
    assert result.provenance["aux_tasks"] == 0
    assert result.provenance["meta_tasks"] == 1
    assert result.provenance["aux_policy"] == "sample:0"
    assert result.meta.task_ids == ("t0",)


def test_single_task_meta_with_auxiliary_tasks(synthetic, small_model):
    meta_vocab, tasks = synthetic
    result = single_task_meta(
        tasks[0], meta_vocab, AuxPolicy.parse("sample:3", seed=1), small_model, FAST,
        AdaptConfig(epochs=1, lr_grid=(1e-3,), batch_size=16), progress=False,
    )
    aux = result.provenance["aux_tasks"]
    assert 1 <= aux <= 3
    assert result.meta.num_tasks == 1 + aux
    assert result.meta.task_ids[0] == "t0"
    assert result.params.num_tasks == 1 + aux
    assert result.meta_params.task_ids == result.meta.task_ids
    assert result.provenance["seeds"]["aux"] == 1


def test_meta_epoch_sweep(synthetic, small_model):
    meta_vocab, tasks = synthetic
    reports = meta_epoch_sweep(
        tasks[0], meta_vocab, AuxPolicy.parse("sample:2"), small_model, FAST,
        AdaptConfig(epochs=1, lr_grid=(1e-3,), batch_size=16), epochs_list=[0, 1], progress=False,
    )
    assert [epochs for epochs, _ in reports] == [0, 1]
    for _, report in reports:
        assert report.task_id == "t0"
        assert 0.0 <= report.roc_auc <= 1.0


def test_run_log_csv(tmp_path, synthetic_meta, small_model):
    result = meta_train(synthetic_meta, small_model, replace(FAST, meta_epochs=1), progress=False)
    path = result.log.write(tmp_path / "logs" / "train.csv")
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == COLUMNS
    assert len(rows) == 3
    assert rows[1][2] == ""
    assert float(rows[2][3]) == result.log.rows[1].val_loss
    assert len(RunLog()) == 0


def test_training_configs_validate():
    with pytest.raises(ConfigurationError):
        MetaTrainConfig(meta_epochs=-1)
    with pytest.raises(ConfigurationError):
        MetaTrainConfig(batch_size=0)
    with pytest.raises(ConfigurationError):
        MetaTrainConfig(learning_rate=0.0)
    with pytest.raises(ConfigurationError):
        MetaTrainConfig(clip_norm=0.0)
    with pytest.raises(ConfigurationError):
        AdaptConfig(lr_grid=())
    with pytest.raises(ConfigurationError):
        AdaptConfig(lr_grid=(1e-3, -1.0))
    assert AdaptConfig(lr_grid=["1e-4"]).lr_grid == (1e-4,)
    assert MetaAugConfig(input_dim=2, num_tasks=1).expert_width == 512
