"""Test metrics, the Overall score, comparison tables, chunked inference and task attention."""
import logging
import math
from dataclasses import replace
from itertools import product

import numpy as np
import pytest

from concept_meta.data import build_meta_dataset
from concept_meta.errors import UndefinedMetricError
from concept_meta.evaluation import (
    MetricsReport,
    accuracy,
    cohen_kappa,
    comparison_table,
    confusion_matrix,
    evaluate_predictions,
    evaluate_task,
    f1_score,
    hard_log_loss,
    overall_score,
    predict_logits,
    relative_changes,
    roc_auc,
    task_attention,
)
from concept_meta.model import MetaAugConfig
from concept_meta.training import MetaTrainConfig, init_for, meta_train

# Published five-metric rows on a9a: accuracy, AUC, F1, kappa, hard log loss, Overall against WDL
A9A_TABLE = {
    "WDL": ((0.8227, 0.8687, 0.5122, 0.4156, 6.1224), 0.0),
    "PLE": ((0.8405, 0.8913, 0.6165, 0.5181, 5.5094), 59.80),
    "MMOE": ((0.8413, 0.8938, 0.6416, 0.5403, 5.4797), 70.92),
    "ESSM": ((0.8148, 0.8774, 0.4289, 0.3448, 6.3961), -37.73),
    "DCNMix": ((0.7985, 0.8433, 0.3536, 0.2701, 6.9583), -85.49),
    "DCN": ((0.8071, 0.8646, 0.3957, 0.3111, 6.6613), -59.06),
    "MetaCon": ((0.8417, 0.894, 0.6505, 0.5484, 5.4691), 74.85),
}


def report(values, task_id="a9a") -> MetricsReport:
    acc, auc, f1, kappa, log_loss = values
    return MetricsReport(task_id, 16281, 0.5, acc, auc, f1, kappa, log_loss)


def brute_force_auc(scores, labels) -> float:
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in product(pos, neg))
    return wins / (len(pos) * len(neg))


def test_roc_auc_perfect_and_inverted():
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert roc_auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0


def test_roc_auc_ties_count_half():
    assert roc_auc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5
    assert roc_auc([0.2, 0.5, 0.5, 0.9], [0, 0, 1, 1]) == pytest.approx(brute_force_auc([0.2, 0.5, 0.5, 0.9], [0, 0, 1, 1]))


def test_roc_auc_matches_pair_counting():
    rng = np.random.default_rng(0)
    for _ in range(10):
        scores = np.round(rng.random(20), 1)
        labels = np.r_[0, 1, rng.integers(0, 2, size=18)]
        assert roc_auc(scores, labels) == pytest.approx(brute_force_auc(scores, labels), abs=1e-12)


def test_roc_auc_invariances():
    rng = np.random.default_rng(1)
    scores = rng.normal(size=50)
    labels = np.r_[0, 1, rng.integers(0, 2, size=48)]
    auc = roc_auc(scores, labels)
    assert roc_auc(np.exp(3 * scores) + 1, labels) == pytest.approx(auc, abs=1e-12)
    assert roc_auc(-scores, labels) == pytest.approx(1.0 - auc, abs=1e-12)


def test_roc_auc_single_class_is_undefined():
    with pytest.raises(UndefinedMetricError):
        roc_auc([0.1, 0.7], [1, 1])


def test_hand_confusion_matrix():
    # tn=3, fp=1, fn=2, tp=4
    labels = [0, 0, 0, 0, 1, 1, 1, 1, 1, 1]
    predictions = [0, 0, 0, 1, 0, 0, 1, 1, 1, 1]
    assert confusion_matrix(predictions, labels).tolist() == [[3, 1], [2, 4]]
    assert accuracy(predictions, labels) == pytest.approx(0.7)
    assert cohen_kappa(predictions, labels) == pytest.approx(0.4)
    assert f1_score(predictions, labels) == pytest.approx(8 / 11)


def test_perfect_and_constant_predictors():
    labels = [0, 1, 1, 0, 1]
    assert cohen_kappa(labels, labels) == 1.0
    assert f1_score(labels, labels) == 1.0
    assert cohen_kappa([1] * 5, labels) == pytest.approx(0.0, abs=1e-12)
    assert f1_score([0] * 5, labels) == 0.0
    assert cohen_kappa([1, 1], [1, 1]) == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_kappa_and_f1_match_confusion_counts(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 60))
    labels = rng.integers(0, 2, size=n)
    predictions = np.where(rng.random(n) < 0.7, labels, 1 - labels)
    (tn, fp), (fn, tp) = confusion_matrix(predictions, labels)
    assert tn + fp + fn + tp == n
    assert tp == np.sum((predictions == 1) & (labels == 1))
    assert fp == np.sum((predictions == 1) & (labels == 0))

    p_o = (tn + tp) / n
    p_e = ((tn + fp) * (tn + fn) + (fn + tp) * (fp + tp)) / n**2
    expected_kappa = 0.0 if p_e == 1.0 else (p_o - p_e) / (1 - p_e)
    expected_f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
    assert accuracy(predictions, labels) == pytest.approx(p_o)
    assert cohen_kappa(predictions, labels) == pytest.approx(expected_kappa, abs=1e-12)
    assert f1_score(predictions, labels) == pytest.approx(expected_f1, abs=1e-12)


def test_metrics_reject_non_binary_labels():
    with pytest.raises(ValueError):
        accuracy([0, 1], [0, 2])


@pytest.mark.parametrize("name", sorted(A9A_TABLE))
def test_hard_log_loss_tracks_error_rate(name):
    (acc, _, _, _, log_loss), _ = A9A_TABLE[name]
    n = 10000
    errors = round((1 - acc) * n)
    labels = np.ones(n)
    predictions = np.r_[np.zeros(errors), np.ones(n - errors)]
    value = hard_log_loss(predictions, labels)
    assert value == pytest.approx((1 - accuracy(predictions, labels)) * -math.log(1e-15), abs=1e-9)
    assert value == pytest.approx(log_loss, abs=0.01)


@pytest.mark.parametrize("name", sorted(A9A_TABLE))
def test_overall_score_reproduces_published_rows(name):
    values, overall = A9A_TABLE[name]
    reference = report(A9A_TABLE["WDL"][0])
    assert overall_score(report(values), reference) == pytest.approx(overall, abs=0.05)


def test_overall_score_signs():
    reference = report(A9A_TABLE["WDL"][0])
    changes = relative_changes(report(A9A_TABLE["PLE"][0]), reference)
    assert changes["log_loss"] > 0
    assert changes["accuracy"] == pytest.approx(100 * (0.8405 - 0.8227) / 0.8227)
    assert overall_score(reference, reference) == 0.0


def test_overall_score_skips_zero_reference(caplog):
    reference = report((0.5, 0.5, 0.0, 0.0, 17.0))
    candidate = report((0.6, 0.5, 0.2, 0.1, 17.0))
    with caplog.at_level(logging.WARNING):
        score = overall_score(candidate, reference)
    assert score == pytest.approx(20.0)
    assert "Reference f1 is zero" in caplog.text
    assert "Reference kappa is zero" in caplog.text
    assert relative_changes(candidate, reference)["kappa"] is None


def test_comparison_table():
    reference = report(A9A_TABLE["WDL"][0])
    rows = comparison_table(reference, {name: report(values) for name, (values, _) in A9A_TABLE.items()})
    by_model = {row["model"]: row for row in rows}
    assert list(by_model) == list(A9A_TABLE)
    assert by_model["WDL"]["overall"] == 0.0
    assert by_model["WDL"]["accuracy_change"] == 0.0
    assert by_model["MetaCon"]["accuracy"] == 0.8417
    assert by_model["MetaCon"]["overall"] == pytest.approx(74.85, abs=0.05)


def test_evaluate_predictions():
    probs = np.array([0.1, 0.6, 0.4, 0.9])
    labels = np.array([0, 0, 1, 1])
    result = evaluate_predictions(probs, labels, "t", threshold=0.5)
    assert result.n == 4
    assert result.accuracy == 0.5
    assert result.roc_auc == 0.75
    assert result.probability_log_loss > 0
    assert result.to_dict()["task_id"] == "t"

    single = evaluate_predictions([0.2, 0.3], [1, 1])
    assert math.isnan(single.roc_auc)


@pytest.fixture(scope="module")
def trained(synthetic_meta):
    meta = synthetic_meta
    config = MetaAugConfig(
        input_dim=meta.input_dim, num_tasks=meta.num_tasks, num_experts=2, expert_depth=1,
        expert_width=8, gate_hidden=4, head_hidden=4,
    )
    return meta_train(meta, config, MetaTrainConfig(meta_epochs=3, batch_size=32, learning_rate=1e-2), progress=False).params


def test_inference_is_chunk_and_thread_invariant(synthetic_meta, trained):
    whole = predict_logits(trained, synthetic_meta, 0, "test", chunk_size=10_000)
    chunked = predict_logits(trained, synthetic_meta, 0, "test", chunk_size=17)
    threaded = predict_logits(trained, synthetic_meta, 0, "test", threads=4, chunk_size=17)
    assert whole.shape == (200,)
    np.testing.assert_allclose(chunked, whole, rtol=0, atol=1e-12)
    assert np.array_equal(chunked, threaded)


def test_evaluate_task(synthetic_meta, trained):
    result = evaluate_task(trained, synthetic_meta, 1, "test")
    assert result.task_id == "t1"
    assert result.n == 200
    assert 0.0 <= result.roc_auc <= 1.0
    assert result == evaluate_task(trained, synthetic_meta, 1, "test", threads=3)


def test_task_attention(synthetic_meta, trained):
    attention = task_attention(trained, synthetic_meta, "test")
    assert attention.task_ids == ("t0", "t1", "t2")
    assert np.all(np.diag(attention.scores) == 0.0)
    # t1's mask concepts never occur in t0's rows
    assert attention.score(0, 1) == 0.0
    assert attention.strongest(1) in (0, 2)

    rows = attention.to_rows()
    assert len(rows) == 4 and all(len(row) == 4 for row in rows)
    assert rows[0] == ["task", "t0", "t1", "t2"]


def test_task_attention_with_empty_split(synthetic, caplog):
    meta_vocab, tasks = synthetic
    emptied = replace(tasks[2], test=tasks[2].test.subset([]))
    meta = build_meta_dataset([tasks[0], tasks[1], emptied], meta_vocab)
    params = init_for(MetaAugConfig(input_dim=meta.input_dim, num_tasks=3, expert_depth=1, expert_width=4), meta)
    with caplog.at_level(logging.WARNING):
        attention = task_attention(params, meta, "test")
    assert attention.scores[2].tolist() == [0.0, 0.0, 0.0]
    assert "t2 has no test rows" in caplog.text
