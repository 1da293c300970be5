"""Shared fixtures: a small synthetic multi-task problem, aligned once per session."""
import pytest

from concept_meta.data import build_meta_dataset, make_synthetic_tasks, prepare_tasks
from concept_meta.model import MetaAugConfig

SMALL_SYNTHETIC = dict(seed=0, n_tasks=3, n_train=60, n_val=30, n_test=200)


@pytest.fixture(scope="session")
def synthetic():
    """(meta-vocabulary, aligned tasks) of the 3-task synthetic problem."""
    return prepare_tasks(make_synthetic_tasks(**SMALL_SYNTHETIC))


@pytest.fixture(scope="session")
def synthetic_meta(synthetic):
    meta_vocab, tasks = synthetic
    return build_meta_dataset(tasks, meta_vocab)


@pytest.fixture
def small_model(synthetic_meta):
    return MetaAugConfig(
        input_dim=synthetic_meta.input_dim,
        num_tasks=synthetic_meta.num_tasks,
        num_experts=2,
        expert_depth=1,
        expert_width=8,
        gate_hidden=4,
        head_hidden=4,
        seed=0,
    )
