"""Test configuration loading: environment settings and YAML run configurations."""
import logging
from pathlib import Path

import pytest

from concept_meta.config import Config, RunConfig, load_run_config, parse_run_config
from concept_meta.errors import ConfigurationError

ROOT = Path(__file__).parent
ENV_VARS = ("CONCEPT_META_THREADS", "CONCEPT_META_LOG_LEVEL", "CONCEPT_META_PROGRESS", "CONCEPT_META_OUTPUT_DIR")


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    """No CONCEPT_META_* variables and an empty .env; load_dotenv writes into os.environ."""
    for name in ENV_VARS:
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)
    env_file = tmp_path / ".env"
    env_file.write_text("", encoding="utf-8")
    return env_file


def test_environment_defaults(clean_env):
    config = Config(clean_env)
    assert config.threads == 1
    assert config.log_level == "INFO"
    assert config.logging_level == logging.INFO
    assert config.progress is True
    assert config.output_dir == Path("runs/default")


def test_environment_overrides(clean_env, monkeypatch):
    monkeypatch.setenv("CONCEPT_META_THREADS", "4")
    monkeypatch.setenv("CONCEPT_META_LOG_LEVEL", "debug")
    monkeypatch.setenv("CONCEPT_META_PROGRESS", "off")
    monkeypatch.setenv("CONCEPT_META_OUTPUT_DIR", "elsewhere")
    config = Config(clean_env)
    assert config.threads == 4
    assert config.logging_level == logging.DEBUG
    assert config.progress is False
    assert config.output_dir == Path("elsewhere")


def test_env_file_is_read(clean_env):
    clean_env.write_text("CONCEPT_META_THREADS=3\nCONCEPT_META_PROGRESS=0\n", encoding="utf-8")
    config = Config(clean_env)
    assert config.threads == 3
    assert config.progress is False


@pytest.mark.parametrize(
    "name, value",
    [
        ("CONCEPT_META_THREADS", "many"),
        ("CONCEPT_META_THREADS", "0"),
        ("CONCEPT_META_LOG_LEVEL", "LOUD"),
    ],
)
def test_invalid_environment_values(clean_env, monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ValueError, match=name):
        Config(clean_env)


def test_run_config_defaults():
    run = load_run_config(None)
    assert run == RunConfig()
    assert run.model.expert_width == 512
    assert run.meta_train.to_config().learning_rate == 1e-4
    assert run.adapt.to_config().lr_grid == (1e-6, 3e-6, 1e-5)
    assert run.tasks.policy.kind == "all"
    assert run.baseline.hidden_widths == (256, 128, 64)


def test_run_config_partial_sections():
    run = parse_run_config({"model": {"expert_depth": 2}, "adapt": None})
    assert run.model.expert_depth == 2
    assert run.model.num_experts == 3
    assert run.adapt == RunConfig().adapt


def test_scientific_notation_strings_are_numbers():
    run = parse_run_config({"meta_train": {"learning_rate": "1e-4"}, "adapt": {"lr_grid": ["1e-6", 3e-6]}})
    assert run.meta_train.learning_rate == 1e-4
    assert run.adapt.lr_grid == (1e-6, 3e-6)
    with pytest.raises(ConfigurationError):
        parse_run_config({"meta_train": {"learning_rate": "fast"}})


@pytest.mark.parametrize(
    "data",
    [
        {"training": {}},
        {"model": {"experts": 3}},
        {"data": {"tasks": [{"id": "a", "train": "x", "test": "y", "format": "svm"}]}},
        {"tasks": {"aux": "some"}},
        {"baseline": {"kind": "wide_and_deep"}},
        {"eval": {"split": "holdout"}},
        {"data": {"source": "csv"}},
        {"meta_train": {"batch_size": 0}},
        {"model": "wide"},
        ["not", "a", "mapping"],
    ],
)
def test_invalid_run_configs(data):
    with pytest.raises(ConfigurationError):
        parse_run_config(data)


def test_duplicate_task_ids():
    task = {"id": "a", "train": "x", "test": "y"}
    with pytest.raises(ConfigurationError, match="Duplicate"):
        parse_run_config({"data": {"tasks": [task, task]}})


def test_with_overrides():
    run = RunConfig().with_overrides(seed=7, meta_epochs=0, aux="sample:5", out="runs/x")
    assert run.model.seed == 7
    assert run.meta_train.seed == 7
    assert run.data.synthetic.seed == 7
    assert run.tasks.aux_seed == 7
    assert run.meta_train.epochs == 0
    assert run.tasks.policy.k == 5
    assert run.output_dir == Path("runs/x")
    assert RunConfig().with_overrides() == RunConfig()
    with pytest.raises(ConfigurationError):
        RunConfig().with_overrides(aux="most")


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_run_config(tmp_path / "absent.yaml")
    broken = tmp_path / "broken.yaml"
    broken.write_text("model: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="Malformed"):
        load_run_config(broken)
    empty = tmp_path / "empty.yaml"
    empty.write_text("", encoding="utf-8")
    assert load_run_config(empty) == RunConfig()


@pytest.mark.parametrize("name", ["a9a", "a9a_reference", "madelon", "synthetic"])
def test_shipped_configs_parse(name):
    run = load_run_config(ROOT / "configs" / f"{name}.yaml")
    assert run.output_dir == Path("runs") / name
    run.meta_train.to_config()
    run.adapt.to_config()
    run.baseline.to_config()
