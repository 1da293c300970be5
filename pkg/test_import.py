"""Quick test to verify the public import surface."""
import importlib

import pytest

import concept_meta
from concept_meta import ConceptMetaOrchestrator, config
from concept_meta.config import RunConfig


@pytest.mark.parametrize(
    "module",
    [
        "concept_meta.numeric",
        "concept_meta.concepts",
        "concept_meta.data",
        "concept_meta.parsers",
        "concept_meta.model",
        "concept_meta.training",
        "concept_meta.evaluation",
        "concept_meta.formatter",
        "concept_meta.main",
    ],
)
def test_subpackages_export_what_they_declare(module):
    mod = importlib.import_module(module)
    for name in getattr(mod, "__all__", ()):
        assert hasattr(mod, name), f"{module}.{name}"


def test_package_metadata():
    assert concept_meta.__version__ == "0.1.0"
    assert set(concept_meta.__all__) == {"config", "ConceptMetaOrchestrator"}
    assert config.threads >= 1


def test_orchestrator_initialization(tmp_path):
    orchestrator = ConceptMetaOrchestrator(RunConfig().with_overrides(out=tmp_path), progress=False, threads=2)
    assert orchestrator.out_dir == tmp_path
    assert orchestrator.threads == 2
    assert orchestrator.progress is False
