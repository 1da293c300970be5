"""ConceptMeta - Multi-task meta learning over aligned concept vocabularies."""
from concept_meta.config import config
from concept_meta.orchestrator import ConceptMetaOrchestrator

__version__ = "0.1.0"
__all__ = ["config", "ConceptMetaOrchestrator"]
