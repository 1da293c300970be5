"""File parsing utilities."""
from .libsvm_parser import LibSVMData, LibSVMParser
from .vocabulary_parser import VocabularyParser

__all__ = ["LibSVMData", "LibSVMParser", "VocabularyParser"]
