"""Vocabulary files: one concept name per line, index = line number."""
from pathlib import Path

from concept_meta.concepts import Vocabulary


class VocabularyParser:
    """Plain text vocabulary reader/writer."""

    def read(self, path: str | Path, encoding: str = "utf-8") -> Vocabulary:
        """
        Read a vocabulary file.

        Args:
            path: Path to the vocabulary file
            encoding: File encoding (default: utf-8)

        Returns:
            Vocabulary whose index i is line i (0-based)

        Raises:
            FileNotFoundError: If file doesn't exist
            RuntimeError: If reading fails
        """
        path = Path(path)

        if not path.exists():
            raise FileNotFoundError(f"Vocabulary file not found: {path}")

        try:
            text = path.read_text(encoding=encoding)
        except Exception as e:
            raise RuntimeError(f"Failed to read vocabulary file: {e}") from e

        if text.startswith("\ufeff"):
            text = text.lstrip("\ufeff")
        lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
        # A trailing newline leaves one empty element
        if lines and lines[-1] == "":
            lines.pop()
        return Vocabulary(lines)

    def write(self, path: str | Path, vocab: Vocabulary) -> Path:
        """Write one name per line, UTF-8."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(f"{name}\n" for name in vocab), encoding="utf-8")
        return path
