"""LIBSVM sparse text format reading and writing."""
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from concept_meta.errors import ParseError

_POSITIVE = {"+1", "1", "1.0", "+1.0"}
_NEGATIVE = {"-1", "0", "-1.0", "0.0"}


@dataclass(frozen=True)
class LibSVMData:
    """Parsed LIBSVM file: CSR rows over 0-based columns plus {0,1} labels."""

    features: sp.csr_matrix
    labels: npt.NDArray[np.float64]
    max_index: int

    def __len__(self) -> int:
        return self.features.shape[0]


class LibSVMParser:
    """Reader/writer for lines of the form ``label idx:val idx:val ...``."""

    def parse(self, path: str | Path, n_features: int | None = None) -> LibSVMData:
        """
        Parse a LIBSVM file.

        Performs:
        - BOM stripping and line ending normalization
        - Blank line skipping
        - 1-based to 0-based index conversion
        - Label normalization from {-1,+1} or {0,1} to {0,1}

        Args:
            path: Path to the file
            n_features: Column count of the result; defaults to the largest index seen

        Returns:
            LibSVMData with features of shape (rows, n_features)

        Raises:
            FileNotFoundError: If the file doesn't exist
            ParseError: On a malformed token, label or non-increasing indices
            RuntimeError: If reading fails
        """
        path = Path(path)

        if not path.exists():
            raise FileNotFoundError(f"LIBSVM file not found: {path}")

        try:
            with open(path, "r", encoding="utf-8", errors="replace") as f:
                text = f.read()
        except Exception as e:
            raise RuntimeError(f"Failed to read LIBSVM file: {e}") from e

        if text.startswith("\ufeff"):
            text = text.lstrip("\ufeff")
        text = text.replace("\r\n", "\n").replace("\r", "\n")

        return self.parse_lines(text.split("\n"), path, n_features)

    def parse_lines(
        self, lines: list[str], path: str | Path | None = None, n_features: int | None = None
    ) -> LibSVMData:
        """Parse already-split lines; line numbers in errors are 1-based."""
        labels: list[float] = []
        indptr = [0]
        indices: list[int] = []
        values: list[float] = []
        max_index = 0

        for line_number, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line:
                continue
            tokens = line.split()
            labels.append(self._parse_label(tokens[0], path, line_number))

            previous = 0
            for token in tokens[1:]:
                index, value = self._parse_pair(token, path, line_number)
                if index <= previous:
                    raise ParseError(
                        f"feature indices must be strictly increasing ({index} after {previous})",
                        path,
                        line_number,
                    )
                previous = index
                indices.append(index - 1)
                values.append(value)
            max_index = max(max_index, previous)
            indptr.append(len(indices))

        width = max_index if n_features is None else n_features
        if max_index > width:
            raise ParseError(f"feature index {max_index} exceeds declared feature count {width}", path)

        features = sp.csr_matrix(
            (
                np.asarray(values, dtype=np.float64),
                np.asarray(indices, dtype=np.int64),
                np.asarray(indptr, dtype=np.int64),
            ),
            shape=(len(labels), width),
        )
        return LibSVMData(features, np.asarray(labels, dtype=np.float64), max_index)

    def serialize(self, path: str | Path, features: sp.spmatrix, labels: npt.ArrayLike) -> Path:
        """
        Write rows back in LIBSVM format (labels as +1/-1, 1-based indices).

        Args:
            path: Output path
            features: CSR rows
            labels: {0,1} labels

        Returns:
            The written path
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        csr = sp.csr_matrix(features)
        csr.sort_indices()
        labels = np.asarray(labels, dtype=np.float64)

        lines = []
        for row in range(csr.shape[0]):
            start, end = csr.indptr[row], csr.indptr[row + 1]
            parts = ["+1" if labels[row] == 1.0 else "-1"]
            parts.extend(
                f"{int(i) + 1}:{float(v)!r}" for i, v in zip(csr.indices[start:end], csr.data[start:end])
            )
            lines.append(" ".join(parts))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    @staticmethod
    def _parse_label(token: str, path, line_number: int) -> float:
        if token in _POSITIVE:
            return 1.0
        if token in _NEGATIVE:
            return 0.0
        raise ParseError(f"unsupported label {token!r} (expected -1/+1 or 0/1)", path, line_number)

    @staticmethod
    def _parse_pair(token: str, path, line_number: int) -> tuple[int, float]:
        head, sep, tail = token.partition(":")
        if not sep:
            raise ParseError(f"malformed token {token!r}", path, line_number)
        try:
            index = int(head)
            value = float(tail)
        except ValueError:
            raise ParseError(f"malformed token {token!r}", path, line_number) from None
        if index < 1:
            raise ParseError(f"feature index must be >= 1, got {index}", path, line_number)
        if not np.isfinite(value):
            raise ParseError(f"non-finite value in token {token!r}", path, line_number)
        return index, value
