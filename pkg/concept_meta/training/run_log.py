"""Run log: one row per evaluation."""
import csv
import math
from dataclasses import astuple, dataclass, field
from pathlib import Path

COLUMNS = ("step", "epoch", "train_loss", "val_loss", "wall_time")


@dataclass(frozen=True)
class LogRow:
    step: int
    epoch: int
    train_loss: float
    val_loss: float
    wall_time: float


@dataclass
class RunLog:
    """Evaluation records of one training run, in order."""

    rows: list[LogRow] = field(default_factory=list)

    def append(self, row: LogRow) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def losses(self, column: str = "train_loss") -> list[float]:
        return [getattr(row, column) for row in self.rows]

    def extend(self, other: "RunLog") -> None:
        self.rows.extend(other.rows)

    def write(self, path: str | Path) -> Path:
        """Write comma-separated values with a header row."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(COLUMNS)
            for row in self.rows:
                writer.writerow(_format(value) for value in astuple(row))
        return path


def _format(value) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)
