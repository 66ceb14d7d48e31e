"""Record types flowing through every stage."""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ..errors import ArgumentError

PAD_ID = 0
UNK_ID = 1


class Label(IntEnum):
    """Log label; positive (1) is normal, negative (0) is abnormal."""

    NEGATIVE = 0
    POSITIVE = 1


class Origin(IntEnum):
    REAL = 0
    GENERATED = 1


@dataclass(frozen=True)
class LogRecord:
    """One raw labeled log message."""

    label: Label
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ArgumentError("Log message text is empty")


@dataclass(frozen=True)
class EncodedLog:
    """Fixed-length token-id sequence with its label."""

    ids: tuple[int, ...]
    label: Label
    origin: Origin = Origin.REAL

    @property
    def length(self) -> int:
        return len(self.ids)

    @property
    def n_tokens(self) -> int:
        """Number of ids before the first PAD."""
        for i, token in enumerate(self.ids):
            if token == PAD_ID:
                return i
        return len(self.ids)


def ids_matrix(records: list[EncodedLog]) -> np.ndarray:
    """Stack record ids into an int64 array [n x L]."""
    if not records:
        raise ArgumentError("No records to stack")
    return np.array([r.ids for r in records], dtype=np.int64)


def label_counts(records) -> dict[Label, int]:
    """Count records per label."""
    counts = {Label.NEGATIVE: 0, Label.POSITIVE: 0}
    for record in records:
        counts[Label(record.label)] += 1
    return counts
