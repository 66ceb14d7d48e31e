import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError
from . import BaseCollector
from .metrics import MetricsReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FoldStats:
    """Outcome of one cross-validation fold at its best epoch."""

    fold: int
    best_epoch: int
    train_acc: float
    train_loss: float
    val_acc: float
    val_loss: float


@dataclass(frozen=True)
class FoldSummary:
    """Mean and sample standard deviation of the fold outcomes."""

    folds: tuple[FoldStats, ...]
    avg_train_acc: float
    avg_val_acc: float
    std_val_acc: float
    avg_train_loss: float
    std_train_loss: float
    median_best_epoch: int


def _std(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


class FoldSummaryCollector(BaseCollector[Sequence[FoldStats], FoldSummary]):
    """Collector reducing per-fold statistics into the report averages."""

    def collect(self, data: Sequence[FoldStats]) -> FoldSummary:
        if not data:
            raise ArgumentError("No folds to summarize")
        train_acc = np.array([f.train_acc for f in data])
        val_acc = np.array([f.val_acc for f in data])
        train_loss = np.array([f.train_loss for f in data])
        # lower median for even fold counts
        epochs = sorted(f.best_epoch for f in data)
        summary = FoldSummary(
            folds=tuple(data),
            avg_train_acc=float(train_acc.mean()),
            avg_val_acc=float(val_acc.mean()),
            std_val_acc=_std(val_acc),
            avg_train_loss=float(train_loss.mean()),
            std_train_loss=_std(train_loss),
            median_best_epoch=epochs[(len(epochs) - 1) // 2],
        )
        logger.info(
            f"{len(data)} folds: val accuracy {summary.avg_val_acc:.4f} "
            f"(std {summary.std_val_acc:.4f}), median best epoch {summary.median_best_epoch}"
        )
        return summary


@dataclass(frozen=True)
class Provenance:
    """What a run was computed from."""

    config_hash: str
    seed: int
    corpus_sha256: str
    version: str


@dataclass
class RunReport:
    dataset: str
    phase: str
    summary: FoldSummary
    test: MetricsReport
    provenance: Provenance
    stages: list[str] = field(default_factory=list)
    test_accesses: int = 0
    negatives_before: int = 0
    negatives_after: int = 0
    positives: int = 0
