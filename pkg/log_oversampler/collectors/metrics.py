import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from ..corpus.records import Label
from ..errors import ArgumentError, UndefinedMetricError
from . import BaseCollector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
    """Prediction-vs-truth tallies with one label treated as positive."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ArgumentError(f"Confusion counts must be non-negative: {self}")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @classmethod
    def from_pairs(
        cls, pairs: Iterable[tuple[int, int]], positive: int = Label.POSITIVE
    ) -> "ConfusionCounts":
        """Count (predicted, true) label pairs."""
        tp = tn = fp = fn = 0
        for predicted, truth in pairs:
            if predicted == positive:
                if truth == positive:
                    tp += 1
                else:
                    fp += 1
            elif truth == positive:
                fn += 1
            else:
                tn += 1
        return cls(tp, tn, fp, fn)


def accuracy(c: ConfusionCounts) -> float:
    """Fraction of correct predictions."""
    if c.total == 0:
        raise UndefinedMetricError("Accuracy of an empty evaluation set")
    return (c.tp + c.tn) / c.total


def precision(c: ConfusionCounts) -> float:
    if c.tp + c.fp == 0:
        raise UndefinedMetricError("Precision undefined: nothing predicted positive")
    return c.tp / (c.tp + c.fp)


def recall(c: ConfusionCounts) -> float:
    if c.tp + c.fn == 0:
        raise UndefinedMetricError("Recall undefined: no positive instances")
    return c.tp / (c.tp + c.fn)


def f_measure(p: float, r: float) -> float:
    """Harmonic mean of precision and recall."""
    if not (0 <= p <= 1 and 0 <= r <= 1):
        raise ArgumentError(f"Precision and recall must lie in [0, 1], got {p}, {r}")
    if p + r == 0:
        raise UndefinedMetricError("F-measure undefined when precision and recall are both 0")
    return 2 * p * r / (p + r)


def percent(value: float | None) -> str:
    """Render a ratio as a one-decimal percentage, or 'n/a' when undefined."""
    if value is None:
        return "n/a"
    return f"{value * 100:.1f}"


@dataclass(frozen=True)
class LabelMetrics:
    """Precision, recall and F-measure with one label as positive; None when undefined."""

    label: Label
    precision: float | None
    recall: float | None
    f_measure: float | None


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    rows: tuple[LabelMetrics, ...]
    counts: int

    def row(self, label: int) -> LabelMetrics:
        for row in self.rows:
            if row.label == label:
                return row
        raise ArgumentError(f"No metrics row for label {label}")


def _defined(metric, *args) -> float | None:
    try:
        return metric(*args)
    except UndefinedMetricError:
        return None


def per_label_report(pairs: Sequence[tuple[int, int]]) -> MetricsReport:
    """
    Per-label precision, recall and F-measure plus overall accuracy.

    Args:
        pairs: (predicted label, true label) per evaluated record
    """
    pairs = list(pairs)
    if not pairs:
        raise ArgumentError("Cannot report metrics on an empty evaluation set")
    rows = []
    for label in (Label.NEGATIVE, Label.POSITIVE):
        counts = ConfusionCounts.from_pairs(pairs, positive=label)
        p = _defined(precision, counts)
        r = _defined(recall, counts)
        f = _defined(f_measure, p, r) if p is not None and r is not None else None
        rows.append(LabelMetrics(label, p, r, f))
    overall = accuracy(ConfusionCounts.from_pairs(pairs))
    return MetricsReport(overall, tuple(rows), len(pairs))


class PerLabelMetricsCollector(BaseCollector[Sequence[tuple[int, int]], MetricsReport]):
    """Collector for per-label evaluation metrics."""

    def collect(self, data: Sequence[tuple[int, int]]) -> MetricsReport:
        """
        Reduce (predicted, true) label pairs into a metrics report.

        Args:
            data: One (predicted, true) pair per evaluated record

        Returns:
            MetricsReport with overall accuracy and one row per label
        """
        report = per_label_report(data)
        logger.info(f"Evaluated {report.counts} records: accuracy {percent(report.accuracy)}%")
        for row in report.rows:
            logger.info(
                f"Label {int(row.label)}: precision {percent(row.precision)}, "
                f"recall {percent(row.recall)}, F {percent(row.f_measure)}"
            )
        return report
