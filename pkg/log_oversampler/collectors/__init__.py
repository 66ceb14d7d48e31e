"""Base collector interface and the evaluation collectors."""

from abc import ABC, abstractmethod
from typing import Generic, TypeVar

S = TypeVar("S")
T = TypeVar("T")


class BaseCollector(Generic[S, T], ABC):
    """
    Base class for all statistics collectors.

    Collectors reduce raw training or evaluation outcomes into a summary object
    that formatters can render.
    """

    @abstractmethod
    def collect(self, data: S) -> T:
        """
        Collect statistics from the given outcomes.

        Args:
            data: Raw outcomes, in a form specific to the collector

        Returns:
            Statistics data in a format specific to the collector
        """
        pass


from .metrics import (  # noqa: E402
    ConfusionCounts,
    LabelMetrics,
    MetricsReport,
    PerLabelMetricsCollector,
    accuracy,
    f_measure,
    per_label_report,
    percent,
    precision,
    recall,
)
from .run import (  # noqa: E402
    FoldStats,
    FoldSummary,
    FoldSummaryCollector,
    Provenance,
    RunReport,
)

__all__ = [
    "BaseCollector",
    "ConfusionCounts",
    "LabelMetrics",
    "MetricsReport",
    "PerLabelMetricsCollector",
    "accuracy",
    "precision",
    "recall",
    "f_measure",
    "per_label_report",
    "percent",
    "FoldStats",
    "FoldSummary",
    "FoldSummaryCollector",
    "Provenance",
    "RunReport",
]
