"""Base formatter interface and the report renderers."""

from abc import ABC, abstractmethod
from typing import Generic, TypeVar

T = TypeVar("T")


class BaseFormatter(Generic[T], ABC):
    """
    Base class for all report formatters.

    Formatters turn collected statistics into text: TSV files for the output
    directory or a summary for the terminal.
    """

    @abstractmethod
    def format(self, data: T) -> str:
        """
        Format the given statistics data.

        Args:
            data: Statistics data to format

        Returns:
            The rendered text, newline-terminated
        """
        pass


from .report import (  # noqa: E402
    AblationTsvFormatter,
    FoldsTsvFormatter,
    GanDiagnosticsTsvFormatter,
    ProvenanceFormatter,
    ReportTextFormatter,
    ReportTsvFormatter,
)

__all__ = [
    "BaseFormatter",
    "ReportTsvFormatter",
    "AblationTsvFormatter",
    "FoldsTsvFormatter",
    "GanDiagnosticsTsvFormatter",
    "ProvenanceFormatter",
    "ReportTextFormatter",
]
