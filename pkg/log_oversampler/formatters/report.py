from collections.abc import Sequence

from ..collectors import FoldSummary, RunReport, percent
from ..seqgan.trainer import GanDiagnostics
from . import BaseFormatter

REPORT_COLUMNS = (
    "dataset",
    "phase",
    "avg_train_acc",
    "avg_val_acc(±std)",
    "avg_train_loss(±std)",
    "test_acc",
    "label",
    "precision",
    "recall",
    "f_measure",
)


def _tsv(rows: Sequence[Sequence[object]]) -> str:
    return "".join("\t".join(str(v) for v in row) + "\n" for row in rows)


def _report_rows(data: RunReport) -> list[tuple]:
    s = data.summary
    val = f"{percent(s.avg_val_acc)} ({s.std_val_acc * 100:.2f})"
    loss = f"{s.avg_train_loss:.4f} ({s.std_train_loss:.2f})"
    return [
        (
            data.dataset,
            data.phase,
            percent(s.avg_train_acc),
            val,
            loss,
            percent(data.test.accuracy),
            int(row.label),
            percent(row.precision),
            percent(row.recall),
            percent(row.f_measure),
        )
        for row in data.test.rows
    ]


class ReportTsvFormatter(BaseFormatter[RunReport]):
    """One row per label: fold averages, test accuracy and the per-label metrics."""

    def format(self, data: RunReport) -> str:
        return _tsv([REPORT_COLUMNS, *_report_rows(data)])


class AblationTsvFormatter(BaseFormatter[Sequence[RunReport]]):
    """The report rows of several phases under one header."""

    def format(self, data: Sequence[RunReport]) -> str:
        return _tsv([REPORT_COLUMNS, *(row for report in data for row in _report_rows(report))])


class FoldsTsvFormatter(BaseFormatter[FoldSummary]):
    def format(self, data: FoldSummary) -> str:
        rows = [("fold", "best_epoch", "train_acc", "train_loss", "val_acc", "val_loss")]
        for f in data.folds:
            rows.append(
                (
                    f.fold,
                    f.best_epoch,
                    f"{f.train_acc:.6f}",
                    f"{f.train_loss:.6f}",
                    f"{f.val_acc:.6f}",
                    f"{f.val_loss:.6f}",
                )
            )
        return _tsv(rows)


class GanDiagnosticsTsvFormatter(BaseFormatter[Sequence[GanDiagnostics]]):
    def format(self, data: Sequence[GanDiagnostics]) -> str:
        rows = [("chunk", "round", "gen_nll", "mean_reward", "disc_accuracy", "unique_fraction")]
        for d in data:
            rows.append(
                (
                    d.chunk,
                    d.round,
                    f"{d.gen_nll:.6f}",
                    f"{d.mean_reward:.6f}",
                    f"{d.disc_accuracy:.6f}",
                    f"{d.unique_fraction:.6f}",
                )
            )
        return _tsv(rows)


class ProvenanceFormatter(BaseFormatter[RunReport]):
    """Flat ``key = value`` record of what produced a run."""

    def format(self, data: RunReport) -> str:
        p = data.provenance
        items = [
            ("version", p.version),
            ("seed", p.seed),
            ("config_hash", p.config_hash),
            ("corpus_sha256", p.corpus_sha256),
            ("stages", ",".join(data.stages)),
            ("test_accesses", data.test_accesses),
            ("positives", data.positives),
            ("negatives_before", data.negatives_before),
            ("negatives_after", data.negatives_after),
        ]
        return "".join(f"{k} = {v}\n" for k, v in items)


class ReportTextFormatter(BaseFormatter[RunReport]):
    """Terminal summary of a run."""

    def format(self, data: RunReport) -> str:
        s = data.summary
        lines = [
            f"{data.dataset} ({data.phase})",
            f"Stages: {' -> '.join(data.stages)}",
            f"Negatives: {data.negatives_before:,} -> {data.negatives_after:,} "
            f"(positives {data.positives:,})",
            f"Cross-validation over {len(s.folds)} folds: train acc {percent(s.avg_train_acc)}%, "
            f"val acc {percent(s.avg_val_acc)}% ({s.std_val_acc * 100:.2f})",
            f"Test accuracy: {percent(data.test.accuracy)}%",
        ]
        for row in data.test.rows:
            lines.append(
                f"  label {int(row.label)}: P {percent(row.precision)}  "
                f"R {percent(row.recall)}  F {percent(row.f_measure)}"
            )
        return "\n".join(lines) + "\n"
