"""End-to-end run: ingest, oversample, autoencoder features, split, cross-validation, test."""

import hashlib
import logging
import os
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, params_section, restore_params, save_checkpoint
from .collectors import (
    FoldStats,
    FoldSummary,
    FoldSummaryCollector,
    MetricsReport,
    PerLabelMetricsCollector,
    Provenance,
    RunReport,
)
from .config import ClassifierConfig, PipelineConfig, dump_config
from .corpus import (
    EncodedLog,
    Label,
    LogRecord,
    Vocabulary,
    build_vocab,
    encode,
    label_counts,
    load_encoded,
    read_corpus,
    save_encoded,
    split,
    synth_corpus,
    write_corpus,
)
from .errors import ArgumentError, PartialResultError, StageError
from .formatters import (
    AblationTsvFormatter,
    FoldsTsvFormatter,
    GanDiagnosticsTsvFormatter,
    ProvenanceFormatter,
    ReportTsvFormatter,
)
from .models import (
    FeatureRecord,
    GruClassifier,
    dual_pipeline,
    feature_matrix,
    load_features,
    save_features,
    train_classifier,
)
from .rng import child_seed, substream
from .seqgan import OversampleResult, oversample

logger = logging.getLogger(__name__)

VOCAB_FILE = "vocab.tsv"
CORPUS_CACHE = "corpus.lbds"
OVERSAMPLED_CACHE = "oversampled.lbds"
FEATURES_CACHE = "features.lbft"
REPORT_FILE = "report.tsv"
FOLDS_FILE = "folds.tsv"
GAN_DIAGNOSTICS_FILE = "gan_diagnostics.tsv"
PROVENANCE_FILE = "run.txt"
CHECKPOINT_DIR = "checkpoints"
LOCK_FILE = ".lock"
ABLATION_PHASES = ("original", "oversampled")


@dataclass
class Ingested:
    dataset: str
    records: list[LogRecord]
    vocab: Vocabulary
    encoded: list[EncodedLog]
    digest: str


class GuardedSet:
    """Holds the test features and counts every read."""

    def __init__(self, records: list[FeatureRecord]):
        self._records = records
        self.accesses = 0

    def __len__(self) -> int:
        return len(self._records)

    def read(self) -> list[FeatureRecord]:
        self.accesses += 1
        if self.accesses > 1:
            logger.warning(f"Test set read {self.accesses} times")
        return self._records


@contextmanager
def stage(name: str, trace: list[str]) -> Iterator[None]:
    """Record ``name`` in the trace and wrap failures in StageError."""
    logger.info(f"Stage {name}: started")
    trace.append(name)
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error(f"Stage {name}: failed with {type(e).__name__}: {e}")
        raise StageError(name, e) from e
    logger.info(f"Stage {name}: done")


@contextmanager
def output_lock(out: Path) -> Iterator[None]:
    """Allow one run per output directory."""
    out.mkdir(parents=True, exist_ok=True)
    lock = out / LOCK_FILE
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        raise ArgumentError(f"Output directory {out} is in use (remove {lock} if stale)") from e
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def config_hash(config: PipelineConfig) -> str:
    """SHA-256 of the flat config, ignoring the output directory."""
    lines = [line for line in dump_config(config).splitlines() if not line.startswith("out =")]
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


def load_records(config: PipelineConfig) -> tuple[str, list[LogRecord], str]:
    """
    Read the configured corpus, or generate the synthetic one.

    Returns:
        (dataset name, records, SHA-256 of the corpus content)
    """
    path = config.corpus.path
    if path is not None:
        data = Path(path).read_bytes()
        return Path(path).stem, read_corpus(path), hashlib.sha256(data).hexdigest()

    c = config.corpus
    records = synth_corpus(
        c.synth_total,
        c.synth_negative_fraction,
        c.synth_templates,
        child_seed(substream(config.seed, "corpus")),
    )
    text = "".join(f"{int(r.label)}\t{r.text}\n" for r in records)
    return "synthetic", records, hashlib.sha256(text.encode("utf-8")).hexdigest()


def ingest(config: PipelineConfig) -> Ingested:
    dataset, records, digest = load_records(config)
    vocab = build_vocab(records, config.corpus.min_count)
    encoded = [encode(r, vocab, config.corpus.max_len) for r in records]
    counts = label_counts(encoded)
    logger.info(
        f"Ingested {len(encoded)} logs from {dataset}: {counts[Label.POSITIVE]} positive, "
        f"{counts[Label.NEGATIVE]} negative, vocabulary of {vocab.size}"
    )
    return Ingested(dataset, records, vocab, encoded, digest)


def balance(encoded: list[EncodedLog], vocab_size: int, config: PipelineConfig) -> OversampleResult:
    """Oversample the negatives to ``target_ratio`` times the positive count."""
    negatives = [r for r in encoded if r.label == Label.NEGATIVE]
    n_pos = len(encoded) - len(negatives)
    target = max(len(negatives), round(config.target_ratio * n_pos))
    logger.info(f"Oversampling {len(negatives)} negatives to {target} in {config.chunk_count} chunks")
    return oversample(
        negatives,
        config.chunk_count,
        target,
        vocab_size,
        config.gan,
        config.rollout,
        child_seed(substream(config.seed, "gan")),
        config.generation_budget_factor,
    )


def with_oversampled(encoded: list[EncodedLog], negatives: list[EncodedLog]) -> list[EncodedLog]:
    return [r for r in encoded if r.label == Label.POSITIVE] + negatives


def extract_features(encoded: list[EncodedLog], config: PipelineConfig):
    """Dual autoencoders over the positive and negative records."""
    pos = [r for r in encoded if r.label == Label.POSITIVE]
    neg = [r for r in encoded if r.label == Label.NEGATIVE]
    return dual_pipeline(
        pos,
        neg,
        config.ae,
        substream(config.seed, "ae", "pos"),
        substream(config.seed, "ae", "neg"),
        substream(config.seed, "ae", "mix"),
    )


def split_features(
    features: list[FeatureRecord], config: PipelineConfig
) -> tuple[list[FeatureRecord], GuardedSet]:
    """
    Split into the training pool (train plus validation parts) and the guarded test set.
    """
    spec = config.split.model_copy(
        update={"seed": child_seed(substream(config.seed, "split", config.split.seed))}
    )
    train, val, test = split(features, spec)
    return train + val, GuardedSet(test)


def stratified_folds(labels: np.ndarray, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """
    Partition record indices into ``k`` folds with each label spread evenly.

    Raises:
        ArgumentError: Fewer than ``k`` records of some label
    """
    if k < 2:
        raise ArgumentError(f"Cross-validation needs at least 2 folds, got {k}")
    parts: list[list[np.ndarray]] = [[] for _ in range(k)]
    for label in (Label.NEGATIVE, Label.POSITIVE):
        indices = np.flatnonzero(labels == label)
        if len(indices) < k:
            raise ArgumentError(f"Label {int(label)} has {len(indices)} records, fewer than {k} folds")
        for j, chunk in enumerate(np.array_split(rng.permutation(indices), k)):
            parts[j].append(chunk)
    return [np.sort(np.concatenate(p)) for p in parts]


def kfold_cv(
    features: np.ndarray,
    labels: np.ndarray,
    config: ClassifierConfig,
    seed: int,
) -> tuple[FoldSummary, GruClassifier]:
    """
    Stratified k-fold cross-validation of the GRU classifier.

    Each fold trains on the other folds with early stopping on itself. The final
    model is retrained on all records for the median best epoch count.

    Returns:
        (fold summary, final classifier)
    """
    labels = np.asarray(labels, dtype=np.int64)
    folds = stratified_folds(labels, config.folds, substream(seed, "cv", "folds"))
    stats = []
    for j, val_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(len(labels)), val_idx)
        logger.info(f"Fold {j + 1}/{len(folds)}: {len(train_idx)} train, {len(val_idx)} validation")
        _, history, best_epoch = train_classifier(
            features[train_idx],
            labels[train_idx],
            config,
            substream(seed, "cv", "fold", j),
            val_features=features[val_idx],
            val_labels=labels[val_idx],
        )
        best = history[best_epoch - 1]
        stats.append(FoldStats(j, best_epoch, best.train_acc, best.train_loss, best.val_acc, best.val_loss))

    summary = FoldSummaryCollector().collect(stats)
    logger.info(f"Retraining on {len(labels)} records for {summary.median_best_epoch} epochs")
    model, _, _ = train_classifier(
        features,
        labels,
        config,
        substream(seed, "cv", "final"),
        epochs=summary.median_best_epoch,
    )
    return summary, model


def evaluate(model: GruClassifier, test: GuardedSet) -> MetricsReport:
    features, labels = feature_matrix(test.read())
    predictions = model.predict(features)
    return PerLabelMetricsCollector().collect(list(zip(predictions.tolist(), labels.tolist())))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.debug(f"Wrote {path}")


def _write_oversampled(out: Path, result: OversampleResult, vocab_size: int, length: int) -> None:
    _write(out / GAN_DIAGNOSTICS_FILE, GanDiagnosticsTsvFormatter().format(result.diagnostics))
    for i, model in enumerate(result.models):
        save_checkpoint(
            out / CHECKPOINT_DIR / f"gan_chunk{i}.lbal",
            {
                "generator": params_section(model.generator.tensors()),
                "discriminator": params_section(model.discriminator.tensors()),
            },
        )
    save_encoded(result.records, vocab_size, length, out / OVERSAMPLED_CACHE)


def _write_features(out: Path, features: list[FeatureRecord], ae_params: dict) -> None:
    save_features(features, out / FEATURES_CACHE)
    save_checkpoint(
        out / CHECKPOINT_DIR / "ae.lbal",
        {side: params_section(params.tensors()) for side, params in ae_params.items()},
    )


def _write_classifier(out: Path, summary: FoldSummary, model: GruClassifier) -> None:
    _write(out / FOLDS_FILE, FoldsTsvFormatter().format(summary))
    save_checkpoint(out / CHECKPOINT_DIR / "classifier.lbal", {"classifier": params_section(model.tensors())})


def _write_report(out: Path, report: RunReport) -> None:
    _write(out / REPORT_FILE, ReportTsvFormatter().format(report))
    _write(out / PROVENANCE_FILE, ProvenanceFormatter().format(report))


def run_all(config: PipelineConfig) -> RunReport:
    """
    Run every stage in order and write the artifacts into ``config.out``.

    Raises:
        StageError: A stage failed; artifacts of the earlier stages stay on disk
    """
    out = Path(config.out)
    trace: list[str] = []
    with output_lock(out):
        with stage("ingest", trace):
            data = ingest(config)
            data.vocab.save(out / VOCAB_FILE)
            save_encoded(data.encoded, data.vocab.size, config.corpus.max_len, out / CORPUS_CACHE)
        counts = label_counts(data.encoded)
        encoded = data.encoded

        if config.oversample:
            with stage("oversample", trace):
                try:
                    result = balance(encoded, data.vocab.size, config)
                except PartialResultError as e:
                    _write(out / GAN_DIAGNOSTICS_FILE, GanDiagnosticsTsvFormatter().format(e.diagnostics))
                    raise
                _write_oversampled(out, result, data.vocab.size, config.corpus.max_len)
                encoded = with_oversampled(encoded, result.records)
        else:
            logger.info("Stage oversample: skipped")
            _write(out / GAN_DIAGNOSTICS_FILE, GanDiagnosticsTsvFormatter().format([]))
        n_negatives = label_counts(encoded)[Label.NEGATIVE]

        with stage("autoencoders", trace):
            features, ae_params = extract_features(encoded, config)
            _write_features(out, features, ae_params)

        with stage("split", trace):
            pool, test = split_features(features, config)

        with stage("cross_validation", trace):
            X, y = feature_matrix(pool)
            summary, model = kfold_cv(X, y, config.classifier, config.seed)
            _write_classifier(out, summary, model)

        with stage("test", trace):
            metrics = evaluate(model, test)

        report = RunReport(
            dataset=data.dataset,
            phase="oversampled" if config.oversample else "original",
            summary=summary,
            test=metrics,
            provenance=Provenance(config_hash(config), config.seed, data.digest, __version__),
            stages=trace,
            test_accesses=test.accesses,
            negatives_before=counts[Label.NEGATIVE],
            negatives_after=n_negatives,
            positives=counts[Label.POSITIVE],
        )
        _write_report(out, report)
    logger.info(f"Run complete, outputs in {out}")
    return report


def run_ablation(config: PipelineConfig) -> list[RunReport]:
    """
    Run the pipeline without and with oversampling on the same seed.

    Each phase writes its artifacts into a sub-directory of ``config.out`` named after
    the phase; the combined report goes to ``config.out/report.tsv``.
    """
    out = Path(config.out)
    reports = []
    with output_lock(out):
        for phase in ABLATION_PHASES:
            logger.info(f"Ablation phase {phase}")
            phase_config = config.model_copy(
                update={"out": out / phase, "oversample": phase == "oversampled"}
            )
            reports.append(run_all(phase_config))
        _write(out / REPORT_FILE, AblationTsvFormatter().format(reports))
    return reports


# Single-stage entry points used by the CLI; each reads the previous stage's artifacts.


def _require(path: Path) -> Path:
    if not path.exists():
        raise ArgumentError(f"Missing {path}; run the previous stage first")
    return path


def synth_stage(config: PipelineConfig, path: Path) -> list[LogRecord]:
    synthetic = config.corpus.model_copy(update={"path": None})
    _, records, _ = load_records(config.model_copy(update={"corpus": synthetic}))
    path.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(records, path)
    logger.info(f"Wrote {len(records)} synthetic logs to {path}")
    return records


def prepare_stage(config: PipelineConfig) -> Ingested:
    out = Path(config.out)
    with output_lock(out), stage("ingest", []):
        data = ingest(config)
        data.vocab.save(out / VOCAB_FILE)
        save_encoded(data.encoded, data.vocab.size, config.corpus.max_len, out / CORPUS_CACHE)
    return data


def oversample_stage(config: PipelineConfig) -> OversampleResult:
    out = Path(config.out)
    with output_lock(out), stage("oversample", []):
        encoded, vocab_size, length = load_encoded(_require(out / CORPUS_CACHE))
        result = balance(encoded, vocab_size, config)
        _write_oversampled(out, result, vocab_size, length)
    return result


def features_stage(config: PipelineConfig) -> list[FeatureRecord]:
    out = Path(config.out)
    with output_lock(out), stage("autoencoders", []):
        encoded, _, _ = load_encoded(_require(out / CORPUS_CACHE))
        if config.oversample:
            negatives, _, _ = load_encoded(_require(out / OVERSAMPLED_CACHE))
            encoded = with_oversampled(encoded, negatives)
        features, ae_params = extract_features(encoded, config)
        _write_features(out, features, ae_params)
    return features


def train_stage(config: PipelineConfig) -> FoldSummary:
    out = Path(config.out)
    with output_lock(out), stage("cross_validation", []):
        pool, _ = split_features(load_features(_require(out / FEATURES_CACHE)), config)
        X, y = feature_matrix(pool)
        summary, model = kfold_cv(X, y, config.classifier, config.seed)
        _write_classifier(out, summary, model)
    return summary


def _read_folds(path: Path) -> FoldSummary:
    lines = path.read_text(encoding="utf-8").splitlines()[1:]
    stats = []
    for line in lines:
        fold, best_epoch, *values = line.split("\t")
        stats.append(FoldStats(int(fold), int(best_epoch), *(float(v) for v in values)))
    return FoldSummaryCollector().collect(stats)


def evaluate_stage(config: PipelineConfig) -> RunReport:
    out = Path(config.out)
    trace = ["test"]
    with output_lock(out), stage("test", []):
        features = load_features(_require(out / FEATURES_CACHE))
        _, test = split_features(features, config)
        summary = _read_folds(_require(out / FOLDS_FILE))
        model = GruClassifier.init(config.classifier.hidden_dim, np.random.default_rng(0))
        sections = load_checkpoint(_require(out / CHECKPOINT_DIR / "classifier.lbal"))
        restore_params(model.tensors(), sections["classifier"])
        metrics = evaluate(model, test)

        dataset, _, digest = load_records(config)
        encoded, _, _ = load_encoded(_require(out / CORPUS_CACHE))
        counts = label_counts(encoded)
        n_negatives = counts[Label.NEGATIVE]
        if config.oversample:
            n_negatives = len(load_encoded(_require(out / OVERSAMPLED_CACHE))[0])
        report = RunReport(
            dataset=dataset,
            phase="oversampled" if config.oversample else "original",
            summary=summary,
            test=metrics,
            provenance=Provenance(config_hash(config), config.seed, digest, __version__),
            stages=trace,
            test_accesses=test.accesses,
            negatives_before=counts[Label.NEGATIVE],
            negatives_after=n_negatives,
            positives=counts[Label.POSITIVE],
        )
        _write_report(out, report)
    return report


__all__ = [
    "GuardedSet",
    "Ingested",
    "stage",
    "output_lock",
    "config_hash",
    "load_records",
    "ingest",
    "balance",
    "extract_features",
    "split_features",
    "stratified_folds",
    "kfold_cv",
    "evaluate",
    "run_all",
    "synth_stage",
    "prepare_stage",
    "oversample_stage",
    "features_stage",
    "train_stage",
    "evaluate_stage",
]
