"""Chunked SeqGAN oversampling of the minority (negative) class."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..config.models import GanSchedule, RolloutSettings
from ..corpus.dataset import dedup
from ..corpus.records import PAD_ID, EncodedLog, Label, Origin, ids_matrix
from ..errors import ArgumentError, PartialResultError
from ..rng import child_seed, substream
from .generator import sample_sequences
from .trainer import GanDiagnostics, SeqGan, train_seqgan

logger = logging.getLogger(__name__)


@dataclass
class OversampleResult:
    records: list[EncodedLog]
    models: list[SeqGan] = field(default_factory=list)
    diagnostics: list[GanDiagnostics] = field(default_factory=list)
    generated: int = 0
    duplicates: int = 0

    @property
    def duplicate_fraction(self) -> float:
        """Share of freshly generated samples rejected as duplicates or empty."""
        return self.duplicates / self.generated if self.generated else 0.0


def canonicalize(ids: np.ndarray) -> tuple[int, ...] | None:
    """
    Force every position after the first PAD to PAD.

    Returns:
        The canonical id tuple, or None for a sequence with no tokens
    """
    ids = np.asarray(ids, dtype=np.int64).copy()
    pads = np.flatnonzero(ids == PAD_ID)
    if len(pads):
        ids[pads[0] :] = PAD_ID
    if ids[0] == PAD_ID:
        return None
    return tuple(int(i) for i in ids)


def chunk_records(
    records: list[EncodedLog], chunk_count: int, rng: np.random.Generator
) -> list[list[EncodedLog]]:
    """Shuffle, then cut into ``chunk_count`` contiguous chunks whose sizes differ by at most one."""
    if chunk_count < 1:
        raise ArgumentError(f"Chunk count must be at least 1, got {chunk_count}")
    if chunk_count > len(records):
        logger.warning(f"Chunk count {chunk_count} exceeds {len(records)} records, clamping")
        chunk_count = len(records)
    order = rng.permutation(len(records))
    return [[records[i] for i in part] for part in np.array_split(order, chunk_count)]


def oversample(
    neg_records: list[EncodedLog],
    chunk_count: int,
    target_count: int,
    vocab_size: int,
    schedule: GanSchedule,
    rollout_settings: RolloutSettings,
    seed: int,
    budget_factor: float = 20.0,
) -> OversampleResult:
    """
    Grow the negative set to exactly ``target_count`` records.

    One SeqGAN is trained per chunk of negatives; the trained generators are then
    sampled round-robin. Generated sequences are concatenated after the originals
    and deduplicated until the target is met.

    Args:
        neg_records: Real negative records, all of length L
        chunk_count: Number of chunks, each with its own SeqGAN
        target_count: Final number of negatives
        vocab_size: V of the shared vocabulary
        schedule: GAN training schedule
        rollout_settings: Rollout count N
        seed: Seed of the oversampling stream
        budget_factor: Generated samples allowed per missing record

    Raises:
        PartialResultError: The generation budget ran out before the target; carries
            the records achieved so far
    """
    if not neg_records:
        raise ArgumentError("Nothing to oversample")
    if target_count < len(neg_records):
        raise ArgumentError(f"Target {target_count} is below the {len(neg_records)} existing negatives")
    if target_count == len(neg_records):
        logger.info("Negatives already at target, no generation needed")
        return OversampleResult(list(neg_records))

    chunks = chunk_records(list(neg_records), chunk_count, substream(seed, "chunks"))
    models = []
    for i, chunk in enumerate(chunks):
        chunk_seed = child_seed(substream(seed, "gan", "chunk", i))
        logger.info(f"Training SeqGAN on chunk {i} ({len(chunk)} negatives)")
        models.append(
            train_seqgan(ids_matrix(chunk), vocab_size, schedule, rollout_settings, chunk_seed, i)
        )
    diagnostics = [row for model in models for row in model.diagnostics]

    pool = dedup(neg_records)
    seen = {r.ids for r in pool}
    missing = target_count - len(pool)
    budget = math.ceil(budget_factor * missing)
    seq_len = neg_records[0].length
    sample_rng = substream(seed, "sample")
    generated = duplicates = 0
    turn = 0
    while len(pool) < target_count and generated < budget:
        model = models[turn % len(models)]
        turn += 1
        n = min(schedule.batch_size, budget - generated)
        for row in sample_sequences(model.generator, n, seq_len, sample_rng):
            generated += 1
            ids = canonicalize(row)
            if ids is None or ids in seen:
                duplicates += 1
                continue
            seen.add(ids)
            pool.append(EncodedLog(ids, Label.NEGATIVE, Origin.GENERATED))
            if len(pool) == target_count:
                break

    result = OversampleResult(pool[:target_count], models, diagnostics, generated, duplicates)
    logger.info(
        f"Oversampled {len(neg_records)} -> {len(result.records)} negatives from {generated} samples "
        f"({result.duplicate_fraction:.1%} rejected)"
    )
    if len(pool) < target_count:
        raise PartialResultError(
            f"Generation budget of {budget} samples exhausted at {len(pool)}/{target_count} negatives",
            records=result.records,
            diagnostics=diagnostics,
        )
    return result
