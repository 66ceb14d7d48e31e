"""MLE pretraining followed by alternating policy-gradient and discriminator rounds."""

import logging
from dataclasses import dataclass

import numpy as np

from ..config.models import GanSchedule, RolloutSettings
from ..errors import ArgumentError, NumericError
from ..nn import Adam
from ..rng import substream
from .discriminator import DiscriminatorParams, disc_accuracy, train_discriminator
from .generator import (
    GeneratorParams,
    holdout_split,
    policy_gradient_step,
    pretrain_generator,
    sample_sequences,
    teacher_forcing_nll,
)
from .rollout import RolloutConfig, rollout_rewards

logger = logging.getLogger(__name__)


@dataclass
class GanDiagnostics:
    """One row of the adversarial training log."""

    chunk: int
    round: int
    gen_nll: float
    mean_reward: float
    disc_accuracy: float
    unique_fraction: float


@dataclass
class SeqGan:
    generator: GeneratorParams
    discriminator: DiscriminatorParams
    diagnostics: list[GanDiagnostics]
    pretrain_nll: list[float]


def unique_fraction(seqs: np.ndarray) -> float:
    """Share of distinct rows in a batch of sequences."""
    if len(seqs) == 0:
        return 0.0
    return len({row.tobytes() for row in np.ascontiguousarray(seqs)}) / len(seqs)


def adversarial_train(
    gen: GeneratorParams,
    disc: DiscriminatorParams,
    real: np.ndarray,
    schedule: GanSchedule,
    rollout: RolloutConfig,
    seed: int,
    chunk: int = 0,
) -> tuple[GeneratorParams, DiscriminatorParams, list[GanDiagnostics]]:
    """
    Alternate policy-gradient generator steps with discriminator passes.

    Stops after ``schedule.adversarial_rounds`` rounds or when the held-out NLL has
    not improved for ``schedule.patience`` rounds. The rollout policy is refreshed
    from the generator after every generator round.
    """
    rng = substream(seed, "adversarial")
    train, holdout = holdout_split(real, schedule.holdout_fraction, rng)
    T = real.shape[1]
    d_optimizer = Adam(disc.tensors(), **schedule.optimizer.model_dump())

    diagnostics: list[GanDiagnostics] = []
    best_nll = np.inf
    stale = 0
    for round_index in range(1, schedule.adversarial_rounds + 1):
        rewards = []
        uniques = []
        for g_step in range(schedule.g_steps_per_round):
            seqs = sample_sequences(gen, schedule.batch_size, T, rng)
            Q = rollout_rewards(seqs, rollout, disc, seed, key=(round_index, g_step))
            try:
                policy_gradient_step(gen, seqs, Q, schedule.policy_lr)
            except NumericError as e:
                logger.error(f"Chunk {chunk} round {round_index}: {e}")
                raise NumericError(f"Adversarial round {round_index} of chunk {chunk}: {e}") from e
            rewards.append(float(Q.mean()))
            uniques.append(unique_fraction(seqs))
        rollout.refresh(gen)

        for _ in range(schedule.d_steps_per_round):
            fake = sample_sequences(gen, len(train), T, rng)
            train_discriminator(disc, train, fake, schedule, rng, optimizer=d_optimizer)

        nll = teacher_forcing_nll(gen, holdout)
        accuracy = disc_accuracy(disc, holdout, sample_sequences(gen, len(holdout), T, rng))
        row = GanDiagnostics(
            chunk, round_index, nll, float(np.mean(rewards)), accuracy, float(np.mean(uniques))
        )
        diagnostics.append(row)
        logger.info(
            f"Chunk {chunk} round {round_index}: NLL {nll:.4f}, reward {row.mean_reward:.4f}, "
            f"disc acc {accuracy:.3f}, unique {row.unique_fraction:.3f}"
        )

        if nll < best_nll:
            best_nll, stale = nll, 0
        else:
            stale += 1
            if stale >= schedule.patience:
                logger.info(f"Chunk {chunk}: NLL stalled for {stale} rounds, stopping")
                break
    return gen, disc, diagnostics


def train_seqgan(
    real: np.ndarray,
    vocab_size: int,
    schedule: GanSchedule,
    rollout_settings: RolloutSettings,
    seed: int,
    chunk: int = 0,
) -> SeqGan:
    """
    Fit one generator/discriminator pair to a chunk of real sequences.

    Args:
        real: Token ids [n x T]
        vocab_size: V, shared with the rest of the corpus
        schedule: Epochs, rounds and layer sizes
        rollout_settings: Rollout count N
        seed: Seed of this chunk's random streams
        chunk: Index used in logs and diagnostics
    """
    real = np.asarray(real, dtype=np.int64)
    if real.ndim != 2 or len(real) == 0:
        raise ArgumentError("SeqGAN needs a non-empty [n x T] batch of sequences")
    T = real.shape[1]
    if T < max(schedule.disc_filter_widths):
        raise ArgumentError(f"Sequence length {T} is shorter than the widest filter")

    gen = GeneratorParams.init(
        vocab_size, schedule.gen_embedding_dim, schedule.gen_hidden_dim, substream(seed, "gen.init")
    )
    gen, pretrain_nll = pretrain_generator(gen, real, schedule, substream(seed, "gen.pretrain"))
    logger.info(f"Chunk {chunk}: generator pretrained, held-out NLL {min(pretrain_nll):.4f}")

    disc = DiscriminatorParams.init(
        vocab_size,
        schedule.disc_embedding_dim,
        schedule.disc_filter_widths,
        schedule.disc_filters,
        substream(seed, "disc.init"),
        keep_prob=schedule.disc_keep_prob,
    )
    rng = substream(seed, "disc.pretrain")
    fake = sample_sequences(gen, len(real), T, rng)
    train_discriminator(disc, real, fake, schedule, rng, epochs=schedule.pretrain_disc_epochs)

    rollout = RolloutConfig.from_generator(gen, rollout_settings.n_rollouts, T)
    gen, disc, diagnostics = adversarial_train(gen, disc, real, schedule, rollout, seed, chunk)
    return SeqGan(gen, disc, diagnostics, pretrain_nll)
