"""SeqGAN oversampler: generator, discriminator, rollout rewards and training loops."""

from .discriminator import (
    DiscriminatorParams,
    DiscriminatorTrace,
    disc_accuracy,
    disc_backward,
    disc_forward,
    disc_forward_batch,
    disc_loss,
    train_discriminator,
)
from .generator import (
    BOS_ID,
    GeneratorParams,
    GeneratorTrace,
    accumulate_log_prob_grad,
    generator_forward,
    nll_backward,
    policy_gradient_step,
    pretrain_generator,
    sample_sequence,
    sample_sequences,
    sequence_log_prob,
    teacher_forcing_nll,
    token_log_probs,
)
from .oversample import OversampleResult, canonicalize, chunk_records, oversample
from .rollout import (
    MAX_COMPLETIONS,
    RolloutConfig,
    completion_probabilities,
    exhaustive_policy_gradient,
    exhaustive_reward,
    expected_reward,
    mc_reward,
    rollout_rewards,
    rollout_scores,
)
from .trainer import GanDiagnostics, SeqGan, adversarial_train, train_seqgan, unique_fraction

__all__ = [
    "BOS_ID",
    "GeneratorParams",
    "GeneratorTrace",
    "generator_forward",
    "token_log_probs",
    "sequence_log_prob",
    "teacher_forcing_nll",
    "nll_backward",
    "accumulate_log_prob_grad",
    "sample_sequences",
    "sample_sequence",
    "policy_gradient_step",
    "pretrain_generator",
    "DiscriminatorParams",
    "DiscriminatorTrace",
    "disc_forward",
    "disc_forward_batch",
    "disc_backward",
    "disc_loss",
    "disc_accuracy",
    "train_discriminator",
    "MAX_COMPLETIONS",
    "RolloutConfig",
    "rollout_scores",
    "mc_reward",
    "rollout_rewards",
    "completion_probabilities",
    "exhaustive_reward",
    "expected_reward",
    "exhaustive_policy_gradient",
    "GanDiagnostics",
    "SeqGan",
    "unique_fraction",
    "adversarial_train",
    "train_seqgan",
    "OversampleResult",
    "canonicalize",
    "chunk_records",
    "oversample",
]
