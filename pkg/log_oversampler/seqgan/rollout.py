"""Monte Carlo rewards for partial sequences, plus exact oracles for tiny vocabularies."""

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError, CapacityError
from ..rng import substream
from .discriminator import DiscriminatorParams, disc_forward, disc_forward_batch
from .generator import (
    GeneratorParams,
    accumulate_log_prob_grad,
    generator_forward,
    sample_sequences,
    sequence_log_prob,
    token_log_probs,
)

# exhaustive enumeration refuses to go past this many completions
MAX_COMPLETIONS = 100_000


@dataclass
class RolloutConfig:
    """
    Rollout policy G_beta and its sampling budget.

    ``rollout_params`` is a snapshot of the generator, refreshed after every
    generator round.
    """

    n_rollouts: int
    rollout_params: GeneratorParams
    seq_len: int

    def __post_init__(self):
        if self.n_rollouts < 1:
            raise ArgumentError(f"Rollout count must be positive, got {self.n_rollouts}")
        if self.seq_len < 1:
            raise ArgumentError(f"Sequence length must be positive, got {self.seq_len}")

    @classmethod
    def from_generator(cls, gen: GeneratorParams, n_rollouts: int, seq_len: int) -> "RolloutConfig":
        return cls(n_rollouts, gen.copy(), seq_len)

    def refresh(self, gen: GeneratorParams) -> None:
        self.rollout_params = gen.copy()


def _check_state(state: np.ndarray, seq_len: int, allow_empty: bool = False) -> np.ndarray:
    state = np.asarray(state, dtype=np.int64)
    if state.ndim != 1:
        raise ArgumentError("A state is a 1-D token prefix")
    low = 0 if allow_empty else 1
    if not low <= len(state) <= seq_len:
        raise ArgumentError(f"Prefix length {len(state)} outside [{low}, {seq_len}]")
    return state


def rollout_scores(
    state: np.ndarray,
    rollout: RolloutConfig,
    disc: DiscriminatorParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Discriminator scores of N completions of ``state``; a full sequence is scored once."""
    state = _check_state(state, rollout.seq_len)
    if len(state) == rollout.seq_len:
        return np.array([disc_forward(state, disc)])
    completions = sample_sequences(
        rollout.rollout_params, rollout.n_rollouts, rollout.seq_len, rng, prefix=state
    )
    scores, _ = disc_forward_batch(completions, disc)
    return scores.astype(np.float64)


def mc_reward(
    state: np.ndarray,
    rollout: RolloutConfig,
    disc: DiscriminatorParams,
    rng: np.random.Generator,
) -> float:
    """
    Action value of the last token of ``state``.

    For t < T it averages D over N rollouts from G_beta; for t == T it is D of the
    sequence itself and no rollout happens.
    """
    return float(np.mean(rollout_scores(state, rollout, disc, rng)))


def rollout_rewards(
    seqs: np.ndarray,
    rollout: RolloutConfig,
    disc: DiscriminatorParams,
    seed: int,
    key: tuple[int, ...] = (),
) -> np.ndarray:
    """
    Rewards Q[b, t] for every prefix of every sequence in a batch.

    The random stream of position t is derived from (seed, key, t), so the result
    does not depend on how many positions were evaluated before.
    """
    seqs = np.asarray(seqs, dtype=np.int64)
    batch, T = seqs.shape
    if T != rollout.seq_len:
        raise ArgumentError(f"Sequences have length {T}, rollouts expect {rollout.seq_len}")
    N = rollout.n_rollouts
    rewards = np.empty((batch, T), dtype=np.float64)
    for t in range(1, T):
        rng = substream(seed, "rollout", *key, t)
        prefixes = np.repeat(seqs[:, :t], N, axis=0)
        completions = sample_sequences(rollout.rollout_params, batch * N, T, rng, prefix=prefixes)
        scores, _ = disc_forward_batch(completions, disc)
        rewards[:, t - 1] = scores.reshape(batch, N).mean(axis=1)
    final, _ = disc_forward_batch(seqs, disc)
    rewards[:, T - 1] = final
    return rewards


def completion_probabilities(
    state: np.ndarray, gen: GeneratorParams, seq_len: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Every completion of ``state`` to length ``seq_len`` with its probability under ``gen``.

    Raises:
        CapacityError: More than MAX_COMPLETIONS completions
    """
    state = _check_state(state, seq_len, allow_empty=True)
    rest = seq_len - len(state)
    V = gen.vocab_size
    if V**rest > MAX_COMPLETIONS:
        raise CapacityError(f"{V}^{rest} completions exceed the enumeration limit {MAX_COMPLETIONS}")
    if rest == 0:
        return state[None, :], np.ones(1)
    tails = np.array(list(itertools.product(range(V), repeat=rest)), dtype=np.int64)
    seqs = np.concatenate([np.broadcast_to(state, (len(tails), len(state))), tails], axis=1)
    logp = token_log_probs(gen, seqs)[:, len(state) :].sum(axis=1)
    return seqs, np.exp(logp)


def exhaustive_reward(
    state: np.ndarray, gen: GeneratorParams, disc: DiscriminatorParams, seq_len: int
) -> float:
    """Exact expectation of D over all completions of ``state`` drawn from ``gen``."""
    seqs, probs = completion_probabilities(state, gen, seq_len)
    scores, _ = disc_forward_batch(seqs, disc)
    return float(np.sum(probs * scores))


def expected_reward(gen: GeneratorParams, disc: DiscriminatorParams, seq_len: int) -> float:
    """J(theta) = E_{Y ~ G}[D(Y)], enumerated exactly."""
    return exhaustive_reward(np.zeros(0, dtype=np.int64), gen, disc, seq_len)


def exhaustive_policy_gradient(
    gen: GeneratorParams, disc: DiscriminatorParams, seq_len: int
) -> dict[str, np.ndarray]:
    """
    Exact gradient of ``expected_reward`` w.r.t. every generator tensor.

    Uses grad J = sum_Y P(Y) D(Y) sum_t grad log G(y_t | y_<t). The gradients are
    also left accumulated in the generator's tensors.
    """
    if gen.vocab_size**seq_len > MAX_COMPLETIONS:
        raise CapacityError(
            f"{gen.vocab_size}^{seq_len} sequences exceed the enumeration limit {MAX_COMPLETIONS}"
        )
    seqs = np.array(list(itertools.product(range(gen.vocab_size), repeat=seq_len)), dtype=np.int64)
    probs = np.exp(sequence_log_prob(gen, seqs))
    scores, _ = disc_forward_batch(seqs, disc)
    weights = np.repeat((probs * scores)[:, None], seq_len, axis=1)

    tensors = gen.tensors()
    for p in tensors.values():
        p.zero_grad()
    accumulate_log_prob_grad(gen, generator_forward(gen, seqs), weights)
    return {name: p.grad.copy() for name, p in tensors.items()}
