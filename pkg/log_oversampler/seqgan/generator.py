"""GRU generator G_theta: embedding, recurrent state, projection onto the vocabulary."""

import copy
import logging
from dataclasses import dataclass

import numpy as np

from ..config.models import GanSchedule
from ..corpus.records import PAD_ID
from ..errors import ArgumentError, NumericError, ShapeError
from ..models.gru import GruParams, GruTrace, bptt, cell_forward, seq_forward
from ..nn import DEFAULT_DTYPE, Adam, Matrix, ParamTensor, affine, log_softmax, softmax

logger = logging.getLogger(__name__)

# generation starts from PAD as the step-0 input
BOS_ID = PAD_ID


@dataclass
class GeneratorParams:
    embedding: ParamTensor
    gru: GruParams
    proj_W: ParamTensor
    proj_b: ParamTensor

    def __post_init__(self):
        V, E = self.embedding.shape
        if self.gru.input_dim != E:
            raise ShapeError("Generator embedding width differs from GRU input", self.embedding.shape, self.gru.W_r.shape)
        if self.proj_W.shape != (self.gru.hidden_dim, V) or self.proj_b.shape != (1, V):
            raise ShapeError("Generator projection must map H to V", self.proj_W.shape, (self.gru.hidden_dim, V))

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.gru.hidden_dim

    def tensors(self, prefix: str = "") -> dict[str, ParamTensor]:
        return {
            f"{prefix}embedding": self.embedding,
            **self.gru.tensors(f"{prefix}gru."),
            f"{prefix}proj_W": self.proj_W,
            f"{prefix}proj_b": self.proj_b,
        }

    def copy(self) -> "GeneratorParams":
        return copy.deepcopy(self)

    @classmethod
    def init(
        cls,
        vocab_size: int,
        embedding_dim: int,
        hidden_dim: int,
        rng: np.random.Generator,
        dtype=DEFAULT_DTYPE,
    ) -> "GeneratorParams":
        return cls(
            ParamTensor(
                rng.normal(0.0, 0.1, size=(vocab_size, embedding_dim)).astype(dtype),
                name="embedding",
            ),
            GruParams.init(embedding_dim, hidden_dim, rng, dtype),
            ParamTensor.glorot(hidden_dim, vocab_size, rng, "proj_W", dtype),
            ParamTensor.zeros(1, vocab_size, "proj_b", dtype),
        )

    @classmethod
    def zeros(
        cls, vocab_size: int, embedding_dim: int, hidden_dim: int, dtype=DEFAULT_DTYPE
    ) -> "GeneratorParams":
        return cls(
            ParamTensor.zeros(vocab_size, embedding_dim, "embedding", dtype),
            GruParams.zeros(embedding_dim, hidden_dim, dtype),
            ParamTensor.zeros(hidden_dim, vocab_size, "proj_W", dtype),
            ParamTensor.zeros(1, vocab_size, "proj_b", dtype),
        )


@dataclass
class GeneratorTrace:
    inputs: np.ndarray  # [batch x T] token fed at each step
    targets: np.ndarray  # [batch x T]
    gru_trace: GruTrace
    probs: list[Matrix]


def _shift_inputs(seqs: np.ndarray) -> np.ndarray:
    inputs = np.empty_like(seqs)
    inputs[:, 0] = BOS_ID
    inputs[:, 1:] = seqs[:, :-1]
    return inputs


def _check_tokens(seqs: np.ndarray, vocab_size: int) -> np.ndarray:
    seqs = np.asarray(seqs, dtype=np.int64)
    if seqs.ndim != 2 or seqs.shape[1] == 0:
        raise ShapeError("Token batches must be [batch x T] with T >= 1", seqs.shape)
    if seqs.min(initial=0) < 0 or seqs.max(initial=0) >= vocab_size:
        raise ArgumentError(f"Token ids must lie in [0, {vocab_size})")
    return seqs


def generator_forward(gen: GeneratorParams, seqs: np.ndarray) -> GeneratorTrace:
    """Teacher-forced pass computing G(y_t | y_<t) for every position."""
    seqs = _check_tokens(seqs, gen.vocab_size)
    inputs = _shift_inputs(seqs)
    xs = gen.embedding.value[inputs.T]  # [T x batch x E]
    _, trace = seq_forward(xs, gen.gru)
    probs = [
        softmax(affine(step.h, gen.proj_W.value, gen.proj_b.value)) for step in trace.steps
    ]
    return GeneratorTrace(inputs, seqs, trace, probs)


def token_log_probs(gen: GeneratorParams, seqs: np.ndarray) -> np.ndarray:
    """log G(y_t | y_<t) as a [batch x T] array."""
    seqs = _check_tokens(seqs, gen.vocab_size)
    inputs = _shift_inputs(seqs)
    _, trace = seq_forward(gen.embedding.value[inputs.T], gen.gru)
    rows = np.arange(seqs.shape[0])
    out = np.empty(seqs.shape, dtype=np.float64)
    for t, step in enumerate(trace.steps):
        logp = log_softmax(affine(step.h, gen.proj_W.value, gen.proj_b.value))
        out[:, t] = logp[rows, seqs[:, t]]
    return out


def sequence_log_prob(gen: GeneratorParams, seqs: np.ndarray) -> np.ndarray:
    """Log-probability of each whole sequence, shape [batch]."""
    return token_log_probs(gen, seqs).sum(axis=1)


def teacher_forcing_nll(gen: GeneratorParams, seqs: np.ndarray) -> float:
    """Mean negative log-likelihood per token."""
    return float(-token_log_probs(gen, seqs).mean())


def accumulate_log_prob_grad(
    gen: GeneratorParams, trace: GeneratorTrace, weights: np.ndarray
) -> None:
    """
    Accumulate the gradient of ``sum_{b,t} weights[b, t] * log G(y_bt | y_b<t)``.

    With weights -1/(batch*T) this is the gradient of the mean NLL; with weights
    Q/(batch*T) it is the policy gradient.
    """
    batch, T = trace.targets.shape
    if weights.shape != (batch, T):
        raise ShapeError("Weights must match the token batch", weights.shape, (batch, T))
    rows = np.arange(batch)
    dhs = []
    for t, step in enumerate(trace.gru_trace.steps):
        dlogits = -trace.probs[t] * weights[:, t, None]
        dlogits[rows, trace.targets[:, t]] += weights[:, t]
        gen.proj_W.accumulate(step.h.T @ dlogits)
        gen.proj_b.accumulate(dlogits.sum(axis=0, keepdims=True))
        dhs.append(dlogits @ gen.proj_W.value.T)
    zero = np.zeros_like(trace.gru_trace.steps[-1].h)
    dxs, _ = bptt(trace.gru_trace, zero, gen.gru, dL_dh_steps=dhs)

    d_embedding = np.zeros_like(gen.embedding.value)
    for t, dx in enumerate(dxs):
        np.add.at(d_embedding, trace.inputs[:, t], dx)
    gen.embedding.accumulate(d_embedding)


def nll_backward(gen: GeneratorParams, seqs: np.ndarray) -> float:
    """Accumulate the gradient of the teacher-forced mean NLL; return the NLL."""
    trace = generator_forward(gen, seqs)
    batch, T = trace.targets.shape
    accumulate_log_prob_grad(gen, trace, np.full((batch, T), -1.0 / (batch * T)))
    rows = np.arange(batch)
    logp = [np.log(p[rows, trace.targets[:, t]] + 1e-12) for t, p in enumerate(trace.probs)]
    return float(-np.mean(logp))


def sample_sequences(
    gen: GeneratorParams,
    n: int,
    T: int,
    rng: np.random.Generator,
    prefix: np.ndarray | None = None,
) -> np.ndarray:
    """
    Sample ``n`` sequences of length ``T`` autoregressively.

    Each token is drawn from softmax(proj(h_t)). A prefix (shape [t] or [n x t]) is
    fed unchanged and only the remaining positions are sampled.
    """
    if T < 1:
        raise ArgumentError(f"Sequence length must be positive, got {T}")
    if n < 1:
        raise ArgumentError(f"Sample count must be positive, got {n}")
    if prefix is None:
        prefix = np.zeros((n, 0), dtype=np.int64)
    prefix = np.asarray(prefix, dtype=np.int64)
    if prefix.ndim == 1:
        prefix = np.broadcast_to(prefix, (n, len(prefix)))
    if prefix.shape[0] != n or prefix.shape[1] > T:
        raise ArgumentError(f"Prefix of shape {prefix.shape} does not fit {n} sequences of length {T}")

    out = np.zeros((n, T), dtype=np.int64)
    t0 = prefix.shape[1]
    out[:, :t0] = prefix
    if t0 == T:
        return out

    h = np.zeros((n, gen.hidden_dim), dtype=gen.gru.U_r.value.dtype)
    prev = np.full(n, BOS_ID, dtype=np.int64)
    for t in range(T):
        h, _ = cell_forward(gen.embedding.value[prev], h, gen.gru)
        if t < t0:
            prev = out[:, t]
            continue
        probs = softmax(affine(h, gen.proj_W.value, gen.proj_b.value)).astype(np.float64)
        cdf = np.cumsum(probs, axis=1)
        u = rng.random((n, 1)) * cdf[:, -1:]
        token = np.minimum((cdf < u).sum(axis=1), gen.vocab_size - 1)
        out[:, t] = token
        prev = token
    return out


def sample_sequence(
    gen: GeneratorParams, T: int, rng: np.random.Generator, prefix: np.ndarray | None = None
) -> np.ndarray:
    """Sample one sequence of length ``T``."""
    return sample_sequences(gen, 1, T, rng, prefix)[0]


def policy_gradient_step(
    gen: GeneratorParams, seqs: np.ndarray, rewards: np.ndarray, alpha: float
) -> float:
    """
    Ascend the policy-gradient objective once: theta <- theta + alpha * grad J.

    grad J = 1/T sum_t mean_batch[grad log G(y_t | y_<t) * Q_t]. A non-finite
    gradient aborts the update.

    Returns:
        Global norm of the applied gradient
    """
    seqs = _check_tokens(seqs, gen.vocab_size)
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.shape != seqs.shape:
        raise ShapeError("Rewards must have one value per token", rewards.shape, seqs.shape)
    if not np.all(np.isfinite(rewards)):
        raise NumericError("Non-finite rewards, policy update aborted")
    if alpha <= 0:
        raise ArgumentError(f"Policy learning rate must be positive, got {alpha}")

    tensors = gen.tensors()
    for p in tensors.values():
        p.zero_grad()
    trace = generator_forward(gen, seqs)
    batch, T = seqs.shape
    accumulate_log_prob_grad(gen, trace, rewards / (batch * T))

    norm = float(np.sqrt(sum(float(np.sum(np.square(p.grad, dtype=np.float64))) for p in tensors.values())))
    if not np.isfinite(norm):
        for p in tensors.values():
            p.zero_grad()
        raise NumericError("Non-finite policy gradient, update aborted")
    for p in tensors.values():
        p.value = (p.value + alpha * p.grad).astype(p.value.dtype, copy=False)
        p.zero_grad()
    return norm


def holdout_split(
    seqs: np.ndarray, fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    order = rng.permutation(len(seqs))
    n_holdout = int(len(seqs) * fraction)
    if n_holdout == 0 or n_holdout == len(seqs):
        return seqs[order], seqs[order]
    return seqs[order[n_holdout:]], seqs[order[:n_holdout]]


def pretrain_generator(
    gen: GeneratorParams,
    real: np.ndarray,
    schedule: GanSchedule,
    rng: np.random.Generator,
) -> tuple[GeneratorParams, list[float]]:
    """
    Maximum-likelihood pretraining with teacher forcing and ADAM.

    Returns:
        Parameters of the epoch with the lowest held-out NLL, and the held-out NLL
        after every epoch
    """
    real = _check_tokens(real, gen.vocab_size)
    if len(real) == 0:
        raise ArgumentError("Cannot pretrain the generator on an empty corpus")
    train, holdout = holdout_split(real, schedule.holdout_fraction, rng)
    optimizer = Adam(gen.tensors(), **schedule.optimizer.model_dump())

    history = []
    best_nll = np.inf
    best = gen.copy()
    for epoch in range(1, schedule.pretrain_gen_epochs + 1):
        order = rng.permutation(len(train))
        for start in range(0, len(order), schedule.batch_size):
            optimizer.zero_grad()
            nll_backward(gen, train[order[start : start + schedule.batch_size]])
            optimizer.step()
        nll = teacher_forcing_nll(gen, holdout)
        history.append(nll)
        logger.debug(f"Generator pretrain epoch {epoch}: held-out NLL {nll:.4f}")
        if nll < best_nll:
            best_nll = nll
            best = gen.copy()
    optimizer.zero_grad()
    return best, history
