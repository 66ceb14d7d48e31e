"""Convolutional discriminator D_phi scoring whole token sequences."""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..config.models import GanSchedule
from ..errors import ArgumentError, ShapeError
from ..nn import (
    DEFAULT_DTYPE,
    Adam,
    Matrix,
    ParamTensor,
    binary_cross_entropy,
    dropout_mask,
    relu,
    sigmoid,
)

logger = logging.getLogger(__name__)


@dataclass
class DiscriminatorParams:
    """
    Token embedding, one bank of filters per window width, max-over-time pooling
    and a logistic head on the concatenated pooled features.
    """

    embedding: ParamTensor
    filters: dict[int, ParamTensor]
    filter_biases: dict[int, ParamTensor]
    head_W: ParamTensor
    head_b: ParamTensor
    keep_prob: float = 1.0

    def __post_init__(self):
        if not self.filters or set(self.filters) != set(self.filter_biases):
            raise ArgumentError("Discriminator needs matching filters and biases per width")
        E = self.embedding.shape[1]
        n_features = 0
        for width, W in self.filters.items():
            if W.shape[0] != width * E:
                raise ShapeError(f"Filter of width {width} must have {width * E} rows", W.shape)
            n_features += W.shape[1]
        if self.head_W.shape != (n_features, 1):
            raise ShapeError("Discriminator head must map pooled features to one logit", self.head_W.shape)

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    @property
    def widths(self) -> list[int]:
        return sorted(self.filters)

    def tensors(self, prefix: str = "") -> dict[str, ParamTensor]:
        out = {f"{prefix}embedding": self.embedding}
        for width in self.widths:
            out[f"{prefix}filter{width}_W"] = self.filters[width]
            out[f"{prefix}filter{width}_b"] = self.filter_biases[width]
        out[f"{prefix}head_W"] = self.head_W
        out[f"{prefix}head_b"] = self.head_b
        return out

    @classmethod
    def init(
        cls,
        vocab_size: int,
        embedding_dim: int,
        widths: tuple[int, ...],
        n_filters: int,
        rng: np.random.Generator,
        keep_prob: float = 1.0,
        dtype=DEFAULT_DTYPE,
    ) -> "DiscriminatorParams":
        embedding = ParamTensor(
            rng.normal(0.0, 0.1, size=(vocab_size, embedding_dim)).astype(dtype), name="embedding"
        )
        filters = {
            w: ParamTensor.glorot(w * embedding_dim, n_filters, rng, f"filter{w}_W", dtype)
            for w in widths
        }
        biases = {
            w: ParamTensor(np.full((1, n_filters), 0.1, dtype=dtype), name=f"filter{w}_b")
            for w in widths
        }
        head_W = ParamTensor.glorot(n_filters * len(widths), 1, rng, "head_W", dtype)
        head_b = ParamTensor.zeros(1, 1, "head_b", dtype)
        return cls(embedding, filters, biases, head_W, head_b, keep_prob)

    @classmethod
    def zeros(
        cls,
        vocab_size: int,
        embedding_dim: int,
        widths: tuple[int, ...],
        n_filters: int,
        dtype=DEFAULT_DTYPE,
    ) -> "DiscriminatorParams":
        return cls(
            ParamTensor.zeros(vocab_size, embedding_dim, "embedding", dtype),
            {w: ParamTensor.zeros(w * embedding_dim, n_filters, f"filter{w}_W", dtype) for w in widths},
            {w: ParamTensor.zeros(1, n_filters, f"filter{w}_b", dtype) for w in widths},
            ParamTensor.zeros(n_filters * len(widths), 1, "head_W", dtype),
            ParamTensor.zeros(1, 1, "head_b", dtype),
        )


@dataclass
class _ConvCache:
    windows: np.ndarray  # [batch x positions x width*E]
    pre: np.ndarray  # [batch x positions x F]
    argmax: np.ndarray  # [batch x F]


@dataclass
class DiscriminatorTrace:
    seqs: np.ndarray
    convs: dict[int, _ConvCache] = field(default_factory=dict)
    features: Matrix | None = None
    mask: Matrix | None = None
    probs: np.ndarray | None = None


def _check_sequences(seqs: np.ndarray, disc: DiscriminatorParams) -> np.ndarray:
    seqs = np.asarray(seqs, dtype=np.int64)
    if seqs.ndim != 2:
        raise ShapeError("Discriminator input must be [batch x T]", seqs.shape)
    if seqs.size and (seqs.min() < 0 or seqs.max() >= disc.vocab_size):
        raise ArgumentError(f"Token ids must lie in [0, {disc.vocab_size})")
    if seqs.shape[1] < max(disc.widths):
        raise ArgumentError(
            f"Sequences of length {seqs.shape[1]} are shorter than filter width {max(disc.widths)}"
        )
    return seqs


def disc_forward_batch(
    seqs: np.ndarray,
    disc: DiscriminatorParams,
    keep_prob: float = 1.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, DiscriminatorTrace]:
    """
    Probability that each sequence is real.

    Args:
        seqs: Token ids [batch x T]
        disc: Discriminator weights
        keep_prob: Dropout keep probability on the pooled features; 1 at inference
        rng: Required when keep_prob < 1

    Returns:
        Probabilities [batch] and the trace for ``disc_backward``
    """
    seqs = _check_sequences(seqs, disc)
    batch, T = seqs.shape
    emb = disc.embedding.value[seqs]  # [batch x T x E]
    E = emb.shape[2]
    trace = DiscriminatorTrace(seqs)

    pooled = []
    for width in disc.widths:
        positions = T - width + 1
        windows = np.stack(
            [emb[:, i : i + width, :].reshape(batch, width * E) for i in range(positions)], axis=1
        )
        pre = windows @ disc.filters[width].value + disc.filter_biases[width].value
        act = relu(pre)
        argmax = act.argmax(axis=1)
        pooled.append(np.take_along_axis(act, argmax[:, None, :], axis=1)[:, 0, :])
        trace.convs[width] = _ConvCache(windows, pre, argmax)
    features = np.concatenate(pooled, axis=1)

    mask = None
    if keep_prob < 1.0:
        if rng is None:
            raise ArgumentError("Dropout requires a random generator")
        mask = dropout_mask(features.shape, keep_prob, rng)
        features = features * mask
    logits = features @ disc.head_W.value + disc.head_b.value
    probs = sigmoid(logits)[:, 0]
    trace.features, trace.mask, trace.probs = features, mask, probs
    return probs, trace


def disc_forward(seq: np.ndarray, disc: DiscriminatorParams) -> float:
    """Probability that a single sequence is real."""
    probs, _ = disc_forward_batch(np.asarray(seq)[None, :], disc)
    return float(probs[0])


def disc_loss(seqs: np.ndarray, labels: np.ndarray, disc: DiscriminatorParams) -> float:
    """Binary cross-entropy without dropout."""
    probs, _ = disc_forward_batch(seqs, disc)
    return binary_cross_entropy(probs, labels)


def disc_backward(
    trace: DiscriminatorTrace, labels: np.ndarray, disc: DiscriminatorParams
) -> float:
    """
    Accumulate gradients of the mean binary cross-entropy.

    Returns:
        The loss
    """
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != trace.probs.shape:
        raise ShapeError("One label per sequence expected", labels.shape, trace.probs.shape)
    batch, T = trace.seqs.shape
    loss = binary_cross_entropy(trace.probs, labels)

    dlogits = ((trace.probs - labels) / batch)[:, None]
    disc.head_W.accumulate(trace.features.T @ dlogits)
    disc.head_b.accumulate(dlogits.sum(axis=0, keepdims=True))
    dfeatures = dlogits @ disc.head_W.value.T
    if trace.mask is not None:
        dfeatures = dfeatures * trace.mask

    E = disc.embedding.shape[1]
    demb = np.zeros((batch, T, E), dtype=np.float64)
    offset = 0
    for width in disc.widths:
        cache = trace.convs[width]
        F = cache.pre.shape[2]
        dpooled = dfeatures[:, offset : offset + F]
        offset += F

        dact = np.zeros_like(cache.pre, dtype=np.float64)
        np.put_along_axis(dact, cache.argmax[:, None, :], dpooled[:, None, :], axis=1)
        dpre = dact * (cache.pre > 0)
        positions = cache.pre.shape[1]
        disc.filters[width].accumulate(
            cache.windows.reshape(-1, width * E).T @ dpre.reshape(-1, F)
        )
        disc.filter_biases[width].accumulate(dpre.sum(axis=(0, 1))[None, :])
        dwindows = (dpre @ disc.filters[width].value.T).reshape(batch, positions, width, E)
        for i in range(positions):
            demb[:, i : i + width, :] += dwindows[:, i]

    d_embedding = np.zeros_like(disc.embedding.value, dtype=np.float64)
    np.add.at(d_embedding, trace.seqs, demb)
    disc.embedding.accumulate(d_embedding)
    return loss


def disc_accuracy(disc: DiscriminatorParams, real: np.ndarray, fake: np.ndarray) -> float:
    """Share of real and generated sequences classified correctly at threshold 0.5."""
    p_real, _ = disc_forward_batch(real, disc)
    p_fake, _ = disc_forward_batch(fake, disc)
    correct = np.sum(p_real >= 0.5) + np.sum(p_fake < 0.5)
    return float(correct / (len(p_real) + len(p_fake)))


def train_discriminator(
    disc: DiscriminatorParams,
    real: np.ndarray,
    fake: np.ndarray,
    schedule: GanSchedule,
    rng: np.random.Generator,
    epochs: int = 1,
    optimizer: Adam | None = None,
) -> list[float]:
    """
    Train on class-balanced batches of real (label 1) and generated (label 0) sequences.

    Returns:
        Mean training loss per epoch
    """
    real = np.asarray(real, dtype=np.int64)
    fake = np.asarray(fake, dtype=np.int64)
    n = min(len(real), len(fake))
    if n == 0:
        raise ArgumentError("Discriminator training needs real and generated sequences")
    if optimizer is None:
        optimizer = Adam(disc.tensors(), **schedule.optimizer.model_dump())

    history = []
    half = max(1, schedule.batch_size // 2)
    for epoch in range(epochs):
        real_part = real[rng.choice(len(real), n, replace=False)]
        fake_part = fake[rng.choice(len(fake), n, replace=False)]
        losses = []
        for start in range(0, n, half):
            seqs = np.concatenate([real_part[start : start + half], fake_part[start : start + half]])
            labels = np.concatenate(
                [np.ones(len(real_part[start : start + half])), np.zeros(len(fake_part[start : start + half]))]
            )
            order = rng.permutation(len(seqs))
            optimizer.zero_grad()
            _, trace = disc_forward_batch(seqs[order], disc, disc.keep_prob, rng)
            losses.append(disc_backward(trace, labels[order], disc))
            optimizer.step()
        history.append(float(np.mean(losses)))
        logger.debug(f"Discriminator epoch {epoch + 1}: loss {history[-1]:.4f}")
    optimizer.zero_grad()
    return history
