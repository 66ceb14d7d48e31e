"""Per-label autoencoders used as feature extractors."""

import copy
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..config.models import AeTrainConfig
from ..corpus.records import EncodedLog, Label, Origin, ids_matrix
from ..errors import ArgumentError, CorpusFormatError, ShapeError
from ..nn import (
    DEFAULT_DTYPE,
    Adam,
    Matrix,
    ParamTensor,
    affine,
    affine_backward,
    cross_entropy,
    dropout_mask,
    l1_penalty,
    softmax,
    softmax_cross_entropy_grad,
    tanh_act,
)

logger = logging.getLogger(__name__)

LAYER_NAMES = ("enc1", "enc2", "dec1", "out")

FEATURE_MAGIC = b"LBFT"
_FEATURE_HEADER = struct.Struct("<4sII")


@dataclass
class AeParams:
    """Weights and biases of the four affine layers, keyed by layer name."""

    weights: dict[str, ParamTensor]
    biases: dict[str, ParamTensor]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        sizes = [self.weights[LAYER_NAMES[0]].shape[0]]
        sizes.extend(self.weights[name].shape[1] for name in LAYER_NAMES)
        return tuple(sizes)

    def tensors(self, prefix: str = "") -> dict[str, ParamTensor]:
        named = {}
        for name in LAYER_NAMES:
            named[f"{prefix}{name}.W"] = self.weights[name]
            named[f"{prefix}{name}.b"] = self.biases[name]
        return named

    @classmethod
    def init(
        cls,
        layer_sizes: tuple[int, ...],
        rng: np.random.Generator,
        dtype=DEFAULT_DTYPE,
    ) -> "AeParams":
        if len(layer_sizes) != len(LAYER_NAMES) + 1:
            raise ArgumentError(f"Autoencoder needs five layer widths, got {layer_sizes}")
        weights, biases = {}, {}
        for name, fan_in, fan_out in zip(LAYER_NAMES, layer_sizes[:-1], layer_sizes[1:]):
            weights[name] = ParamTensor.glorot(fan_in, fan_out, rng, f"{name}.W", dtype)
            biases[name] = ParamTensor.zeros(1, fan_out, f"{name}.b", dtype)
        return cls(weights, biases)


@dataclass
class AeTrace:
    # inputs of every layer (after dropout) and the dropout masks
    inputs: list[Matrix]
    masks: list[Matrix | None]
    activations: list[Matrix]
    output: Matrix


@dataclass
class FeatureRecord:
    """Autoencoder output used as a classifier input."""

    features: np.ndarray
    label: Label
    origin: Origin = Origin.REAL


def ae_input(encoded: EncodedLog, vocab_size: int | None = None) -> np.ndarray:
    """Normalized shifted ids: x[i] = (ids[i] + 1) / sum(ids + 1)."""
    ids = np.asarray(encoded.ids, dtype=np.float64)
    if vocab_size is not None and ids.max(initial=0) >= vocab_size:
        raise ArgumentError(f"Token id {int(ids.max())} is outside a vocabulary of {vocab_size}")
    shifted = ids + 1
    return shifted / shifted.sum()


def ae_inputs(records: list[EncodedLog], dtype=DEFAULT_DTYPE) -> Matrix:
    """Batch form of ``ae_input`` as an [n x L] matrix."""
    shifted = ids_matrix(records).astype(np.float64) + 1
    return (shifted / shifted.sum(axis=1, keepdims=True)).astype(dtype)


def ae_forward(
    x: Matrix,
    params: AeParams,
    keep_prob: float = 1.0,
    rng: np.random.Generator | None = None,
) -> tuple[Matrix, AeTrace]:
    """
    Reconstruct ``x`` through tanh hidden layers and a softmax output.

    Dropout masks sit between layers when ``keep_prob < 1``; a generator is then
    required.
    """
    if x.ndim != 2 or x.shape[1] != params.layer_sizes[0]:
        raise ShapeError("Autoencoder input width mismatch", x.shape, params.weights["enc1"].shape)
    if keep_prob < 1.0 and rng is None:
        raise ArgumentError("Dropout needs a random generator")
    inputs, masks, activations = [], [], []
    h = x
    for name in LAYER_NAMES:
        inputs.append(h)
        a = affine(h, params.weights[name].value, params.biases[name].value)
        if name == LAYER_NAMES[-1]:
            output = softmax(a)
            break
        h = tanh_act(a)
        activations.append(h)
        mask = None
        if keep_prob < 1.0:
            mask = dropout_mask(h.shape, keep_prob, rng)
            h = h * mask
        masks.append(mask)
    return output, AeTrace(inputs, masks, activations, output)


def reconstruction_loss(
    x: Matrix, params: AeParams, l1_lambda: float = 0.0
) -> float:
    """Inference-mode CE of the reconstruction against ``x`` plus the L1 term."""
    recon, _ = ae_forward(x, params)
    penalty, _ = l1_penalty(params.weights["enc1"].value, l1_lambda)
    return cross_entropy(recon, x) + penalty


def ae_backward(trace: AeTrace, x: Matrix, params: AeParams, l1_lambda: float) -> float:
    """
    Accumulate gradients of CE(reconstruction, x) + l1_lambda * sum|enc1.W|.

    Returns:
        The loss of the traced forward pass
    """
    penalty, l1_grad = l1_penalty(params.weights["enc1"].value, l1_lambda)
    loss = cross_entropy(trace.output, x) + penalty

    grad = softmax_cross_entropy_grad(trace.output, x)
    for i in reversed(range(len(LAYER_NAMES))):
        name = LAYER_NAMES[i]
        dx, dW, db = affine_backward(trace.inputs[i], params.weights[name].value, grad)
        if name == "enc1":
            dW = dW + l1_grad
        params.weights[name].accumulate(dW)
        params.biases[name].accumulate(db)
        if i == 0:
            break
        if trace.masks[i - 1] is not None:
            dx = dx * trace.masks[i - 1]
        grad = dx * (1 - trace.activations[i - 1] ** 2)
    return loss


def ae_train(
    records: list[EncodedLog],
    config: AeTrainConfig,
    rng: np.random.Generator,
) -> tuple[AeParams, list[tuple[float, float]]]:
    """
    Train one autoencoder on records of a single label.

    A held-out share of the records drives early stopping; the parameters of the
    epoch with the lowest held-out reconstruction loss are returned.

    Returns:
        (params, per-epoch (train_loss, holdout_loss))
    """
    if not records:
        raise ArgumentError("Cannot train an autoencoder on zero records")
    labels = {int(r.label) for r in records}
    if len(labels) != 1:
        raise ArgumentError("Autoencoder training records must share one label")

    x = ae_inputs(records)
    order = rng.permutation(len(x))
    n_holdout = int(len(x) * config.holdout_fraction)
    if n_holdout == 0 or n_holdout == len(x):
        # too few records to hold any out; track the training loss instead
        train_x, holdout_x = x[order], x[order]
    else:
        train_x, holdout_x = x[order[n_holdout:]], x[order[:n_holdout]]

    params = AeParams.init(config.layer_sizes, rng)
    optimizer = Adam(params.tensors(), **config.optimizer.model_dump())

    history: list[tuple[float, float]] = []
    best_loss = np.inf
    best_params = copy.deepcopy(params)
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        shuffle = rng.permutation(len(train_x))
        total, count = 0.0, 0
        for start in range(0, len(shuffle), config.batch_size):
            batch = train_x[shuffle[start : start + config.batch_size]]
            optimizer.zero_grad()
            _, trace = ae_forward(batch, params, config.keep_prob, rng)
            total += ae_backward(trace, batch, params, config.l1_lambda) * len(batch)
            count += len(batch)
            optimizer.step()
        holdout_loss = reconstruction_loss(holdout_x, params)
        history.append((total / count, holdout_loss))
        logger.debug(f"AE epoch {epoch}: train {total / count:.5f} holdout {holdout_loss:.5f}")

        if holdout_loss < best_loss:
            best_loss, stale = holdout_loss, 0
            best_params = copy.deepcopy(params)
        else:
            stale += 1
            if stale >= config.patience:
                logger.info(f"AE early stopping at epoch {epoch}")
                break
    return best_params, history


def extract(
    records: list[EncodedLog], params: AeParams, label: Label
) -> list[FeatureRecord]:
    """Inference-mode reconstructions of ``records`` tagged with ``label``."""
    if not records:
        return []
    recon, _ = ae_forward(ae_inputs(records), params)
    return [
        FeatureRecord(row.astype(np.float32), Label(label), record.origin)
        for row, record in zip(recon, records)
    ]


def dedup_features(records: list[FeatureRecord], decimals: int = 6) -> list[FeatureRecord]:
    """Keep the first of every (features rounded to ``decimals``, label) pair."""
    seen: set = set()
    kept = []
    for record in records:
        key = (np.round(record.features, decimals).tobytes(), int(record.label))
        if key in seen:
            continue
        seen.add(key)
        kept.append(record)
    return kept


def add_gaussian_noise(
    records: list[FeatureRecord], variance: float, rng: np.random.Generator
) -> list[FeatureRecord]:
    """Return copies with i.i.d. N(0, variance) noise added to every feature."""
    if variance < 0:
        raise ArgumentError(f"Noise variance must be non-negative, got {variance}")
    std = np.sqrt(variance)
    return [
        FeatureRecord(
            (r.features + rng.normal(0.0, std, size=r.features.shape)).astype(np.float32),
            r.label,
            r.origin,
        )
        for r in records
    ]


def dual_pipeline(
    pos_records: list[EncodedLog],
    neg_records: list[EncodedLog],
    config: AeTrainConfig,
    rng_pos: np.random.Generator,
    rng_neg: np.random.Generator,
    rng_mix: np.random.Generator,
) -> tuple[list[FeatureRecord], dict[str, AeParams]]:
    """
    Train the positive and negative autoencoders and build the labeled feature set.

    Features of both sides are concatenated, deduplicated, perturbed with Gaussian
    noise and shuffled, in that order.

    Returns:
        (feature records, {"pos": params, "neg": params})
    """
    if not pos_records or not neg_records:
        raise ArgumentError("Both positive and negative records are required")

    logger.info(f"Training positive autoencoder on {len(pos_records)} records")
    pos_params, _ = ae_train(pos_records, config, rng_pos)
    logger.info(f"Training negative autoencoder on {len(neg_records)} records")
    neg_params, _ = ae_train(neg_records, config, rng_neg)

    features = extract(pos_records, pos_params, Label.POSITIVE) + extract(
        neg_records, neg_params, Label.NEGATIVE
    )
    unique = dedup_features(features)
    logger.info(f"Feature dedup kept {len(unique)} of {len(features)} rows")
    noisy = add_gaussian_noise(unique, config.noise_variance, rng_mix)
    order = rng_mix.permutation(len(noisy))
    return [noisy[i] for i in order], {"pos": pos_params, "neg": neg_params}


def feature_matrix(records: list[FeatureRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Stack features [n x dim] and integer labels [n]."""
    if not records:
        raise ArgumentError("No feature records")
    return (
        np.stack([r.features for r in records]).astype(np.float32),
        np.array([int(r.label) for r in records], dtype=np.int64),
    )


def save_features(records: list[FeatureRecord], path: str | Path) -> None:
    """Write the LBFT cache: header, then label byte, origin byte and float32 features."""
    dim = len(records[0].features) if records else 0
    body = bytearray()
    for record in records:
        if len(record.features) != dim:
            raise CorpusFormatError("Feature records have different widths")
        body.append(int(record.label))
        body.append(int(record.origin))
        body.extend(np.asarray(record.features, dtype="<f4").tobytes())
    Path(path).write_bytes(_FEATURE_HEADER.pack(FEATURE_MAGIC, len(records), dim) + bytes(body))


def load_features(path: str | Path) -> list[FeatureRecord]:
    data = Path(path).read_bytes()
    if len(data) < _FEATURE_HEADER.size:
        raise CorpusFormatError(f"{path}: truncated header")
    magic, count, dim = _FEATURE_HEADER.unpack_from(data)
    stride = 2 + 4 * dim
    if magic != FEATURE_MAGIC or len(data) != _FEATURE_HEADER.size + count * stride:
        raise CorpusFormatError(f"{path}: not a feature cache")
    records = []
    offset = _FEATURE_HEADER.size
    for _ in range(count):
        features = np.frombuffer(data, dtype="<f4", count=dim, offset=offset + 2).astype(np.float32)
        records.append(FeatureRecord(features, Label(data[offset]), Origin(data[offset + 1])))
        offset += stride
    return records
