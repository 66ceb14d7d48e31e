"""GRU cell with backpropagation through time and a two-class classifier head."""

import copy
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, fields

import numpy as np

from ..config.models import ClassifierConfig
from ..errors import ArgumentError, ConsistencyError, NumericError, ShapeError
from ..nn import (
    DEFAULT_DTYPE,
    Adam,
    Matrix,
    ParamTensor,
    affine,
    cross_entropy,
    dropout_mask,
    sigmoid,
    softmax,
    softmax_cross_entropy_grad,
    tanh_act,
)

logger = logging.getLogger(__name__)

N_CLASSES = 2


@dataclass
class GruParams:
    """
    Weights of one GRU layer.

    Input weights are [d x H], recurrent weights [H x H] and biases [1 x H];
    batches are rows, so every product is ``x @ W``.
    """

    W_r: ParamTensor
    U_r: ParamTensor
    b_r: ParamTensor
    W_z: ParamTensor
    U_z: ParamTensor
    b_z: ParamTensor
    W_h: ParamTensor
    U_h: ParamTensor
    b_h: ParamTensor

    def __post_init__(self):
        d, H = self.W_r.shape
        expected = {"W": (d, H), "U": (H, H), "b": (1, H)}
        for f in fields(self):
            tensor = getattr(self, f.name)
            if tensor.shape != expected[f.name[0]]:
                raise ShapeError(
                    f"GRU tensor {f.name} is inconsistent with d={d}, H={H}",
                    tensor.shape,
                    expected[f.name[0]],
                )

    @property
    def input_dim(self) -> int:
        return self.W_r.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.W_r.shape[1]

    def tensors(self, prefix: str = "") -> dict[str, ParamTensor]:
        return {f"{prefix}{f.name}": getattr(self, f.name) for f in fields(self)}

    @classmethod
    def init(
        cls,
        input_dim: int,
        hidden_dim: int,
        rng: np.random.Generator,
        dtype=DEFAULT_DTYPE,
    ) -> "GruParams":
        """Glorot-uniform weights, zero biases."""
        tensors = {}
        for gate in ("r", "z", "h"):
            tensors[f"W_{gate}"] = ParamTensor.glorot(input_dim, hidden_dim, rng, f"W_{gate}", dtype)
            tensors[f"U_{gate}"] = ParamTensor.glorot(hidden_dim, hidden_dim, rng, f"U_{gate}", dtype)
            tensors[f"b_{gate}"] = ParamTensor.zeros(1, hidden_dim, f"b_{gate}", dtype)
        return cls(**tensors)

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int, dtype=DEFAULT_DTYPE) -> "GruParams":
        tensors = {}
        for gate in ("r", "z", "h"):
            tensors[f"W_{gate}"] = ParamTensor.zeros(input_dim, hidden_dim, f"W_{gate}", dtype)
            tensors[f"U_{gate}"] = ParamTensor.zeros(hidden_dim, hidden_dim, f"U_{gate}", dtype)
            tensors[f"b_{gate}"] = ParamTensor.zeros(1, hidden_dim, f"b_{gate}", dtype)
        return cls(**tensors)


@dataclass
class GruStep:
    """Cached values of one time step."""

    x: Matrix
    h_prev: Matrix
    r: Matrix
    z: Matrix
    candidate: Matrix
    h: Matrix


@dataclass
class GruTrace:
    params: GruParams
    steps: list[GruStep] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.steps)


def cell_forward(
    x_t: Matrix, h_prev: Matrix, params: GruParams
) -> tuple[Matrix, GruStep]:
    """
    One GRU step on a batch.

    r = sigmoid(x W_r + h U_r + b_r), z = sigmoid(x W_z + h U_z + b_z),
    h_t = z * h_prev + (1 - z) * tanh(x W_h + (r * h_prev) U_h + b_h).
    The update gate weights the previous state, not the candidate.
    """
    if h_prev.ndim != 2 or h_prev.shape[1] != params.hidden_dim:
        raise ShapeError("GRU hidden state does not match H", h_prev.shape, params.U_r.shape)
    if x_t.ndim != 2 or x_t.shape[0] != h_prev.shape[0]:
        raise ShapeError("GRU input and state batch sizes differ", x_t.shape, h_prev.shape)
    r = sigmoid(affine(x_t, params.W_r.value, params.b_r.value) + h_prev @ params.U_r.value)
    z = sigmoid(affine(x_t, params.W_z.value, params.b_z.value) + h_prev @ params.U_z.value)
    candidate = tanh_act(
        affine(x_t, params.W_h.value, params.b_h.value) + (r * h_prev) @ params.U_h.value
    )
    h = z * h_prev + (1 - z) * candidate
    return h, GruStep(x_t, h_prev, r, z, candidate, h)


def seq_forward(
    xs: Sequence[Matrix] | np.ndarray,
    params: GruParams,
    h0: Matrix | None = None,
) -> tuple[Matrix, GruTrace]:
    """
    Unroll the cell over time-major inputs.

    Args:
        xs: Either a [T x batch x d] array or a sequence of [batch x d] arrays
        params: GRU weights
        h0: Initial state [batch x H]; zeros when omitted

    Returns:
        Final state and the trace needed by ``bptt``
    """
    if len(xs) == 0:
        raise ArgumentError("GRU input sequence is empty")
    h = h0
    if h is None:
        h = np.zeros((xs[0].shape[0], params.hidden_dim), dtype=params.U_r.value.dtype)
    trace = GruTrace(params)
    for x_t in xs:
        h, step = cell_forward(x_t, h, params)
        trace.steps.append(step)
    return h, trace


def bptt(
    trace: GruTrace,
    dL_dhT: Matrix,
    params: GruParams,
    dL_dh_steps: Sequence[Matrix | None] | None = None,
) -> tuple[list[Matrix], Matrix]:
    """
    Backpropagate through an unrolled GRU.

    Gradients of all nine tensors are accumulated into ``params``.

    Args:
        trace: Trace from ``seq_forward`` with the same params
        dL_dhT: Gradient w.r.t. the final state
        params: GRU weights
        dL_dh_steps: Optional extra gradients w.r.t. every intermediate state

    Returns:
        Gradients w.r.t. each input x_t, and w.r.t. h0
    """
    if trace.params is not params:
        raise ConsistencyError("Trace was produced by different GRU parameters")
    if dL_dh_steps is not None and len(dL_dh_steps) != trace.length:
        raise ConsistencyError(
            f"Got {len(dL_dh_steps)} step gradients for a trace of length {trace.length}"
        )

    W_r, U_r = params.W_r.value, params.U_r.value
    W_z, U_z = params.W_z.value, params.U_z.value
    W_h, U_h = params.W_h.value, params.U_h.value
    grads = {name: np.zeros_like(p.value) for name, p in params.tensors().items()}
    dxs: list[Matrix] = [None] * trace.length  # type: ignore[list-item]

    dh = dL_dhT
    for t in reversed(range(trace.length)):
        s = trace.steps[t]
        if dL_dh_steps is not None and dL_dh_steps[t] is not None:
            dh = dh + dL_dh_steps[t]

        dz = dh * (s.h_prev - s.candidate)
        da_h = dh * (1 - s.z) * (1 - s.candidate**2)
        dh_prev = dh * s.z

        rh = s.r * s.h_prev
        grads["W_h"] += s.x.T @ da_h
        grads["U_h"] += rh.T @ da_h
        grads["b_h"] += da_h.sum(axis=0, keepdims=True)
        d_rh = da_h @ U_h.T
        dh_prev = dh_prev + d_rh * s.r

        da_z = dz * s.z * (1 - s.z)
        da_r = d_rh * s.h_prev * s.r * (1 - s.r)
        grads["W_z"] += s.x.T @ da_z
        grads["U_z"] += s.h_prev.T @ da_z
        grads["b_z"] += da_z.sum(axis=0, keepdims=True)
        grads["W_r"] += s.x.T @ da_r
        grads["U_r"] += s.h_prev.T @ da_r
        grads["b_r"] += da_r.sum(axis=0, keepdims=True)

        dxs[t] = da_h @ W_h.T + da_z @ W_z.T + da_r @ W_r.T
        dh = dh_prev + da_z @ U_z.T + da_r @ U_r.T

    for name, p in params.tensors().items():
        p.accumulate(grads[name])
    return dxs, dh


@dataclass
class ClassifierHead:
    """Affine map from the final GRU state to two logits."""

    W_out: ParamTensor
    b_out: ParamTensor

    @classmethod
    def init(
        cls, hidden_dim: int, rng: np.random.Generator, dtype=DEFAULT_DTYPE
    ) -> "ClassifierHead":
        return cls(
            ParamTensor.glorot(hidden_dim, N_CLASSES, rng, "W_out", dtype),
            ParamTensor.zeros(1, N_CLASSES, "b_out", dtype),
        )

    def tensors(self, prefix: str = "") -> dict[str, ParamTensor]:
        return {f"{prefix}W_out": self.W_out, f"{prefix}b_out": self.b_out}


def features_to_sequence(features: np.ndarray) -> np.ndarray:
    """Turn [batch x n_features] rows into a [n_features x batch x 1] scalar sequence."""
    features = np.asarray(features)
    if features.ndim != 2:
        raise ShapeError("Features must be a 2-D batch", features.shape)
    return features.T[:, :, None]


def classify(
    feature_seq: Sequence[Matrix] | np.ndarray, params: GruParams, head: ClassifierHead
) -> Matrix:
    """Class probabilities [batch x 2] = softmax(head(h_T))."""
    h_T, _ = seq_forward(feature_seq, params)
    return softmax(affine(h_T, head.W_out.value, head.b_out.value))


def _one_hot(labels: np.ndarray, dtype) -> Matrix:
    target = np.zeros((len(labels), N_CLASSES), dtype=dtype)
    target[np.arange(len(labels)), labels] = 1
    return target


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float | None = None
    val_acc: float | None = None


@dataclass
class GruClassifier:
    """GRU over a scalar feature sequence followed by a softmax head."""

    gru: GruParams
    head: ClassifierHead

    @classmethod
    def init(
        cls,
        hidden_dim: int,
        rng: np.random.Generator,
        input_dim: int = 1,
        dtype=DEFAULT_DTYPE,
    ) -> "GruClassifier":
        return cls(
            GruParams.init(input_dim, hidden_dim, rng, dtype),
            ClassifierHead.init(hidden_dim, rng, dtype),
        )

    def tensors(self) -> dict[str, ParamTensor]:
        return {**self.gru.tensors("gru."), **self.head.tensors("head.")}

    def predict_proba(self, features: np.ndarray) -> Matrix:
        return classify(features_to_sequence(features), self.gru, self.head)

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.predict_proba(features).argmax(axis=1)

    def evaluate(self, features: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
        """Return (loss, accuracy) in inference mode."""
        probs = self.predict_proba(features)
        loss = cross_entropy(probs, _one_hot(labels, probs.dtype))
        return loss, float(np.mean(probs.argmax(axis=1) == labels))

    def train_batch(
        self,
        features: np.ndarray,
        labels: np.ndarray,
        keep_prob: float,
        rng: np.random.Generator,
    ) -> tuple[float, float]:
        """Forward and backward on one batch; gradients accumulate into the tensors."""
        h_T, trace = seq_forward(features_to_sequence(features), self.gru)
        mask = dropout_mask(h_T.shape, keep_prob, rng)
        h_drop = h_T * mask
        probs = softmax(affine(h_drop, self.head.W_out.value, self.head.b_out.value))
        target = _one_hot(labels, probs.dtype)

        dlogits = softmax_cross_entropy_grad(probs, target)
        self.head.W_out.accumulate(h_drop.T @ dlogits)
        self.head.b_out.accumulate(dlogits.sum(axis=0, keepdims=True))
        dh_T = (dlogits @ self.head.W_out.value.T) * mask
        bptt(trace, dh_T, self.gru)
        return cross_entropy(probs, target), float(np.mean(probs.argmax(axis=1) == labels))


def train_classifier(
    features: np.ndarray,
    labels: np.ndarray,
    config: ClassifierConfig,
    rng: np.random.Generator,
    val_features: np.ndarray | None = None,
    val_labels: np.ndarray | None = None,
    epochs: int | None = None,
) -> tuple[GruClassifier, list[EpochStats], int]:
    """
    Train a GRU classifier with mini-batch ADAM.

    With a validation set, training stops after ``config.patience`` epochs without
    a lower validation loss and the best epoch's parameters are returned.

    Args:
        features: [n x n_features] feature rows
        labels: Integer labels (0 negative, 1 positive)
        config: Classifier settings
        rng: Generator for init, shuffling and dropout
        val_features: Optional early-stopping features
        val_labels: Labels of ``val_features``
        epochs: Fixed number of epochs, overriding ``config.max_epochs``

    Returns:
        (classifier, per-epoch history, best epoch number)
    """
    if len(features) == 0:
        raise ArgumentError("Cannot train a classifier on zero records")
    labels = np.asarray(labels, dtype=np.int64)
    model = GruClassifier.init(config.hidden_dim, rng)
    optimizer = Adam(
        model.tensors(),
        **config.optimizer.model_dump(),
        clip_norm=config.clip_norm,
    )
    max_epochs = epochs or config.max_epochs
    has_val = val_features is not None and len(val_features) > 0

    history: list[EpochStats] = []
    best_loss = np.inf
    best_epoch = max_epochs
    best_model = None
    stale = 0
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(len(features))
        losses, accs, sizes = [], [], []
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            optimizer.zero_grad()
            loss, acc = model.train_batch(features[batch], labels[batch], config.keep_prob, rng)
            optimizer.step()
            losses.append(loss)
            accs.append(acc)
            sizes.append(len(batch))
        stats = EpochStats(
            epoch,
            float(np.average(losses, weights=sizes)),
            float(np.average(accs, weights=sizes)),
        )
        if has_val:
            stats.val_loss, stats.val_acc = model.evaluate(val_features, val_labels)
        history.append(stats)
        logger.debug(
            f"Epoch {epoch}: loss {stats.train_loss:.4f} acc {stats.train_acc:.3f}"
            + (f" val_loss {stats.val_loss:.4f} val_acc {stats.val_acc:.3f}" if has_val else "")
        )

        if not has_val:
            continue
        if not np.isfinite(stats.val_loss):
            raise NumericError(f"Validation loss is {stats.val_loss} at epoch {epoch}")
        if stats.val_loss < best_loss:
            best_loss, best_epoch, stale = stats.val_loss, epoch, 0
            best_model = copy.deepcopy(model)
        else:
            stale += 1
            if stale >= config.patience:
                logger.info(f"Early stopping at epoch {epoch}, best epoch {best_epoch}")
                break

    if best_model is not None:
        model = best_model
    return model, history, best_epoch
