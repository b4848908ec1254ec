"""From-scratch dense networks and the K-nearest-neighbor baseline.

The networks are plain fully connected ReLU stacks with a linear output
layer, trained with Adam on mean squared error over mini-batches.  Complex
targets are encoded as one long real vector [re; im], so for the complex
field the output layer has 2n units.

Three architectures are used throughout, named by their hidden stacks:

    nn   in-256-128-64-out
    wnn  in-512-256-128-out
    dnn  in-2048-1024-512-256-128-out

Model checkpoint format ("GPRM", version 1, little-endian):

    magic       4 bytes  b"GPRM"
    version     u32      1
    field       u8       0 = real, 1 = complex
    layer count u16      number of entries in the dimension list
    dims        u32 each
    per layer   weights (d_in * d_out f64, row-major) then biases (d_out f64)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, Split
from .errors import (
    BadMagicError,
    ContractViolation,
    DivergenceError,
    TruncatedPayloadError,
    VersionMismatchError,
    ensure,
)
from .forward_model import Field
from .numerics import STREAM_INIT, STREAM_SHUFFLE, RngStream, permutation

ARCHITECTURES = {
    "nn": (256, 128, 64),
    "wnn": (512, 256, 128),
    "dnn": (2048, 1024, 512, 256, 128),
}

REGULARIZERS = ("none", "l1", "l2", "l1l2")

_MAGIC = b"GPRM"
_VERSION = 1
_HEADER = struct.Struct("<4sIBH")


def layer_dims_for(arch: str, m: int, n: int, field: Field) -> list[int]:
    """Full dimension list for a named architecture: input m, output n or 2n."""
    ensure(arch in ARCHITECTURES, f"unknown architecture {arch!r}")
    out = n if field is Field.REAL else 2 * n
    return [m, *ARCHITECTURES[arch], out]


@dataclass
class MlpModel:
    """Weights and biases of a fully connected ReLU network.

    ``weights[l]`` has shape (d_l, d_{l+1}) and acts on row vectors
    (h @ W + b); the final layer is affine with no activation.
    """

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    field: Field = Field.REAL
    activation: str = "relu"

    def __post_init__(self):
        ensure(self.activation == "relu", f"unknown activation {self.activation!r}")
        ensure(len(self.weights) == len(self.layer_dims) - 1, "one weight matrix per layer")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            ensure(w.shape == (self.layer_dims[l], self.layer_dims[l + 1]), "weight shape mismatch")
            ensure(b.shape == (self.layer_dims[l + 1],), "bias shape mismatch")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]


def mlp_init(layer_dims: list[int], seed: int, field: Field = Field.REAL) -> MlpModel:
    """Glorot-uniform weights, zero biases, deterministic given the seed."""
    ensure(len(layer_dims) >= 2, "need at least input and output dims")
    ensure(all(d >= 1 for d in layer_dims), "all layer dims must be positive")
    rng = RngStream(seed, STREAM_INIT)
    weights, biases = [], []
    for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / (d_in + d_out))
        w = (rng.uniform(d_in * d_out) * 2.0 - 1.0) * limit
        weights.append(w.reshape(d_in, d_out))
        biases.append(np.zeros(d_out))
    return MlpModel(layer_dims=list(layer_dims), weights=weights, biases=biases, field=field)


def count_parameters(model: MlpModel) -> int:
    """Total trainable parameters: sum over layers of (d_in + 1) * d_out."""
    return sum(w.size + b.size for w, b in zip(model.weights, model.biases))


def mlp_forward(model: MlpModel, y: np.ndarray) -> np.ndarray:
    """Predict a single target vector from a single measurement vector."""
    ensure(y.ndim == 1, "input must be a vector")
    return mlp_forward_batch(model, y[None, :])[0]


def mlp_forward_batch(model: MlpModel, ys: np.ndarray) -> np.ndarray:
    """Forward pass on a (batch, input_dim) matrix of measurements."""
    ensure(ys.ndim == 2, "batch input must be a matrix")
    ensure(ys.shape[1] == model.input_dim, f"input dim {ys.shape[1]} != model input {model.input_dim}")
    h = ys
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w + b
        if l != last:
            np.maximum(h, 0.0, out=h)
    return h


def _penalty_and_grads(weights, reg: str, lam: float):
    """Regularization penalty and its per-weight gradients (biases excluded)."""
    if reg == "none" or lam == 0.0:
        return 0.0, None
    penalty = 0.0
    grads = []
    for w in weights:
        g = np.zeros_like(w)
        if reg in ("l1", "l1l2"):
            penalty += lam * np.abs(w).sum()
            g += lam * np.sign(w)
        if reg in ("l2", "l1l2"):
            penalty += lam * (w * w).sum()
            g += 2.0 * lam * w
        grads.append(g)
    return penalty, grads


def mlp_loss_and_grad(
    model: MlpModel,
    batch_ys: np.ndarray,
    batch_xs: np.ndarray,
    reg: str = "none",
    reg_lambda: float = 0.0,
):
    """Mean-over-batch squared error plus penalty, with reverse-mode grads.

    loss = (1/B) sum_b ||f(y_b) - x_b||^2 + penalty(weights).  Returns
    (loss, grads) with grads ordered [dW_0, db_0, dW_1, db_1, ...].
    """
    ensure(batch_ys.ndim == 2 and batch_xs.ndim == 2, "batch inputs must be matrices")
    ensure(batch_ys.shape[0] == batch_xs.shape[0] and batch_ys.shape[0] >= 1, "batch must be nonempty and aligned")
    ensure(reg in REGULARIZERS, f"unknown regularizer {reg!r}")
    batch = batch_ys.shape[0]
    last = len(model.weights) - 1

    activations = [batch_ys]
    h = batch_ys
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w + b
        if l != last:
            h = np.maximum(h, 0.0)
        activations.append(h)

    diff = activations[-1] - batch_xs
    data_loss = float((diff * diff).sum() / batch)
    penalty, reg_grads = _penalty_and_grads(model.weights, reg, reg_lambda)
    loss = data_loss + penalty
    if not np.isfinite(loss):
        raise DivergenceError(0, 0, "non-finite loss in batch")

    grads = [None] * (2 * len(model.weights))
    delta = diff * (2.0 / batch)
    for l in range(last, -1, -1):
        grads[2 * l] = activations[l].T @ delta
        if reg_grads is not None:
            grads[2 * l] += reg_grads[l]
        grads[2 * l + 1] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ model.weights[l].T
            delta = delta * (activations[l] > 0.0)
    return loss, grads


@dataclass
class AdamState:
    """Adam moment estimates shaped exactly like the parameter list."""

    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr: float = 0.001


def _params(model: MlpModel) -> list:
    out = []
    for w, b in zip(model.weights, model.biases):
        out.append(w)
        out.append(b)
    return out


def adam_init(model: MlpModel, lr: float = 0.001) -> AdamState:
    params = _params(model)
    return AdamState(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], lr=lr)


def adam_step(state: AdamState, model: MlpModel, grads: list):
    """One in-place Adam update with bias correction."""
    params = _params(model)
    ensure(len(grads) == len(params), "gradient list does not match parameter list")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return model, state


@dataclass
class TrainConfig:
    """Knobs of the training loop; defaults follow the experimental protocol."""

    max_epochs: int = 100
    learning_rate: float = 0.001
    patience: int = 10
    batch_size: int = 128
    reg: str = "none"
    reg_lambda: float = 1e-4
    seed: int = 0

    def validate(self) -> None:
        ensure(self.max_epochs >= 1, "max_epochs must be positive")
        ensure(self.learning_rate > 0, "learning_rate must be positive")
        ensure(self.patience >= 1, "patience must be positive")
        ensure(self.batch_size >= 1, "batch_size must be positive")
        ensure(self.reg in REGULARIZERS, f"unknown regularizer {self.reg!r}")
        ensure(self.reg_lambda >= 0, "reg_lambda must be nonnegative")


def encode_targets(field: Field, xs: np.ndarray) -> np.ndarray:
    """Rows of learning targets: x itself, or [re; im] for complex x."""
    if field is Field.REAL:
        return xs
    return np.hstack([xs.real, xs.imag])


def decode_predictions(field: Field, preds: np.ndarray) -> np.ndarray:
    """Invert :func:`encode_targets` on predicted rows."""
    if field is Field.REAL:
        return preds
    half = preds.shape[-1] // 2
    return preds[..., :half] + 1j * preds[..., half:]


def _validation_loss(model: MlpModel, ys: np.ndarray, xs: np.ndarray) -> float:
    """Mean squared error on a held-out set (no regularization penalty)."""
    diff = mlp_forward_batch(model, ys) - xs
    return float((diff * diff).sum() / ys.shape[0])


def train(model: MlpModel, dataset: Dataset, split: Split, config: TrainConfig):
    """Mini-batch Adam training with validation-based early stopping.

    Each epoch shuffles the training indices, sweeps mini-batches, then
    scores the validation set.  Training stops at ``max_epochs`` or once the
    validation loss has failed to improve for ``patience`` consecutive
    epochs; the returned model carries the parameters of the best validation
    epoch.  Returns ``(model, history)`` with one ``(train_loss, val_loss)``
    pair per epoch run.
    """
    config.validate()
    targets = encode_targets(dataset.field, dataset.xs)
    ensure(model.input_dim == dataset.sensing.m, "model input dim must equal m")
    ensure(model.output_dim == targets.shape[1], "model output dim must match encoded targets")
    y_train = dataset.ys[split.train_idx]
    x_train = targets[split.train_idx]
    y_val = dataset.ys[split.val_idx]
    x_val = targets[split.val_idx]
    n_train = y_train.shape[0]
    ensure(n_train >= 1 and y_val.shape[0] >= 1, "train and validation partitions must be nonempty")

    state = adam_init(model, lr=config.learning_rate)
    shuffle_rng = RngStream(config.seed, STREAM_SHUFFLE)
    history: list[tuple[float, float]] = []
    best_val = np.inf
    best_params = None
    stall = 0

    for epoch in range(1, config.max_epochs + 1):
        order = permutation(shuffle_rng, n_train)
        loss_sum = 0.0
        for batch_index, start in enumerate(range(0, n_train, config.batch_size)):
            sel = order[start : start + config.batch_size]
            try:
                loss, grads = mlp_loss_and_grad(
                    model, y_train[sel], x_train[sel], config.reg, config.reg_lambda
                )
            except DivergenceError:
                raise DivergenceError(epoch, batch_index) from None
            adam_step(state, model, grads)
            loss_sum += loss * sel.size
        val_loss = _validation_loss(model, y_val, x_val)
        history.append((loss_sum / n_train, val_loss))
        if val_loss < best_val:
            best_val = val_loss
            best_params = [p.copy() for p in _params(model)]
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                break

    if best_params is not None:
        for p, best in zip(_params(model), best_params):
            p[...] = best
    return model, history


@dataclass
class KnnModel:
    """Stored training pairs for K-nearest-neighbor regression."""

    train_inputs: np.ndarray
    train_targets: np.ndarray
    k: int = 5

    def __post_init__(self):
        ensure(self.train_inputs.shape[0] >= 1, "K-NN model needs at least one training sample")
        ensure(1 <= self.k <= self.train_inputs.shape[0], "K must be in [1, training size]")


def knn_fit(dataset: Dataset, split: Split, k: int = 5) -> KnnModel:
    """Store the whole training portion (train + validation indices)."""
    idx = np.concatenate([split.train_idx, split.val_idx])
    idx.sort()
    targets = encode_targets(dataset.field, dataset.xs)
    return KnnModel(train_inputs=dataset.ys[idx], train_targets=targets[idx], k=k)


def knn_predict(model: KnnModel, y: np.ndarray) -> np.ndarray:
    """Unweighted mean of the targets of the K nearest stored inputs."""
    ensure(y.ndim == 1, "query must be a vector")
    return knn_predict_batch(model, y[None, :])[0]


def knn_predict_batch(model: KnnModel, ys: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Batched K-NN prediction; ties broken toward lower training index."""
    ensure(ys.ndim == 2, "queries must be a matrix")
    ensure(ys.shape[1] == model.train_inputs.shape[1], "query dim must match training inputs")
    base = (model.train_inputs * model.train_inputs).sum(axis=1)
    out = np.empty((ys.shape[0], model.train_targets.shape[1]))
    for start in range(0, ys.shape[0], chunk):
        block = ys[start : start + chunk]
        d2 = base - 2.0 * (block @ model.train_inputs.T)
        d2 += (block * block).sum(axis=1)[:, None]
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : model.k]
        out[start : start + chunk] = model.train_targets[nearest].mean(axis=1)
    return out


def predict_batch(model, ys: np.ndarray) -> np.ndarray:
    """Uniform prediction entry point for MLPs, K-NN models, and callables."""
    if isinstance(model, MlpModel):
        return mlp_forward_batch(model, ys)
    if isinstance(model, KnnModel):
        return knn_predict_batch(model, ys)
    if callable(model):
        return np.asarray(model(ys))
    raise ContractViolation(f"cannot predict with {type(model).__name__}")


def save_model(model: MlpModel, path) -> None:
    """Write an MLP checkpoint in the GPRM binary format."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, model.field.code, len(model.layer_dims)))
        fh.write(np.asarray(model.layer_dims, dtype="<u4").tobytes())
        for w, b in zip(model.weights, model.biases):
            fh.write(w.astype("<f8").tobytes())
            fh.write(b.astype("<f8").tobytes())


def load_model(path) -> MlpModel:
    """Read a GPRM checkpoint; round-trips :func:`save_model` bit-exactly."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size or blob[:4] != _MAGIC:
        raise BadMagicError(f"{path}: not a GPRM checkpoint file")
    magic, version, field_code, n_dims = _HEADER.unpack_from(blob)
    if version != _VERSION:
        raise VersionMismatchError(f"{path}: GPRM version {version}, this build reads {_VERSION}")
    offset = _HEADER.size
    dims_end = offset + 4 * n_dims
    if len(blob) < dims_end:
        raise TruncatedPayloadError(f"{path}: dimension list truncated")
    dims = np.frombuffer(blob, dtype="<u4", count=n_dims, offset=offset).tolist()
    n_params = sum((d_in + 1) * d_out for d_in, d_out in zip(dims[:-1], dims[1:]))
    expected = dims_end + 8 * n_params
    if len(blob) != expected:
        raise TruncatedPayloadError(f"{path}: expected {expected} bytes, found {len(blob)}")
    floats = np.frombuffer(blob, dtype="<f8", offset=dims_end)
    weights, biases = [], []
    pos = 0
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        weights.append(floats[pos : pos + d_in * d_out].reshape(d_in, d_out).copy())
        pos += d_in * d_out
        biases.append(floats[pos : pos + d_out].copy())
        pos += d_out
    return MlpModel(
        layer_dims=dims, weights=weights, biases=biases, field=Field.from_code(field_code)
    )
