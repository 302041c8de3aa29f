"""Reference digital classifier: a 400-23-10 sigmoid network.

Trains with plain mini-batch SGD on the mean-square error and serves two
roles: it produces the weight matrices the optical chain encodes, and it
is the all-digital baseline the chain's accuracy is measured against.
The bias of each layer is folded in as an extra weight column multiplying
a constant "virtual" activation of 1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, FormatError, TrainingError
from .receiver import output_distribution, sigmoid

WEIGHTS_MAGIC = b"SNNW"
WEIGHTS_VERSION = 1


def hidden_size(n_input: int, n_output: int, n_emp: int) -> int:
    """Empirical hidden-layer sizing: floor(sqrt(in + out)) + n_emp."""
    if not 0 <= n_emp <= 10:
        raise ConfigurationError(f"empirical offset must be in [0, 10], got {n_emp}")
    return int(np.floor(np.sqrt(n_input + n_output))) + n_emp


@dataclass(eq=False)
class NetworkParams:
    """Two signed weight matrices with the bias as the last column.

    w_max, when set, is the global maximum |weight| across both matrices,
    persisted with the weights because the encoder normalizes against it.
    """

    w12: np.ndarray  # (hidden, inputs + 1)
    w23: np.ndarray  # (outputs, hidden + 1)
    w_max: float | None = None

    def __post_init__(self):
        self.w12 = np.asarray(self.w12, dtype=np.float64)
        self.w23 = np.asarray(self.w23, dtype=np.float64)
        if self.w12.ndim != 2 or self.w23.ndim != 2:
            raise ConfigurationError("weight matrices must be 2-D")
        if self.w23.shape[1] != self.w12.shape[0] + 1:
            raise ConfigurationError(
                f"layer shapes inconsistent: {self.w12.shape} -> {self.w23.shape}"
            )

    def global_weight_max(self) -> float:
        return float(max(np.max(np.abs(self.w12)), np.max(np.abs(self.w23))))

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.w12.copy(), self.w23.copy(), self.w_max)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.3
    epochs: int = 8
    batch_size: int = 10
    seed: int = 42

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ConfigurationError("training hyperparameters must be positive")


def init_params(
    n_input: int = 400, n_hidden: int = 23, n_output: int = 10, seed: int = 42
) -> NetworkParams:
    """Uniform init in +-1/sqrt(fan_in), bias column included."""
    rng = np.random.default_rng(seed)
    b1 = 1.0 / np.sqrt(n_input + 1)
    b2 = 1.0 / np.sqrt(n_hidden + 1)
    w12 = rng.uniform(-b1, b1, size=(n_hidden, n_input + 1))
    w23 = rng.uniform(-b2, b2, size=(n_output, n_hidden + 1))
    return NetworkParams(w12, w23)


def _append_ones(x: np.ndarray) -> np.ndarray:
    if x.ndim == 1:
        return np.concatenate([x, [1.0]])
    return np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)


def forward(params: NetworkParams, x: np.ndarray):
    """One sample through the network.

    Returns (hidden activations, output activations, normalized output
    distribution).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.w12.shape[1] - 1,):
        raise ConfigurationError(
            f"input length {x.shape} does not match {params.w12.shape[1] - 1}"
        )
    h = sigmoid(params.w12 @ _append_ones(x))
    y = sigmoid(params.w23 @ _append_ones(h))
    return h, y, output_distribution(y)


def forward_batch(params: NetworkParams, x: np.ndarray):
    """Vectorized forward pass for (n, inputs) batches -> (H, Y)."""
    a1 = _append_ones(np.asarray(x, dtype=np.float64))
    h = sigmoid(a1 @ params.w12.T)
    y = sigmoid(_append_ones(h) @ params.w23.T)
    return h, y


def _mse_gradients(params: NetworkParams, x: np.ndarray, targets: np.ndarray):
    """Backprop of the 1/2 sum((y - t)^2) loss, averaged over the batch."""
    a1 = _append_ones(x)
    h = sigmoid(a1 @ params.w12.T)
    a2 = _append_ones(h)
    y = sigmoid(a2 @ params.w23.T)
    batch = x.shape[0]
    delta_out = (y - targets) * y * (1.0 - y)
    g23 = delta_out.T @ a2 / batch
    delta_hid = (delta_out @ params.w23[:, :-1]) * h * (1.0 - h)
    g12 = delta_hid.T @ a1 / batch
    return g12, g23, y


def batch_loss(params: NetworkParams, x: np.ndarray, targets: np.ndarray) -> float:
    """Mean over samples of 1/2 sum((y - t)^2)."""
    _, y = forward_batch(params, x)
    return float(0.5 * np.sum((y - targets) ** 2) / x.shape[0])


def one_hot(labels: np.ndarray, n_classes: int = 10) -> np.ndarray:
    eye = np.eye(n_classes)
    return eye[np.asarray(labels, dtype=np.int64)]


def train_sgd(dataset, config: TrainConfig, n_hidden: int | None = None):
    """Mini-batch SGD training, deterministic for a given seed.

    Evaluates the validation split after every epoch and returns the
    parameters of the best validation epoch together with the per-epoch
    validation accuracy curve.
    """
    n_input = dataset.train_images.shape[1]
    if n_hidden is None:
        n_hidden = hidden_size(n_input, 10, 3)
    params = init_params(n_input, n_hidden, 10, config.seed)
    rng = np.random.default_rng(config.seed)
    targets = one_hot(dataset.train_labels)
    best = params.copy()
    best_acc = -1.0
    curve: list[float] = []
    n_train = dataset.train_images.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n_train)
        for lo in range(0, n_train, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            g12, g23, y = _mse_gradients(params, dataset.train_images[idx], targets[idx])
            if not np.all(np.isfinite(y)):
                raise TrainingError("training diverged: non-finite activations")
            params.w12 -= config.learning_rate * g12
            params.w23 -= config.learning_rate * g23
        acc, _ = evaluate(params, dataset.val_images, dataset.val_labels)
        curve.append(acc)
        if acc > best_acc:
            best_acc = acc
            best = params.copy()
    result = best if config.epochs > 0 else params
    result.w_max = result.global_weight_max()
    return result, curve


def evaluate(params: NetworkParams, images: np.ndarray, labels: np.ndarray):
    """Accuracy and 10x10 confusion matrix (row: true, column: predicted)."""
    _, y = forward_batch(params, images)
    predicted = np.argmax(y, axis=1)
    labels = np.asarray(labels, dtype=np.int64)
    confusion = np.zeros((10, 10), dtype=np.int64)
    np.add.at(confusion, (labels, predicted), 1)
    accuracy = float(np.trace(confusion)) / labels.shape[0]
    return accuracy, confusion


def save_weights(params: NetworkParams, path) -> None:
    """Versioned big-endian binary: layers, shapes, values, then w_max."""
    w_max = params.w_max if params.w_max is not None else params.global_weight_max()
    layers = [params.w12, params.w23]
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack(">II", WEIGHTS_VERSION, len(layers)))
        for w in layers:
            fh.write(struct.pack(">II", w.shape[0], w.shape[1]))
            fh.write(w.astype(">f8").tobytes())
        fh.write(struct.pack(">d", w_max))


def load_weights(path) -> NetworkParams:
    """Inverse of :func:`save_weights`; bitwise lossless."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != WEIGHTS_MAGIC:
        raise FormatError("not a weights file (bad magic)")
    version, n_layers = struct.unpack(">II", blob[4:12])
    if version != WEIGHTS_VERSION:
        raise FormatError(f"unsupported weights version {version}")
    if n_layers != 2:
        raise FormatError(f"expected 2 layers, found {n_layers}")
    offset = 12
    matrices = []
    for _ in range(n_layers):
        if offset + 8 > len(blob):
            raise FormatError("weights file truncated in layer header")
        rows, cols = struct.unpack(">II", blob[offset : offset + 8])
        offset += 8
        nbytes = rows * cols * 8
        if offset + nbytes > len(blob):
            raise FormatError("weights file truncated in layer payload")
        matrices.append(
            np.frombuffer(blob, dtype=">f8", count=rows * cols, offset=offset)
            .reshape(rows, cols)
            .astype(np.float64)
        )
        offset += nbytes
    if offset + 8 != len(blob):
        raise FormatError("weights file has trailing or missing bytes")
    (w_max,) = struct.unpack(">d", blob[offset : offset + 8])
    return NetworkParams(matrices[0], matrices[1], w_max)
