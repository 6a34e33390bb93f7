"""The five benchmark classifier architectures and their training loop.

All architectures are trained the same way: mini-batches of 64, Adam at
lr 0.001, cross-entropy on the pre-activation scores, and an early-stop
rule that fires after `patience` consecutive epochs of falling train
loss with rising validation loss.  Weights are restored to the best
validation epoch when training stops.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import nn
from .seeding import derive_seed


class Architecture(Enum):
    ANN = "ann"
    CNN1D = "cnn"
    LOGREG = "logreg"
    LSTM = "lstm"
    AUTOENCODER = "autoencoder"


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 0.001
    max_epochs: int = 500
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 1 <= self.max_epochs <= 500:
            raise ValueError("max_epochs must lie in [1, 500]")


@dataclass
class TrainHistory:
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    stop_epoch: int = 0
    stop_reason: str = ""
    best_epoch: int = 0
    best_val_loss: float = float("inf")

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,val_loss"]
        for i, (tr, va) in enumerate(zip(self.train_losses, self.val_losses), start=1):
            lines.append(f"{i},{tr!r},{va!r}")
        return "\n".join(lines) + "\n"


class EarlyStopMonitor:
    """Counts consecutive epochs with train loss down and val loss up."""

    def __init__(self, patience: int):
        self.patience = patience
        self.streak = 0
        self._prev_train: float | None = None
        self._prev_val: float | None = None

    def update(self, train_loss: float, val_loss: float) -> bool:
        """Record one epoch; returns True when training should stop."""
        if self._prev_train is not None:
            if train_loss < self._prev_train and val_loss > self._prev_val:
                self.streak += 1
            else:
                self.streak = 0
        self._prev_train = train_loss
        self._prev_val = val_loss
        return self.streak >= self.patience


class Model:
    """A layer stack producing 2-class scores plus its output activation.

    The stack ends at the final fully-connected layer; ``predict`` applies
    the architecture's activation (softmax, or sigmoid for the logistic
    model) on top, while training treats the raw scores as logits.
    """

    def __init__(self, arch: Architecture, input_dim: int, core: nn.Sequential,
                 output_activation: str):
        self.arch = arch
        self.input_dim = input_dim
        self.core = core
        self.output_activation = output_activation

    def parameters(self):
        return self.core.parameters()

    def buffers(self):
        return self.core.buffers()

    def count_parameters(self) -> int:
        return self.core.count_parameters()

    def logits(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise nn.ShapeError(f"expected (N,{self.input_dim}) features, got {x.shape}")
        return self.core.forward(np.asarray(x, dtype=np.float64), train)

    def state_tensors(self) -> list[tuple[str, np.ndarray]]:
        out = [(f"param.{i}", p.value) for i, p in enumerate(self.parameters())]
        out.extend((f"buffer.{name}", buf) for name, buf in self.buffers())
        return out

    def snapshot(self) -> list[np.ndarray]:
        return [arr.copy() for _, arr in self.state_tensors()]

    def restore(self, snapshot: list[np.ndarray]) -> None:
        for (_, arr), saved in zip(self.state_tensors(), snapshot):
            arr[...] = saved


def _cnn_stack(input_dim: int, rng) -> list[nn.Layer]:
    length = input_dim
    stages = [(1, 32, 2), (32, 64, 1), (64, 64, 1)]
    layers: list[nn.Layer] = [nn.ChannelReshape()]
    for in_ch, filters, stride in stages:
        for kind in ("conv", "pool"):
            length = nn.conv_output_length(length, 7, stride)
            if length <= 0:
                raise nn.ConfigurationError(
                    f"cnn cannot consume input dimension {input_dim}: "
                    f"a {kind} stage produces an empty output"
                )
            if kind == "conv":
                layers += [nn.Conv1D(in_ch, filters, 7, stride, rng), nn.ReLU()]
            else:
                layers += [nn.AvgPool1D(7, stride), nn.BatchNorm1d(filters)]
    layers.append(nn.Flatten())
    layers.append(nn.Linear(64 * length, 2, rng))
    return layers


def build_model(arch: Architecture, input_dim: int, seed: int = 0) -> Model:
    """Assemble one of the five benchmark architectures for ``input_dim`` features."""
    if input_dim < 1:
        raise nn.ConfigurationError("input_dim must be positive")
    rng = np.random.default_rng(derive_seed(seed, "init", arch.value, input_dim))

    if arch is Architecture.ANN:
        layers: list[nn.Layer] = []
        width = input_dim
        for _ in range(3):
            layers += [nn.Linear(width, 300, rng), nn.BatchNorm1d(300), nn.ReLU()]
            width = 300
        layers.append(nn.Linear(300, 2, rng))
        return Model(arch, input_dim, nn.Sequential(layers), "softmax")

    if arch is Architecture.CNN1D:
        return Model(arch, input_dim, nn.Sequential(_cnn_stack(input_dim, rng)), "softmax")

    if arch is Architecture.LOGREG:
        layers = [nn.Linear(input_dim, 200, rng), nn.Linear(200, 2, rng)]
        return Model(arch, input_dim, nn.Sequential(layers), "sigmoid")

    if arch is Architecture.LSTM:
        layers = [
            nn.SequenceReshape(16),
            nn.BiLSTM(16, 16, 2, rng),
            nn.LastStep(),
            nn.Linear(32, 2, rng),
        ]
        return Model(arch, input_dim, nn.Sequential(layers), "softmax")

    if arch is Architecture.AUTOENCODER:
        layers = [
            nn.Linear(input_dim, 96, rng), nn.ReLU(),
            nn.Linear(96, 48, rng), nn.ReLU(),
            nn.Linear(48, 48, rng), nn.ReLU(),
            nn.Linear(48, 96, rng), nn.ReLU(),
            nn.Linear(96, 2, rng),
        ]
        return Model(arch, input_dim, nn.Sequential(layers), "softmax")

    raise ValueError(f"unknown architecture {arch!r}")


def train(model: Model, train_set: tuple[np.ndarray, np.ndarray],
          val_set: tuple[np.ndarray, np.ndarray], config: TrainConfig) -> TrainHistory:
    """Fit ``model`` in place and return its loss history.

    The epoch shuffle stream is seeded from the config, so a fixed seed
    reproduces the history exactly.  Non-finite losses abort with the
    failing epoch in the error message.
    """
    x_train, y_train = train_set
    x_val, y_val = val_set
    if len(x_train) == 0 or len(x_val) == 0:
        raise ValueError("train() requires non-empty train and validation splits")

    optimizer = nn.Adam(model.parameters(), config.learning_rate)
    shuffler = np.random.default_rng(derive_seed(config.seed, "epoch-shuffle", model.arch.value))
    monitor = EarlyStopMonitor(config.patience)
    history = TrainHistory()
    best_snapshot = model.snapshot()

    n = len(x_train)
    for epoch in range(1, config.max_epochs + 1):
        order = shuffler.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            logits = model.logits(x_train[batch], train=True)
            loss, grad = nn.cross_entropy(logits, y_train[batch])
            model.core.backward(grad)
            optimizer.step()
            total += loss * len(batch)
        train_loss = total / n

        val_logits = model.logits(x_val, train=False)
        val_loss, _ = nn.cross_entropy(val_logits, y_val)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise nn.NumericError(f"loss diverged at epoch {epoch}")

        history.train_losses.append(train_loss)
        history.val_losses.append(val_loss)
        if val_loss < history.best_val_loss:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best_snapshot = model.snapshot()
        history.stop_epoch = epoch
        if monitor.update(train_loss, val_loss):
            history.stop_reason = "early_stop"
            break
    else:
        history.stop_reason = "max_epochs"

    model.restore(best_snapshot)
    return history


def predict(model: Model, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(per-class scores, hard labels); ties break toward class 0."""
    logits = model.logits(features, train=False)
    if model.output_activation == "sigmoid":
        scores = 1.0 / (1.0 + np.exp(-np.clip(logits, -500, 500)))
    else:
        scores = nn.softmax_rows(logits)
    labels = np.argmax(scores, axis=1)
    return scores, labels


# -- checkpoint wrappers ---------------------------------------------------

def save_model(path, model: Model) -> None:
    nn.save_tensors(path, model.core.spec(), model.state_tensors(), extra={
        "arch": model.arch.value,
        "input_dim": model.input_dim,
    })


def load_model(path) -> Model:
    layer_spec, tensors, extra = nn.load_tensors(path)
    model = build_model(Architecture(extra["arch"]), int(extra["input_dim"]))
    if model.core.spec() != layer_spec:
        raise nn.CheckpointError(
            f"{path}: checkpoint layer spec {layer_spec!r} does not match "
            f"rebuilt architecture {model.core.spec()!r}"
        )
    for name, arr in model.state_tensors():
        saved = tensors[name]
        if saved.shape != arr.shape:
            raise nn.CheckpointError(f"{path}: tensor {name!r} shape mismatch")
        arr[...] = saved
    return model
