"""Layer plumbing for the minimal dense-tensor training engine.

All math is float64: the finite-difference gradient checks this engine
is validated against are unreliable in 32-bit.  Every layer output is
checked for NaN/Inf so divergence surfaces as a typed error instead of
silently corrupted weights.
"""

from __future__ import annotations

import numpy as np


class NumericError(ArithmeticError):
    """A tensor stopped being finite."""


class ShapeError(ValueError):
    """Input shape incompatible with a layer."""


class ConfigurationError(ValueError):
    """Layer parameters cannot produce a valid output (e.g. empty conv output)."""


class StateError(RuntimeError):
    """backward() called without a preceding train-mode forward()."""


def assert_finite(name: str, arr: np.ndarray) -> np.ndarray:
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite values in {name}")
    return arr


class Parameter:
    """A trainable tensor with an accumulated gradient of the same shape."""

    def __init__(self, value: np.ndarray, name: str = "", trainable: bool = True):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.name = name
        self.trainable = trainable

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name or 'unnamed'}, shape={self.value.shape})"


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """U(-sqrt(1/fan_in), +sqrt(1/fan_in)), the engine's default weight init."""
    bound = float(np.sqrt(1.0 / fan_in))
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    """Base layer: forward saves context, backward consumes it once."""

    def __init__(self):
        self._ctx = None

    def parameters(self) -> list[Parameter]:
        return []

    def buffers(self) -> list[tuple[str, np.ndarray]]:
        """Non-trainable state (e.g. batch-norm running stats)."""
        return []

    def spec(self) -> str:
        return type(self).__name__

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _take_ctx(self):
        if self._ctx is None:
            raise StateError(f"{self.spec()}: backward() without a train-mode forward()")
        ctx, self._ctx = self._ctx, None
        return ctx


class Sequential(Layer):
    """Chains layers; backward walks them in reverse."""

    def __init__(self, layers: list[Layer]):
        super().__init__()
        self.layers = list(layers)

    def parameters(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.parameters()]

    def buffers(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            out.extend((f"{i}.{name}", buf) for name, buf in layer.buffers())
        return out

    def spec(self) -> str:
        return " -> ".join(layer.spec() for layer in self.layers)

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def count_parameters(self) -> int:
        return sum(p.value.size for p in self.parameters() if p.trainable)
