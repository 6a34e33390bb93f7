"""Minimal float64 tensor engine: layers, reverse-mode gradients, Adam."""

from .core import (
    ConfigurationError,
    Layer,
    NumericError,
    Parameter,
    Sequential,
    ShapeError,
    StateError,
    assert_finite,
    uniform_init,
)
from .layers import (
    AvgPool1D,
    BatchNorm1d,
    BiLSTM,
    ChannelReshape,
    Conv1D,
    Flatten,
    LastStep,
    Linear,
    ReLU,
    SequenceReshape,
    Sigmoid,
    Softmax,
    conv_output_length,
    softmax_rows,
)
from .losses import cross_entropy
from .optim import Adam
from .checkpoint import CheckpointError, load_tensors, save_tensors

__all__ = [
    "Adam", "AvgPool1D", "BatchNorm1d", "BiLSTM", "ChannelReshape",
    "CheckpointError", "ConfigurationError", "Conv1D", "Flatten", "LastStep",
    "Layer", "Linear", "NumericError", "Parameter", "ReLU", "Sequential",
    "SequenceReshape", "ShapeError", "Sigmoid", "Softmax", "StateError",
    "assert_finite", "conv_output_length", "cross_entropy", "load_tensors",
    "save_tensors", "softmax_rows", "uniform_init",
]
