"""The layer set: dense, activations, batch norm, 1-d conv/pool, BiLSTM.

Backward passes are exact chain-rule implementations validated against
central finite differences (see the gradient-check test suite).
"""

from __future__ import annotations

import numpy as np

from .core import (
    ConfigurationError,
    Layer,
    Parameter,
    ShapeError,
    assert_finite,
    uniform_init,
)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_rows(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


def conv_output_length(length: int, kernel: int, stride: int) -> int:
    """floor((L - k) / s) + 1, the valid-padding output length."""
    return (length - kernel) // stride + 1


class Linear(Layer):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(uniform_init(rng, (in_features, out_features), in_features), "weight")
        self.bias = Parameter(uniform_init(rng, (out_features,), in_features), "bias")

    def parameters(self):
        return [self.weight, self.bias]

    def spec(self):
        return f"Linear({self.in_features},{self.out_features})"

    def forward(self, x, train=True):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(f"{self.spec()}: expected (N,{self.in_features}), got {x.shape}")
        if train:
            self._ctx = x
        return assert_finite(self.spec(), x @ self.weight.value + self.bias.value)

    def backward(self, grad_out):
        x = self._take_ctx()
        self.weight.grad += x.T @ grad_out
        self.bias.grad += grad_out.sum(axis=0)
        return grad_out @ self.weight.value.T


class ReLU(Layer):
    def forward(self, x, train=True):
        out = np.maximum(x, 0.0)
        if train:
            self._ctx = x > 0
        return out

    def backward(self, grad_out):
        return grad_out * self._take_ctx()


class Sigmoid(Layer):
    def forward(self, x, train=True):
        out = _sigmoid(x)
        if train:
            self._ctx = out
        return assert_finite("Sigmoid", out)

    def backward(self, grad_out):
        y = self._take_ctx()
        return grad_out * y * (1.0 - y)


class Softmax(Layer):
    """Row-wise softmax with max subtraction."""

    def forward(self, x, train=True):
        out = softmax_rows(x)
        if train:
            self._ctx = out
        return assert_finite("Softmax", out)

    def backward(self, grad_out):
        y = self._take_ctx()
        inner = (grad_out * y).sum(axis=-1, keepdims=True)
        return y * (grad_out - inner)


class BatchNorm1d(Layer):
    """Per-feature batch normalization with affine scale/shift.

    Accepts (N, F) or (N, C, L) input, normalizing over the batch (and
    length) axes.  Train mode uses biased batch statistics and updates
    running estimates with momentum 0.1; eval mode applies the running
    estimates and keeps no context.
    """

    EPS = 1e-5
    MOMENTUM = 0.1

    def __init__(self, num_features: int):
        super().__init__()
        self.num_features = num_features
        self.gamma = Parameter(np.ones(num_features), "gamma")
        self.beta = Parameter(np.zeros(num_features), "beta")
        self.running_mean = np.zeros(num_features)
        self.running_var = np.ones(num_features)

    def parameters(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]

    def spec(self):
        return f"BatchNorm1d({self.num_features})"

    def _axes_and_views(self, x):
        if x.ndim == 2:
            if x.shape[1] != self.num_features:
                raise ShapeError(f"{self.spec()}: expected (N,{self.num_features}), got {x.shape}")
            return (0,), (1, -1)
        if x.ndim == 3:
            if x.shape[1] != self.num_features:
                raise ShapeError(f"{self.spec()}: expected (N,{self.num_features},L), got {x.shape}")
            return (0, 2), (1, -1, 1)
        raise ShapeError(f"{self.spec()}: expected 2-d or 3-d input, got {x.shape}")

    def forward(self, x, train=True):
        axes, view = self._axes_and_views(x)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            inv_std = 1.0 / np.sqrt(var + self.EPS)
            xhat = (x - mean.reshape(view)) * inv_std.reshape(view)
            n_eff = x.size // self.num_features
            self._ctx = (xhat, inv_std, axes, view, n_eff)
            self.running_mean += self.MOMENTUM * (mean - self.running_mean)
            self.running_var += self.MOMENTUM * (var - self.running_var)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.EPS)
            xhat = (x - self.running_mean.reshape(view)) * inv_std.reshape(view)
        out = self.gamma.value.reshape(view) * xhat + self.beta.value.reshape(view)
        return assert_finite(self.spec(), out)

    def backward(self, grad_out):
        xhat, inv_std, axes, view, n_eff = self._take_ctx()
        self.gamma.grad += (grad_out * xhat).sum(axis=axes)
        self.beta.grad += grad_out.sum(axis=axes)
        dxhat = grad_out * self.gamma.value.reshape(view)
        term = (n_eff * dxhat
                - dxhat.sum(axis=axes, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True))
        return inv_std.reshape(view) * term / n_eff


class Conv1D(Layer):
    """Valid (unpadded) 1-d convolution over (N, C, L) input."""

    def __init__(self, in_channels: int, filters: int, kernel: int, stride: int,
                 rng: np.random.Generator):
        super().__init__()
        if min(filters, kernel, stride) < 1:
            raise ConfigurationError("Conv1D parameters must be positive")
        self.in_channels = in_channels
        self.filters = filters
        self.kernel = kernel
        self.stride = stride
        fan_in = in_channels * kernel
        self.weight = Parameter(uniform_init(rng, (filters, in_channels, kernel), fan_in), "weight")
        self.bias = Parameter(uniform_init(rng, (filters,), fan_in), "bias")

    def parameters(self):
        return [self.weight, self.bias]

    def spec(self):
        return f"Conv1D({self.filters},({self.kernel}),{self.stride})"

    def _windows(self, x):
        length = x.shape[2]
        l_out = conv_output_length(length, self.kernel, self.stride)
        if l_out <= 0:
            raise ConfigurationError(
                f"{self.spec()}: input length {length} yields output length {l_out}"
            )
        win = np.lib.stride_tricks.sliding_window_view(x, self.kernel, axis=2)
        # materialize once: both matmuls reuse the same contiguous buffer
        return np.ascontiguousarray(win[:, :, ::self.stride, :]), l_out

    def forward(self, x, train=True):
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(f"{self.spec()}: expected (N,{self.in_channels},L), got {x.shape}")
        windows, _ = self._windows(x)
        # contraction over (channel, kernel) as one BLAS matmul
        out = np.einsum("nclk,fck->nfl", windows, self.weight.value, optimize=True)
        out += self.bias.value[None, :, None]
        if train:
            self._ctx = (windows, x.shape)
        return assert_finite(self.spec(), out)

    def backward(self, grad_out):
        windows, x_shape = self._take_ctx()
        self.weight.grad += np.einsum("nclk,nfl->fck", windows, grad_out, optimize=True)
        self.bias.grad += grad_out.sum(axis=(0, 2))
        dx = np.zeros(x_shape)
        l_out = grad_out.shape[2]
        span = (l_out - 1) * self.stride
        for k in range(self.kernel):
            contrib = np.einsum("nfl,fc->ncl", grad_out, self.weight.value[:, :, k],
                                optimize=True)
            dx[:, :, k:k + span + 1:self.stride] += contrib
        return dx


class AvgPool1D(Layer):
    """Valid (unpadded) 1-d average pooling over (N, C, L) input."""

    def __init__(self, kernel: int, stride: int):
        super().__init__()
        if min(kernel, stride) < 1:
            raise ConfigurationError("AvgPool1D parameters must be positive")
        self.kernel = kernel
        self.stride = stride

    def spec(self):
        return f"AvgPool1D(({self.kernel}),{self.stride})"

    def forward(self, x, train=True):
        if x.ndim != 3:
            raise ShapeError(f"{self.spec()}: expected (N,C,L), got {x.shape}")
        length = x.shape[2]
        l_out = conv_output_length(length, self.kernel, self.stride)
        if l_out <= 0:
            raise ConfigurationError(
                f"{self.spec()}: input length {length} yields output length {l_out}"
            )
        win = np.lib.stride_tricks.sliding_window_view(x, self.kernel, axis=2)
        out = win[:, :, ::self.stride, :].mean(axis=3)
        if train:
            self._ctx = (x.shape, l_out)
        return out

    def backward(self, grad_out):
        x_shape, l_out = self._take_ctx()
        dx = np.zeros(x_shape)
        share = grad_out / self.kernel
        span = (l_out - 1) * self.stride
        for k in range(self.kernel):
            dx[:, :, k:k + span + 1:self.stride] += share
        return dx


class Flatten(Layer):
    def forward(self, x, train=True):
        if train:
            self._ctx = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._take_ctx())


class ChannelReshape(Layer):
    """(N, D) -> (N, 1, D): present a flat embedding as one conv channel."""

    def forward(self, x, train=True):
        if x.ndim != 2:
            raise ShapeError(f"ChannelReshape: expected (N,D), got {x.shape}")
        if train:
            self._ctx = x.shape
        return x[:, None, :]

    def backward(self, grad_out):
        self._take_ctx()
        return grad_out[:, 0, :]


class SequenceReshape(Layer):
    """(N, D) -> (N, ceil(D/step), step), zero-padding the tail."""

    def __init__(self, step: int):
        super().__init__()
        self.step = step

    def spec(self):
        return f"SequenceReshape({self.step})"

    def forward(self, x, train=True):
        if x.ndim != 2:
            raise ShapeError(f"{self.spec()}: expected (N,D), got {x.shape}")
        n, dim = x.shape
        steps = -(-dim // self.step)
        padded = np.zeros((n, steps * self.step))
        padded[:, :dim] = x
        if train:
            self._ctx = dim
        return padded.reshape(n, steps, self.step)

    def backward(self, grad_out):
        dim = self._take_ctx()
        n = grad_out.shape[0]
        return grad_out.reshape(n, -1)[:, :dim]


class LastStep(Layer):
    """(N, T, F) -> (N, F): keep the final time step."""

    def forward(self, x, train=True):
        if x.ndim != 3:
            raise ShapeError(f"LastStep: expected (N,T,F), got {x.shape}")
        if train:
            self._ctx = x.shape
        return x[:, -1, :]

    def backward(self, grad_out):
        shape = self._take_ctx()
        dx = np.zeros(shape)
        dx[:, -1, :] = grad_out
        return dx


class BiLSTM(Layer):
    """Stacked bidirectional LSTM over (N, T, F) input.

    Standard gate equations (input, forget, cell, output) per direction;
    each stacked layer consumes the 2*hidden concatenation of the layer
    below.  Output is the full sequence of concatenated per-step states,
    (N, T, 2*hidden).  Backward unrolls exactly through time.
    """

    def __init__(self, input_size: int, hidden_size: int, num_layers: int,
                 rng: np.random.Generator):
        super().__init__()
        if min(input_size, hidden_size, num_layers) < 1:
            raise ConfigurationError("BiLSTM sizes must be positive")
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        self._params: list[Parameter] = []
        self._weights: list[list[tuple[Parameter, Parameter, Parameter]]] = []
        h = hidden_size
        for layer in range(num_layers):
            in_size = input_size if layer == 0 else 2 * h
            per_direction = []
            for direction in ("fwd", "bwd"):
                wx = Parameter(uniform_init(rng, (in_size, 4 * h), in_size),
                               f"l{layer}.{direction}.wx")
                wh = Parameter(uniform_init(rng, (h, 4 * h), h), f"l{layer}.{direction}.wh")
                bias = np.zeros(4 * h)
                bias[h:2 * h] = 1.0  # forget-gate bias
                b = Parameter(bias, f"l{layer}.{direction}.b")
                per_direction.append((wx, wh, b))
                self._params.extend((wx, wh, b))
            self._weights.append(per_direction)

    def parameters(self):
        return list(self._params)

    def spec(self):
        return f"BiLSTM({self.input_size},{self.hidden_size},{self.num_layers})"

    def _run_direction(self, xs, weights, reverse: bool):
        """One direction over a (N, T, F) input; returns states + saved steps."""
        wx, wh, b = weights
        n, steps, _ = xs.shape
        h = self.hidden_size
        order = range(steps - 1, -1, -1) if reverse else range(steps)
        h_t = np.zeros((n, h))
        c_t = np.zeros((n, h))
        outputs = np.zeros((n, steps, h))
        saved = []
        for t in order:
            pre = xs[:, t, :] @ wx.value + h_t @ wh.value + b.value
            i = _sigmoid(pre[:, :h])
            f = _sigmoid(pre[:, h:2 * h])
            g = np.tanh(pre[:, 2 * h:3 * h])
            o = _sigmoid(pre[:, 3 * h:])
            c_prev = c_t
            c_t = f * c_prev + i * g
            tanh_c = np.tanh(c_t)
            h_prev = h_t
            h_t = o * tanh_c
            outputs[:, t, :] = h_t
            saved.append((t, i, f, g, o, c_prev, tanh_c, h_prev))
        return outputs, saved

    def _backprop_direction(self, xs, weights, saved, grad_states):
        """BPTT for one direction; returns the gradient wrt the direction input."""
        wx, wh, b = weights
        n, steps, _ = xs.shape
        h = self.hidden_size
        dx = np.zeros_like(xs)
        dh_next = np.zeros((n, h))
        dc_next = np.zeros((n, h))
        for t, i, f, g, o, c_prev, tanh_c, h_prev in reversed(saved):
            dh = grad_states[:, t, :] + dh_next
            do = dh * tanh_c
            dc = dc_next + dh * o * (1.0 - tanh_c ** 2)
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            dpre = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g ** 2),
                do * o * (1.0 - o),
            ], axis=1)
            wx.grad += xs[:, t, :].T @ dpre
            wh.grad += h_prev.T @ dpre
            b.grad += dpre.sum(axis=0)
            dx[:, t, :] += dpre @ wx.value.T
            dh_next = dpre @ wh.value.T
        return dx

    def forward(self, x, train=True):
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ShapeError(f"{self.spec()}: expected (N,T,{self.input_size}), got {x.shape}")
        layer_inputs = []
        current = x
        all_saved = []
        for layer in range(self.num_layers):
            layer_inputs.append(current)
            fwd_out, fwd_saved = self._run_direction(current, self._weights[layer][0], False)
            bwd_out, bwd_saved = self._run_direction(current, self._weights[layer][1], True)
            current = np.concatenate([fwd_out, bwd_out], axis=2)
            all_saved.append((fwd_saved, bwd_saved))
        if train:
            self._ctx = (layer_inputs, all_saved)
        return assert_finite(self.spec(), current)

    def backward(self, grad_out):
        layer_inputs, all_saved = self._take_ctx()
        h = self.hidden_size
        grad = grad_out
        for layer in range(self.num_layers - 1, -1, -1):
            xs = layer_inputs[layer]
            fwd_saved, bwd_saved = all_saved[layer]
            dx_fwd = self._backprop_direction(xs, self._weights[layer][0], fwd_saved, grad[:, :, :h])
            dx_bwd = self._backprop_direction(xs, self._weights[layer][1], bwd_saved, grad[:, :, h:])
            grad = dx_fwd + dx_bwd
        return grad
