"""Adam with bias correction; coefficients are the standard defaults."""

from __future__ import annotations

import numpy as np

from .core import Parameter


class Adam:
    """Keeps first/second-moment state per parameter and a step counter.

    ``step()`` applies one bias-corrected update to every trainable
    parameter from its accumulated gradient, then zeroes the gradients.
    The update is computed in place through per-parameter scratch
    buffers; the bias correction is folded into the step size
    (lr * sqrt(1 - beta2^t) / (1 - beta1^t)), which is algebraically the
    standard corrected update.
    """

    def __init__(self, params: list[Parameter], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0.0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]
        self._scratch = [np.empty_like(p.value) for p in self.params]

    def step(self) -> None:
        self.t += 1
        correction2 = np.sqrt(1.0 - self.beta2 ** self.t)
        alpha = self.lr * correction2 / (1.0 - self.beta1 ** self.t)
        eps_hat = self.eps * correction2
        for p, m, v, scratch in zip(self.params, self.m, self.v, self._scratch):
            if not p.trainable:
                p.zero_grad()
                continue
            m *= self.beta1
            np.multiply(p.grad, 1.0 - self.beta1, out=scratch)
            m += scratch
            v *= self.beta2
            np.square(p.grad, out=scratch)
            scratch *= 1.0 - self.beta2
            v += scratch
            np.sqrt(v, out=scratch)
            scratch += eps_hat
            np.divide(m, scratch, out=scratch)
            scratch *= alpha
            p.value -= scratch
            p.zero_grad()
