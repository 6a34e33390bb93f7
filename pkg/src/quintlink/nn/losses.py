"""Cross-entropy on logits, fused with softmax for stable gradients."""

from __future__ import annotations

import numpy as np

from .core import NumericError
from .layers import softmax_rows


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean of -log softmax(logits)[label]; gradient is (softmax - onehot)/n.

    ``labels`` is an integer class vector (0/1 for the binary task).
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ValueError(f"expected (N,K) logits with N labels, got {logits.shape} / {labels.shape}")
    if not np.isfinite(logits).all():
        raise NumericError("non-finite logits passed to cross_entropy")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    n = logits.shape[0]
    picked = shifted[np.arange(n), labels]
    loss = float(np.mean(log_norm - picked))
    grad = softmax_rows(logits)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n
