"""Cross-entropy loss, its fused softmax gradient, and the Adam optimizer.

The loss reduces to the batch mean by default (a ``reduction="sum"`` flag is
provided); predicted probabilities are clamped below at 1e-12 before the log
so a confidently wrong prediction yields a large finite loss, never infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ShapeError
from .layers import softmax

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LossValue:
    """Scalar loss over a batch, tagged with the batch size it reduced."""

    value: float
    batch_size: int

    def __float__(self):
        return float(self.value)


def _check_labels(labels, num_classes, batch):
    labels = np.asarray(labels)
    if labels.shape != (batch,):
        raise InputError(
            f"expected {batch} labels, got shape {labels.shape}"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        bad = labels[(labels < 0) | (labels >= num_classes)][0]
        raise InputError(
            f"label {bad} out of range for {num_classes} classes"
        )
    return labels.astype(np.int64)


def cross_entropy(probs: np.ndarray, labels, reduction: str = "mean") -> LossValue:
    """Negative log-likelihood of the true classes under predicted
    probabilities: the mean (or sum) over the batch of -log(probs[i, y_i])."""
    if probs.ndim != 2:
        raise ShapeError(f"cross_entropy expects (N, K) probabilities, got {probs.shape}")
    n, k = probs.shape
    labels = _check_labels(labels, k, n)
    picked = np.clip(probs[np.arange(n), labels], PROB_FLOOR, None)
    total = -np.log(picked).sum()
    if reduction == "mean":
        total = total / n
    elif reduction != "sum":
        raise InputError(f"unknown reduction {reduction!r}")
    return LossValue(float(total), n)


def softmax_ce_backward(logits: np.ndarray, labels, reduction: str = "mean") -> np.ndarray:
    """Gradient of cross_entropy(softmax(logits)) with respect to the logits:
    (softmax(logits) - onehot(labels)) / N for the mean reduction."""
    n, k = logits.shape
    labels = _check_labels(labels, k, n)
    grad = softmax(logits)
    grad[np.arange(n), labels] -= 1.0
    if reduction == "mean":
        grad /= n
    elif reduction != "sum":
        raise InputError(f"unknown reduction {reduction!r}")
    return grad.astype(logits.dtype, copy=False)


class Adam:
    """Adam with bias correction; first/second moments are zero-initialized
    per parameter on first sight and the step counter t increments once per
    ``step`` call, before use.

    Update per parameter:
        m <- b1*m + (1-b1)*g        v <- b2*v + (1-b2)*g^2
        mhat = m/(1-b1^t)           vhat = v/(1-b2^t)
        theta <- theta - lr * mhat / (sqrt(vhat) + eps)
    """

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        """Update ``params`` in place from ``grads`` (matched by key)."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, param in params.items():
            grad = grads[name]
            if grad.shape != param.shape:
                raise ShapeError(
                    f"gradient shape {grad.shape} does not match parameter "
                    f"{name} of shape {param.shape}"
                )
            if name not in self.m:
                self.m[name] = np.zeros_like(param)
                self.v[name] = np.zeros_like(param)
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(grad)
            param -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        return params
