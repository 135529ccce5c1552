#  Copyright (c) "ACP-HOI Authors"
#  #
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#  #
#      https://www.apache.org/licenses/LICENSE-2.0
#  #
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
"""Differentiable primitives with explicit backward functions.

All arrays are float64. Forward functions raise ``NonFiniteError`` as soon as
a NaN or an infinity appears.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np
from scipy.special import expit, log_softmax, softmax

from acp_hoi.exceptions import LossInputError, ShapeMismatchError
from acp_hoi.types import FloatArray
from acp_hoi.utils import ensure_finite

EPS = 1e-12
"""Probability clamp used inside logarithms."""


class LossTerm(NamedTuple):
    value: float
    grad: FloatArray


def dense(x: FloatArray, weights: FloatArray, bias: FloatArray) -> FloatArray:
    """Affine map ``x @ weights + bias`` over a batch of row vectors."""
    if x.ndim != 2 or weights.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ShapeMismatchError(
            f"dense: input {x.shape} does not match weights {weights.shape}"
        )
    if bias.shape != (weights.shape[1],):
        raise ShapeMismatchError(
            f"dense: bias {bias.shape} does not match weights {weights.shape}"
        )
    out = x @ weights + bias
    ensure_finite(out, "dense")
    return out


def dense_backward(
    grad_out: FloatArray, x: FloatArray, weights: FloatArray
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Gradients of :func:`dense` w.r.t. input, weights and bias."""
    return grad_out @ weights.T, x.T @ grad_out, grad_out.sum(axis=0)


def relu(x: FloatArray) -> FloatArray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: FloatArray, x: FloatArray) -> FloatArray:
    return grad_out * (x > 0.0)


def sigmoid(x: FloatArray) -> FloatArray:
    out: FloatArray = expit(x)
    ensure_finite(out, "sigmoid")
    return out


def sigmoid_backward(grad_out: FloatArray, out: FloatArray) -> FloatArray:
    return grad_out * out * (1.0 - out)


def softmax_row(x: FloatArray, mask: Optional[np.ndarray] = None) -> FloatArray:
    """Row-wise softmax.

    Entries where ``mask`` is False get probability 0; every row must keep at
    least one entry.
    """
    ensure_finite(x, "softmax_row input")
    logits = x if mask is None else np.where(mask, x, -np.inf)
    out: FloatArray = softmax(logits, axis=1)
    return out


def softmax_row_backward(grad_out: FloatArray, out: FloatArray) -> FloatArray:
    inner = (grad_out * out).sum(axis=1, keepdims=True)
    return out * (grad_out - inner)


def _check_targets(pred: FloatArray, target: FloatArray, name: str) -> None:
    if pred.shape != target.shape:
        raise ShapeMismatchError(
            f"{name}: prediction {pred.shape} and target {target.shape} differ"
        )
    if np.any(target < 0.0) or np.any(target > 1.0):
        raise LossInputError(f"{name}: targets must lie in [0, 1]")


def bce(pred: FloatArray, target: FloatArray) -> LossTerm:
    """Mean binary cross-entropy and its gradient w.r.t. ``pred``.

    Predictions are clamped to ``[EPS, 1 - EPS]``; clamped entries get no gradient.
    """
    _check_targets(pred, target, "bce")
    p = np.clip(pred, EPS, 1.0 - EPS)
    n = max(pred.size, 1)
    value = float(-np.sum(target * np.log(p) + (1.0 - target) * np.log1p(-p)) / n)
    grad = (p - target) / (p * (1.0 - p)) / n
    grad = np.where((pred > EPS) & (pred < 1.0 - EPS), grad, 0.0)
    ensure_finite(np.asarray(value), "bce")
    return LossTerm(value, grad)


def ce_softmax(logits: FloatArray, one_hot: FloatArray) -> LossTerm:
    """Mean softmax cross-entropy over rows and its gradient w.r.t. ``logits``."""
    _check_targets(logits, one_hot, "ce_softmax")
    rows = max(logits.shape[0], 1)
    log_probs = log_softmax(logits, axis=1)
    value = float(-np.sum(one_hot * log_probs) / rows)
    grad = (np.exp(log_probs) * one_hot.sum(axis=1, keepdims=True) - one_hot) / rows
    ensure_finite(np.asarray(value), "ce_softmax")
    return LossTerm(value, grad)
