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
"""Two-layer perceptron block shared by the fusion streams and prediction heads."""

from __future__ import annotations

from typing import NamedTuple

from acp_hoi.nn.functional import dense, dense_backward, relu, relu_backward
from acp_hoi.nn.params import ParamStore
from acp_hoi.types import FloatArray


class MlpCache(NamedTuple):
    x: FloatArray
    pre1: FloatArray
    hidden: FloatArray
    pre2: FloatArray


def add_mlp(
    store: ParamStore, prefix: str, n_in: int, n_hidden: int, n_out: int
) -> None:
    store.add(f"{prefix}.0.W", (n_in, n_hidden))
    store.add(f"{prefix}.0.b", (n_hidden,), init="zeros")
    store.add(f"{prefix}.1.W", (n_hidden, n_out))
    store.add(f"{prefix}.1.b", (n_out,), init="zeros")


def mlp_forward(
    store: ParamStore, prefix: str, x: FloatArray, final_relu: bool
) -> tuple[FloatArray, MlpCache]:
    """``dense -> relu -> dense`` with an optional trailing relu."""
    pre1 = dense(x, store[f"{prefix}.0.W"], store[f"{prefix}.0.b"])
    hidden = relu(pre1)
    pre2 = dense(hidden, store[f"{prefix}.1.W"], store[f"{prefix}.1.b"])
    out = relu(pre2) if final_relu else pre2
    return out, MlpCache(x, pre1, hidden, pre2)


def mlp_backward(
    store: ParamStore,
    prefix: str,
    grad_out: FloatArray,
    cache: MlpCache,
    final_relu: bool,
) -> FloatArray:
    """Accumulate parameter gradients of the block and return the input gradient."""
    grad_pre2 = relu_backward(grad_out, cache.pre2) if final_relu else grad_out
    grad_hidden, grad_w1, grad_b1 = dense_backward(
        grad_pre2, cache.hidden, store[f"{prefix}.1.W"]
    )
    store.accumulate(f"{prefix}.1.W", grad_w1)
    store.accumulate(f"{prefix}.1.b", grad_b1)
    grad_x, grad_w0, grad_b0 = dense_backward(
        relu_backward(grad_hidden, cache.pre1), cache.x, store[f"{prefix}.0.W"]
    )
    store.accumulate(f"{prefix}.0.W", grad_w0)
    store.accumulate(f"{prefix}.0.b", grad_b0)
    return grad_x
