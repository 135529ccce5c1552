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
from __future__ import annotations

import abc
import logging

import numpy as np

from acp_hoi.nn.params import ParamStore
from acp_hoi.types import FloatArray
from acp_hoi.utils import ensure_finite

logger = logging.getLogger(__name__)


def _check_gradients(store: ParamStore) -> None:
    for name, grad in store.grads.items():
        ensure_finite(grad, f"gradient of {name}")


def sgd_step(store: ParamStore, lr: float) -> None:
    """Plain gradient descent update, then gradients are zeroed."""
    _check_gradients(store)
    for name, param in store.params.items():
        param -= lr * store.grads[name]
    store.zero_grad()


class AdamState:
    """First and second moment estimates and the step counter of Adam."""

    def __init__(self) -> None:
        self.m: dict[str, FloatArray] = {}
        self.v: dict[str, FloatArray] = {}
        self.t = 0


def adam_step(
    store: ParamStore,
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Adam update with bias correction, then gradients are zeroed."""
    _check_gradients(store)
    state.t += 1
    correction1 = 1.0 - beta1**state.t
    correction2 = 1.0 - beta2**state.t
    for name, param in store.params.items():
        grad = store.grads[name]
        m = state.m.setdefault(name, np.zeros_like(param))
        v = state.v.setdefault(name, np.zeros_like(param))
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        param -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
    store.zero_grad()


class Optimizer(abc.ABC):
    """Interface of the update rules used by the trainer."""

    @abc.abstractmethod
    def step(self, store: ParamStore) -> None:
        pass


class Sgd(Optimizer):
    def __init__(self, lr: float) -> None:
        self.lr = lr

    def step(self, store: ParamStore) -> None:
        sgd_step(store, self.lr)


class Adam(Optimizer):
    def __init__(
        self,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState()

    def step(self, store: ParamStore) -> None:
        adam_step(store, self.state, self.lr, self.beta1, self.beta2, self.eps)
