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

import hashlib
import io
import logging
from typing import Literal, Optional

import numpy as np
from fsspec import AbstractFileSystem

from acp_hoi.exceptions import CheckpointError, ShapeMismatchError
from acp_hoi.file_io import PathLike, read_bytes, write_bytes
from acp_hoi.types import FloatArray

logger = logging.getLogger(__name__)


def glorot_uniform(
    rng: np.random.Generator, shape: tuple[int, ...]
) -> FloatArray:
    """Uniform(-a, a) with ``a = sqrt(6 / (fan_in + fan_out))``."""
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class ParamStore:
    """Named parameters and their gradient accumulators.

    Parameters are created in a fixed order from one seeded generator, so a
    store built with the same calls and seed is bit-identical.

    Example:

    .. code-block:: python

        store = ParamStore(seed=0)
        weights = store.add("stream.h.0.W", (16, 64))
        bias = store.add("stream.h.0.b", (64,), init="zeros")
    """

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.params: dict[str, FloatArray] = {}
        self.grads: dict[str, FloatArray] = {}

    def add(
        self,
        name: str,
        shape: tuple[int, ...],
        init: Literal["glorot", "zeros"] = "glorot",
    ) -> FloatArray:
        if name in self.params:
            raise ValueError(f"Parameter {name} already exists")
        if init == "glorot":
            value = glorot_uniform(self.rng, shape)
        else:
            value = np.zeros(shape, dtype=np.float64)
        self.params[name] = value
        self.grads[name] = np.zeros(shape, dtype=np.float64)
        return value

    def __getitem__(self, name: str) -> FloatArray:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self) -> list[str]:
        return list(self.params)

    @property
    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def accumulate(self, name: str, grad: FloatArray) -> None:
        slot = self.grads[name]
        if slot.shape != grad.shape:
            raise ShapeMismatchError(
                f"Gradient for {name} has shape {grad.shape}, expected {slot.shape}"
            )
        slot += grad

    def zero_grad(self) -> None:
        for grad in self.grads.values():
            grad.fill(0.0)

    def grad_copy(self) -> dict[str, FloatArray]:
        return {name: grad.copy() for name, grad in self.grads.items()}

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for name in sorted(self.params):
            digest.update(name.encode("utf-8"))
            digest.update(np.ascontiguousarray(self.params[name]).tobytes())
        return digest.hexdigest()


def save_checkpoint(
    store: ParamStore, path: PathLike, fs: Optional[AbstractFileSystem] = None
) -> None:
    """Write every parameter as a named little-endian float64 tensor."""
    buffer = io.BytesIO()
    np.savez(
        buffer,
        __seed__=np.array(store.seed, dtype=np.int64),
        **{name: value.astype("<f8") for name, value in store.params.items()},
    )
    write_bytes(path, buffer.getvalue(), fs)
    logger.info(f"Checkpoint with {store.n_parameters} parameters written to {path}")


def load_checkpoint(
    path: PathLike, fs: Optional[AbstractFileSystem] = None
) -> ParamStore:
    try:
        with np.load(io.BytesIO(read_bytes(path, fs)), allow_pickle=False) as data:
            store = ParamStore(seed=int(data["__seed__"]))
            for name in data.files:
                if name == "__seed__":
                    continue
                store.params[name] = data[name].astype(np.float64)
                store.grads[name] = np.zeros_like(store.params[name])
    except (KeyError, ValueError, OSError) as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}")
    return store
