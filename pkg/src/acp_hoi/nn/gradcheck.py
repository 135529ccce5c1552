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

import logging
from typing import Callable, Optional

import numpy as np

from acp_hoi.nn.params import ParamStore
from acp_hoi.types import FloatArray

logger = logging.getLogger(__name__)


def _coordinates(
    store: ParamStore, max_coordinates: int, seed: int
) -> list[tuple[str, int]]:
    names = store.names()
    sizes = np.array([store[name].size for name in names], dtype=np.int64)
    total = int(sizes.sum())
    if total <= max_coordinates:
        return [(name, k) for name in names for k in range(store[name].size)]
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(total, size=max_coordinates, replace=False))
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    owners = np.searchsorted(offsets, picked, side="right") - 1
    return [(names[o], int(p - offsets[o])) for o, p in zip(owners, picked)]


def finite_diff_check(
    fn: Callable[[ParamStore], float],
    store: ParamStore,
    step: float = 1e-5,
    analytic: Optional[dict[str, FloatArray]] = None,
    max_coordinates: int = 10_000,
    seed: int = 0,
    floor: float = 1.0,
) -> float:
    """Compare analytic gradients with central finite differences.

    ``fn`` evaluates the scalar objective from the current parameter values of
    ``store`` without touching its gradients. ``analytic`` defaults to the
    gradients currently accumulated in the store. Every coordinate is checked,
    or a seeded random subset of ``max_coordinates`` of them for larger stores.
    The error of a coordinate is ``|a - n| / max(floor, |a|, |n|)``: relative
    when either gradient exceeds ``floor`` in magnitude, absolute below it.
    Pass a small positive floor to
    compare tiny gradients relatively.

    Raises:
        ValueError: if ``floor`` is not positive.

    Returns:
        float: the largest error over the checked coordinates.
    """
    if floor <= 0.0:
        raise ValueError(f"floor must be positive, got {floor}")
    analytic = analytic if analytic is not None else store.grad_copy()
    worst = 0.0
    for name, flat in _coordinates(store, max_coordinates, seed):
        param = store[name].reshape(-1)
        original = param[flat]
        param[flat] = original + step
        upper = fn(store)
        param[flat] = original - step
        lower = fn(store)
        param[flat] = original
        numeric = (upper - lower) / (2.0 * step)
        expected = float(analytic[name].reshape(-1)[flat])
        error = abs(expected - numeric) / max(floor, abs(expected), abs(numeric))
        worst = max(worst, error)
    logger.debug(f"Finite-difference check: max relative error {worst:.3e}")
    return worst
