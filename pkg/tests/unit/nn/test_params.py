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

from pathlib import Path

import numpy as np
import pytest
from acp_hoi.exceptions import CheckpointError, NonFiniteError, ShapeMismatchError
from acp_hoi.nn import (
    Adam,
    AdamState,
    ParamStore,
    Sgd,
    adam_step,
    finite_diff_check,
    load_checkpoint,
    save_checkpoint,
    sgd_step,
)


def test_param_store_is_deterministic() -> None:
    first, second = ParamStore(seed=4), ParamStore(seed=4)
    for store in (first, second):
        store.add("a.W", (3, 2))
        store.add("a.b", (2,), init="zeros")
    assert first.checksum() == second.checksum()
    other = ParamStore(seed=5)
    other.add("a.W", (3, 2))
    other.add("a.b", (2,), init="zeros")
    assert other.checksum() != first.checksum()


def test_param_store_glorot_range() -> None:
    store = ParamStore()
    weights = store.add("W", (10, 6))
    assert np.all(np.abs(weights) <= np.sqrt(6.0 / 16.0))


def test_param_store_rejects_duplicates_and_bad_gradients() -> None:
    store = ParamStore()
    store.add("W", (2, 2))
    with pytest.raises(ValueError):
        store.add("W", (2, 2))
    with pytest.raises(ShapeMismatchError):
        store.accumulate("W", np.ones(3))


def test_sgd_zero_gradient_leaves_parameters() -> None:
    store = ParamStore()
    store.add("W", (2, 3))
    before = store.checksum()
    sgd_step(store, lr=0.1)
    assert store.checksum() == before


def test_sgd_converges_on_quadratic() -> None:
    store = ParamStore()
    w = store.add("w", (1,), init="zeros")
    optimizer = Sgd(lr=0.1)
    for _ in range(200):
        store.accumulate("w", w - 1.0)
        optimizer.step(store)
    assert abs(float(w[0]) - 1.0) < 1e-6
    assert store.grads["w"].tolist() == [0.0]


def test_adam_first_step_bias_correction() -> None:
    store = ParamStore()
    store.add("w", (3,), init="zeros")
    grad = np.array([0.5, -2.0, 0.0])
    store.accumulate("w", grad)
    state = AdamState()
    adam_step(store, state, lr=0.1, beta1=0.9, beta2=0.999)
    np.testing.assert_allclose(state.m["w"] / (1.0 - 0.9), grad, atol=1e-15)
    np.testing.assert_allclose(store["w"], [-0.1, 0.1, 0.0], atol=1e-6)


def test_adam_minimizes_quadratic() -> None:
    store = ParamStore()
    w = store.add("w", (2,), init="zeros")
    optimizer = Adam(lr=0.01)
    target = np.array([1.0, -0.5])
    for _ in range(2000):
        store.accumulate("w", w - target)
        optimizer.step(store)
    np.testing.assert_allclose(w, target, atol=1e-2)


def test_optimizer_rejects_non_finite_gradient() -> None:
    store = ParamStore()
    store.add("w", (1,))
    store.accumulate("w", np.array([np.nan]))
    with pytest.raises(NonFiniteError):
        sgd_step(store, 0.1)


def _quadratic_store() -> ParamStore:
    store = ParamStore()
    w = store.add("w", (3,), init="zeros")
    w[:] = [0.1, -0.2, 0.3]
    return store


def _quadratic(store: ParamStore) -> float:
    return float(np.sum(store["w"] ** 2) / 2.0)


def test_finite_diff_check_quadratic() -> None:
    store = _quadratic_store()
    store.accumulate("w", store["w"].copy())
    assert finite_diff_check(_quadratic, store) < 1e-9


def test_finite_diff_check_detects_corrupted_gradient() -> None:
    store = _quadratic_store()
    store.accumulate("w", store["w"] + 1.0)
    assert finite_diff_check(_quadratic, store) >= 0.5


def _tiny_quadratic(store: ParamStore) -> float:
    return float(1e-4 * np.sum(store["w"] ** 2) / 2.0)


def test_finite_diff_check_floor_compares_tiny_gradients() -> None:
    store = _quadratic_store()
    store.accumulate("w", 2e-4 * store["w"])
    # doubled gradient is off by at most 3e-5, below the default floor of 1
    assert finite_diff_check(_tiny_quadratic, store) < 1e-4
    assert finite_diff_check(_tiny_quadratic, store, floor=1e-12) >= 0.4


def test_finite_diff_check_floor_accepts_exact_tiny_gradients() -> None:
    store = _quadratic_store()
    store.accumulate("w", 1e-4 * store["w"])
    assert finite_diff_check(_tiny_quadratic, store, floor=1e-12) < 1e-6


def test_finite_diff_check_rejects_non_positive_floor() -> None:
    store = _quadratic_store()
    with pytest.raises(ValueError):
        finite_diff_check(_quadratic, store, floor=0.0)


def test_finite_diff_check_subset_is_seeded() -> None:
    store = ParamStore()
    store.add("W", (30, 30))
    store.accumulate("W", store["W"].copy())

    def loss(s: ParamStore) -> float:
        return float(np.sum(s["W"] ** 2) / 2.0)

    first = finite_diff_check(loss, store, max_coordinates=50, seed=1)
    second = finite_diff_check(loss, store, max_coordinates=50, seed=1)
    assert first == second
    assert first < 1e-8


def test_checkpoint_file(tmp_path: Path) -> None:
    store = ParamStore(seed=7)
    store.add("stream.h.0.W", (4, 3))
    store.add("stream.h.0.b", (3,), init="zeros")
    path = str(tmp_path / "run" / "checkpoint.npz")
    save_checkpoint(store, path)
    loaded = load_checkpoint(path)
    assert loaded.seed == 7
    assert loaded.names() == store.names()
    assert loaded.checksum() == store.checksum()


def test_load_checkpoint_rejects_garbage(tmp_path: Path) -> None:
    path = tmp_path / "checkpoint.npz"
    path.write_bytes(b"garbage")
    with pytest.raises(CheckpointError):
        load_checkpoint(str(path))
