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

import json
from pathlib import Path

import numpy as np
import pytest
from acp_hoi.anchors import (
    OTHER_GROUP_KEY,
    anchor_target,
    build_groups,
    exclusiveness,
    load_partition,
    nes,
    nes_fast,
    save_partition,
    select_anchors,
)
from acp_hoi.exceptions import (
    AnchorConflictError,
    AnchorSelectionError,
    PartitionFileError,
    VocabularyError,
)
from acp_hoi.priors import priors_from_counts
from acp_hoi.types import (
    OTHER_ANCHOR,
    AnchorPartition,
    CooccurrenceStats,
    LabelCounts,
    PriorBank,
    PriorMatrices,
)

HOLD, EAT, CUT = 0, 1, 2


def random_priors(seed: int, n_actions: int = 8, n_images: int = 40) -> PriorMatrices:
    rng = np.random.default_rng(seed)
    indicator = (rng.random((n_images, n_actions)) < 0.2).astype(np.int64)
    n_ij = indicator.T @ indicator
    counts = LabelCounts(n_images=n_images, n_i=np.diag(n_ij).copy(), n_ij=n_ij)
    return priors_from_counts(counts)


def test_exclusiveness_cake(cake_bank: PriorBank) -> None:
    e = exclusiveness(cake_bank.priors_for(0))
    assert e.e.tolist() == [1, 1, 2]


def test_nes_cake(cake_bank: PriorBank) -> None:
    priors = cake_bank.priors_for(0)
    partition = nes(priors, exclusiveness(priors))
    assert partition.anchors == [CUT, HOLD]
    assert partition.max_anchors is None


def test_nes_respects_max_anchors(cake_bank: PriorBank) -> None:
    priors = cake_bank.priors_for(0)
    assert nes(priors, exclusiveness(priors), max_anchors=1).anchors == [CUT]


def test_nes_rejects_non_positive_cap(cake_bank: PriorBank) -> None:
    priors = cake_bank.priors_for(0)
    with pytest.raises(AnchorSelectionError):
        nes(priors, exclusiveness(priors), max_anchors=0)
    with pytest.raises(AnchorSelectionError):
        nes_fast(priors, exclusiveness(priors), max_anchors=0)


@pytest.mark.parametrize("seed", range(100))
def test_nes_anchors_are_pairwise_exclusive(seed: int) -> None:
    priors = random_priors(seed)
    anchors = nes(priors, exclusiveness(priors)).anchors
    for a in anchors:
        for b in anchors:
            if a != b:
                assert priors.C[a, b] == 0.0
                assert priors.C[b, a] == 0.0


@pytest.mark.parametrize("seed", range(100))
def test_nes_fast_matches_nes(seed: int) -> None:
    rng = np.random.default_rng(seed)
    priors = random_priors(
        seed, n_actions=int(rng.integers(2, 16)), n_images=int(rng.integers(5, 80))
    )
    e = exclusiveness(priors)
    for cap in (None, 1, 3):
        assert nes_fast(priors, e, cap).anchors == nes(priors, e, cap).anchors


def test_nes_is_deterministic() -> None:
    priors = random_priors(3)
    e = exclusiveness(priors)
    assert nes(priors, e).anchors == nes(priors, e).anchors


@pytest.mark.parametrize("seed", range(20))
def test_nes_ignores_image_order(seed: int) -> None:
    rng = np.random.default_rng(seed)
    indicator = (rng.random((40, 8)) < 0.2).astype(np.int64)
    shuffled = indicator[rng.permutation(indicator.shape[0])]
    results = []
    for rows in (indicator, shuffled):
        n_ij = rows.T @ rows
        priors = priors_from_counts(
            LabelCounts(n_images=rows.shape[0], n_i=np.diag(n_ij).copy(), n_ij=n_ij)
        )
        e = exclusiveness(priors)
        results.append((nes(priors, e).anchors, nes_fast(priors, e).anchors))
    assert results[0] == results[1]
    assert results[0][0] == results[0][1]


def test_build_groups_cake(cake_partition: AnchorPartition) -> None:
    assert cake_partition.anchors == [CUT, HOLD]
    assert cake_partition.groups[CUT] == frozenset()
    assert cake_partition.groups[HOLD] == frozenset({EAT})
    assert cake_partition.groups[OTHER_ANCHOR] == frozenset()
    assert cake_partition.uncovered == frozenset()


@pytest.mark.parametrize("seed", range(10))
def test_build_groups_cover_every_regular_action(seed: int) -> None:
    rng = np.random.default_rng(seed)
    indicator = (rng.random((30, 6)) < 0.25).astype(np.int64)
    n_ij = indicator.T @ indicator
    counts = LabelCounts(n_images=30, n_i=np.diag(n_ij).copy(), n_ij=n_ij)
    priors = priors_from_counts(counts)
    stats = CooccurrenceStats(global_counts=counts, per_object={})
    partition = build_groups(priors, nes(priors, exclusiveness(priors)), stats)
    covered = set().union(*partition.groups.values())
    assert covered == set(partition.regular)


def test_build_groups_reports_uncovered(cake_bank: PriorBank) -> None:
    """With only `cut` as anchor, `hold` and `eat` never meet it but occur without it."""
    priors = cake_bank.priors_for(0)
    partition = build_groups(
        priors, nes(priors, exclusiveness(priors), max_anchors=1), cake_bank.stats
    )
    assert partition.groups[CUT] == frozenset()
    assert partition.groups[OTHER_ANCHOR] == frozenset({HOLD, EAT})
    assert partition.uncovered == frozenset()


def test_group_mask(cake_partition: AnchorPartition) -> None:
    # slots: cut, hold, other; regular actions: eat
    assert cake_partition.group_mask().tolist() == [[0.0], [1.0], [0.0]]


def test_anchor_target(cake_partition: AnchorPartition) -> None:
    assert anchor_target({CUT}, cake_partition).tolist() == [1.0, 0.0, 0.0]
    assert anchor_target({HOLD, EAT}, cake_partition).tolist() == [0.0, 1.0, 0.0]
    assert anchor_target({EAT}, cake_partition).tolist() == [0.0, 0.0, 1.0]


def test_anchor_target_conflict(cake_partition: AnchorPartition) -> None:
    with pytest.raises(AnchorConflictError):
        anchor_target({CUT, HOLD}, cake_partition)


def test_select_anchors_per_object_scope(cake_bank: PriorBank) -> None:
    assert select_anchors(cake_bank, None, scope=0).anchors == [CUT, HOLD]


def test_partition_file(tmp_path: Path, cake_partition: AnchorPartition) -> None:
    path = str(tmp_path / "partition.json")
    actions = ["hold", "eat", "cut"]
    save_partition(cake_partition, actions, path)
    document = json.loads(Path(path).read_text())
    assert document["anchors"] == ["cut", "hold"]
    assert document["groups"]["hold"] == ["eat"]
    assert document["groups"][OTHER_GROUP_KEY] == []
    assert load_partition(path, actions) == cake_partition


def test_load_partition_unknown_action(tmp_path: Path) -> None:
    path = tmp_path / "partition.json"
    path.write_text(json.dumps({"anchors": ["juggle"], "groups": {}}))
    with pytest.raises(VocabularyError):
        load_partition(str(path), ["hold", "eat", "cut"])


def test_load_partition_rejects_grouped_anchor(tmp_path: Path) -> None:
    path = tmp_path / "partition.json"
    path.write_text(json.dumps({"anchors": ["cut", "hold"], "groups": {"cut": ["hold"]}}))
    with pytest.raises(PartitionFileError):
        load_partition(str(path), ["hold", "eat", "cut"])
