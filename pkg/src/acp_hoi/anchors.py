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
"""Anchor actions and action groups.

Non-exclusive suppression (NES) greedily picks the action that is exclusive
with the most other actions, then suppresses every action that can co-occur
with it. The picked anchors are pairwise exclusive, so exactly one of them (or
the `other` pseudo-anchor) holds for a human-object pair. The remaining
regular actions are grouped under the anchors they can co-occur with.
"""

from __future__ import annotations

import json
import logging
from typing import Iterable, Optional

import numpy as np
from fsspec import AbstractFileSystem
from pydantic import ValidationError

from acp_hoi.exceptions import (
    AnchorConflictError,
    AnchorSelectionError,
    PartitionFileError,
    VocabularyError,
)
from acp_hoi.file_io import PathLike, read_text, write_text
from acp_hoi.types import (
    OTHER_ANCHOR,
    AnchorPartition,
    CooccurrenceStats,
    ExclusivenessVector,
    FloatArray,
    PriorBank,
    PriorMatrices,
)

logger = logging.getLogger(__name__)

OTHER_GROUP_KEY = "__other__"


def exclusiveness(priors: PriorMatrices) -> ExclusivenessVector:
    """Count, for each action, the actions it never co-occurs with (exact zeros of its row)."""
    return ExclusivenessVector(e=np.count_nonzero(priors.C == 0.0, axis=1).astype(np.int64))


def _check_max_anchors(max_anchors: Optional[int]) -> None:
    if max_anchors is not None and max_anchors <= 0:
        raise AnchorSelectionError(
            f"At least one anchor is required, got max_anchors={max_anchors}"
        )


def nes(
    priors: PriorMatrices,
    e: ExclusivenessVector,
    max_anchors: Optional[int] = None,
) -> AnchorPartition:
    """Select mutually exclusive anchor actions.

    Follows the algorithm listing step by step: the candidate list and the
    co-occurrence matrix shrink as actions are picked or suppressed, and the
    argmax is rescanned over what is left. Ties go to the lowest action index.
    Selection stops when no candidate is left or ``max_anchors`` are picked.

    Args:
        priors (PriorMatrices): co-occurrence priors of the selection scope.
        e (ExclusivenessVector): exclusiveness computed from the same priors.
        max_anchors (Optional[int]): selection cap, unlimited when None.

    Raises:
        AnchorSelectionError: if ``max_anchors`` is not positive.

    Returns:
        AnchorPartition: anchors in selection order, groups not built yet.
    """
    _check_max_anchors(max_anchors)
    candidates = list(range(priors.n_actions))
    scores = e.e.copy()
    C = priors.C.copy()
    anchors: list[int] = []
    while candidates and (max_anchors is None or len(anchors) < max_anchors):
        position = int(np.argmax(scores))
        picked = candidates[position]
        anchors.append(picked)
        keep = [
            k
            for k in range(len(candidates))
            if k != position and C[position, k] == 0.0
        ]
        candidates = [candidates[k] for k in keep]
        scores = scores[keep]
        C = C[np.ix_(keep, keep)]
    logger.debug(f"NES selected anchors {anchors}")
    return AnchorPartition(
        anchors=anchors, n_actions=priors.n_actions, max_anchors=max_anchors
    )


def nes_fast(
    priors: PriorMatrices,
    e: ExclusivenessVector,
    max_anchors: Optional[int] = None,
) -> AnchorPartition:
    """One-pass variant of :func:`nes` with a boolean candidate mask."""
    _check_max_anchors(max_anchors)
    alive = np.ones(priors.n_actions, dtype=bool)
    anchors: list[int] = []
    while alive.any() and (max_anchors is None or len(anchors) < max_anchors):
        picked = int(np.argmax(np.where(alive, e.e, -1)))
        anchors.append(picked)
        alive &= priors.C[picked] == 0.0
        alive[picked] = False
    return AnchorPartition(
        anchors=anchors, n_actions=priors.n_actions, max_anchors=max_anchors
    )


def build_groups(
    priors: PriorMatrices, partition: AnchorPartition, stats: CooccurrenceStats
) -> AnchorPartition:
    """Fill the action groups of a partition.

    ``G_i`` holds the regular actions ``j`` with ``c_ij > 0``. The `other` group
    holds the regular actions seen in at least one image without any anchor,
    counted in the same scope as ``priors``. Regular actions reached by no group
    are forced into `other` and reported.
    """
    counts = stats.counts_for(priors.scope)
    regular = partition.regular
    anchors = partition.anchors
    groups: dict[int, frozenset[int]] = {
        a: frozenset(j for j in regular if priors.C[a, j] > 0.0) for a in anchors
    }
    # anchors never share an image, so images holding j and some anchor add up
    with_anchor = counts.n_ij[:, anchors].sum(axis=1) if anchors else 0
    without_anchor = counts.n_i - with_anchor
    other = {j for j in regular if without_anchor[j] > 0}
    covered = set().union(*groups.values()) | other
    uncovered = frozenset(j for j in regular if j not in covered)
    if uncovered:
        logger.warning(
            f"Regular actions {sorted(uncovered)} belong to no group, adding them to 'other'"
        )
    groups[OTHER_ANCHOR] = frozenset(other | uncovered)
    return AnchorPartition(
        anchors=anchors,
        n_actions=partition.n_actions,
        max_anchors=partition.max_anchors,
        groups=groups,
        uncovered=uncovered,
    )


def select_anchors(
    bank: PriorBank, max_anchors: Optional[int] = 15, scope: Optional[int] = None
) -> AnchorPartition:
    """Exclusiveness, NES and group building on one scope of a prior bank."""
    priors = bank.priors_for(scope)
    partition = nes(priors, exclusiveness(priors), max_anchors)
    partition = build_groups(priors, partition, bank.stats)
    names = [bank.space.actions[a] for a in partition.anchors]
    logger.info(f"Selected {len(names)} anchors: {names}")
    return partition


def anchor_target(labels: Iterable[int], partition: AnchorPartition) -> FloatArray:
    """One-hot target of the anchor head: the anchor present in ``labels``, else `other`.

    Raises:
        AnchorConflictError: if several anchors are present.
    """
    label_set = set(labels)
    present = [a for a in partition.anchors if a in label_set]
    if len(present) > 1:
        raise AnchorConflictError([str(a) for a in present])
    target = np.zeros(partition.n_slots, dtype=np.float64)
    slot = partition.anchors.index(present[0]) if present else len(partition.anchors)
    target[slot] = 1.0
    return target


def save_partition(
    partition: AnchorPartition,
    actions: list[str],
    path: PathLike,
    fs: Optional[AbstractFileSystem] = None,
) -> None:
    groups = {
        (OTHER_GROUP_KEY if key == OTHER_ANCHOR else actions[key]): [
            actions[j] for j in sorted(members)
        ]
        for key, members in partition.groups.items()
    }
    document = {
        "anchors": [actions[a] for a in partition.anchors],
        "groups": groups,
        "max_anchors": partition.max_anchors,
        "other_membership_rule": partition.other_membership_rule,
        "uncovered": [actions[j] for j in sorted(partition.uncovered)],
    }
    write_text(path, json.dumps(document, indent=2), fs)
    logger.info(f"Partition written to {path}")


def load_partition(
    path: PathLike, actions: list[str], fs: Optional[AbstractFileSystem] = None
) -> AnchorPartition:
    index = {name: k for k, name in enumerate(actions)}

    def resolve(name: str) -> int:
        try:
            return index[name]
        except KeyError:
            raise VocabularyError("action", name)

    try:
        document = json.loads(read_text(path, fs))
        groups = {
            (OTHER_ANCHOR if key == OTHER_GROUP_KEY else resolve(key)): frozenset(
                resolve(j) for j in members
            )
            for key, members in document.get("groups", {}).items()
        }
        return AnchorPartition(
            anchors=[resolve(a) for a in document["anchors"]],
            n_actions=len(actions),
            max_anchors=document.get("max_anchors"),
            groups=groups,
            uncovered=frozenset(resolve(j) for j in document.get("uncovered", [])),
            other_membership_rule=document.get(
                "other_membership_rule", "image-without-anchor+uncovered"
            ),
        )
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise PartitionFileError(f"Malformed partition file {path}: {e}")
    except ValidationError as e:
        raise PartitionFileError(f"Invalid partition in {path}: {e.errors()}")
