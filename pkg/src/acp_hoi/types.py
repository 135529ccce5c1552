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
from typing import Any, Optional

import numpy as np
import numpy.typing as npt
from pydantic import (
    BaseModel,
    ConfigDict,
    NonNegativeInt,
    PositiveInt,
    PrivateAttr,
    field_validator,
    model_validator,
)

from acp_hoi.exceptions import VocabularyError
from acp_hoi.utils import validate_box

logger = logging.getLogger(__name__)

Box = tuple[float, float, float, float]
FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

OTHER_ANCHOR = -1
"""Group key of the `other` pseudo-anchor."""


class HoiSpace(BaseModel):
    """Label space of a human-object interaction dataset.

    Attributes:
        actions (list[str]): ordered action vocabulary (N actions).
        objects (list[str]): ordered object vocabulary.
        hoi_classes (list[tuple[int, int]]): the M valid (object index, action index) pairs.
        rare_threshold (int): classes with fewer training samples are rare.
    """

    actions: list[str]
    objects: list[str]
    hoi_classes: list[tuple[NonNegativeInt, NonNegativeInt]]
    rare_threshold: PositiveInt = 10

    model_config = ConfigDict(frozen=True)

    _action_index: dict[str, int] = PrivateAttr(default_factory=dict)
    _object_index: dict[str, int] = PrivateAttr(default_factory=dict)
    _hoi_index: dict[tuple[int, int], int] = PrivateAttr(default_factory=dict)

    @field_validator("actions", "objects")
    def check_unique_names(cls, value: list[str]) -> list[str]:
        if len(set(value)) != len(value):
            raise ValueError("vocabulary names must be unique")
        return value

    @model_validator(mode="after")
    def check_hoi_classes(self) -> HoiSpace:
        if len(set(self.hoi_classes)) != len(self.hoi_classes):
            raise ValueError("hoi_classes contains duplicates")
        for obj, act in self.hoi_classes:
            if obj >= len(self.objects) or act >= len(self.actions):
                raise ValueError(f"hoi class ({obj}, {act}) references unknown indices")
        return self

    def model_post_init(self, __context: Any) -> None:
        self._action_index = {name: i for i, name in enumerate(self.actions)}
        self._object_index = {name: i for i, name in enumerate(self.objects)}
        self._hoi_index = {tuple(pair): m for m, pair in enumerate(self.hoi_classes)}  # type: ignore[misc]

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_classes(self) -> int:
        return len(self.hoi_classes)

    def action_index(self, name: str) -> int:
        try:
            return self._action_index[name]
        except KeyError:
            raise VocabularyError("action", name)

    def object_index(self, name: str) -> int:
        try:
            return self._object_index[name]
        except KeyError:
            raise VocabularyError("object", name)

    def hoi_index(self, object_index: int, action_index: int) -> Optional[int]:
        """Index of the (object, action) class, None when the pair is not a valid class."""
        return self._hoi_index.get((object_index, action_index))

    def hoi_name(self, hoi_class: int) -> str:
        obj, act = self.hoi_classes[hoi_class]
        return f"{self.actions[act]} {self.objects[obj]}"

    def hoi_objects(self) -> IntArray:
        return np.array([o for o, _ in self.hoi_classes], dtype=np.int64)

    def hoi_actions(self) -> IntArray:
        return np.array([a for _, a in self.hoi_classes], dtype=np.int64)


class HoiInstance(BaseModel):
    """One annotated human-object pair."""

    human_box: Box
    object_box: Box
    object: NonNegativeInt
    actions: frozenset[NonNegativeInt]

    @field_validator("human_box", "object_box")
    def check_box(cls, value: Box) -> Box:
        validate_box(value)
        return value

    @field_validator("actions")
    def check_actions_not_empty(cls, value: frozenset[int]) -> frozenset[int]:
        if len(value) == 0:
            raise ValueError("an annotated instance needs at least one action")
        return value


class AnnotationRecord(BaseModel):
    image_id: str
    instances: list[HoiInstance]


class LabelCounts(BaseModel):
    """Image-level label counts for one scope.

    Attributes:
        n_images (int): number of images in the scope.
        n_i (IntArray): images containing each action.
        n_ij (IntArray): images containing both actions of each pair (n_ii = n_i).
    """

    n_images: NonNegativeInt
    n_i: IntArray
    n_ij: IntArray

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_consistency(self) -> LabelCounts:
        n = self.n_i.shape[0]
        if self.n_ij.shape != (n, n):
            raise ValueError(f"n_ij must be {n}x{n}, got {self.n_ij.shape}")
        if not np.array_equal(self.n_ij, self.n_ij.T):
            raise ValueError("n_ij must be symmetric")
        if not np.array_equal(np.diag(self.n_ij), self.n_i):
            raise ValueError("diagonal of n_ij must equal n_i")
        if n and int(self.n_i.max(initial=0)) > self.n_images:
            raise ValueError("n_i cannot exceed n_images")
        return self


class CooccurrenceStats(BaseModel):
    global_counts: LabelCounts
    per_object: dict[int, LabelCounts]

    def counts_for(self, scope: Optional[int]) -> LabelCounts:
        if scope is None:
            return self.global_counts
        return self.per_object[scope]


class PriorMatrices(BaseModel):
    """Action co-occurrence prior for one scope.

    ``C[i, j]`` is p(j | i) and ``C_comp[i, j]`` is p(j | not i). ``scope`` is
    None for the global matrices, the object index otherwise.
    """

    C: FloatArray
    C_comp: FloatArray
    scope: Optional[int] = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_matrices(self) -> PriorMatrices:
        if self.C.ndim != 2 or self.C.shape[0] != self.C.shape[1]:
            raise ValueError(f"C must be square, got {self.C.shape}")
        if self.C_comp.shape != self.C.shape:
            raise ValueError("C and C_comp shapes differ")
        for matrix in (self.C, self.C_comp):
            if np.any(matrix < 0.0) or np.any(matrix > 1.0):
                raise ValueError("prior entries must lie in [0, 1]")
        return self

    @property
    def n_actions(self) -> int:
        return int(self.C.shape[0])


class PriorBank(BaseModel):
    """Global and per-object priors built from one dataset, with its vocabulary and counts."""

    space: HoiSpace
    global_priors: PriorMatrices
    per_object: dict[int, PriorMatrices]
    stats: CooccurrenceStats

    def priors_for(self, object_index: Optional[int]) -> PriorMatrices:
        """Priors of one object category, or the global priors when None.

        Falls back to the global matrices with a warning when the object has
        no per-object priors.
        """
        if object_index is None:
            return self.global_priors
        priors = self.per_object.get(object_index)
        if priors is None:
            logger.warning(
                f"No per-object priors for object {object_index}, using global priors"
            )
            return self.global_priors
        return priors


class ExclusivenessVector(BaseModel):
    e: IntArray

    model_config = ConfigDict(arbitrary_types_allowed=True)


class AnchorPartition(BaseModel):
    """Anchor actions selected by non-exclusive suppression and their action groups.

    Attributes:
        anchors (list[int]): anchor actions in selection order.
        n_actions (int): size of the action vocabulary.
        max_anchors (Optional[int]): selection cap, None when unlimited.
        groups (dict[int, frozenset[int]]): regular actions of each anchor, keyed by
            anchor index, plus ``OTHER_ANCHOR`` for the `other` group. Empty until
            groups are built.
        uncovered (frozenset[int]): regular actions that no group reached before
            they were forced into the `other` group.
        other_membership_rule (str): how the `other` group was built.
    """

    anchors: list[NonNegativeInt]
    n_actions: PositiveInt
    max_anchors: Optional[PositiveInt] = None
    groups: dict[int, frozenset[int]] = {}
    uncovered: frozenset[int] = frozenset()
    other_membership_rule: str = "image-without-anchor+uncovered"

    @model_validator(mode="after")
    def check_anchors(self) -> AnchorPartition:
        if len(set(self.anchors)) != len(self.anchors):
            raise ValueError("anchors must be distinct")
        if any(a >= self.n_actions for a in self.anchors):
            raise ValueError("anchor index out of range")
        anchor_set = set(self.anchors)
        for key, members in self.groups.items():
            if key != OTHER_ANCHOR and key not in anchor_set:
                raise ValueError(f"group key {key} is not an anchor")
            if members & anchor_set:
                raise ValueError("anchor actions cannot belong to action groups")
        return self

    @property
    def regular(self) -> list[int]:
        anchor_set = set(self.anchors)
        return [a for a in range(self.n_actions) if a not in anchor_set]

    @property
    def n_slots(self) -> int:
        """Number of anchor-head outputs: every anchor plus `other`."""
        return len(self.anchors) + 1

    def slot_keys(self) -> list[int]:
        return [*self.anchors, OTHER_ANCHOR]

    def group_mask(self) -> FloatArray:
        """Binary (|D|+1) x (N-|D|) matrix, 1 where a regular action belongs to a group."""
        regular = self.regular
        mask = np.zeros((self.n_slots, len(regular)), dtype=np.float64)
        for slot, key in enumerate(self.slot_keys()):
            members = self.groups.get(key, frozenset())
            for column, action in enumerate(regular):
                if action in members:
                    mask[slot, column] = 1.0
        return mask
