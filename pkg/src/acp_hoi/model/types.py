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

from typing import Literal, Optional

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveInt,
    field_validator,
    model_validator,
)

from acp_hoi.exceptions import PartitionRequiredError, ShapeMismatchError
from acp_hoi.types import AnchorPartition, Box, FloatArray, IntArray
from acp_hoi.utils import validate_box

Variant = Literal["baseline", "modified", "multitask", "twostream", "hierarchical"]
PARTITIONED_VARIANTS = ("multitask", "twostream", "hierarchical")


class PairExample(BaseModel):
    """One human-object candidate pair with its per-stream features.

    Attributes:
        image_id (str): image the pair was detected in.
        x_h (list[float]): human appearance features.
        x_o (list[float]): object appearance features.
        k (list[float]): pose features.
        b (list[float]): box geometry features.
        o_embed (list[float]): word embedding of the object category.
        object (int): object category index.
        det_h (float): human detection score.
        det_o (float): object detection score.
        gt_actions (frozenset[int]): annotated actions, empty for a negative pair.
        human_box (Box): human box, pixels.
        object_box (Box): object box, pixels.
    """

    image_id: str
    x_h: list[float]
    x_o: list[float]
    k: list[float]
    b: list[float]
    o_embed: list[float]
    object: NonNegativeInt
    det_h: float = Field(ge=0.0, le=1.0)
    det_o: float = Field(ge=0.0, le=1.0)
    gt_actions: frozenset[NonNegativeInt] = frozenset()
    human_box: Box
    object_box: Box

    @field_validator("human_box", "object_box")
    def check_box(cls, value: Box) -> Box:
        validate_box(value)
        return value


class ModelConfig(BaseModel):
    """Architecture of the fusion network.

    ``hidden`` and ``attn_proj`` default to the full-size widths; desk-scale
    experiments override them.
    """

    variant: Variant = "modified"
    attention: bool = False
    emb_head: bool = False
    mask_groups: bool = True
    n_actions: PositiveInt
    n_objects: PositiveInt
    d_h: PositiveInt
    d_o: PositiveInt
    d_k: PositiveInt
    d_b: PositiveInt
    d_e: PositiveInt
    hidden: PositiveInt = 512
    attn_proj: PositiveInt = 128
    n_stream: Literal[4] = 4
    partition: Optional[AnchorPartition] = None

    @model_validator(mode="after")
    def check_partition(self) -> ModelConfig:
        if self.variant == "baseline" and (self.attention or self.emb_head):
            raise ValueError(
                "The baseline variant has no fused representation for attention or the embedding head"
            )
        if self.variant in PARTITIONED_VARIANTS:
            if self.partition is None:
                raise PartitionRequiredError(
                    f"Variant {self.variant} needs an anchor partition"
                )
            if self.partition.n_actions != self.n_actions:
                raise PartitionRequiredError(
                    f"Partition covers {self.partition.n_actions} actions, "
                    f"model has {self.n_actions}"
                )
            if self.variant == "hierarchical" and self.mask_groups and not self.partition.groups:
                raise PartitionRequiredError(
                    "Hierarchical variant with group masking needs built action groups"
                )
        return self


class PairBatch(BaseModel):
    """Stacked arrays for a list of pairs.

    ``segments`` holds one id per image so attention stays within an image.
    """

    image_ids: list[str]
    x_h: FloatArray
    x_o: FloatArray
    k: FloatArray
    b: FloatArray
    o_embed: FloatArray
    objects: IntArray
    det_h: FloatArray
    det_o: FloatArray
    segments: IntArray
    gt_actions: FloatArray
    human_boxes: FloatArray
    object_boxes: FloatArray

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def size(self) -> int:
        return len(self.image_ids)

    @classmethod
    def from_pairs(cls, pairs: list[PairExample], n_actions: int) -> PairBatch:
        if not pairs:
            raise ShapeMismatchError("Cannot build a batch without pairs")
        segment_of: dict[str, int] = {}
        gt = np.zeros((len(pairs), n_actions), dtype=np.float64)
        for row, pair in enumerate(pairs):
            segment_of.setdefault(pair.image_id, len(segment_of))
            gt[row, sorted(pair.gt_actions)] = 1.0

        def stack(field: str) -> FloatArray:
            try:
                return np.array([getattr(p, field) for p in pairs], dtype=np.float64)
            except ValueError:
                raise ShapeMismatchError(f"Pairs disagree on the size of {field}")

        return cls(
            image_ids=[p.image_id for p in pairs],
            x_h=stack("x_h"),
            x_o=stack("x_o"),
            k=stack("k"),
            b=stack("b"),
            o_embed=stack("o_embed"),
            objects=np.array([p.object for p in pairs], dtype=np.int64),
            det_h=stack("det_h"),
            det_o=stack("det_o"),
            segments=np.array([segment_of[p.image_id] for p in pairs], dtype=np.int64),
            gt_actions=gt,
            human_boxes=stack("human_box"),
            object_boxes=stack("object_box"),
        )


class ActionPrediction(BaseModel):
    """Network outputs for a batch of pairs (one row per pair).

    Attributes:
        action_probs (FloatArray): B x N action probabilities.
        anchor_logits (Optional[FloatArray]): B x (|D|+1) anchor head logits.
        anchor_probs (Optional[FloatArray]): softmax of ``anchor_logits``.
        group_probs (Optional[FloatArray]): B x (|D|+1) x (N-|D|) conditional
            probabilities of regular actions given each anchor, after masking.
        regressed_embed (Optional[FloatArray]): B x d_e regressed object embedding.
    """

    action_probs: FloatArray
    anchor_logits: Optional[FloatArray] = None
    anchor_probs: Optional[FloatArray] = None
    group_probs: Optional[FloatArray] = None
    regressed_embed: Optional[FloatArray] = None

    model_config = ConfigDict(arbitrary_types_allowed=True)
