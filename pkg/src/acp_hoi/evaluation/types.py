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

import math
from typing import Literal, Optional

from pydantic import BaseModel, NonNegativeInt, field_validator

from acp_hoi.types import Box
from acp_hoi.utils import validate_box

Setting = Literal["default", "known_object"]


class DetectionRecord(BaseModel):
    image_id: str
    hoi_class: NonNegativeInt
    human_box: Box
    object_box: Box
    score: float

    @field_validator("human_box", "object_box")
    def check_box(cls, value: Box) -> Box:
        validate_box(value)
        return value

    @field_validator("score")
    def check_score(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("detection score must be finite")
        return value


class GroundTruthRecord(BaseModel):
    image_id: str
    hoi_class: NonNegativeInt
    human_box: Box
    object_box: Box


class EvalReport(BaseModel):
    """Average precision per HOI class and the aggregated mAPs.

    Attributes:
        setting (Setting): ``default`` or ``known_object``.
        per_class_ap (dict[int, float]): AP of every class with ground truth.
        n_ground_truth (dict[int, int]): ground-truth count of those classes.
        map_full (Optional[float]): mean over all evaluated classes.
        map_rare (Optional[float]): mean over evaluated rare classes.
        map_nonrare (Optional[float]): mean over evaluated non-rare classes.
        rare_classes (list[int]): classes with fewer training samples than the threshold.
        held_out_classes (list[int]): zero-shot classes, if any.
        map_held_out (Optional[float]): mean over evaluated held-out classes.
    """

    setting: Setting
    per_class_ap: dict[int, float]
    n_ground_truth: dict[int, int]
    map_full: Optional[float] = None
    map_rare: Optional[float] = None
    map_nonrare: Optional[float] = None
    rare_classes: list[int] = []
    held_out_classes: list[int] = []
    map_held_out: Optional[float] = None
