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

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    field_validator,
    model_validator,
)

from acp_hoi.acp_losses import LossWeights, ProjectionConfig
from acp_hoi.evaluation.types import EvalReport
from acp_hoi.model.types import Variant

Objective = Literal["bce", "distillation"]


class SynthConfig(BaseModel):
    """Synthetic long-tail benchmark.

    Each object has ``actions_per_object`` valid actions split into
    ``heads_per_object`` mutually exclusive heads, each with satellites that
    only occur together with their head. Objects and heads are drawn from
    Zipf distributions; ``rare_fraction`` of the satellites are planted rare,
    with at most ``rare_max_count`` training images each.
    """

    model_config = ConfigDict(extra="forbid")

    n_actions: PositiveInt = 12
    n_objects: PositiveInt = 6
    n_images: PositiveInt = 3000
    n_test_images: PositiveInt = 600
    seed: int = 0
    actions_per_object: PositiveInt = 6
    heads_per_object: PositiveInt = 2
    zipf_exponent: PositiveFloat = 1.0
    rare_fraction: float = Field(default=0.3, ge=0.0, le=1.0)
    rare_max_count: PositiveInt = 8
    rare_threshold: PositiveInt = 10
    feature_noise: PositiveFloat = 1.0
    feature_dim: PositiveInt = 16
    embed_dim: PositiveInt = 8
    negatives_per_image: NonNegativeInt = 1

    @model_validator(mode="after")
    def check_structure(self) -> SynthConfig:
        if self.actions_per_object > self.n_actions:
            raise ValueError("actions_per_object cannot exceed n_actions")
        if self.heads_per_object > self.actions_per_object:
            raise ValueError("heads_per_object cannot exceed actions_per_object")
        return self


class ZeroShotConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    k: NonNegativeInt = 3
    use_global_priors: bool = True


class OptimizerSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: Literal["sgd", "adam"] = "adam"
    lr: PositiveFloat = 1e-3
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: PositiveFloat = 1e-8


class ExperimentConfig(BaseModel):
    """Everything one training run needs.

    The dataset is either a directory in the layout written by
    ``synth_generate`` (``data_dir``) or generated on the fly (``synth``).

    Attributes:
        variant (Variant): network variant.
        attention (bool): self-attention over the pairs of an image.
        emb_head (bool): word-embedding regression head.
        mask_groups (bool): restrict group heads to their action groups.
        hidden (int): width of every hidden layer.
        attn_proj (int): attention projection width.
        objective (Objective): ``bce`` on the ground truth only, or the
            distillation objective with projected teachers.
        post_process (bool): project predictions with the priors at test time.
        losses (LossWeights): loss weights.
        projection (ProjectionConfig): projection weights.
        optimizer (OptimizerSettings): update rule.
        epochs (int): passes over the training images.
        batch_images (int): images per mini-batch.
        eval_every (int): evaluate every that many epochs, 0 for the last one only.
        gradcheck_first_step (bool): finite-difference check of the first step.
        seeds (list[int]): one run per seed.
        max_anchors (Optional[int]): anchor cap, None for unlimited.
        partition (Optional[str]): partition file, selected on the fly when None.
        zero_shot (Optional[ZeroShotConfig]): held-out classes.
        output_dir (str): where checkpoints and logs go.
    """

    model_config = ConfigDict(extra="forbid")

    variant: Variant = "modified"
    attention: bool = False
    emb_head: bool = False
    mask_groups: bool = True
    hidden: PositiveInt = 64
    attn_proj: PositiveInt = 32
    objective: Objective = "bce"
    post_process: bool = False
    losses: LossWeights = LossWeights()
    projection: ProjectionConfig = ProjectionConfig()
    optimizer: OptimizerSettings = OptimizerSettings()
    epochs: PositiveInt = 30
    batch_images: PositiveInt = 32
    eval_every: NonNegativeInt = 0
    gradcheck_first_step: bool = False
    gradcheck_tolerance: PositiveFloat = 1e-4
    seeds: list[int] = [0]
    max_anchors: Optional[PositiveInt] = 15
    partition: Optional[str] = None
    data_dir: Optional[str] = None
    synth: Optional[SynthConfig] = None
    zero_shot: Optional[ZeroShotConfig] = None
    output_dir: str = "runs"

    @field_validator("seeds")
    def check_seeds_not_empty(cls, value: list[int]) -> list[int]:
        if len(value) == 0:
            raise ValueError("seeds cannot be an empty list")
        return value

    @model_validator(mode="after")
    def check_dataset_source(self) -> ExperimentConfig:
        if (self.data_dir is None) == (self.synth is None):
            raise ValueError("exactly one of data_dir and synth must be set")
        return self


class TrainResult(BaseModel):
    """Outcome of one training run."""

    seed: int
    variant: Variant
    losses: list[float]
    report: EvalReport
    held_out: list[int] = []
    checkpoint_path: str
    metrics_path: str
