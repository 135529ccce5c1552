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
"""Full training objective of one mini-batch and its backward pass."""

from __future__ import annotations

import logging
from typing import NamedTuple, Optional

import numpy as np

from acp_hoi.acp_losses import (
    LossWeights,
    ProjectionConfig,
    distill_loss,
    emb_loss,
    teacher_from_groundtruth,
    teacher_from_prediction,
    total_loss,
)
from acp_hoi.anchors import anchor_target
from acp_hoi.experiment.types import Objective
from acp_hoi.model.network import HoiNetwork, hoi_targets, joint_hoi, joint_hoi_backward
from acp_hoi.model.types import PairBatch
from acp_hoi.nn import bce, ce_softmax
from acp_hoi.types import FloatArray, PriorBank

logger = logging.getLogger(__name__)


class Teachers(NamedTuple):
    """Projected HOI targets, constants for the step they were computed in."""

    from_prediction: FloatArray
    from_groundtruth: FloatArray


class ObjectiveValue(NamedTuple):
    total: float
    hoi: float
    anchor: float
    embedding: float


def compute_teachers(
    network: HoiNetwork,
    batch: PairBatch,
    bank: PriorBank,
    projection: ProjectionConfig,
    weights: LossWeights,
) -> Teachers:
    """Teacher targets from the current network state; a zero-weight teacher stays zero."""
    shape = (batch.size, bank.space.n_classes)
    from_prediction = np.zeros(shape, dtype=np.float64)
    if weights.lambda2 > 0.0:
        prediction = network.predict(batch)
        from_prediction = teacher_from_prediction(prediction, batch, bank, projection)
    from_groundtruth = np.zeros(shape, dtype=np.float64)
    if weights.lambda3 > 0.0:
        from_groundtruth = teacher_from_groundtruth(batch, bank, projection)
    return Teachers(from_prediction, from_groundtruth)


def anchor_targets(batch: PairBatch, network: HoiNetwork) -> FloatArray:
    partition = network.partition
    assert partition is not None
    return np.stack(
        [anchor_target(np.flatnonzero(row), partition) for row in batch.gt_actions]
    )


def run_objective(
    network: HoiNetwork,
    batch: PairBatch,
    bank: PriorBank,
    objective: Objective,
    weights: LossWeights,
    teachers: Optional[Teachers] = None,
    backward: bool = True,
) -> ObjectiveValue:
    """Evaluate the objective on a batch and, optionally, accumulate its gradients.

    ``bce`` is the plain binary cross-entropy between HOI scores and targets.
    ``distillation`` weights the ground truth and the two teachers, plus the
    embedding loss when the network has an embedding head. Partitioned variants
    add the anchor cross-entropy weighted by ``lambda_anchor``.

    Args:
        network (HoiNetwork): network to evaluate.
        batch (PairBatch): pairs of the mini-batch.
        bank (PriorBank): priors for the teachers.
        objective (Objective): ``bce`` or ``distillation``.
        weights (LossWeights): loss weights.
        teachers (Optional[Teachers]): precomputed teachers, required for
            ``distillation``.
        backward (bool): accumulate parameter gradients.

    Returns:
        ObjectiveValue: the total and its parts.
    """
    space = bank.space
    prediction, cache = network.forward(batch)
    y_hat = joint_hoi(prediction.action_probs, batch, space)
    y_gt = hoi_targets(batch.gt_actions, batch, space)
    if objective == "bce":
        hoi_term = bce(y_hat, y_gt)
    else:
        if teachers is None:
            raise ValueError("The distillation objective needs teacher targets")
        hoi_term = distill_loss(
            y_hat, y_gt, teachers.from_prediction, teachers.from_groundtruth, weights
        )

    embed_value = 0.0
    grad_embed = None
    if network.config.emb_head and objective == "distillation" and weights.lambda0 > 0.0:
        assert prediction.regressed_embed is not None
        embed_term = emb_loss(batch.o_embed, prediction.regressed_embed)
        embed_value = embed_term.value
        grad_embed = weights.lambda0 * embed_term.grad

    anchor_value = 0.0
    grad_anchor = None
    if prediction.anchor_logits is not None and weights.lambda_anchor > 0.0:
        anchor_term = ce_softmax(prediction.anchor_logits, anchor_targets(batch, network))
        anchor_value = anchor_term.value
        grad_anchor = weights.lambda_anchor * anchor_term.grad

    total = (
        total_loss(hoi_term.value, embed_value, weights)
        + weights.lambda_anchor * anchor_value
    )
    if backward:
        network.backward(
            cache,
            joint_hoi_backward(hoi_term.grad, batch, space),
            grad_anchor_logits=grad_anchor,
            grad_embed=grad_embed,
        )
    return ObjectiveValue(total, hoi_term.value, anchor_value, embed_value)
