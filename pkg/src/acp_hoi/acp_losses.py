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
"""ACP projection, distillation targets and losses.

Projection maps an action probability vector ``A`` to
``(alpha * A @ C + beta * (1 - A) @ C_comp) / N``, pulling it toward values
consistent with the co-occurrence priors. Projected predictions and projected
ground truth serve as constant teacher targets during training; at test time
the same projection adjusts the predictions directly.
"""

from __future__ import annotations

import logging
from typing import Any, Optional, Sequence

import numpy as np
from fsspec import AbstractFileSystem
from pydantic import BaseModel, NonNegativeFloat, model_validator
from scipy.special import expit

from acp_hoi.exceptions import ProjectionInputError, ShapeMismatchError
from acp_hoi.file_io import PathLike, write_csv
from acp_hoi.model.network import hoi_targets, joint_hoi
from acp_hoi.model.types import ActionPrediction, PairBatch
from acp_hoi.nn.functional import LossTerm, bce
from acp_hoi.types import FloatArray, HoiSpace, IntArray, PriorBank, PriorMatrices
from acp_hoi.utils import ensure_finite

logger = logging.getLogger(__name__)

PROJECTION_DUMP_FIELDS = ["image_id", "pair_id", "hoi_class", "score_before", "score_after"]


class ProjectionConfig(BaseModel):
    """Weights of the projection, ``alpha + beta = 2`` and ``alpha > beta``."""

    alpha: NonNegativeFloat = 1.2
    beta: NonNegativeFloat = 0.8
    use_per_object: bool = True

    @model_validator(mode="after")
    def check_weights(self) -> ProjectionConfig:
        if abs(self.alpha + self.beta - 2.0) > 1e-12:
            raise ValueError(f"alpha + beta must equal 2, got {self.alpha + self.beta}")
        if not self.alpha > self.beta:
            raise ValueError("alpha must be greater than beta")
        return self


class LossWeights(BaseModel):
    """Weights of the training objective.

    Attributes:
        lambda0 (float): word-embedding loss.
        lambda1 (float): ground-truth term, must be positive.
        lambda2 (float): projected-prediction teacher term.
        lambda3 (float): projected ground-truth teacher term.
        lambda_anchor (float): anchor-head cross-entropy of the partitioned variants.
    """

    lambda0: NonNegativeFloat = 0.1
    lambda1: NonNegativeFloat = 1.0
    lambda2: NonNegativeFloat = 0.5
    lambda3: NonNegativeFloat = 0.5
    lambda_anchor: NonNegativeFloat = 1.0

    @model_validator(mode="after")
    def check_ground_truth_term(self) -> LossWeights:
        if self.lambda1 <= 0.0:
            raise ValueError("lambda1 must be positive")
        return self


def project(
    action_probs: FloatArray, priors: PriorMatrices, cfg: ProjectionConfig
) -> FloatArray:
    """Project action probabilities (one vector or a batch of rows) onto the priors.

    Raises:
        ProjectionInputError: if an entry lies outside [0, 1].
        ShapeMismatchError: if the vector length differs from the prior size.
    """
    if action_probs.shape[-1] != priors.n_actions:
        raise ShapeMismatchError(
            f"Cannot project {action_probs.shape[-1]} actions with {priors.n_actions}-action priors"
        )
    if np.any(action_probs < 0.0) or np.any(action_probs > 1.0):
        raise ProjectionInputError("Action probabilities must lie in [0, 1]")
    projected = (
        cfg.alpha * (action_probs @ priors.C)
        + cfg.beta * ((1.0 - action_probs) @ priors.C_comp)
    ) / priors.n_actions
    ensure_finite(projected, "project")
    return projected


def project_pairs(
    action_probs: FloatArray,
    batch: PairBatch,
    bank: PriorBank,
    cfg: ProjectionConfig,
) -> FloatArray:
    """Project each row with the priors of its pair's object, or the global priors."""
    if not cfg.use_per_object:
        return project(action_probs, bank.global_priors, cfg)
    projected = np.empty_like(action_probs)
    for object_index in np.unique(batch.objects):
        rows = batch.objects == object_index
        projected[rows] = project(
            action_probs[rows], bank.priors_for(int(object_index)), cfg
        )
    return projected


def teacher_from_prediction(
    prediction: ActionPrediction,
    batch: PairBatch,
    bank: PriorBank,
    cfg: ProjectionConfig,
) -> FloatArray:
    """HOI teacher from the projected predicted actions, detached from the model."""
    projected = project_pairs(prediction.action_probs.copy(), batch, bank, cfg)
    return joint_hoi(projected, batch, bank.space)


def teacher_from_groundtruth(
    batch: PairBatch, bank: PriorBank, cfg: ProjectionConfig
) -> FloatArray:
    """HOI teacher from the projected ground-truth actions of each pair."""
    projected = project_pairs(batch.gt_actions, batch, bank, cfg)
    return hoi_targets(projected, batch, bank.space)


def distill_loss(
    y_hat: FloatArray,
    y_gt: FloatArray,
    y_hat_proj: FloatArray,
    y_gt_proj: FloatArray,
    w: LossWeights,
) -> LossTerm:
    """``lambda1 L(Y, Ygt) + lambda2 L(Y, Yproj) + lambda3 L(Y, Ygt_proj)`` with BCE terms.

    Teacher targets are clamped to [0, 1]; gradients flow through ``y_hat`` only
    and terms with a zero weight are skipped.
    """
    for name, target in (("y_gt", y_gt), ("y_hat_proj", y_hat_proj), ("y_gt_proj", y_gt_proj)):
        if target.shape != y_hat.shape:
            raise ShapeMismatchError(f"{name} has shape {target.shape}, expected {y_hat.shape}")
    term = bce(y_hat, y_gt)
    value = w.lambda1 * term.value
    grad = w.lambda1 * term.grad
    for weight, target in ((w.lambda2, y_hat_proj), (w.lambda3, y_gt_proj)):
        if weight == 0.0:
            continue
        term = bce(y_hat, np.clip(target, 0.0, 1.0))
        value += weight * term.value
        grad = grad + weight * term.grad
    return LossTerm(value, grad)


def emb_loss(o_embed: FloatArray, regressed: FloatArray) -> LossTerm:
    """Mean ``-log sigmoid(o . v)`` over pairs, gradient w.r.t. the regressed embedding ``v``."""
    if o_embed.shape != regressed.shape:
        raise ShapeMismatchError(
            f"Embedding {o_embed.shape} and regression {regressed.shape} differ"
        )
    rows = max(o_embed.shape[0], 1)
    alignment = np.sum(o_embed * regressed, axis=1)
    value = float(np.sum(np.logaddexp(0.0, -alignment)) / rows)
    grad = -(expit(-alignment)[:, None] * o_embed) / rows
    return LossTerm(value, grad)


def total_loss(distill: float, emb: float, w: LossWeights) -> float:
    return distill + w.lambda0 * emb


def post_process(
    prediction: ActionPrediction,
    batch: PairBatch,
    bank: PriorBank,
    cfg: ProjectionConfig,
) -> tuple[ActionPrediction, FloatArray]:
    """Project predicted actions at test time and recompute the HOI scores.

    Returns a new prediction and its HOI scores; the network is not involved.
    """
    projected = project_pairs(prediction.action_probs, batch, bank, cfg)
    adjusted = prediction.model_copy(update={"action_probs": projected})
    return adjusted, joint_hoi(projected, batch, bank.space)


def projection_dump_rows(
    image_ids: Sequence[str],
    objects: IntArray,
    space: HoiSpace,
    before: FloatArray,
    after: FloatArray,
    pair_ids: Optional[Sequence[Any]] = None,
) -> list[dict[str, Any]]:
    """Before/after HOI scores for every class of each pair's object.

    Row ``p`` of ``before`` and ``after`` holds the scores of pair ``p`` over
    all HOI classes. ``pair_id`` defaults to the row index.
    """
    if before.shape != after.shape or before.shape != (len(image_ids), space.n_classes):
        raise ShapeMismatchError(
            f"Expected scores of shape {(len(image_ids), space.n_classes)}, "
            f"got {before.shape} and {after.shape}"
        )
    hoi_objects = space.hoi_objects()
    rows = []
    for row, image_id in enumerate(image_ids):
        for m in np.flatnonzero(hoi_objects == objects[row]):
            rows.append(
                {
                    "image_id": image_id,
                    "pair_id": row if pair_ids is None else pair_ids[row],
                    "hoi_class": int(m),
                    "score_before": repr(float(before[row, m])),
                    "score_after": repr(float(after[row, m])),
                }
            )
    return rows


def write_projection_dump(
    rows: list[dict[str, Any]],
    path: PathLike,
    fs: Optional[AbstractFileSystem] = None,
) -> None:
    write_csv(path, PROJECTION_DUMP_FIELDS, rows, fs)
    logger.info(f"Projection dump with {len(rows)} rows written to {path}")
