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
"""Multi-stream fusion network and its prediction heads.

Four streams (human appearance, object appearance, pose and box geometry) are
each mapped by a two-layer block. The baseline variant sums stream logits over
the N actions; the other variants average the streams into a shared
representation ``Z``, optionally refined by self-attention over the pairs of
each image, and predict actions from it with one of four heads.
"""

from __future__ import annotations

import logging
from typing import NamedTuple, Optional

import numpy as np

from acp_hoi.exceptions import ShapeMismatchError
from acp_hoi.model.types import ActionPrediction, ModelConfig, PairBatch
from acp_hoi.nn.functional import (
    dense,
    dense_backward,
    relu,
    relu_backward,
    sigmoid,
    sigmoid_backward,
    softmax_row,
    softmax_row_backward,
)
from acp_hoi.nn.layers import MlpCache, add_mlp, mlp_backward, mlp_forward
from acp_hoi.nn.params import ParamStore
from acp_hoi.types import AnchorPartition, FloatArray, HoiSpace, IntArray

logger = logging.getLogger(__name__)

STREAMS = ("h", "o", "k", "b")
ATTENTION_WEIGHTS = ("W_a", "W_b", "W_x", "W_z")


def stream_inputs(batch: PairBatch, config: ModelConfig) -> dict[str, FloatArray]:
    """Inputs of the four streams; pose and box streams see the object context.

    The context is a one-hot object code for the baseline variant and the
    object word embedding otherwise.
    """
    if config.variant == "baseline":
        context = np.eye(config.n_objects, dtype=np.float64)[batch.objects]
    else:
        context = batch.o_embed
    return {
        "h": batch.x_h,
        "o": batch.x_o,
        "k": np.hstack([batch.k, context]),
        "b": np.hstack([batch.b, context]),
    }


def fuse(
    batch: PairBatch, store: ParamStore, config: ModelConfig
) -> tuple[FloatArray, dict[str, MlpCache]]:
    """``Z = (f_h(x_h) + f_o(x_o) + f_k(k||o) + f_b(b||o)) / 4``."""
    inputs = stream_inputs(batch, config)
    caches = {}
    z = np.zeros((batch.size, config.hidden), dtype=np.float64)
    for stream in STREAMS:
        out, caches[stream] = mlp_forward(
            store, f"stream.{stream}", inputs[stream], final_relu=True
        )
        z += out
    return z / config.n_stream, caches


def fuse_backward(
    grad_z: FloatArray,
    caches: dict[str, MlpCache],
    store: ParamStore,
    config: ModelConfig,
) -> None:
    grad_stream = grad_z / config.n_stream
    for stream in STREAMS:
        mlp_backward(store, f"stream.{stream}", grad_stream, caches[stream], True)


class AttentionCache(NamedTuple):
    z: FloatArray
    proj_a: FloatArray
    proj_b: FloatArray
    relation: FloatArray
    proj_x: FloatArray
    values: FloatArray


def self_attention(
    z: FloatArray, store: ParamStore, segments: Optional[IntArray] = None
) -> tuple[FloatArray, AttentionCache]:
    """Residual relational refinement of pair features.

    ``R = softmax_row(relu(Z W_a) relu(Z W_b)^T)`` and
    ``Z~ = Z + R relu(Z W_x) W_z^T``. With ``segments`` a pair only attends to
    pairs carrying the same segment id.
    """
    proj_a = z @ store["attention.W_a"]
    proj_b = z @ store["attention.W_b"]
    scores = relu(proj_a) @ relu(proj_b).T
    mask = None if segments is None else segments[:, None] == segments[None, :]
    relation = softmax_row(scores, mask)
    proj_x = z @ store["attention.W_x"]
    values = relu(proj_x) @ store["attention.W_z"].T
    z_tilde = z + relation @ values
    return z_tilde, AttentionCache(z, proj_a, proj_b, relation, proj_x, values)


def self_attention_backward(
    grad_out: FloatArray, cache: AttentionCache, store: ParamStore
) -> FloatArray:
    z = cache.z
    grad_z = grad_out.copy()
    grad_relation = grad_out @ cache.values.T
    grad_values = cache.relation.T @ grad_out
    store.accumulate("attention.W_z", grad_values.T @ relu(cache.proj_x))
    grad_proj_x = relu_backward(grad_values @ store["attention.W_z"], cache.proj_x)
    store.accumulate("attention.W_x", z.T @ grad_proj_x)
    grad_z += grad_proj_x @ store["attention.W_x"].T
    grad_scores = softmax_row_backward(grad_relation, cache.relation)
    grad_proj_a = relu_backward(grad_scores @ relu(cache.proj_b), cache.proj_a)
    grad_proj_b = relu_backward(grad_scores.T @ relu(cache.proj_a), cache.proj_b)
    store.accumulate("attention.W_a", z.T @ grad_proj_a)
    store.accumulate("attention.W_b", z.T @ grad_proj_b)
    grad_z += grad_proj_a @ store["attention.W_a"].T
    grad_z += grad_proj_b @ store["attention.W_b"].T
    return grad_z


def embed_head(z: FloatArray, store: ParamStore) -> FloatArray:
    """Regress the object word embedding from the pair representation."""
    return dense(z, store["head.embed.W"], store["head.embed.b"])


def compose_hierarchical(
    anchor_probs: FloatArray, group_probs: FloatArray, partition: AnchorPartition
) -> FloatArray:
    """Action probabilities by the law of total probability over anchors.

    ``A(a) = p(a)`` for an anchor and ``A(j) = sum_i p(i) p(j | i)`` over the
    anchors and `other` for a regular action.
    """
    probs = np.zeros((anchor_probs.shape[0], partition.n_actions), dtype=np.float64)
    probs[:, partition.anchors] = anchor_probs[:, : len(partition.anchors)]
    probs[:, partition.regular] = np.einsum("bs,bsr->br", anchor_probs, group_probs)
    return probs


def _hoi_layout(space: HoiSpace, objects: IntArray) -> tuple[FloatArray, IntArray]:
    match = (objects[:, None] == space.hoi_objects()[None, :]).astype(np.float64)
    return match, space.hoi_actions()


def joint_hoi(
    action_probs: FloatArray, batch: PairBatch, space: HoiSpace
) -> FloatArray:
    """HOI scores ``Y(m) = det_h * det_o * A(a)`` for classes ``m = (o, a)`` of the pair's object."""
    match, actions = _hoi_layout(space, batch.objects)
    scale = (batch.det_h * batch.det_o)[:, None]
    return action_probs[:, actions] * match * scale


def joint_hoi_backward(
    grad_scores: FloatArray, batch: PairBatch, space: HoiSpace
) -> FloatArray:
    match, actions = _hoi_layout(space, batch.objects)
    scale = (batch.det_h * batch.det_o)[:, None]
    grad_actions = np.zeros((batch.size, space.n_actions), dtype=np.float64)
    np.add.at(grad_actions.T, actions, (grad_scores * match * scale).T)
    return grad_actions


def hoi_targets(action_labels: FloatArray, batch: PairBatch, space: HoiSpace) -> FloatArray:
    """Binary HOI targets of labeled pairs (human and object scores set to 1)."""
    match, actions = _hoi_layout(space, batch.objects)
    return action_labels[:, actions] * match


class ForwardCache:
    """Intermediate values kept by :meth:`HoiNetwork.forward` for the backward pass."""

    def __init__(self, batch: PairBatch) -> None:
        self.batch = batch
        self.streams: dict[str, MlpCache] = {}
        self.attention: Optional[AttentionCache] = None
        self.z_tilde: Optional[FloatArray] = None
        self.heads: dict[str, MlpCache] = {}
        self.raw_probs: dict[str, FloatArray] = {}
        self.prediction: Optional[ActionPrediction] = None


class HoiNetwork:
    """Action prediction network for one model configuration.

    Args:
        config (ModelConfig): architecture.
        store (Optional[ParamStore]): existing parameters, e.g. from a checkpoint.
            A fresh store seeded with ``seed`` is initialized when omitted.
        seed (int): initialization seed.

    Example:

    .. code-block:: python

        network = HoiNetwork(config, seed=0)
        prediction, cache = network.forward(batch)
        network.backward(cache, grad_action_probs)
    """

    def __init__(
        self, config: ModelConfig, store: Optional[ParamStore] = None, seed: int = 0
    ) -> None:
        self.config = config
        self.partition = config.partition
        if self.partition is not None:
            self._group_mask = self.partition.group_mask()
        if store is None:
            store = ParamStore(seed)
            self._init_params(store)
        else:
            expected = ParamStore(store.seed)
            self._init_params(expected)
            if set(expected.names()) != set(store.names()):
                raise ShapeMismatchError(
                    "Parameter store does not match the model configuration"
                )
        self.store = store

    def _init_params(self, store: ParamStore) -> None:
        cfg = self.config
        hidden = cfg.hidden
        if cfg.variant == "baseline":
            context = cfg.n_objects
            n_out = cfg.n_actions
        else:
            context = cfg.d_e
            n_out = hidden
        n_in = {"h": cfg.d_h, "o": cfg.d_o, "k": cfg.d_k + context, "b": cfg.d_b + context}
        for stream in STREAMS:
            add_mlp(store, f"stream.{stream}", n_in[stream], hidden, n_out)
        if cfg.attention:
            for name in ATTENTION_WEIGHTS:
                store.add(f"attention.{name}", (hidden, cfg.attn_proj))
        if cfg.variant in ("modified", "multitask"):
            add_mlp(store, "head.sub", hidden, hidden, cfg.n_actions)
        if self.partition is not None:
            n_slots = self.partition.n_slots
            n_regular = len(self.partition.regular)
            add_mlp(store, "head.anchor", hidden, hidden, n_slots)
            if cfg.variant == "twostream":
                add_mlp(store, "head.regular", hidden, hidden, n_regular)
            elif cfg.variant == "hierarchical":
                for slot in range(n_slots):
                    add_mlp(store, f"head.group.{slot}", hidden, hidden, n_regular)
        if cfg.emb_head:
            store.add("head.embed.W", (hidden, cfg.d_e))
            store.add("head.embed.b", (cfg.d_e,), init="zeros")
        logger.debug(
            f"Initialized {cfg.variant} network with {store.n_parameters} parameters"
        )

    def predict(self, batch: PairBatch) -> ActionPrediction:
        prediction, _ = self.forward(batch)
        return prediction

    def forward(self, batch: PairBatch) -> tuple[ActionPrediction, ForwardCache]:
        cfg = self.config
        store = self.store
        cache = ForwardCache(batch)
        if cfg.variant == "baseline":
            inputs = stream_inputs(batch, cfg)
            logits = np.zeros((batch.size, cfg.n_actions), dtype=np.float64)
            for stream in STREAMS:
                out, cache.streams[stream] = mlp_forward(
                    store, f"stream.{stream}", inputs[stream], final_relu=False
                )
                logits += out
            cache.prediction = ActionPrediction(action_probs=sigmoid(logits))
            return cache.prediction, cache

        z, cache.streams = fuse(batch, store, cfg)
        if cfg.attention:
            z, cache.attention = self_attention(z, store, batch.segments)
        cache.z_tilde = z

        anchor_logits = anchor_probs = group_probs = None
        if cfg.variant in ("multitask", "twostream", "hierarchical"):
            anchor_logits, cache.heads["anchor"] = mlp_forward(
                store, "head.anchor", z, final_relu=False
            )
            anchor_probs = softmax_row(anchor_logits)
        if cfg.variant in ("modified", "multitask"):
            logits, cache.heads["sub"] = mlp_forward(store, "head.sub", z, False)
            action_probs = sigmoid(logits)
        elif cfg.variant == "twostream":
            assert self.partition is not None and anchor_probs is not None
            logits, cache.heads["regular"] = mlp_forward(store, "head.regular", z, False)
            cache.raw_probs["regular"] = sigmoid(logits)
            action_probs = np.zeros((batch.size, cfg.n_actions), dtype=np.float64)
            action_probs[:, self.partition.anchors] = anchor_probs[
                :, : len(self.partition.anchors)
            ]
            action_probs[:, self.partition.regular] = cache.raw_probs["regular"]
        else:
            assert self.partition is not None and anchor_probs is not None
            raw = []
            for slot in range(self.partition.n_slots):
                logits, cache.heads[f"group.{slot}"] = mlp_forward(
                    store, f"head.group.{slot}", z, False
                )
                raw.append(sigmoid(logits))
            cache.raw_probs["groups"] = np.stack(raw, axis=1)
            group_probs = cache.raw_probs["groups"]
            if cfg.mask_groups:
                group_probs = group_probs * self._group_mask[None, :, :]
            action_probs = compose_hierarchical(anchor_probs, group_probs, self.partition)

        regressed = embed_head(z, store) if cfg.emb_head else None
        cache.prediction = ActionPrediction(
            action_probs=action_probs,
            anchor_logits=anchor_logits,
            anchor_probs=anchor_probs,
            group_probs=group_probs,
            regressed_embed=regressed,
        )
        return cache.prediction, cache

    def backward(
        self,
        cache: ForwardCache,
        grad_action_probs: FloatArray,
        grad_anchor_logits: Optional[FloatArray] = None,
        grad_embed: Optional[FloatArray] = None,
    ) -> None:
        """Accumulate parameter gradients of the given output gradients.

        Args:
            cache (ForwardCache): cache returned by :meth:`forward`.
            grad_action_probs (FloatArray): gradient w.r.t. the action probabilities.
            grad_anchor_logits (Optional[FloatArray]): gradient w.r.t. the anchor
                head logits, e.g. from the anchor cross-entropy.
            grad_embed (Optional[FloatArray]): gradient w.r.t. the regressed embedding.
        """
        cfg = self.config
        store = self.store
        prediction = cache.prediction
        assert prediction is not None
        probs = prediction.action_probs

        if cfg.variant == "baseline":
            grad_logits = sigmoid_backward(grad_action_probs, probs)
            for stream in STREAMS:
                mlp_backward(
                    store, f"stream.{stream}", grad_logits, cache.streams[stream], False
                )
            return

        assert cache.z_tilde is not None
        grad_z = np.zeros_like(cache.z_tilde)
        grad_anchor = grad_anchor_logits
        if cfg.variant in ("modified", "multitask"):
            grad_logits = sigmoid_backward(grad_action_probs, probs)
            grad_z += mlp_backward(store, "head.sub", grad_logits, cache.heads["sub"], False)
        elif cfg.variant in ("twostream", "hierarchical"):
            partition = self.partition
            assert partition is not None and prediction.anchor_probs is not None
            anchor_probs = prediction.anchor_probs
            n_anchors = len(partition.anchors)
            grad_regular = grad_action_probs[:, partition.regular]
            grad_anchor_probs = np.zeros_like(anchor_probs)
            grad_anchor_probs[:, :n_anchors] = grad_action_probs[:, partition.anchors]
            if cfg.variant == "twostream":
                grad_logits = sigmoid_backward(grad_regular, cache.raw_probs["regular"])
                grad_z += mlp_backward(
                    store, "head.regular", grad_logits, cache.heads["regular"], False
                )
            else:
                assert prediction.group_probs is not None
                grad_anchor_probs += np.einsum(
                    "br,bsr->bs", grad_regular, prediction.group_probs
                )
                raw = cache.raw_probs["groups"]
                for slot in range(partition.n_slots):
                    grad_group = grad_regular * anchor_probs[:, slot, None]
                    if cfg.mask_groups:
                        grad_group = grad_group * self._group_mask[slot]
                    grad_logits = sigmoid_backward(grad_group, raw[:, slot, :])
                    grad_z += mlp_backward(
                        store,
                        f"head.group.{slot}",
                        grad_logits,
                        cache.heads[f"group.{slot}"],
                        False,
                    )
            grad_from_probs = softmax_row_backward(grad_anchor_probs, anchor_probs)
            grad_anchor = (
                grad_from_probs
                if grad_anchor is None
                else grad_from_probs + grad_anchor
            )
        if grad_anchor is not None and "anchor" in cache.heads:
            grad_z += mlp_backward(store, "head.anchor", grad_anchor, cache.heads["anchor"], False)
        if cfg.emb_head and grad_embed is not None:
            grad_input, grad_w, grad_b = dense_backward(
                grad_embed, cache.z_tilde, store["head.embed.W"]
            )
            store.accumulate("head.embed.W", grad_w)
            store.accumulate("head.embed.b", grad_b)
            grad_z += grad_input
        if cache.attention is not None:
            grad_z = self_attention_backward(grad_z, cache.attention, store)
        fuse_backward(grad_z, cache.streams, store, cfg)
