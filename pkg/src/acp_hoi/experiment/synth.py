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
"""Synthetic long-tail HOI benchmark with planted co-occurrence structure.

For every object a random subset of the actions is valid. It splits into
mutually exclusive heads, and each head carries satellites that only occur
together with it, with probability 1.0, 0.6 or 0.3. An image holds one labeled
human-object pair: an object and one of its heads drawn from Zipf
distributions, plus each satellite of the head independently. Negative pairs
without actions are placed in regions that never overlap the labeled pair.

Features are class-conditional Gaussians per stream: the object mean plus the
means of the pair's actions (satellites at half strength) plus noise.
"""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from acp_hoi.exceptions import SynthConfigError
from acp_hoi.experiment.dataset import ExperimentData
from acp_hoi.experiment.types import SynthConfig
from acp_hoi.model.types import PairExample
from acp_hoi.priors import make_space
from acp_hoi.types import AnnotationRecord, FloatArray, HoiInstance, HoiSpace

logger = logging.getLogger(__name__)

SATELLITE_PROBS = (1.0, 0.6, 0.3)
SATELLITE_SIGNAL = 0.5
STREAM_NAMES = ("x_h", "x_o", "k", "b")
HUMAN_BOX = (10.0, 10.0, 60.0, 110.0)
OBJECT_BOX = (50.0, 40.0, 100.0, 90.0)
NEGATIVE_OFFSET = 200.0


class Satellite(NamedTuple):
    action: int
    base_prob: float
    train_prob: float


class ObjectStructure(NamedTuple):
    heads: list[int]
    head_weights: FloatArray
    satellites: dict[int, list[Satellite]]

    def valid_actions(self) -> list[int]:
        return sorted(
            [*self.heads, *(s.action for sats in self.satellites.values() for s in sats)]
        )


def zipf_weights(n: int, exponent: float) -> FloatArray:
    weights = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** exponent
    return weights / weights.sum()


def _plant_structure(
    cfg: SynthConfig, rng: np.random.Generator
) -> list[ObjectStructure]:
    structures = []
    head_weights = zipf_weights(cfg.heads_per_object, cfg.zipf_exponent)
    for _ in range(cfg.n_objects):
        chosen = [int(a) for a in rng.permutation(cfg.n_actions)[: cfg.actions_per_object]]
        heads = chosen[: cfg.heads_per_object]
        satellites: dict[int, list[Satellite]] = {h: [] for h in heads}
        for k, action in enumerate(chosen[cfg.heads_per_object :]):
            head = heads[k % len(heads)]
            prob = SATELLITE_PROBS[(k // len(heads)) % len(SATELLITE_PROBS)]
            satellites[head].append(Satellite(action, prob, prob))
        structures.append(ObjectStructure(heads, head_weights, satellites))
    return structures


def _plant_rare(
    cfg: SynthConfig,
    structures: list[ObjectStructure],
    object_weights: FloatArray,
    rng: np.random.Generator,
) -> set[tuple[int, int]]:
    """Pick the rare (object, satellite) combinations and lower their training probability.

    Only satellites with probability below 1 whose action is valid for another
    object are candidates, so the action itself stays learnable.
    """
    valid = [set(s.valid_actions()) for s in structures]
    candidates = []
    for o, structure in enumerate(structures):
        for head, sats in structure.satellites.items():
            for sat in sats:
                shared = any(sat.action in valid[p] for p in range(len(structures)) if p != o)
                if sat.base_prob < 1.0 and shared:
                    candidates.append((o, head, sat.action))
    n_rare = int(round(cfg.rare_fraction * len(candidates)))
    if cfg.rare_max_count * n_rare > cfg.n_images:
        raise SynthConfigError(
            f"{n_rare} rare classes with up to {cfg.rare_max_count} images each "
            f"do not fit in {cfg.n_images} images"
        )
    picked = rng.choice(len(candidates), size=n_rare, replace=False) if n_rare else []
    rare = set()
    for index in sorted(int(i) for i in picked):
        o, head, action = candidates[index]
        position = structures[o].heads.index(head)
        expected = cfg.n_images * object_weights[o] * structures[o].head_weights[position]
        sats = structures[o].satellites[head]
        for k, sat in enumerate(sats):
            if sat.action == action:
                train_prob = min(sat.base_prob, 0.5 * cfg.rare_max_count / expected)
                sats[k] = sat._replace(train_prob=float(train_prob))
        rare.add((o, action))
    return rare


def planted_matrix(structure: ObjectStructure, n_actions: int, train: bool = True) -> FloatArray:
    """Exact ``p(j | i)`` of the sampling process for one object."""
    marginal = np.zeros(n_actions, dtype=np.float64)
    joint = np.zeros((n_actions, n_actions), dtype=np.float64)
    for head, weight in zip(structure.heads, structure.head_weights):
        members = [(head, 1.0)] + [
            (s.action, s.train_prob if train else s.base_prob)
            for s in structure.satellites[head]
        ]
        for a, pa in members:
            marginal[a] += weight * pa
            for b, pb in members:
                joint[a, b] += weight * (pa if a == b else pa * pb)
    C = np.zeros_like(joint)
    np.divide(joint, marginal[:, None], out=C, where=(marginal > 0)[:, None])
    return C


class _FeatureModel(NamedTuple):
    action_means: dict[str, FloatArray]
    object_means: dict[str, FloatArray]
    noise: float

    def sample(
        self,
        rng: np.random.Generator,
        obj: int,
        labels: dict[int, float],
    ) -> dict[str, list[float]]:
        features = {}
        for stream in STREAM_NAMES:
            value = self.object_means[stream][obj].copy()
            for action, strength in sorted(labels.items()):
                value += strength * self.action_means[stream][action]
            value += self.noise * rng.standard_normal(value.shape[0])
            features[stream] = value.tolist()
        return features


def _jitter(rng: np.random.Generator, box: tuple[float, ...], dx: float) -> tuple[float, float, float, float]:
    shift = rng.uniform(-5.0, 5.0, size=4)
    x1, y1, x2, y2 = (float(v + s) for v, s in zip(box, shift))
    return (x1 + dx, y1, x2 + dx, y2)


def _sample_split(
    cfg: SynthConfig,
    rng: np.random.Generator,
    structures: list[ObjectStructure],
    object_weights: FloatArray,
    features: _FeatureModel,
    embeddings: FloatArray,
    n_images: int,
    prefix: str,
    train: bool,
    rare: set[tuple[int, int]],
) -> tuple[list[AnnotationRecord], list[PairExample]]:
    records = []
    pairs = []
    rare_counts = {key: 0 for key in rare}
    for index in range(n_images):
        image_id = f"{prefix}_{index:06d}"
        obj = int(rng.choice(len(structures), p=object_weights))
        structure = structures[obj]
        head = structure.heads[int(rng.choice(len(structure.heads), p=structure.head_weights))]
        labels = {head: 1.0}
        for sat in structure.satellites[head]:
            draw = rng.random()
            prob = sat.train_prob if train else sat.base_prob
            if draw >= prob:
                continue
            if train and (obj, sat.action) in rare_counts:
                if rare_counts[(obj, sat.action)] >= cfg.rare_max_count:
                    continue
                rare_counts[(obj, sat.action)] += 1
            labels[sat.action] = SATELLITE_SIGNAL
        human_box = _jitter(rng, HUMAN_BOX, 0.0)
        object_box = _jitter(rng, OBJECT_BOX, 0.0)
        records.append(
            AnnotationRecord(
                image_id=image_id,
                instances=[
                    HoiInstance(
                        human_box=human_box,
                        object_box=object_box,
                        object=obj,
                        actions=frozenset(labels),
                    )
                ],
            )
        )
        pairs.append(
            PairExample(
                image_id=image_id,
                o_embed=embeddings[obj].tolist(),
                object=obj,
                det_h=float(rng.uniform(0.7, 1.0)),
                det_o=float(rng.uniform(0.6, 1.0)),
                gt_actions=frozenset(labels),
                human_box=human_box,
                object_box=object_box,
                **features.sample(rng, obj, labels),
            )
        )
        for k in range(cfg.negatives_per_image):
            negative_obj = int(rng.choice(len(structures), p=object_weights))
            offset = NEGATIVE_OFFSET * (k + 1)
            pairs.append(
                PairExample(
                    image_id=image_id,
                    o_embed=embeddings[negative_obj].tolist(),
                    object=negative_obj,
                    det_h=float(rng.uniform(0.3, 0.9)),
                    det_o=float(rng.uniform(0.3, 0.9)),
                    human_box=_jitter(rng, HUMAN_BOX, offset),
                    object_box=_jitter(rng, OBJECT_BOX, offset),
                    **features.sample(rng, negative_obj, {}),
                )
            )
    return records, pairs


def _make_space(cfg: SynthConfig, structures: list[ObjectStructure]) -> HoiSpace:
    actions = [f"action{a:02d}" for a in range(cfg.n_actions)]
    objects = [f"object{o:02d}" for o in range(cfg.n_objects)]
    hoi_classes = [
        (o, a) for o, structure in enumerate(structures) for a in structure.valid_actions()
    ]
    return make_space(actions, objects, hoi_classes, cfg.rare_threshold)


def synth_generate(cfg: SynthConfig) -> ExperimentData:
    """Generate a synthetic benchmark, deterministic given ``cfg.seed``.

    Raises:
        SynthConfigError: if the rare classes cannot fit in the image budget.

    Returns:
        ExperimentData: both splits, the embedding table, the planted
        training co-occurrence matrix of every object and the planted rare classes.
    """
    rng = np.random.default_rng(cfg.seed)
    structures = _plant_structure(cfg, rng)
    object_weights = zipf_weights(cfg.n_objects, cfg.zipf_exponent)
    rare = _plant_rare(cfg, structures, object_weights, rng)
    space = _make_space(cfg, structures)
    dim = cfg.feature_dim
    features = _FeatureModel(
        action_means={s: rng.standard_normal((cfg.n_actions, dim)) for s in STREAM_NAMES},
        object_means={s: rng.standard_normal((cfg.n_objects, dim)) for s in STREAM_NAMES},
        noise=cfg.feature_noise,
    )
    embeddings = rng.standard_normal((cfg.n_objects, cfg.embed_dim)) / np.sqrt(cfg.embed_dim)
    common = (cfg, rng, structures, object_weights, features, embeddings)
    train, train_pairs = _sample_split(*common, cfg.n_images, "train", True, rare)
    test, test_pairs = _sample_split(*common, cfg.n_test_images, "test", False, rare)
    planted_rare = sorted(
        m for m in (space.hoi_index(o, a) for o, a in rare) if m is not None
    )
    logger.info(
        f"Generated {cfg.n_images} train and {cfg.n_test_images} test images, "
        f"{len(planted_rare)} planted rare classes"
    )
    return ExperimentData(
        space=space,
        train=train,
        test=test,
        train_pairs=train_pairs,
        test_pairs=test_pairs,
        embeddings=embeddings,
        planted={
            o: planted_matrix(structure, cfg.n_actions)
            for o, structure in enumerate(structures)
        },
        planted_rare=planted_rare,
    )
