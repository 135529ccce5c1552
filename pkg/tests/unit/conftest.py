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
from typing import Callable, Optional

import numpy as np
import pytest
from acp_hoi.anchors import select_anchors
from acp_hoi.model.types import PairBatch, PairExample
from acp_hoi.priors import build_prior_bank, count_label_stats, infer_space, ingest_annotations
from acp_hoi.types import AnchorPartition, AnnotationRecord, HoiSpace, PriorBank

HUMAN_BOX = [0.0, 0.0, 10.0, 20.0]
OBJECT_BOX = [5.0, 5.0, 15.0, 15.0]


def annotation_document(images: list[tuple[str, str, list[str]]]) -> bytes:
    """Annotation file content with one instance per ``(image_id, object, actions)``."""
    return json.dumps(
        [
            {
                "image_id": image_id,
                "instances": [
                    {
                        "human_box": HUMAN_BOX,
                        "object_box": OBJECT_BOX,
                        "object": obj,
                        "actions": actions,
                    }
                ],
            }
            for image_id, obj, actions in images
        ]
    ).encode("utf-8")


@pytest.fixture(scope="function")
def cake_source() -> bytes:
    return annotation_document(
        [
            ("img1", "cake", ["hold", "eat"]),
            ("img2", "cake", ["hold"]),
            ("img3", "cake", ["cut"]),
        ]
    )


@pytest.fixture(scope="function")
def cake_space() -> HoiSpace:
    return HoiSpace(
        actions=["hold", "eat", "cut"],
        objects=["cake"],
        hoi_classes=[(0, 0), (0, 1), (0, 2)],
    )


@pytest.fixture(scope="function")
def cake_dataset(cake_source: bytes, cake_space: HoiSpace) -> list[AnnotationRecord]:
    return ingest_annotations(cake_source, cake_space)


@pytest.fixture(scope="function")
def cake_bank(cake_dataset: list[AnnotationRecord], cake_space: HoiSpace) -> PriorBank:
    return build_prior_bank(count_label_stats(cake_dataset, cake_space), cake_space)


@pytest.fixture(scope="function")
def cake_partition(cake_bank: PriorBank) -> AnchorPartition:
    return select_anchors(cake_bank, max_anchors=None)


@pytest.fixture(scope="function")
def kitchen_source() -> bytes:
    """Two objects sharing two of four actions."""
    return annotation_document(
        [
            ("a", "cake", ["hold", "eat"]),
            ("b", "cake", ["cut"]),
            ("c", "knife", ["hold", "wash"]),
            ("d", "knife", ["cut"]),
        ]
    )


@pytest.fixture(scope="function")
def kitchen_space(kitchen_source: bytes) -> HoiSpace:
    return infer_space(kitchen_source)


@pytest.fixture(scope="function")
def kitchen_bank(kitchen_source: bytes, kitchen_space: HoiSpace) -> PriorBank:
    dataset = ingest_annotations(kitchen_source, kitchen_space)
    return build_prior_bank(count_label_stats(dataset, kitchen_space), kitchen_space)


PairFactory = Callable[..., list[PairExample]]


@pytest.fixture(scope="function")
def make_pairs() -> PairFactory:
    """Random pairs over a label space, ``pairs_per_image`` per image."""

    def factory(
        space: HoiSpace,
        n_images: int = 2,
        pairs_per_image: int = 2,
        dim: int = 3,
        embed_dim: int = 2,
        seed: int = 0,
        labeled: Optional[bool] = True,
    ) -> list[PairExample]:
        rng = np.random.default_rng(seed)
        embeddings = rng.standard_normal((space.n_objects, embed_dim))
        pairs = []
        for image in range(n_images):
            for k in range(pairs_per_image):
                obj = int(rng.integers(space.n_objects))
                valid = [a for o, a in space.hoi_classes if o == obj]
                actions = frozenset([int(rng.choice(valid))]) if labeled and k == 0 else frozenset()
                shift = 30.0 * k
                pairs.append(
                    PairExample(
                        image_id=f"img{image}",
                        x_h=rng.standard_normal(dim).tolist(),
                        x_o=rng.standard_normal(dim).tolist(),
                        k=rng.standard_normal(dim).tolist(),
                        b=rng.standard_normal(dim).tolist(),
                        o_embed=embeddings[obj].tolist(),
                        object=obj,
                        det_h=float(rng.uniform(0.5, 1.0)),
                        det_o=float(rng.uniform(0.5, 1.0)),
                        gt_actions=actions,
                        human_box=(shift, 0.0, shift + 10.0, 20.0),
                        object_box=(shift + 5.0, 5.0, shift + 15.0, 15.0),
                    )
                )
        return pairs

    return factory


@pytest.fixture(scope="function")
def cake_batch(make_pairs: PairFactory, cake_space: HoiSpace) -> PairBatch:
    return PairBatch.from_pairs(make_pairs(cake_space), cake_space.n_actions)
